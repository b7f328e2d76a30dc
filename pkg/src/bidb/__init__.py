"""Bounded belief-intention databases: a temporal logic of actions with
sequence preconditions, coherence checking, and joint revision of strong
beliefs and intentions."""

from bidb.agent import EMPTY_DB, Agent, Intention, IntentionDatabase, parse_intention
from bidb.coherence import cohere_formula, is_coherent, naive_cohere_formula, weak_belief_holds
from bidb.enumeration import EnumerationCaps, enumerate_models
from bidb.errors import BidbError, CapacityError, HorizonError, InvariantError, ParseError, PostulateFailure
from bidb.lang import Signature, is_strong_belief, parse_formula, render_formula
from bidb.models import PointedModel, TreeModel, satisfies
from bidb.revision import RevisionInput, revise
from bidb.universe import Universe, entails, form, mod_set

__all__ = [
    "Agent",
    "BidbError",
    "CapacityError",
    "EMPTY_DB",
    "EnumerationCaps",
    "HorizonError",
    "Intention",
    "IntentionDatabase",
    "InvariantError",
    "ParseError",
    "PointedModel",
    "PostulateFailure",
    "RevisionInput",
    "Signature",
    "TreeModel",
    "Universe",
    "cohere_formula",
    "entails",
    "enumerate_models",
    "form",
    "is_coherent",
    "is_strong_belief",
    "mod_set",
    "naive_cohere_formula",
    "parse_formula",
    "parse_intention",
    "render_formula",
    "revise",
    "satisfies",
    "weak_belief_holds",
]
