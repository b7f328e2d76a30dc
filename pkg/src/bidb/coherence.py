"""Coherence of intentions with beliefs, and weak-belief consequence."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

from bidb.agent import Intention
from bidb.enumeration import EnumerationCaps
from bidb.errors import HorizonError
from bidb.lang import (
    And,
    BoxAt,
    Diamond,
    DoAt,
    Formula,
    Not,
    PreSeqAt,
    Signature,
    TOP,
    conjunction,
    disjunction,
)
from bidb.models import PointedModel, satisfies
from bidb.universe import Universe, get_universe, tree_key


def _checked(intentions: Iterable[Intention], sig: Signature) -> list:
    items = sorted(set(intentions), key=lambda i: (i.time, i.action))
    for i in items:
        if i.time >= sig.horizon or i.time < 0:
            raise HorizonError(f"intention {i} lies beyond horizon {sig.horizon}")
        if i.action not in sig.acts:
            raise HorizonError(f"intention {i} uses unknown action")
    return items


@lru_cache(maxsize=65536)
def _cohere(intentions: frozenset, sig: Signature) -> Formula:
    items = _checked(intentions, sig)
    if not items:
        return TOP
    fixed = {}
    for i in items:
        fixed.setdefault(i.time, set()).add(i.action)
    first, last = items[0].time, items[-1].time
    slots = []
    for k in range(first, last + 1):
        if k in fixed:
            # Two different actions at one time: no sequence fits, the disjunction is empty.
            slots.append(sorted(fixed[k]) if len(fixed[k]) == 1 else [])
        else:
            slots.append(sig.act_list)
    words = itertools.product(*slots)
    return Diamond(0, disjunction(PreSeqAt(w, first) for w in words))


def cohere_formula(intentions: Iterable[Intention], sig: Signature) -> Formula:
    """Possibility at time 0 of the precondition of the whole intended sequence.

    Times between the first and last intention that carry no intention are
    filled with every action in turn, giving one disjunct per filling.
    """
    return _cohere(frozenset(intentions), sig)


def naive_cohere_formula(intentions: Iterable[Intention], sig: Signature) -> Formula:
    """Baseline: the single-action preconditions each hold, all on one path."""
    items = _checked(intentions, sig)
    if not items:
        return TOP
    return Diamond(0, conjunction(PreSeqAt((i.action,), i.time) for i in items))


@dataclass(frozen=True)
class CoherenceVerdict:
    coherent: bool
    witness: Optional[PointedModel]
    formula: Formula

    def __bool__(self):
        return self.coherent


def _diamond_body(f: Formula) -> Optional[Formula]:
    if isinstance(f, Not) and isinstance(f.body, BoxAt) and f.body.time == 0 and isinstance(f.body.body, Not):
        return f.body.body.body
    return None


def find_witness(models: Iterable[PointedModel], formula: Formula) -> CoherenceVerdict:
    """First model satisfying the formula.

    For a diamond at time 0 every path of a satisfying tree qualifies, so the
    witness returned is a path on which the body itself holds.
    """
    body = _diamond_body(formula)
    for m in sorted(models, key=lambda m: (tree_key(m.tree), m.path)):
        if satisfies(m, formula if body is None else body):
            return CoherenceVerdict(True, m, formula)
    return CoherenceVerdict(False, None, formula)


def is_coherent(models: Iterable[PointedModel], intentions: Iterable[Intention], sig: Signature) -> CoherenceVerdict:
    """Some model in the set satisfies the coherence formula of the intentions."""
    return find_witness(models, cohere_formula(intentions, sig))


def coherent_mask(universe: Universe, mask: int, intentions: Iterable[Intention]) -> bool:
    """Set-at-a-time coherence test for a model set given as a universe bitmask."""
    return universe.mask(cohere_formula(intentions, universe.sig)) & mask != 0


def intended_actions(intentions: Iterable[Intention]) -> Formula:
    return conjunction(DoAt(i.action, i.time) for i in sorted(set(intentions), key=lambda i: (i.time, i.action)))


def weak_belief_holds(
    psi: Formula,
    intentions: Iterable[Intention],
    phi: Formula,
    sig: Signature,
    caps: EnumerationCaps = EnumerationCaps(),
) -> bool:
    """phi follows from the beliefs plus the assumption that every intention is carried out."""
    u = get_universe(sig, caps)
    return u.entails(And(psi, intended_actions(intentions)), phi)


def weak_beliefs_consistent(
    psi: Formula,
    intentions: Iterable[Intention],
    sig: Signature,
    caps: EnumerationCaps = EnumerationCaps(),
) -> bool:
    u = get_universe(sig, caps)
    return u.satisfiable(And(psi, intended_actions(intentions)))
