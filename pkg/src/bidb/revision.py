"""Joint revision of strong beliefs and intentions.

The concrete operator ranks models by their Dalal distance to the nearest
model of the current belief (trees only, never paths), keeps the minimal
models of the new belief, and then re-selects intentions greedily: the new
intention first, then the stored ones in priority order, each kept when the
kept set stays coherent with the revised beliefs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Optional

from bidb.agent import EMPTY_DB, Agent, Intention, IntentionDatabase
from bidb.coherence import coherent_mask, is_coherent
from bidb.enumeration import EnumerationCaps
from bidb.errors import InvariantError
from bidb.lang import TOP, Formula, Or, Signature, check_formula, is_strong_belief, render_formula
from bidb.models import PointedModel
from bidb.universe import Universe, get_universe, iter_bits

log = logging.getLogger(__name__)


def dalal_distance(m1: PointedModel, m2: PointedModel) -> int:
    """Size of the symmetric difference of the two trees' fact sets."""
    if m1.tree.horizon != m2.tree.horizon:
        raise ValueError("models over different horizons")
    return len(m1.tree.facts() ^ m2.tree.facts())


@dataclass(frozen=True)
class PreOrder:
    """Total pre-order given by a rank per model of a universe (lower is more plausible)."""

    universe: Universe = field(repr=False)
    ranks: tuple

    def rank(self, m: PointedModel) -> int:
        return self.ranks[self.universe.index[m]]

    def leq(self, m1: PointedModel, m2: PointedModel) -> bool:
        return self.rank(m1) <= self.rank(m2)

    def lt(self, m1: PointedModel, m2: PointedModel) -> bool:
        return self.rank(m1) < self.rank(m2)


def min_models(candidates: Iterable[PointedModel], order: PreOrder) -> frozenset:
    candidates = list(candidates)
    if not candidates:
        return frozenset()
    best = min(order.rank(m) for m in candidates)
    return frozenset(m for m in candidates if order.rank(m) == best)


@dataclass(frozen=True)
class SelectionPolicy:
    """Order in which intentions are offered to the greedy selection."""

    order: tuple

    @classmethod
    def for_revision(cls, intentions: IntentionDatabase, new: Optional[Intention]) -> "SelectionPolicy":
        head = () if new is None else (new,)
        return cls(head + tuple(i for i in intentions if i != new))


@dataclass
class RevisionTrace:
    candidates: int = 0
    min_rank: Optional[int] = None
    revised: int = 0
    decisions: list = field(default_factory=list)
    warning: Optional[str] = None

    def lines(self) -> list:
        out = [
            f"|Mod(phi)| = {self.candidates}",
            f"minimal rank = {'-' if self.min_rank is None else self.min_rank}",
            f"|Mod(psi')| = {self.revised}",
        ]
        out += [f"{'accept' if ok else 'reject'} {i}" for i, ok in self.decisions]
        if self.warning:
            out.append(f"warning: {self.warning}")
        return out


def greedy_select(
    intentions: IntentionDatabase,
    new: Optional[Intention],
    coherent: Callable[[frozenset], bool],
    policy: Optional[SelectionPolicy] = None,
    new_priority: Optional[int] = None,
):
    """Greedy pass in policy order; returns ``(database, decisions)``.

    Maximality of the result relies on coherence being anti-monotone: a
    candidate rejected against part of the final set stays rejected
    against all of it.
    """
    policy = policy or SelectionPolicy.for_revision(intentions, new)
    kept = frozenset()
    decisions = []
    for i in policy.order:
        ok = coherent(kept | {i})
        decisions.append((i, ok))
        if ok:
            kept = kept | {i}
    entries = [i for i in intentions if i in kept]
    if new is not None and new in kept and new not in intentions:
        pos = len(entries) if new_priority is None else min(new_priority, len(entries))
        entries.insert(pos, new)
    return IntentionDatabase(tuple(entries)), decisions


def select_intentions(
    models: Iterable[PointedModel],
    intentions: IntentionDatabase,
    new: Optional[Intention],
    sig: Signature,
    policy: Optional[SelectionPolicy] = None,
) -> IntentionDatabase:
    """Selection function over an explicit model set. Empty sets yield no intentions."""
    models = frozenset(models)
    if not models:
        log.debug("no belief models: no intention database is coherent, returning the empty one")
        return EMPTY_DB
    db, _ = greedy_select(intentions, new, lambda J: is_coherent(models, J, sig).coherent, policy)
    return db


@dataclass(frozen=True)
class RevisionInput:
    agent: Agent
    new_belief: Formula
    new_intention: Optional[Intention] = None
    new_priority: Optional[int] = None


@lru_cache(maxsize=65536)
def _check_bounded(f: Formula, sig: Signature) -> None:
    check_formula(f, sig)


class DalalReviser:
    """The shipped revision operator, bound to one model universe.

    Everything is memoised per universe bitmask, so repeated revisions on the
    same beliefs cost dictionary lookups.
    """

    def __init__(self, universe: Universe):
        self.universe = universe
        self._bits = None
        self._tree_ranks = {}
        self._coherent = {}

    # -- belief side ----------------------------------------------------

    def _fact_bits(self):
        if self._bits is None:
            ids = {}
            bits = []
            for t in self.universe.trees:
                b = 0
                for fact in t.facts():
                    b |= 1 << ids.setdefault(fact, len(ids))
                bits.append(b)
            self._bits = bits
        return self._bits

    def _rank(self, k: int, inside: list, inside_set: frozenset) -> int:
        if not inside or k in inside_set:
            return 0
        bits = self._fact_bits()
        b = bits[k]
        return min((b ^ bits[j]).bit_count() for j in inside)

    def tree_ranks(self, belief_mask: int) -> tuple:
        r = self._tree_ranks.get(belief_mask)
        if r is None:
            inside = self.universe.trees_in(belief_mask)
            inside_set = frozenset(inside)
            r = tuple(self._rank(k, inside, inside_set) for k in range(len(self.universe.trees)))
            self._tree_ranks[belief_mask] = r
        return r

    def preorder(self, psi: Formula) -> PreOrder:
        u = self.universe
        tr = self.tree_ranks(u.mask(psi))
        return PreOrder(u, tuple(tr[u.model_tree[k]] for k in range(len(u))))

    def minimal(self, belief_mask: int, candidates: int):
        """``(mask of minimal candidates, minimal rank or None)``.

        Ranks are computed for the candidate trees only.
        """
        if not candidates:
            return 0, None
        u = self.universe
        if candidates & belief_mask:
            return candidates & u.closure(candidates & belief_mask), 0
        trees = u.trees_in(candidates)
        cached = self._tree_ranks.get(belief_mask)
        if cached is not None:
            ranks = {k: cached[k] for k in trees}
        else:
            inside = u.trees_in(belief_mask)
            inside_set = frozenset(inside)
            ranks = {k: self._rank(k, inside, inside_set) for k in trees}
        best = min(ranks.values())
        return candidates & u.mask_of_trees(k for k in trees if ranks[k] == best), best

    # -- intention side -------------------------------------------------

    def coherent(self, mask: int, intentions: frozenset) -> bool:
        key = (mask, intentions)
        c = self._coherent.get(key)
        if c is None:
            c = coherent_mask(self.universe, mask, intentions)
            self._coherent[key] = c
        return c

    def select(self, mask: int, intentions: IntentionDatabase, new: Optional[Intention], new_priority=None):
        if not mask:
            return EMPTY_DB, [(i, False) for i in SelectionPolicy.for_revision(intentions, new).order]
        return greedy_select(intentions, new, lambda J: self.coherent(mask, J), new_priority=new_priority)

    # -- operator -------------------------------------------------------

    def validate(self, inp: RevisionInput) -> None:
        sig = self.universe.sig
        for f in (inp.agent.belief, inp.new_belief):
            if not is_strong_belief(f):
                raise InvariantError(f"not a strong belief: {render_formula(f)}")
            _check_bounded(f, sig)
        inp.agent.intentions.check(sig)
        if inp.new_intention is not None:
            inp.new_intention.check(sig)

    def revise(self, inp: RevisionInput):
        """``(revised agent, trace)``. Belief revision runs first and never looks at intentions."""
        self.validate(inp)
        u = self.universe
        trace = RevisionTrace()
        candidates = u.mask(inp.new_belief)
        trace.candidates = bin(candidates).count("1")
        keep, trace.min_rank = self.minimal(u.mask(inp.agent.belief), candidates)
        belief = u.form(keep)
        revised = u.mask(belief)
        trace.revised = bin(revised).count("1")
        db, trace.decisions = self.select(revised, inp.agent.intentions, inp.new_intention, inp.new_priority)
        if not revised:
            trace.warning = "revised beliefs are unsatisfiable; no intention can be kept"
            log.debug(trace.warning)
        return Agent(belief, db), trace

    def __call__(self, inp: RevisionInput) -> Agent:
        return self.revise(inp)[0]


@lru_cache(maxsize=8)
def reviser_in(universe: Universe) -> DalalReviser:
    return DalalReviser(universe)


def reviser_for(sig: Signature, caps: EnumerationCaps = EnumerationCaps()) -> DalalReviser:
    return reviser_in(get_universe(sig, caps))


def preorder_from(psi: Formula, sig: Signature, caps: EnumerationCaps = EnumerationCaps()) -> PreOrder:
    """Rank each model by Dalal distance to the nearest model of psi (all zero if psi has none)."""
    if not is_strong_belief(psi):
        raise InvariantError("pre-orders are assigned to strong beliefs only")
    return reviser_for(sig, caps).preorder(psi)


def revise(inp: RevisionInput, sig: Signature, caps: EnumerationCaps = EnumerationCaps()) -> Agent:
    return reviser_for(sig, caps)(inp)


def revise_with_trace(inp: RevisionInput, sig: Signature, caps: EnumerationCaps = EnumerationCaps()):
    return reviser_for(sig, caps).revise(inp)


# --------------------------------------------------------------------------
# Faithful assignments


class FaithfulAssignment:
    """Maps strong beliefs to pre-orders and intention databases to selection functions.

    Models are addressed by their index in ``universe``; model sets by bitmask.
    """

    universe: Universe

    def leq(self, psi: Formula, k1: int, k2: int) -> bool:
        raise NotImplementedError

    def selection(self, mask: int, intentions: IntentionDatabase, new: Optional[Intention]) -> IntentionDatabase:
        raise NotImplementedError

    def minimal(self, psi: Formula, candidates: int) -> int:
        """Models of ``candidates`` that are <= every other candidate."""
        ks = iter_bits(candidates)
        out = 0
        for k in ks:
            if all(self.leq(psi, k, j) for j in ks):
                out |= 1 << k
        return out


class DalalAssignment(FaithfulAssignment):
    def __init__(self, reviser: DalalReviser):
        self.reviser = reviser
        self.universe = reviser.universe

    def leq(self, psi, k1, k2):
        u = self.universe
        tr = self.reviser.tree_ranks(u.mask(psi))
        return tr[u.model_tree[k1]] <= tr[u.model_tree[k2]]

    def selection(self, mask, intentions, new):
        return self.reviser.select(mask, intentions, new)[0]


class InducedAssignment(FaithfulAssignment):
    """The assignment read off an operator, as in the representation proof.

    m1 <= m2 under psi iff m1 satisfies psi, or m1 satisfies the result
    of revising (psi, {}) by form(m1's tree) | form(m2's tree) with no new
    intention. The selection for I maps (M, i) to the intentions of
    (form(M), I) revised by (true, i).
    """

    def __init__(self, op: Callable[[RevisionInput], Agent], universe: Universe):
        self.op = op
        self.universe = universe
        self._pair = {}
        self._sel = {}

    def _revised_mask(self, psi, t1, t2):
        key = (psi, t1, t2)
        r = self._pair.get(key)
        if r is None:
            u = self.universe
            phi = Or(u.form(u.tree_masks[t1]), u.form(u.tree_masks[t2]))
            out = self.op(RevisionInput(Agent(psi, EMPTY_DB), phi, None))
            r = u.mask(out.belief)
            self._pair[key] = r
        return r

    def leq(self, psi, k1, k2):
        u = self.universe
        if u.mask(psi) >> k1 & 1:
            return True
        return bool(self._revised_mask(psi, u.model_tree[k1], u.model_tree[k2]) >> k1 & 1)

    def selection(self, mask, intentions, new):
        key = (mask, intentions, new)
        r = self._sel.get(key)
        if r is None:
            out = self.op(RevisionInput(Agent(self.universe.form(mask), intentions), TOP, new))
            r = out.intentions
            self._sel[key] = r
        return r


def assignment_from_operator(op: Callable[[RevisionInput], Agent], universe: Universe) -> InducedAssignment:
    return InducedAssignment(op, universe)
