"""Exhaustive and seeded enumeration of well-formed bounded models.

Trees are generated bottom-up. A subtree is classified by the set of
sequence preconditions at its root (its *pre-set*), because that is all a
parent needs to know to decide which ``pre`` atoms it may carry: ``pre(x)``
needs an x-child, and ``pre(x,w...)`` needs ``pre(w...)`` at that child.
Counting the subtrees per class gives the universe size without building it,
and the same counts give a ranking, so a seeded sample can be drawn from a
universe far too large to list.
"""

from __future__ import annotations

import bisect
import itertools
import math
import random
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterator, Optional

from bidb.errors import CapacityError, ParseError
from bidb.lang import Signature, post_atom, pre_atom
from bidb.models import PointedModel, TreeModel


@dataclass(frozen=True)
class EnumerationCaps:
    """Bounds on the model universe.

    max_branching: most children per node.
    max_atoms: most *optional* atoms per node; the forced ``post(a)`` of the
        incoming a-edge is not counted.
    free_post: whether ``post(b)`` may hold at nodes not entered by b (and at
        the root). Models allow it; forbidding it shrinks the universe.
    sample: draw this many distinct trees (uniformly, seeded) instead of
        listing all of them. Every path of a drawn tree is kept.
    hard_limit: largest tree count listed exhaustively.
    """

    max_branching: Optional[int] = None
    max_atoms: Optional[int] = None
    free_post: bool = True
    sample: Optional[int] = None
    seed: int = 0
    hard_limit: int = 250_000

    _KEYS = {
        "branching": "max_branching",
        "atoms": "max_atoms",
        "sample": "sample",
        "seed": "seed",
        "limit": "hard_limit",
    }

    @classmethod
    def parse(cls, spec: str) -> "EnumerationCaps":
        """Parse ``branching=2,atoms=1,post=forced,sample=7,seed=3,limit=10000``."""
        kwargs = {}
        for part in filter(None, (p.strip() for p in spec.split(","))):
            key, sep, value = part.partition("=")
            if not sep:
                raise ParseError(f"caps entry {part!r} is not key=value")
            if key == "post":
                if value not in ("free", "forced"):
                    raise ParseError("post must be 'free' or 'forced'")
                kwargs["free_post"] = value == "free"
            elif key in cls._KEYS:
                if value in ("none", ""):
                    kwargs[cls._KEYS[key]] = None
                elif value.isdigit():
                    kwargs[cls._KEYS[key]] = int(value)
                else:
                    raise ParseError(f"caps value for {key!r} must be a natural number")
            else:
                raise ParseError(f"unknown caps key {key!r}")
        return cls(**kwargs)

    def spec(self) -> str:
        parts = []
        if self.max_branching is not None:
            parts.append(f"branching={self.max_branching}")
        if self.max_atoms is not None:
            parts.append(f"atoms={self.max_atoms}")
        parts.append("post=" + ("free" if self.free_post else "forced"))
        if self.sample is not None:
            parts.append(f"sample={self.sample}")
        parts.append(f"seed={self.seed}")
        return ",".join(parts)

    def with_seed(self, seed: int) -> "EnumerationCaps":
        return replace(self, seed=seed)


def _downsets(words: frozenset) -> list:
    """All prefix-closed subsets of a prefix-closed set of words."""
    return _downsets_cached(words)


@lru_cache(maxsize=None)
def _downsets_cached(words: frozenset) -> list:
    firsts = sorted({w[0] for w in words})
    options = []
    for y in firsts:
        rest = frozenset(w[1:] for w in words if w[0] == y and len(w) > 1)
        opts = [frozenset()]
        for d in _downsets_cached(rest):
            opts.append(frozenset({(y,)} | {(y,) + w for w in d}))
        options.append(opts)
    out = []
    for combo in itertools.product(*options):
        out.append(frozenset().union(*combo))
    return sorted(out, key=lambda s: (len(s), sorted(s)))


class TreeEnumerator:
    """Counts, lists, ranks and samples the trees allowed by a signature and caps."""

    def __init__(self, sig: Signature, caps: EnumerationCaps = EnumerationCaps()):
        self.sig = sig
        self.caps = caps
        self._groups = {}
        self._class_lists = {}

    # -- structure --------------------------------------------------------

    def _child_sets(self, depth):
        if depth == self.sig.horizon:
            return [()]
        acts = self.sig.act_list
        limit = len(acts) if self.caps.max_branching is None else min(self.caps.max_branching, len(acts))
        return [c for n in range(1, limit + 1) for c in itertools.combinations(acts, n)]

    @lru_cache(maxsize=None)
    def _others(self, depth, inc, budget):
        """Optional non-pre valuations, ordered as bit patterns over the atom list."""
        atoms = list(self.sig.prop_list)
        if self.caps.free_post:
            atoms += [post_atom(b) for b in self.sig.act_list if b != inc]
        forced = frozenset() if inc is None else frozenset({post_atom(inc)})
        out = []
        for bits in range(1 << len(atoms)):
            chosen = [a for k, a in enumerate(atoms) if bits >> k & 1]
            if len(chosen) <= budget:
                out.append(forced | frozenset(chosen))
        return out

    def groups(self, depth, inc):
        """``[(S, child_presets, own_preset, others), ...]`` for a node entered by inc."""
        key = (depth, inc)
        if key in self._groups:
            return self._groups[key]
        budget = math.inf if self.caps.max_atoms is None else self.caps.max_atoms
        out = []
        for S in self._child_sets(depth):
            per_child = [sorted(self.class_counts(depth + 1, x), key=lambda s: (len(s), sorted(s))) for x in S]
            for presets in itertools.product(*per_child):
                cand = set()
                for x, ps in zip(S, presets):
                    cand.add((x,))
                    cand.update((x,) + w for w in ps)
                for own in _downsets(frozenset(cand)):
                    if len(own) > budget:
                        continue
                    others = self._others(depth, inc, budget - len(own))
                    if others:
                        out.append((S, presets, own, others))
        self._groups[key] = out
        return out

    @lru_cache(maxsize=None)
    def _group_size(self, depth, inc, gi):
        S, presets, own, others = self.groups(depth, inc)[gi]
        n = len(others)
        for x, ps in zip(S, presets):
            n *= self.class_counts(depth + 1, x)[ps]
        return n

    @lru_cache(maxsize=None)
    def class_counts(self, depth, inc):
        """Number of subtrees per root pre-set."""
        counts = {}
        for gi, g in enumerate(self.groups(depth, inc)):
            counts[g[2]] = counts.get(g[2], 0) + self._group_size(depth, inc, gi)
        return counts

    @lru_cache(maxsize=None)
    def _class_groups(self, depth, inc, preset):
        idx = [gi for gi, g in enumerate(self.groups(depth, inc)) if preset is None or g[2] == preset]
        cum = list(itertools.accumulate(self._group_size(depth, inc, gi) for gi in idx))
        return idx, cum

    # -- counting, listing, ranking --------------------------------------

    def count(self) -> int:
        return sum(self.class_counts(0, None).values())

    def _valuation(self, own, other):
        return other | {pre_atom(w) for w in own}

    def _subtrees(self, depth, inc, preset):
        """Materialised subtrees of one class, in rank order (used below the root)."""
        key = (depth, inc, preset)
        if key not in self._class_lists:
            self._class_lists[key] = list(self._iter_groups(depth, inc, preset))
        return self._class_lists[key]

    def _iter_groups(self, depth, inc, preset):
        idx, _ = self._class_groups(depth, inc, preset)
        groups = self.groups(depth, inc)
        for gi in idx:
            S, presets, own, others = groups[gi]
            kids = [self._subtrees(depth + 1, x, ps) for x, ps in zip(S, presets)]
            for other in others:
                root = ((), self._valuation(own, other))
                for combo in itertools.product(*kids):
                    items = [root]
                    for x, sub in zip(S, combo):
                        items.extend(((x,) + a, v) for a, v in sub)
                    yield tuple(items)

    def trees(self) -> Iterator[TreeModel]:
        """Every tree, in canonical rank order."""
        H = self.sig.horizon
        for items in self._iter_groups(0, None, None):
            yield TreeModel(H, items)

    def _unrank(self, depth, inc, preset, index):
        idx, cum = self._class_groups(depth, inc, preset)
        k = bisect.bisect_right(cum, index)
        if k >= len(idx):
            raise IndexError(index)
        index -= cum[k - 1] if k else 0
        S, presets, own, others = self.groups(depth, inc)[idx[k]]
        sizes = [self.class_counts(depth + 1, x)[ps] for x, ps in zip(S, presets)]
        inner = math.prod(sizes)
        other_i, rest = divmod(index, inner)
        digits = []
        for size in reversed(sizes):
            rest, d = divmod(rest, size)
            digits.append(d)
        digits.reverse()
        items = [((), self._valuation(own, others[other_i]))]
        for x, ps, d in zip(S, presets, digits):
            items.extend(((x,) + a, v) for a, v in self._unrank(depth + 1, x, ps, d))
        return items

    def unrank(self, index: int) -> TreeModel:
        return TreeModel(self.sig.horizon, self._unrank(0, None, None, index))

    def sample(self, k: int, seed: int) -> list:
        n = self.count()
        picks = sorted(random.Random(seed).sample(range(n), min(k, n)))
        return [self.unrank(i) for i in picks]

    def selected_trees(self) -> list:
        """The trees the caps admit: a seeded sample, or all of them."""
        if self.caps.sample is not None:
            return self.sample(self.caps.sample, self.caps.seed)
        n = self.count()
        if n > self.caps.hard_limit:
            raise CapacityError(
                f"{n} trees under caps [{self.caps.spec()}] exceed the hard limit of {self.caps.hard_limit}; "
                "tighten the caps or set a sample size"
            )
        return list(self.trees())


def enumerate_models(sig: Signature, caps: EnumerationCaps = EnumerationCaps()) -> Iterator[PointedModel]:
    """Every well-formed pointed model within caps, tree by tree, paths in sorted order."""
    for tree in TreeEnumerator(sig, caps).selected_trees():
        yield from tree.pointed()


def count_trees(sig: Signature, caps: EnumerationCaps = EnumerationCaps()) -> int:
    return TreeEnumerator(sig, caps).count()
