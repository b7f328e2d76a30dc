"""Finite model universes, semantic entailment and characteristic formulas.

A ``Universe`` fixes the enumerated pointed models of one signature under
one set of caps and numbers them. Formulas are evaluated set-at-a-time into
integer bitmasks over that numbering, memoised per subformula, which is what
makes exhaustive postulate checking affordable. ``models.satisfies`` stays the
per-model reference and the test suite holds the two to agreement.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Iterator, Optional

from bidb.enumeration import EnumerationCaps, TreeEnumerator
from bidb.errors import InvariantError
from bidb.lang import (
    And,
    BOTTOM,
    BoxAt,
    Bottom,
    Diamond,
    DoAt,
    Formula,
    Not,
    PostAt,
    PreSeqAt,
    PropAt,
    Signature,
    Top,
    balanced_disjunction,
    conjunction,
    disjunction,
    post_atom,
    pre_atom,
)
from bidb.models import PointedModel, TreeModel


def iter_bits(mask: int) -> list:
    s = bin(mask)[:1:-1]
    return [k for k, c in enumerate(s) if c == "1"]


def tree_key(tree: TreeModel) -> tuple:
    return tuple((a, tuple(sorted(v))) for a, v in tree.nodes)


class Universe:
    """The pointed models of ``sig`` admitted by ``caps``, with bitmask semantics."""

    def __init__(self, sig: Signature, caps: EnumerationCaps = EnumerationCaps(), trees: Optional[list] = None):
        self.sig = sig
        self.caps = caps
        if trees is None:
            trees = TreeEnumerator(sig, caps).selected_trees()
        self.trees = list(trees)
        self.tree_index = {t: k for k, t in enumerate(self.trees)}
        if len(self.tree_index) != len(self.trees):
            raise InvariantError("duplicate tree in universe")
        self.models = []
        self.model_tree = []
        self.tree_masks = []
        for k, t in enumerate(self.trees):
            start = len(self.models)
            pms = t.pointed()
            self.models.extend(pms)
            self.model_tree.extend([k] * len(pms))
            self.tree_masks.append(((1 << len(pms)) - 1) << start)
        self.index = {m: k for k, m in enumerate(self.models)}
        self.full = (1 << len(self.models)) - 1
        self._memo = {}
        self._atom_masks = {}
        self._classes = {}
        self._forms = {}

    def __len__(self):
        return len(self.models)

    def __repr__(self):
        return f"Universe({len(self.trees)} trees, {len(self.models)} models, caps=[{self.caps.spec()}])"

    # -- conversion -------------------------------------------------------

    def models_of(self, mask: int) -> frozenset:
        return frozenset(self.models[k] for k in iter_bits(mask))

    def mask_of(self, models: Iterable[PointedModel]) -> int:
        out = 0
        for m in models:
            out |= 1 << self.index[m]
        return out

    def trees_in(self, mask: int) -> list:
        """Indices of trees with at least one model in mask."""
        return sorted({self.model_tree[k] for k in iter_bits(mask)})

    def closure(self, mask: int) -> int:
        """Smallest path-closed superset."""
        out = 0
        for k in self.trees_in(mask):
            out |= self.tree_masks[k]
        return out

    def is_path_closed(self, mask: int) -> bool:
        return self.closure(mask) == mask

    def mask_of_trees(self, tree_ids: Iterable[int]) -> int:
        out = 0
        for k in tree_ids:
            out |= self.tree_masks[k]
        return out

    def belief_masks(self) -> Iterator[int]:
        """Every path-closed model set, by subset bit pattern over the trees."""
        n = len(self.trees)
        for bits in range(1 << n):
            yield self.mask_of_trees(k for k in range(n) if bits >> k & 1)

    # -- evaluation -------------------------------------------------------

    def _atom(self, atom: str, t: int) -> int:
        key = (atom, t)
        m = self._atom_masks.get(key)
        if m is None:
            m = 0
            for k, pm in enumerate(self.models):
                if atom in pm.valuation_at(t):
                    m |= 1 << k
            self._atom_masks[key] = m
        return m

    def _do(self, action: str, t: int) -> int:
        key = ("do " + action, t)
        m = self._atom_masks.get(key)
        if m is None:
            m = 0
            for k, pm in enumerate(self.models):
                if pm.path[t] == action:
                    m |= 1 << k
            self._atom_masks[key] = m
        return m

    def _path_classes(self, t: int):
        """Per model, the id of its ~t class; and the mask of each class."""
        if t not in self._classes:
            ids, masks, keys = [], [], {}
            for k, pm in enumerate(self.models):
                key = (self.model_tree[k], pm.path[:t])
                if key not in keys:
                    keys[key] = len(masks)
                    masks.append(0)
                c = keys[key]
                ids.append(c)
                masks[c] |= 1 << k
            self._classes[t] = (ids, masks)
        return self._classes[t]

    def mask(self, f: Formula) -> int:
        """Bitmask of the models satisfying f."""
        m = self._memo.get(f)
        if m is not None:
            return m
        if isinstance(f, Top):
            m = self.full
        elif isinstance(f, Bottom):
            m = 0
        elif isinstance(f, PropAt):
            m = self._atom(f.prop, f.time)
        elif isinstance(f, PostAt):
            m = self._atom(post_atom(f.action), f.time)
        elif isinstance(f, PreSeqAt):
            m = self._atom(pre_atom(f.actions), f.time)
        elif isinstance(f, DoAt):
            m = self._do(f.action, f.time)
        elif isinstance(f, Not):
            m = self.full & ~self.mask(f.body)
        elif isinstance(f, And):
            left = self.mask(f.left)
            m = left & self.mask(f.right) if left else 0
        elif isinstance(f, BoxAt):
            bad = self.full & ~self.mask(f.body)
            ids, masks = self._path_classes(f.time)
            hit = 0
            for c in {ids[k] for k in iter_bits(bad)}:
                hit |= masks[c]
            m = self.full & ~hit
        else:
            raise TypeError(f"not a formula: {f!r}")
        self._memo[f] = m
        return m

    def mod_set(self, f: Formula) -> frozenset:
        return self.models_of(self.mask(f))

    def entails(self, psi: Formula, phi: Formula) -> bool:
        return self.mask(psi) & ~self.mask(phi) == 0

    def satisfiable(self, f: Formula) -> bool:
        return self.mask(f) != 0

    def equivalent(self, a: Formula, b: Formula) -> bool:
        return self.mask(a) == self.mask(b)

    def valid(self, f: Formula) -> bool:
        return self.mask(f) == self.full

    # -- characteristic formulas -----------------------------------------

    def form(self, mask: int) -> Formula:
        """Strong-belief formula whose models are exactly the path-closed set ``mask``."""
        f = self._forms.get(mask)
        if f is None:
            if not self.is_path_closed(mask):
                raise InvariantError("form() needs a set closed under path switching")
            f = form_of_trees((self.trees[k] for k in self.trees_in(mask)), self.sig)
            self._forms[mask] = f
        return f


@lru_cache(maxsize=8)
def get_universe(sig: Signature, caps: EnumerationCaps = EnumerationCaps()) -> Universe:
    return Universe(sig, caps)


def mod_set(f: Formula, sig: Signature, caps: EnumerationCaps = EnumerationCaps()) -> frozenset:
    return get_universe(sig, caps).mod_set(f)


def entails(psi: Formula, phi: Formula, sig: Signature, caps: EnumerationCaps = EnumerationCaps()) -> bool:
    return get_universe(sig, caps).entails(psi, phi)


def satisfiable(f: Formula, sig: Signature, caps: EnumerationCaps = EnumerationCaps()) -> bool:
    return get_universe(sig, caps).satisfiable(f)


def _atom_formula(atom: str, t: int) -> Formula:
    if atom.startswith("pre("):
        return PreSeqAt(tuple(atom[4:-1].split(",")), t)
    if atom.startswith("post("):
        return PostAt(atom[5:-1], t)
    return PropAt(atom, t)


def _valuation_literals(val: frozenset, depth: int, sig: Signature) -> list:
    return [
        _atom_formula(x, depth) if x in val else Not(_atom_formula(x, depth)) for x in sig.atoms_at_depth(depth)
    ]


def _path_description(tree: TreeModel, leaf: tuple, sig: Signature) -> Formula:
    parts = [DoAt(a, k) for k, a in enumerate(leaf)]
    for k in range(len(leaf) + 1):
        parts.extend(_valuation_literals(tree.valuation(leaf[:k]), k, sig))
    return conjunction(parts)


@lru_cache(maxsize=65536)
def characteristic_formula(tree: TreeModel, sig: Signature) -> Formula:
    """A strong belief true on (T', π) iff T' is T.

    Every path of the model is some described path of T (the boxed
    disjunction), and every described path of T is possible (the diamonds).
    A path description fixes the actions taken and every valuation along it.
    """
    descs = [_path_description(tree, leaf, sig) for leaf in tree.leaves()]
    return And(BoxAt(0, disjunction(descs)), conjunction(Diamond(0, d) for d in descs))


def form_of_trees(trees: Iterable[TreeModel], sig: Signature) -> Formula:
    trees = sorted(set(trees), key=tree_key)
    if not trees:
        return BOTTOM
    # Large model sets give thousands of disjuncts; a linear fold would nest
    # deeper than the recursion limit.
    return balanced_disjunction(characteristic_formula(t, sig) for t in trees)


def form(models: Iterable[PointedModel], sig: Signature) -> Formula:
    """Disjunction of the characteristic formulas of the trees in a path-closed set."""
    models = frozenset(models)
    trees = {m.tree for m in models}
    if any(PointedModel(t, leaf) not in models for t in trees for leaf in t.leaves()):
        raise InvariantError("form() needs a set closed under path switching")
    return form_of_trees(trees, sig)


def ext(models: Iterable[PointedModel]) -> frozenset:
    """Extensions of bounded models. The universe is horizon-aligned, so this is the identity."""
    return frozenset(models)
