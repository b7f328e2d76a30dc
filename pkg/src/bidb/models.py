"""Bounded action-labelled trees, pointed models and the truth definition.

Actions are deterministic, so a node is identified by the word of actions
leading to it from the root (its *address*). Two trees are isomorphic exactly
when their address-to-valuation maps agree, which makes ``TreeModel``
equality the isomorphism test.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from bidb.errors import HorizonError, InvariantError
from bidb.lang import (
    And,
    BoxAt,
    Bottom,
    DoAt,
    Formula,
    Not,
    PostAt,
    PreSeqAt,
    PropAt,
    Signature,
    Top,
    post_atom,
    pre_atom,
)


def address_str(address) -> str:
    return "/" + "/".join(address)


@dataclass(frozen=True)
class TreeModel:
    """A finite tree given as ``((address, atoms), ...)`` sorted by address.

    ``names`` optionally maps addresses to display names (e.g. ``s3``); it is
    ignored by equality and hashing.
    """

    horizon: int
    nodes: tuple
    names: Optional[Mapping] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        items = self.nodes.items() if isinstance(self.nodes, Mapping) else self.nodes
        nodes = tuple(sorted(((tuple(a), frozenset(v)) for a, v in items), key=lambda x: (len(x[0]), x[0])))
        object.__setattr__(self, "nodes", nodes)
        val = dict(nodes)
        if len(val) != len(nodes):
            raise InvariantError("duplicate node address")
        children = {a: [] for a in val}
        for a in val:
            if a and a[:-1] in children:
                children[a[:-1]].append(a[-1])
        object.__setattr__(self, "_val", val)
        object.__setattr__(self, "_children", {a: tuple(sorted(c)) for a, c in children.items()})
        object.__setattr__(self, "_leaves", tuple(sorted(a for a in val if len(a) == self.horizon)))

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = hash((self.horizon, self.nodes))
            object.__setattr__(self, "_hash", h)
            return h

    def valuation(self, address) -> frozenset:
        return self._val[tuple(address)]

    def children(self, address) -> tuple:
        return self._children[tuple(address)]

    def addresses(self):
        return self._val.keys()

    def leaves(self) -> tuple:
        """Addresses at depth H; each is the action word of one root-to-leaf path."""
        return self._leaves

    def name(self, address) -> str:
        if self.names and tuple(address) in self.names:
            return self.names[tuple(address)]
        return address_str(address)

    def facts(self) -> frozenset:
        """Valuation facts ``(address, atom)`` and edge facts ``(address, "->a")``."""
        try:
            return self.__dict__["_facts"]
        except KeyError:
            out = set()
            for a, v in self.nodes:
                out.update((a, x) for x in v)
                out.update((a, "->" + c) for c in self._children[a])
            out = frozenset(out)
            object.__setattr__(self, "_facts", out)
            return out

    def pointed(self) -> list:
        return [PointedModel(self, leaf) for leaf in self._leaves]

    def to_document(self, path=None) -> dict:
        ids = {a: self.name(a) if self.names and a in self.names else f"n{k}" for k, (a, _) in enumerate(self.nodes)}
        nodes = [
            {
                "id": ids[a],
                "parent": ids[a[:-1]] if a else None,
                "action": a[-1] if a else None,
                "atoms": sorted(v),
            }
            for a, v in self.nodes
        ]
        doc = {"horizon": self.horizon, "nodes": nodes}
        if path is not None:
            doc["path"] = [ids[tuple(path[:k])] for k in range(len(path) + 1)]
        return doc


@dataclass(frozen=True)
class PointedModel:
    """A tree together with one distinguished root-to-leaf path (the leaf's address)."""

    tree: TreeModel
    path: tuple

    def __post_init__(self):
        object.__setattr__(self, "path", tuple(self.path))
        if self.path not in self.tree._val or len(self.path) != self.tree.horizon:
            raise InvariantError(f"{address_str(self.path)} is not a leaf of the tree")

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = hash((self.tree, self.path))
            object.__setattr__(self, "_hash", h)
            return h

    @property
    def horizon(self) -> int:
        return self.tree.horizon

    @property
    def nodes(self) -> list:
        """The H+1 node addresses visited by the path."""
        return [self.path[:t] for t in range(len(self.path) + 1)]

    def valuation_at(self, t: int) -> frozenset:
        return self.tree.valuation(self.path[:t])

    def __repr__(self):
        return f"PointedModel(path={address_str(self.path)}, tree={self.tree.nodes!r})"


# --------------------------------------------------------------------------
# Well-formedness


@dataclass(frozen=True)
class Violation:
    condition: str
    node: str
    detail: str

    def __str__(self):
        return f"{self.condition} at {self.node}: {self.detail}"


def check_well_formed(tree: TreeModel, sig: Signature) -> list:
    """Every violated condition with its witnessing node; empty iff well formed.

    C1 post(a) holds after an a-edge; C2 pre(a) needs an a-child; C3 sequence
    preconditions are prefix closed; C4 pre(a,w...) needs an a-child holding
    pre(w...). Sequence preconditions must fit the remaining horizon.
    """
    out = []
    H = sig.horizon
    if tree.horizon != H:
        out.append(Violation("signature", "/", f"tree horizon {tree.horizon} differs from {H}"))
    val = tree._val
    if () not in val:
        return out + [Violation("tree", "/", "no root node")]
    for a in val:
        name = tree.name(a)
        if a[:-1] not in val and a:
            out.append(Violation("tree", name, "parent node missing"))
        if len(a) > H:
            out.append(Violation("tree", name, f"node deeper than horizon {H}"))
        elif len(a) < H and not tree.children(a):
            out.append(Violation("tree", name, "internal node without successor (leaf before horizon)"))
        for act in a:
            if act not in sig.acts:
                out.append(Violation("signature", name, f"unknown action {act!r} on edge"))
    for a, v in tree.nodes:
        name = tree.name(a)
        depth = len(a)
        if a and a[-1] in sig.acts and post_atom(a[-1]) not in v:
            out.append(Violation("C1", name, f"entered by {a[-1]} but {post_atom(a[-1])} missing"))
        for atom in sorted(v):
            word = _pre_word(atom)
            if word is None:
                if atom in sig.props:
                    continue
                if atom.startswith("post(") and atom[5:-1] in sig.acts and atom.endswith(")"):
                    continue
                out.append(Violation("signature", name, f"unknown atom {atom!r}"))
                continue
            if not word or any(x not in sig.acts for x in word):
                out.append(Violation("signature", name, f"unknown atom {atom!r}"))
                continue
            if len(word) > H - depth:
                what = "precondition at the horizon" if depth >= H else "sequence longer than remaining horizon"
                out.append(Violation("horizon", name, f"{atom}: {what}"))
                continue
            child = a + (word[0],)
            if len(word) == 1:
                if child not in val:
                    out.append(Violation("C2", name, f"{atom} but no {word[0]}-successor"))
            else:
                if pre_atom(word[:-1]) not in v:
                    out.append(Violation("C3", name, f"{atom} but {pre_atom(word[:-1])} missing"))
                if child not in val:
                    out.append(Violation("C4", name, f"{atom} but no {word[0]}-successor"))
                elif pre_atom(word[1:]) not in val[child]:
                    out.append(
                        Violation("C4", name, f"{atom} but {pre_atom(word[1:])} missing at {tree.name(child)}")
                    )
    return out


def _pre_word(atom: str):
    if atom.startswith("pre(") and atom.endswith(")"):
        inner = atom[4:-1]
        return tuple(inner.split(",")) if inner else ()
    return None


# --------------------------------------------------------------------------
# Tree exchange documents


def read_tree_document(doc: dict):
    """Return ``(tree, path_or_None, structural_violations)``.

    Structural violations (unknown parents, cycles, two equally labelled
    children) make an address-based tree impossible; ``tree`` is then None.
    """
    out = []
    try:
        horizon = doc["horizon"]
        raw = doc["nodes"]
    except (KeyError, TypeError) as exc:
        return None, None, [Violation("document", "/", f"missing field {exc}")]
    unknown = set(doc) - {"horizon", "nodes", "path"}
    if unknown:
        out.append(Violation("document", "/", f"unknown fields {sorted(unknown)}"))
    by_id = {}
    for n in raw:
        if n.get("id") in by_id:
            out.append(Violation("document", str(n.get("id")), "duplicate node id"))
        by_id[n.get("id")] = n
    roots = [n for n in raw if n.get("parent") is None]
    if len(roots) != 1:
        out.append(Violation("tree", "/", f"expected exactly one root, found {len(roots)}"))
        return None, None, out
    address = {roots[0]["id"]: ()}
    labels = {}

    def resolve(nid, seen=()):
        if nid in address:
            return address[nid]
        if nid in seen or nid not in by_id:
            return None
        n = by_id[nid]
        parent = resolve(n.get("parent"), seen + (nid,))
        if parent is None:
            return None
        a = parent + (n.get("action"),)
        address[nid] = a
        return a

    for nid, n in by_id.items():
        a = resolve(nid)
        if a is None:
            out.append(Violation("tree", str(nid), "not connected to the root"))
            continue
        if a and labels.setdefault(a, nid) != nid:
            out.append(
                Violation("determinism", str(n.get("parent")), f"two {a[-1]}-successors: {labels[a]} and {nid}")
            )
    if out:
        return None, None, out
    tree = TreeModel(
        horizon,
        {address[nid]: n.get("atoms", []) for nid, n in by_id.items()},
        names={address[nid]: str(nid) for nid in by_id},
    )
    path = None
    if doc.get("path") is not None:
        ids = doc["path"]
        if not ids or ids[0] != roots[0]["id"] or any(
            by_id.get(b, {}).get("parent") != a for a, b in zip(ids, ids[1:])
        ):
            return tree, None, [Violation("path", "/", "path is not a root-to-leaf sequence of linked nodes")]
        path = address[ids[-1]]
    return tree, path, []


def load_tree(source, sig: Signature):
    """Load a tree document (path, JSON text or dict); return ``(tree, path)``.

    Raises InvariantError listing every violation if the tree is malformed.
    """
    if isinstance(source, dict):
        doc = source
    else:
        p = Path(source)
        doc = json.loads(p.read_text()) if p.exists() else json.loads(source)
    tree, path, problems = read_tree_document(doc)
    if tree is not None:
        problems = problems + check_well_formed(tree, sig)
    if problems:
        raise InvariantError("malformed tree: " + "; ".join(str(v) for v in problems))
    return tree, path


# --------------------------------------------------------------------------
# Semantics


def equivalent_up_to(m1: PointedModel, m2: PointedModel, t: int) -> bool:
    """Both paths visit identical nodes at times 0..t (same tree required)."""
    if m1.tree != m2.tree:
        raise ValueError("path equivalence is only defined on one tree")
    return m1.path[:t] == m2.path[:t]


def satisfies(m: PointedModel, f: Formula) -> bool:
    """Reference truth definition, evaluated directly on one pointed model."""
    H = m.tree.horizon
    if isinstance(f, (PropAt, PostAt, PreSeqAt, DoAt, BoxAt)) and not 0 <= f.time <= H:
        raise HorizonError(f"time {f.time} outside [0, {H}]")
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, PropAt):
        return f.prop in m.valuation_at(f.time)
    if isinstance(f, PostAt):
        return post_atom(f.action) in m.valuation_at(f.time)
    if isinstance(f, PreSeqAt):
        return pre_atom(f.actions) in m.valuation_at(f.time)
    if isinstance(f, DoAt):
        if f.time >= H:
            raise HorizonError(f"do() at horizon {H}")
        return m.path[f.time] == f.action
    if isinstance(f, Not):
        return not satisfies(m, f.body)
    if isinstance(f, And):
        return satisfies(m, f.left) and satisfies(m, f.right)
    if isinstance(f, BoxAt):
        prefix = m.path[: f.time]
        return all(
            satisfies(PointedModel(m.tree, leaf), f.body)
            for leaf in m.tree.leaves()
            if leaf[: f.time] == prefix
        )
    raise TypeError(f"not a formula: {f!r}")


def is_path_closed(models: Iterable[PointedModel]) -> bool:
    """Whether the set contains every path of every tree it touches."""
    models = set(models)
    return all(PointedModel(m.tree, leaf) in models for m in models for leaf in m.tree.leaves())


def trees_of(models: Iterable[PointedModel]) -> set:
    return {m.tree for m in models}
