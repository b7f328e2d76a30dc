"""Signatures, the timed formula language, its text syntax and the strong-belief check.

Formulas are immutable trees of the primitive constructors below. ``Or``,
``Implies`` and ``Diamond`` are helper functions that expand into ``Not`` and
``And``; the printer folds those shapes back into the sugared syntax.

Concrete syntax (loosest to tightest binding)::

    a -> b      right-associative implication
    a | b       left-associative disjunction
    a & b       left-associative conjunction
    !a  B@t a  D@t a
    p@t  pre(a,b)@t  post(a)@t  do(a)@t  true  false
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, fields
from functools import lru_cache
from typing import Iterable, Iterator

from bidb.errors import HorizonError, ParseError

NAME_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
RESERVED = frozenset({"pre", "post", "do", "true", "false"})


def pre_atom(word) -> str:
    return "pre(" + ",".join(word) + ")"


def post_atom(action) -> str:
    return f"post({action})"


@dataclass(frozen=True)
class Signature:
    """Proposition names, action names and the time horizon H."""

    props: frozenset
    acts: frozenset
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "props", frozenset(self.props))
        object.__setattr__(self, "acts", frozenset(self.acts))
        if not self.acts:
            raise ValueError("signature needs at least one action")
        if self.props & self.acts:
            raise ValueError(f"names used as both proposition and action: {sorted(self.props & self.acts)}")
        for name in self.props | self.acts:
            if not isinstance(name, str) or not NAME_RE.match(name):
                raise ValueError(f"invalid name {name!r}: must match [a-z][a-z0-9_]*")
            if name in RESERVED:
                raise ValueError(f"{name!r} is a reserved word")
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise ValueError(f"horizon must be an integer >= 1, got {self.horizon!r}")

    @property
    def act_list(self) -> tuple:
        return tuple(sorted(self.acts))

    @property
    def prop_list(self) -> tuple:
        return tuple(sorted(self.props))

    def words(self, max_len: int) -> list:
        """All non-empty action words of length <= max_len, shortest first."""
        out = []
        for n in range(1, max_len + 1):
            out.extend(itertools.product(self.act_list, repeat=n))
        return out

    def atoms_at_depth(self, depth: int) -> tuple:
        """Every atom a valuation may contain at this depth, in canonical order."""
        return _atoms_at_depth(self, depth)

    def to_json(self) -> dict:
        return {"props": list(self.prop_list), "acts": list(self.act_list), "horizon": self.horizon}

    @classmethod
    def from_json(cls, doc: dict) -> "Signature":
        return cls(frozenset(doc.get("props", ())), frozenset(doc["acts"]), doc["horizon"])


@lru_cache(maxsize=None)
def _atoms_at_depth(sig: Signature, depth: int) -> tuple:
    atoms = list(sig.prop_list)
    atoms += [post_atom(a) for a in sig.act_list]
    atoms += [pre_atom(w) for w in sig.words(sig.horizon - depth)]
    return tuple(atoms)


# --------------------------------------------------------------------------
# Formula AST


def _cached_hash(self):
    try:
        return self.__dict__["_hash"]
    except KeyError:
        h = hash((type(self).__name__,) + tuple(getattr(self, f.name) for f in fields(self)))
        object.__setattr__(self, "_hash", h)
        return h


def _node(cls):
    # Formulas get hashed constantly as memo keys; cache the hash on the instance.
    cls = dataclass(frozen=True)(cls)
    cls.__hash__ = _cached_hash
    return cls


class Formula:
    __slots__ = ()

    def __str__(self):
        return render_formula(self)


@_node
class Top(Formula):
    pass


@_node
class Bottom(Formula):
    pass


@_node
class PropAt(Formula):
    prop: str
    time: int


@_node
class PreSeqAt(Formula):
    actions: tuple
    time: int

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))


@_node
class PostAt(Formula):
    action: str
    time: int


@_node
class DoAt(Formula):
    action: str
    time: int


@_node
class BoxAt(Formula):
    time: int
    body: Formula


@_node
class Not(Formula):
    body: Formula


@_node
class And(Formula):
    left: Formula
    right: Formula


TOP = Top()
BOTTOM = Bottom()


def Or(left: Formula, right: Formula) -> Formula:
    return Not(And(Not(left), Not(right)))


def Implies(left: Formula, right: Formula) -> Formula:
    return Not(And(left, Not(right)))


def Diamond(time: int, body: Formula) -> Formula:
    return Not(BoxAt(time, Not(body)))


def conjunction(items: Iterable[Formula]) -> Formula:
    """Left-folded conjunction; ``true`` when empty."""
    out = None
    for f in items:
        out = f if out is None else And(out, f)
    return TOP if out is None else out


def disjunction(items: Iterable[Formula]) -> Formula:
    """Left-folded disjunction; ``false`` when empty."""
    out = None
    for f in items:
        out = f if out is None else Or(out, f)
    return BOTTOM if out is None else out


def balanced_disjunction(items: Iterable[Formula]) -> Formula:
    """Disjunction folded as a balanced tree, so depth grows with log(len(items))."""
    level = list(items)
    if not level:
        return BOTTOM
    while len(level) > 1:
        nxt = [Or(level[k], level[k + 1]) for k in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, (Not, BoxAt)):
        yield from subformulas(f.body)
    elif isinstance(f, And):
        yield from subformulas(f.left)
        yield from subformulas(f.right)


# --------------------------------------------------------------------------
# Well-formedness against a signature


def check_formula(f: Formula, sig: Signature) -> None:
    """Raise ParseError/HorizonError if f uses unknown names or times beyond the horizon."""
    H = sig.horizon
    for node in subformulas(f):
        if isinstance(node, (PropAt, PreSeqAt, PostAt, DoAt, BoxAt)):
            if not isinstance(node.time, int) or node.time < 0 or node.time > H:
                raise HorizonError(f"time index {node.time} outside [0, {H}] in {render_formula(node)}")
        if isinstance(node, PropAt) and node.prop not in sig.props:
            raise ParseError(f"unknown proposition {node.prop!r}")
        elif isinstance(node, (PostAt, DoAt)) and node.action not in sig.acts:
            raise ParseError(f"unknown action {node.action!r}")
        elif isinstance(node, PreSeqAt):
            if not node.actions:
                raise ParseError("empty action sequence in pre()")
            for a in node.actions:
                if a not in sig.acts:
                    raise ParseError(f"unknown action {a!r}")
            if len(node.actions) > H - node.time:
                raise HorizonError(
                    f"sequence of length {len(node.actions)} at time {node.time} exceeds horizon {H}"
                )
        if isinstance(node, DoAt) and node.time >= H:
            raise HorizonError(f"do({node.action})@{node.time}: no action is taken at the horizon {H}")


@lru_cache(maxsize=65536)
def max_time(f: Formula) -> int:
    """Largest time point f constrains: sequences and actions reach past their index."""
    if isinstance(f, (Top, Bottom)):
        return 0
    if isinstance(f, (PropAt, PostAt)):
        return f.time
    if isinstance(f, PreSeqAt):
        return f.time + len(f.actions)
    if isinstance(f, DoAt):
        return f.time + 1
    if isinstance(f, BoxAt):
        return max(f.time, max_time(f.body))
    if isinstance(f, Not):
        return max_time(f.body)
    if isinstance(f, And):
        return max(max_time(f.left), max_time(f.right))
    raise TypeError(f"not a formula: {f!r}")


@lru_cache(maxsize=65536)
def is_strong_belief(f: Formula) -> bool:
    """Boolean combinations of formulas boxed at time 0 (constants count as such)."""
    if isinstance(f, (Top, Bottom)):
        return True
    if isinstance(f, BoxAt):
        return f.time == 0
    if isinstance(f, Not):
        return is_strong_belief(f.body)
    if isinstance(f, And):
        return is_strong_belief(f.left) and is_strong_belief(f.right)
    return False


# --------------------------------------------------------------------------
# Tokenizer and recursive-descent parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<arrow>->)|(?P<modal>[BD])@|(?P<nat>\d+)|(?P<name>[a-z][a-z0-9_]*)|(?P<sym>[!&|(),@]))"
)


def _tokenize(text: str) -> list:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        value = m.group(kind)
        if kind == "modal":
            kind, value = "modal", value
        elif kind == "arrow":
            kind = "sym"
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("eof", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, sig: Signature):
        self.text = text
        self.sig = sig
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ParseError(message, self.text, tok[2])

    def expect(self, value):
        tok = self.next()
        if tok[1] != value:
            found = "end of input" if tok[0] == "eof" else repr(tok[1])
            raise self.error(f"expected {value!r}, found {found}", tok)
        return tok

    def nat(self):
        tok = self.next()
        if tok[0] != "nat":
            raise self.error("expected a time index", tok)
        return int(tok[1]), tok

    def parse(self) -> Formula:
        f = self.imp()
        if self.peek()[0] != "eof":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return f

    def imp(self):
        left = self.disj()
        if self.peek()[1] == "->":
            self.next()
            return Implies(left, self.imp())
        return left

    def disj(self):
        f = self.conj()
        while self.peek()[1] == "|":
            self.next()
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.peek()[1] == "&":
            self.next()
            f = And(f, self.unary())
        return f

    def unary(self):
        tok = self.peek()
        if tok[1] == "!":
            self.next()
            return Not(self.unary())
        if tok[0] == "modal":
            self.next()
            t, ttok = self.nat()
            self.check_time(t, ttok)
            body = self.unary()
            return BoxAt(t, body) if tok[1] == "B" else Diamond(t, body)
        if tok[1] == "(":
            self.next()
            f = self.imp()
            self.expect(")")
            return f
        return self.atom()

    def check_time(self, t, tok):
        if t > self.sig.horizon:
            raise HorizonError(f"time index {t} exceeds horizon {self.sig.horizon}", self.text, tok[2])

    def action_name(self):
        tok = self.next()
        if tok[0] != "name":
            raise self.error("expected an action name", tok)
        if tok[1] not in self.sig.acts:
            raise self.error(f"unknown action {tok[1]!r}", tok)
        return tok[1]

    def atom(self):
        tok = self.next()
        kind, value, pos = tok
        if kind != "name":
            found = "end of input" if kind == "eof" else repr(value)
            raise self.error(f"expected a formula, found {found}", tok)
        if value == "true":
            return TOP
        if value == "false":
            return BOTTOM
        H = self.sig.horizon
        if value in ("pre", "post", "do"):
            self.expect("(")
            if value == "pre":
                if self.peek()[1] == ")":
                    raise self.error("empty action sequence in pre()")
                word = [self.action_name()]
                while self.peek()[1] == ",":
                    self.next()
                    word.append(self.action_name())
            else:
                word = [self.action_name()]
            self.expect(")")
            self.expect("@")
            t, ttok = self.nat()
            self.check_time(t, ttok)
            if value == "pre":
                if len(word) > H - t:
                    raise HorizonError(
                        f"sequence of length {len(word)} at time {t} does not fit horizon {H}", self.text, pos
                    )
                return PreSeqAt(tuple(word), t)
            if value == "post":
                return PostAt(word[0], t)
            if t >= H:
                raise HorizonError(f"do() at time {t}: no action is taken at the horizon", self.text, ttok[2])
            return DoAt(word[0], t)
        if value not in self.sig.props:
            raise self.error(f"unknown proposition {value!r}", tok)
        self.expect("@")
        t, ttok = self.nat()
        self.check_time(t, ttok)
        return PropAt(value, t)


def parse_formula(text: str, sig: Signature) -> Formula:
    return _Parser(text, sig).parse()


# --------------------------------------------------------------------------
# Printer

_IMP, _OR, _AND, _UNARY = 1, 2, 3, 4


def _sugar(f: Formula):
    """Recognise the expansions of |, -> and D@ so they print as written."""
    if isinstance(f, Not):
        body = f.body
        if isinstance(body, And):
            if isinstance(body.left, Not) and isinstance(body.right, Not):
                return ("|", body.left.body, body.right.body)
            if isinstance(body.right, Not):
                return ("->", body.left, body.right.body)
        if isinstance(body, BoxAt) and isinstance(body.body, Not):
            return ("D", body.time, body.body.body)
    return None


def _render(f: Formula, level: int) -> str:
    s = _sugar(f)
    if s is not None:
        op = s[0]
        if op == "|":
            out, own = f"{_render(s[1], _OR)} | {_render(s[2], _AND)}", _OR
        elif op == "->":
            out, own = f"{_render(s[1], _OR)} -> {_render(s[2], _IMP)}", _IMP
        else:
            out, own = f"D@{s[1]} {_render(s[2], _UNARY)}", _UNARY
    elif isinstance(f, And):
        out, own = f"{_render(f.left, _AND)} & {_render(f.right, _UNARY)}", _AND
    elif isinstance(f, Not):
        out, own = "!" + _render(f.body, _UNARY), _UNARY
    elif isinstance(f, BoxAt):
        out, own = f"B@{f.time} {_render(f.body, _UNARY)}", _UNARY
    elif isinstance(f, Top):
        return "true"
    elif isinstance(f, Bottom):
        return "false"
    elif isinstance(f, PropAt):
        return f"{f.prop}@{f.time}"
    elif isinstance(f, PreSeqAt):
        return f"{pre_atom(f.actions)}@{f.time}"
    elif isinstance(f, PostAt):
        return f"post({f.action})@{f.time}"
    elif isinstance(f, DoAt):
        return f"do({f.action})@{f.time}"
    else:
        raise TypeError(f"not a formula: {f!r}")
    return f"({out})" if own < level else out


def render_formula(f: Formula) -> str:
    """Canonical text; parse_formula(render_formula(f)) == f."""
    return _render(f, _IMP)
