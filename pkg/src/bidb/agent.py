"""Intentions, intention databases and agents."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional

from bidb.errors import HorizonError, InvariantError, ParseError
from bidb.lang import Formula, Signature, check_formula, is_strong_belief, render_formula

_INTENTION_RE = re.compile(r"\s*([a-z][a-z0-9_]*)@(\d+)\s*\Z")


@dataclass(frozen=True, order=True)
class Intention:
    """Do ``action`` at ``time``. Priority lives in the database, not the intention."""

    action: str
    time: int

    def __str__(self):
        return f"({self.action},{self.time})"

    def check(self, sig: Signature) -> None:
        if self.action not in sig.acts:
            raise ParseError(f"unknown action {self.action!r}")
        if not isinstance(self.time, int) or not 0 <= self.time < sig.horizon:
            raise HorizonError(f"intention time {self.time} must lie in [0, {sig.horizon})")


def parse_intention(text: str, sig: Signature) -> Intention:
    """Parse ``ACTION@TIME``."""
    m = _INTENTION_RE.match(text)
    if not m:
        raise ParseError(f"expected ACTION@TIME, got {text!r}", text, 0)
    i = Intention(m.group(1), int(m.group(2)))
    i.check(sig)
    return i


def format_intentions(items: Iterable[Intention]) -> str:
    return "{" + ", ".join(str(i) for i in items) + "}"


@dataclass(frozen=True)
class IntentionDatabase:
    """Intentions in priority order: ``entries[0]`` has priority 0 (highest).

    At most one intention per time point: two different actions at one time
    can never both be executed, so such a database is rejected outright.
    """

    entries: tuple = ()

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        seen = {}
        for i in entries:
            if not isinstance(i, Intention):
                raise TypeError(f"not an Intention: {i!r}")
            if i.time in seen:
                raise InvariantError(f"two intentions at time {i.time}: {seen[i.time]} and {i}")
            seen[i.time] = i

    @classmethod
    def from_priorities(cls, items: Iterable[tuple]) -> "IntentionDatabase":
        """Build from (intention, priority) pairs; priorities must be distinct."""
        items = list(items)
        prios = [p for _, p in items]
        if len(set(prios)) != len(prios):
            raise InvariantError(f"duplicate priorities: {sorted(prios)}")
        if any((not isinstance(p, int)) or p < 0 for p in prios):
            raise InvariantError("priorities must be natural numbers")
        return cls(tuple(i for i, _ in sorted(items, key=lambda x: x[1])))

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, item):
        return item in self.entries

    def as_set(self) -> frozenset:
        return frozenset(self.entries)

    def priority(self, i: Intention) -> int:
        return self.entries.index(i)

    def check(self, sig: Signature) -> None:
        for i in self.entries:
            i.check(sig)

    def __str__(self):
        return format_intentions(self.entries)


EMPTY_DB = IntentionDatabase()


@dataclass(frozen=True)
class Agent:
    """A strong-belief formula paired with an intention database."""

    belief: Formula
    intentions: IntentionDatabase = EMPTY_DB

    def __post_init__(self):
        if not is_strong_belief(self.belief):
            raise InvariantError(f"not a strong belief: {render_formula(self.belief)}")

    def check(self, sig: Signature) -> None:
        check_formula(self.belief, sig)
        self.intentions.check(sig)


def candidate_set(intentions: Iterable[Intention], new: Optional[Intention]) -> frozenset:
    """I ∪ {i}, with an absent new intention contributing nothing."""
    out = frozenset(intentions)
    return out if new is None else out | {new}
