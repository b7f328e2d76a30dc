"""JSON database files holding one agent and its signature.

The file does not have to be coherent: a hand-edited incoherent database
loads fine, so that ``coherent?`` can report on it.
"""

from __future__ import annotations

import json
from pathlib import Path

from bidb.agent import Agent, Intention, IntentionDatabase
from bidb.errors import InvariantError, ParseError
from bidb.lang import Signature, is_strong_belief, parse_formula, render_formula

FORMAT_VERSION = 1

_TOP_KEYS = {"version", "signature", "belief", "intentions"}
_SIG_KEYS = {"props", "acts", "horizon"}
_INTENTION_KEYS = {"action", "time", "priority"}


def _exact_keys(obj, allowed: set, required: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ParseError(f"{where}: missing field(s) {sorted(missing)}")


def to_document(agent: Agent, sig: Signature) -> dict:
    return {
        "version": FORMAT_VERSION,
        "signature": sig.to_json(),
        "belief": render_formula(agent.belief),
        "intentions": [
            {"action": i.action, "time": i.time, "priority": p} for p, i in enumerate(agent.intentions)
        ],
    }


def from_document(doc, source: str = "<document>"):
    """Validate a parsed document; return ``(agent, signature)``."""
    _exact_keys(doc, _TOP_KEYS, _TOP_KEYS, source)
    if doc["version"] != FORMAT_VERSION:
        raise ParseError(f"{source}: unsupported version {doc['version']!r} (expected {FORMAT_VERSION})")
    _exact_keys(doc["signature"], _SIG_KEYS, {"acts", "horizon"}, f"{source}: signature")
    try:
        sig = Signature.from_json(doc["signature"])
    except (TypeError, ValueError) as e:
        raise ParseError(f"{source}: signature: {e}") from e
    if not isinstance(doc["belief"], str):
        raise ParseError(f"{source}: belief must be a formula string")
    belief = parse_formula(doc["belief"], sig)
    if not is_strong_belief(belief):
        raise InvariantError(f"{source}: belief is not a strong belief: {doc['belief']}")
    if not isinstance(doc["intentions"], list):
        raise ParseError(f"{source}: intentions must be a list")
    pairs = []
    for k, item in enumerate(doc["intentions"]):
        _exact_keys(item, _INTENTION_KEYS, _INTENTION_KEYS, f"{source}: intentions[{k}]")
        if not isinstance(item["time"], int) or not isinstance(item["priority"], int):
            raise ParseError(f"{source}: intentions[{k}]: time and priority must be integers")
        i = Intention(item["action"], item["time"])
        i.check(sig)
        pairs.append((i, item["priority"]))
    return Agent(belief, IntentionDatabase.from_priorities(pairs)), sig


def loads(text: str, source: str = "<string>"):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from e
    return from_document(doc, source)


def dumps(agent: Agent, sig: Signature) -> str:
    return json.dumps(to_document(agent, sig), indent=2) + "\n"


def load(path):
    """Read a database file; return ``(agent, signature)``."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ParseError(f"cannot read {p}: {e.strerror}") from e
    return loads(text, str(p))


def save(agent: Agent, sig: Signature, path) -> None:
    agent.check(sig)
    Path(path).write_text(dumps(agent, sig))
