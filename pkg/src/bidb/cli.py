"""Command-line front end: ``bidb <command> [--db PATH] [--trace] [--seed N] [--caps SPEC]``.

Every command goes through ``run_command`` so one-shot calls, ``repl`` and
``batch`` produce the same text for the same command sequence.
"""

from __future__ import annotations

import argparse
import shlex
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from bidb import store
from bidb.agent import EMPTY_DB, Agent, Intention, format_intentions, parse_intention
from bidb.coherence import cohere_formula, find_witness, weak_belief_holds, weak_beliefs_consistent
from bidb.enumeration import EnumerationCaps, TreeEnumerator
from bidb.errors import BidbError, CapacityError, InvariantError, ParseError, PostulateFailure
from bidb.lang import TOP, Signature, is_strong_belief, parse_formula, render_formula
from bidb.models import address_str
from bidb.postulates import TestUniverse, verify
from bidb.revision import RevisionInput, reviser_for
from bidb.universe import get_universe

DEFAULT_CAPS = "branching=2,atoms=1,post=forced"
VERIFY_TREE_LIMIT = 8

MUTATING = {"assert", "intend", "revise"}
ALIASES = {"wb-holds": "query", "wb-consistent": "wb-consistent?"}


@dataclass
class Session:
    agent: Optional[Agent] = None
    sig: Optional[Signature] = None
    path: Optional[str] = None
    caps: EnumerationCaps = field(default_factory=lambda: EnumerationCaps.parse(DEFAULT_CAPS))
    trace: bool = False

    def require(self):
        if self.agent is None:
            raise InvariantError("no database: run 'new' or 'load' first")
        return self.agent, self.sig

    def universe(self):
        return get_universe(self.sig, self.caps)

    def model_count(self, belief) -> int:
        return bin(self.universe().mask(belief)).count("1")

    def autosave(self) -> None:
        if self.path is not None and self.agent is not None:
            store.save(self.agent, self.sig, self.path)


def _parse_kv(args, allowed) -> dict:
    out = {}
    for a in args:
        key, sep, value = a.partition("=")
        if not sep or key not in allowed:
            raise ParseError(f"expected one of {', '.join(k + '=' for k in allowed)}, got {a!r}")
        out[key] = value
    return out


def _names(text: str) -> frozenset:
    return frozenset(n for n in (x.strip() for x in text.split(",")) if n)


def _signature(props: str, acts: str, horizon: str) -> Signature:
    if not horizon.isdigit():
        raise ParseError(f"horizon must be a natural number, got {horizon!r}")
    try:
        return Signature(_names(props), _names(acts), int(horizon))
    except ValueError as e:
        raise ParseError(str(e)) from e


def parse_universe_spec(text: str):
    """``props=p;acts=a,b;horizon=2;branching=2;atoms=1;post=forced;sample=6;seed=5``."""
    kv = _parse_kv(
        [p for p in text.split(";") if p.strip()],
        ("props", "acts", "horizon", "branching", "atoms", "post", "sample", "seed", "limit"),
    )
    if "acts" not in kv or "horizon" not in kv:
        raise ParseError("universe spec needs acts= and horizon=")
    sig = _signature(kv.pop("props", ""), kv.pop("acts"), kv.pop("horizon"))
    caps = EnumerationCaps.parse(",".join(f"{k}={v}" for k, v in kv.items()))
    return sig, caps


def _describe_sig(sig: Signature) -> str:
    return (
        f"props={{{','.join(sig.prop_list)}}} acts={{{','.join(sig.act_list)}}} horizon={sig.horizon}"
    )


def _show(session: Session) -> list:
    agent, sig = session.require()
    lines = [
        f"signature: {_describe_sig(sig)}",
        f"belief: {render_formula(agent.belief)}",
        f"models: {session.model_count(agent.belief)}",
        "intentions:" if len(agent.intentions) else "intentions: {}",
    ]
    lines += [f"  {p} {i}" for p, i in enumerate(agent.intentions)]
    return lines


def _strong(text: str, sig: Signature):
    f = parse_formula(text, sig)
    if not is_strong_belief(f):
        raise InvariantError(f"not a strong belief: {text}")
    return f


def _intention(text: str, sig: Signature) -> Intention:
    return parse_intention(text, sig)


def _apply(session: Session, phi, new: Optional[Intention], priority: Optional[int]) -> list:
    agent, sig = session.require()
    before_models = session.model_count(agent.belief)
    reviser = reviser_for(sig, session.caps)
    out, trace = reviser.revise(RevisionInput(agent, phi, new, priority))
    after_mask = session.universe().mask(out.belief)
    if after_mask and not find_witness(
        session.universe().models_of(after_mask), cohere_formula(out.intentions, sig)
    ).coherent:
        raise InvariantError("revision produced an incoherent database")
    lines = []
    if session.trace:
        lines += ["trace: " + t for t in trace.lines()]
    old, kept = agent.intentions.as_set(), out.intentions.as_set()
    lines += [
        f"models: {before_models} -> {bin(after_mask).count('1')}",
        f"I' = {format_intentions(out.intentions)}",
        f"dropped: {format_intentions(sorted(old - kept))}",
        f"added: {format_intentions(sorted(kept - old))}",
    ]
    if trace.warning:
        lines.append(f"warning: {trace.warning}")
    session.agent = out
    return lines


def _verify(session: Session, args: list, seed: Optional[int]) -> list:
    spec = None
    if args:
        if args[0] != "--universe" or len(args) != 2:
            raise ParseError("usage: verify [--universe SPEC]")
        spec = args[1]
    if spec is not None:
        sig, caps = parse_universe_spec(spec)
    else:
        _, sig = session.require()
        caps = session.caps
    if seed is not None:
        caps = caps.with_seed(seed)
    n = TreeEnumerator(sig, caps).count() if caps.sample is None else caps.sample
    if n > VERIFY_TREE_LIMIT:
        raise CapacityError(
            f"{n} trees: the harness enumerates every set of trees, so at most {VERIFY_TREE_LIMIT} are allowed; "
            "add sample=N to the universe spec"
        )
    u = TestUniverse(sig, caps)
    report = verify(u)
    lines = [report.title] + report.lines()
    if not report.passed:
        failure = PostulateFailure("postulate failure: " + ", ".join(report.failed()))
        failure.output = lines
        raise failure
    return lines


def _enumerate(session: Session, args: list) -> list:
    _, sig = session.require()
    en = TreeEnumerator(sig, session.caps)
    if args == ["--count"]:
        trees = en.count()
        if session.caps.sample is not None:
            trees = min(trees, session.caps.sample)
        lines = [f"trees: {trees}"]
        if trees <= session.caps.hard_limit:
            lines.append(f"pointed models: {len(session.universe())}")
        return lines
    if args:
        raise ParseError("usage: enumerate [--count]")
    lines = []
    for k, tree in enumerate(en.selected_trees()):
        nodes = " ".join(f"{address_str(a)}:{{{','.join(sorted(v))}}}" for a, v in tree.nodes)
        lines.append(f"tree {k}: {nodes}")
    return lines


def run_command(session: Session, line: str, seed: Optional[int] = None) -> list:
    """Execute one command line against the session; return output lines."""
    try:
        words = shlex.split(line)
    except ValueError as e:
        raise ParseError(f"cannot split command: {e}") from e
    if not words:
        return []
    cmd, args = ALIASES.get(words[0], words[0]), words[1:]

    if cmd == "new":
        kv = _parse_kv(args, ("props", "acts", "horizon"))
        if "acts" not in kv or "horizon" not in kv:
            raise ParseError("usage: new acts=A,B horizon=H [props=P,Q]")
        session.sig = _signature(kv.get("props", ""), kv["acts"], kv["horizon"])
        session.agent = Agent(TOP, EMPTY_DB)
        session.autosave()
        return [f"new database: {_describe_sig(session.sig)}"]
    if cmd == "load":
        if len(args) != 1:
            raise ParseError("usage: load PATH")
        session.agent, session.sig = store.load(args[0])
        session.path = args[0]
        return [f"loaded {args[0]}"]
    if cmd == "save":
        agent, sig = session.require()
        if len(args) > 1:
            raise ParseError("usage: save [PATH]")
        target = args[0] if args else session.path
        if target is None:
            raise ParseError("save needs a path")
        store.save(agent, sig, target)
        session.path = target
        return [f"saved {target}"]
    if cmd == "show":
        return _show(session)
    if cmd == "assert":
        _, sig = session.require()
        if len(args) != 1:
            raise ParseError("usage: assert FORMULA")
        return _apply(session, _strong(args[0], sig), None, None)
    if cmd == "intend":
        _, sig = session.require()
        if len(args) not in (1, 2):
            raise ParseError("usage: intend ACTION@TIME [PRIORITY]")
        priority = None
        if len(args) == 2:
            if not args[1].isdigit():
                raise ParseError(f"priority must be a natural number, got {args[1]!r}")
            priority = int(args[1])
        return _apply(session, TOP, _intention(args[0], sig), priority)
    if cmd == "revise":
        _, sig = session.require()
        if len(args) != 2:
            raise ParseError("usage: revise FORMULA ACTION@TIME")
        return _apply(session, _strong(args[0], sig), _intention(args[1], sig), None)
    if cmd == "query":
        agent, sig = session.require()
        if len(args) != 1:
            raise ParseError("usage: query FORMULA")
        phi = parse_formula(args[0], sig)
        return ["yes" if weak_belief_holds(agent.belief, agent.intentions, phi, sig, session.caps) else "no"]
    if cmd == "coherent?":
        agent, sig = session.require()
        formula = cohere_formula(agent.intentions, sig)
        verdict = find_witness(session.universe().mod_set(agent.belief), formula)
        if verdict.coherent:
            w = verdict.witness
            return ["yes", f"witness path: {' '.join(w.path) or '(root)'}"]
        return ["no", f"failing: {render_formula(formula)}"]
    if cmd == "wb-consistent?":
        agent, sig = session.require()
        return ["yes" if weak_beliefs_consistent(agent.belief, agent.intentions, sig, session.caps) else "no"]
    if cmd == "verify":
        return _verify(session, args, seed)
    if cmd == "enumerate":
        return _enumerate(session, args)
    raise ParseError(f"unknown command {cmd!r}")


def run_lines(session: Session, lines, out, seed=None) -> int:
    """Shared driver for repl and batch: errors are reported and the run continues."""
    status = 0
    interactive = out.isatty() and sys.stdin.isatty()
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line in ("quit", "exit"):
            break
        try:
            result = run_command(session, line, seed)
            if line.split()[0] in MUTATING:
                session.autosave()
        except BidbError as e:
            result = getattr(e, "output", []) + [f"error: {e}"]
            status = e.exit_code
        for r in result:
            print(r, file=out)
        if interactive:
            print("bidb> ", end="", file=out, flush=True)
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bidb", description="Belief and intention database engine.")
    p.add_argument("command", help="command to run (see README), or repl / batch FILE")
    p.add_argument("args", nargs=argparse.REMAINDER, help="command arguments")
    return p


def _split_options(argv: list):
    """Pull the global options out from anywhere on the line."""
    opts = {"db": None, "trace": False, "seed": None, "caps": None}
    rest = []
    it = iter(argv)
    for a in it:
        if a == "--trace":
            opts["trace"] = True
        elif a in ("--db", "--seed", "--caps"):
            try:
                opts[a[2:]] = next(it)
            except StopIteration:
                raise ParseError(f"{a} needs a value")
        elif a.startswith(("--db=", "--seed=", "--caps=")):
            key, _, value = a[2:].partition("=")
            opts[key] = value
        else:
            rest.append(a)
    return opts, rest


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        opts, rest = _split_options(argv)
        if not rest or rest[0] in ("-h", "--help"):
            build_parser().print_help()
            return 0
        seed = None
        if opts["seed"] is not None:
            if not str(opts["seed"]).isdigit():
                raise ParseError("--seed needs a natural number")
            seed = int(opts["seed"])
        caps = EnumerationCaps.parse(opts["caps"] or DEFAULT_CAPS)
        if seed is not None:
            caps = caps.with_seed(seed)
        session = Session(caps=caps, trace=opts["trace"], path=opts["db"])
        cmd = rest[0]
        if opts["db"] and Path(opts["db"]).exists() and cmd != "new":
            session.agent, session.sig = store.load(opts["db"])
        if cmd == "repl":
            return run_lines(session, sys.stdin, sys.stdout, seed)
        if cmd == "batch":
            if len(rest) != 2:
                raise ParseError("usage: batch FILE")
            return run_lines(session, Path(rest[1]).read_text().splitlines(), sys.stdout, seed)
        line = " ".join(shlex.quote(a) for a in rest)
        for r in run_command(session, line, seed):
            print(r)
        if cmd in MUTATING:
            session.autosave()
        return 0
    except BidbError as e:
        for r in getattr(e, "output", []):
            print(r)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
