"""Brute-force checks of the revision postulates over a finite universe.

Belief inputs are quantified semantically: one canonical strong belief per
path-closed model set, plus a few syntactic variants of each to exercise
independence from syntax. Pair postulates are checked by grouping observed
outputs by their semantic key, which covers every pair of instances without
iterating over pairs.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from bidb.agent import EMPTY_DB, Agent, Intention, IntentionDatabase, format_intentions
from bidb.coherence import cohere_formula
from bidb.enumeration import EnumerationCaps
from bidb.lang import TOP, And, Formula, Not, Signature, render_formula
from bidb.revision import (
    DalalAssignment,
    FaithfulAssignment,
    RevisionInput,
    assignment_from_operator,
    reviser_in,
)
from bidb.universe import Universe

Operator = Callable[[RevisionInput], Agent]
Selection = Callable[[int, IntentionDatabase, Optional[Intention]], IntentionDatabase]

SINGLE = ("P1", "P2", "P3", "P7", "P8", "P9", "P10", "P12")
PAIRED = ("P4", "P5", "P6", "P11")
POSTULATES = ("P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8", "P9", "P10", "P11", "P12")
SELECTION = ("S1", "S2", "S3", "S4", "S5")
FAITHFUL = ("F-total", "F-transitive", "F1", "F2", "F3", "F4")


def all_databases(sig: Signature) -> list:
    """Every intention database: at most one action per time, in every priority order."""
    out = []
    times = range(sig.horizon)
    for n in range(len(times) + 1):
        for ts in itertools.combinations(times, n):
            for acts in itertools.product(sig.act_list, repeat=n):
                items = [Intention(a, t) for a, t in zip(acts, ts)]
                for order in itertools.permutations(items):
                    out.append(IntentionDatabase(tuple(order)))
    return out


def all_intentions(sig: Signature) -> list:
    return [Intention(a, t) for t in range(sig.horizon) for a in sig.act_list]


class TestUniverse:
    """Finite quantification domain for the harness."""

    __test__ = False

    def __init__(
        self,
        sig: Signature,
        caps: EnumerationCaps = EnumerationCaps(),
        universe: Optional[Universe] = None,
        variants: bool = True,
        max_triples: Optional[int] = None,
        seed: int = 0,
    ):
        self.sig = sig
        self.universe = universe or Universe(sig, caps)
        u = self.universe
        self.belief_masks = list(u.belief_masks())
        self.beliefs = {m: u.form(m) for m in self.belief_masks}
        self.variants = {m: self._variants(f) for m, f in self.beliefs.items()} if variants else {}
        self.databases = all_databases(sig)
        self.intentions = [None] + all_intentions(sig)
        self.max_triples = max_triples
        self.seed = seed
        self._coh = {}

    @staticmethod
    def _variants(f: Formula) -> list:
        return [Not(Not(f)), And(f, TOP)]

    def __repr__(self):
        return (
            f"TestUniverse({self.universe!r}, {len(self.belief_masks)} belief sets, "
            f"{len(self.databases)} databases, {len(self.intentions)} intentions)"
        )

    def coherent(self, mask: int, intentions) -> bool:
        """Some model in the set satisfies the coherence formula (never true for an empty set)."""
        key = (mask, frozenset(intentions))
        c = self._coh.get(key)
        if c is None:
            c = self.universe.mask(cohere_formula(key[1], self.sig)) & mask != 0
            self._coh[key] = c
        return c

    def instances(self) -> Iterator[tuple]:
        """``(psi, phi, I, i)`` over canonical beliefs, then syntactic variants."""
        for mp in self.belief_masks:
            for mf in self.belief_masks:
                for db in self.databases:
                    for i in self.intentions:
                        yield self.beliefs[mp], self.beliefs[mf], db, i
        probes = [(EMPTY_DB, None)] + [(db, i) for db in self.databases[1:2] for i in self.intentions[1:2]]
        for mp, vs in self.variants.items():
            for mf in self.belief_masks:
                for v in vs:
                    for db, i in probes:
                        yield v, self.beliefs[mf], db, i
                        yield self.beliefs[mf], v, db, i


@dataclass
class CheckResult:
    name: str
    cases: int = 0
    failures: int = 0
    skipped: int = 0
    counterexample: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, ok: bool, witness: Callable[[], dict]) -> None:
        self.cases += 1
        if not ok:
            self.failures += 1
            if self.counterexample is None:
                self.counterexample = witness()

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f", {self.failures} failures" if self.failures else ""
        skip = f", {self.skipped} skipped" if self.skipped else ""
        return f"{self.name}: {status} ({self.cases} cases{extra}{skip})"


@dataclass
class PostulateReport:
    title: str
    results: dict = field(default_factory=dict)

    def result(self, name: str) -> CheckResult:
        if name not in self.results:
            self.results[name] = CheckResult(name)
        return self.results[name]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def failed(self) -> list:
        return [n for n, r in self.results.items() if not r.passed]

    def lines(self) -> list:
        return [r.line() for r in self.results.values()]

    def text(self) -> str:
        return "\n".join([self.title] + self.lines())

    def to_json(self) -> str:
        doc = {
            "title": self.title,
            "passed": self.passed,
            "results": [
                {
                    "name": r.name,
                    "status": "pass" if r.passed else "fail",
                    "cases": r.cases,
                    "failures": r.failures,
                    "skipped": r.skipped,
                    "counterexample": _jsonable(r.counterexample),
                }
                for r in self.results.values()
            ],
        }
        return json.dumps(doc, indent=2)

    def merge(self, other: "PostulateReport") -> "PostulateReport":
        for name, r in other.results.items():
            self.results[name] = r
        return self


def _jsonable(x):
    if x is None:
        return None
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items() if not k.startswith("_")}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Formula):
        return render_formula(x)
    if isinstance(x, IntentionDatabase):
        return format_intentions(x)
    if isinstance(x, Intention):
        return str(x)
    if isinstance(x, Agent):
        return {"belief": render_formula(x.belief), "intentions": format_intentions(x.intentions)}
    if isinstance(x, (str, int, float, bool)):
        return x
    return repr(x)


# --------------------------------------------------------------------------
# Single-instance postulates


def _strict_supersets(kept: frozenset, pool: frozenset) -> Iterator[frozenset]:
    extra = sorted(pool - kept)
    for n in range(1, len(extra) + 1):
        for add in itertools.combinations(extra, n):
            yield kept | frozenset(add)


def selection_conditions(u: TestUniverse, mask: int, db: IntentionDatabase, i, out: IntentionDatabase) -> dict:
    """Truth of the five selection conditions (None where the condition is skipped)."""
    pool = db.as_set() | ({i} if i is not None else frozenset())
    kept = out.as_set()
    return {
        "S1": u.coherent(mask, kept) if mask else None,
        "S2": (i in kept) if i is not None and u.coherent(mask, {i}) else True,
        "S3": pool <= kept if u.coherent(mask, pool) else True,
        "S4": kept <= pool,
        "S5": not any(u.coherent(mask, j) for j in _strict_supersets(kept, pool)),
    }


def single_postulates(u: TestUniverse, psi, phi, db, i, out: Agent) -> dict:
    U = u.universe
    mp, mf, mo = U.mask(psi), U.mask(phi), U.mask(out.belief)
    sel = selection_conditions(u, mo, db, i, out.intentions)
    return {
        "P1": mo & ~mf == 0,
        "P2": mo == mp & mf if mp & mf else True,
        "P3": mo != 0 if mf else True,
        "P7": sel["S1"] if mf else None,
        "P8": sel["S2"],
        "P9": sel["S3"],
        "P10": sel["S4"],
        "P12": sel["S5"],
    }


def _instance(psi, phi, db, i) -> dict:
    return {"psi": psi, "intentions": db, "phi": phi, "new": i}


def _call(op: Operator, psi, phi, db, i) -> Agent:
    return op(RevisionInput(Agent(psi, db), phi, i))


def check_postulates(op: Operator, u: TestUniverse) -> PostulateReport:
    """Run the operator on every instance of the universe and check all twelve postulates."""
    U = u.universe
    report = PostulateReport(f"postulates over {u!r}")
    for name in POSTULATES:
        report.result(name)
    beliefs_by_input = {}
    intents_by_output = {}
    for psi, phi, db, i in u.instances():
        out = _call(op, psi, phi, db, i)
        verdict = single_postulates(u, psi, phi, db, i, out)
        for name in SINGLE:
            ok = verdict[name]
            if ok is None:
                report.result(name).skipped += 1
                continue
            report.result(name).record(ok, lambda: {**_instance(psi, phi, db, i), "output": out})
        mp, mf, mo = U.mask(psi), U.mask(phi), U.mask(out.belief)
        beliefs_by_input.setdefault((mp, mf), {}).setdefault(mo, (psi, phi, db, i, out))
        intents_by_output.setdefault((db, i, mo), {}).setdefault(out.intentions.as_set(), (psi, phi, db, i, out))

    _check_p4(report.result("P4"), beliefs_by_input)
    _check_p5_p6(report.result("P5"), report.result("P6"), u, beliefs_by_input)
    _check_p11(report.result("P11"), intents_by_output)
    return report


def _pair_witness(a, b) -> dict:
    return {"first": {**_instance(*a[:4]), "output": a[4]}, "second": {**_instance(*b[:4]), "output": b[4]}}


def _check_p4(res: CheckResult, groups: dict) -> None:
    for outs in groups.values():
        seen = list(outs.values())
        res.record(len(seen) == 1, lambda: _pair_witness(seen[0], seen[1]))


def _triples(u: TestUniverse) -> Iterator[tuple]:
    masks = u.belief_masks
    total = len(masks) ** 3
    if u.max_triples is not None and total > u.max_triples:
        n = len(masks)
        for k in sorted(random.Random(u.seed).sample(range(total), u.max_triples)):
            yield masks[k // (n * n)], masks[k // n % n], masks[k % n]
        return
    for mp in masks:
        for mf in masks:
            for mg in masks:
                yield mp, mf, mg


def _check_p5_p6(r5: CheckResult, r6: CheckResult, u: TestUniverse, groups: dict) -> None:
    n5 = n6 = skipped = 0
    for mp, mf, mg in _triples(u):
        first = groups.get((mp, mf), {})
        second = groups.get((mp, mf & mg), {})
        for a_mask, a in first.items():
            kept = a_mask & mg
            for b_mask, b in second.items():
                n5 += 1
                if kept & ~b_mask:
                    r5.record(False, lambda: {**_pair_witness(a, b), "phi_prime": u.beliefs[mg]})
                    n5 -= 1
                if not kept:
                    skipped += 1
                    continue
                n6 += 1
                if b_mask & ~kept:
                    r6.record(False, lambda: {**_pair_witness(a, b), "phi_prime": u.beliefs[mg]})
                    n6 -= 1
    # Passing cases are tallied in bulk; failures went through record() above.
    r5.cases += n5
    r6.cases += n6
    r6.skipped += skipped


def _check_p11(res: CheckResult, groups: dict) -> None:
    for outs in groups.values():
        seen = list(outs.values())
        res.record(len(seen) == 1, lambda: _pair_witness(seen[0], seen[1]))


def replay(op: Operator, u: TestUniverse, name: str, counterexample: dict) -> bool:
    """Re-run a recorded counterexample in isolation; True iff it is still a violation."""
    U = u.universe
    if name in SINGLE:
        c = counterexample
        out = _call(op, c["psi"], c["phi"], c["intentions"], c["new"])
        return single_postulates(u, c["psi"], c["phi"], c["intentions"], c["new"], out)[name] is False
    a, b = counterexample["first"], counterexample["second"]
    oa = _call(op, a["psi"], a["phi"], a["intentions"], a["new"])
    ob = _call(op, b["psi"], b["phi"], b["intentions"], b["new"])
    ma, mb = U.mask(oa.belief), U.mask(ob.belief)
    if name == "P4":
        return ma != mb
    if name == "P11":
        return ma == mb and oa.intentions.as_set() != ob.intentions.as_set()
    mg = U.mask(counterexample["phi_prime"])
    if name == "P5":
        return ma & mg & ~mb != 0
    if name == "P6":
        return ma & mg != 0 and mb & ~(ma & mg) != 0
    raise KeyError(name)


# --------------------------------------------------------------------------
# Selection functions and faithful assignments


def check_selection(sigma: Selection, u: TestUniverse, report: Optional[PostulateReport] = None) -> PostulateReport:
    """The five selection conditions over every (model set, database, intention)."""
    report = report or PostulateReport(f"selection over {u!r}")
    for name in SELECTION:
        report.result(name)
    for mask in u.belief_masks:
        for db in u.databases:
            for i in u.intentions:
                out = sigma(mask, db, i)
                for name, ok in selection_conditions(u, mask, db, i, out).items():
                    if ok is None:
                        report.result(name).skipped += 1
                        continue
                    report.result(name).record(
                        ok, lambda: {"models": u.beliefs[mask], "intentions": db, "new": i, "output": out}
                    )
    return report


def relation_table(assignment: FaithfulAssignment, psi: Formula) -> tuple:
    n = len(assignment.universe)
    return tuple(tuple(assignment.leq(psi, a, b) for b in range(n)) for a in range(n))


def check_faithful(assignment: FaithfulAssignment, u: TestUniverse, report: Optional[PostulateReport] = None) -> PostulateReport:
    """Totality, transitivity and the four faithfulness conditions for every belief."""
    U = u.universe
    n = len(U)
    report = report or PostulateReport(f"faithful assignment over {u!r}")
    for name in FAITHFUL:
        report.result(name)
    for mp in u.belief_masks:
        psi = u.beliefs[mp]
        le = relation_table(assignment, psi)
        wit = lambda **kw: {"psi": psi, **{k: U.models[v] for k, v in kw.items()}}
        for a in range(n):
            for b in range(n):
                report.result("F-total").record(le[a][b] or le[b][a], lambda: wit(m1=a, m2=b))
                ina, inb = mp >> a & 1, mp >> b & 1
                if ina and inb:
                    report.result("F1").record(le[a][b] and le[b][a], lambda: wit(m1=a, m2=b))
                if ina and not inb:
                    report.result("F2").record(le[a][b] and not le[b][a], lambda: wit(m1=a, m2=b))
                if U.model_tree[a] == U.model_tree[b]:
                    report.result("F4").record(le[a][b] and le[b][a], lambda: wit(m1=a, m2=b))
                if le[a][b]:
                    for c in range(n):
                        if le[b][c]:
                            report.result("F-transitive").record(le[a][c], lambda: wit(m1=a, m2=b, m3=c))
        for v in u.variants.get(mp, ()):
            report.result("F3").record(relation_table(assignment, v) == le, lambda: {"psi": psi, "variant": v})
    return report


def roundtrip(op: Operator, u: TestUniverse) -> PostulateReport:
    """Read an assignment off the operator and check that it is faithful and reproduces the operator."""
    U = u.universe
    induced = assignment_from_operator(op, U)
    report = PostulateReport(f"round trip over {u!r}")
    check_faithful(induced, u, report)
    check_selection(induced.selection, u, report)
    beliefs = report.result("R-beliefs")
    intents = report.result("R-intentions")
    minimal = {}
    for psi, phi, db, i in u.instances():
        out = _call(op, psi, phi, db, i)
        mo = U.mask(out.belief)
        key = (U.mask(psi), U.mask(phi))
        if key not in minimal:
            minimal[key] = induced.minimal(psi, key[1])
        beliefs.record(mo == minimal[key], lambda: {**_instance(psi, phi, db, i), "output": out})
        if not mo:
            # The induced selection revises form({}) = false by true, which does
            # not give back the empty set, so the reconstruction has no premise.
            intents.skipped += 1
            continue
        rebuilt = induced.selection(mo, db, i)
        intents.record(
            rebuilt.as_set() == out.intentions.as_set(),
            lambda: {**_instance(psi, phi, db, i), "output": out, "rebuilt": rebuilt},
        )
    return report


def dalal_assignment(u: TestUniverse) -> DalalAssignment:
    return DalalAssignment(reviser_in(u.universe))


def verify(u: TestUniverse, op: Optional[Operator] = None) -> PostulateReport:
    """Full harness for the shipped operator (or ``op``): postulates, selection, assignment, round trip."""
    shipped = reviser_in(u.universe)
    op = op or shipped
    report = check_postulates(op, u)
    check_selection(lambda m, db, i: shipped.select(m, db, i)[0], u, report)
    check_faithful(DalalAssignment(shipped), u, report)
    rt = roundtrip(op, u)
    for name, r in rt.results.items():
        if not name.startswith("R-"):
            r.name = "RT-" + name
        report.results[r.name] = r
    report.title = f"verification over {u!r}"
    return report
