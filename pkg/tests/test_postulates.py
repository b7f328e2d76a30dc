import json

import pytest

from bidb.agent import EMPTY_DB, Agent, IntentionDatabase
from bidb.enumeration import EnumerationCaps
from bidb.lang import Signature
from bidb.postulates import (
    FAITHFUL,
    POSTULATES,
    SELECTION,
    TestUniverse,
    all_databases,
    check_faithful,
    check_postulates,
    check_selection,
    dalal_assignment,
    replay,
    verify,
)
from bidb.revision import FaithfulAssignment, reviser_in
from bidb.universe import Universe

SMALL = Signature(frozenset({"p"}), frozenset({"a"}), 1)
WIDE = Signature(frozenset({"p"}), frozenset({"a", "b"}), 2)


@pytest.fixture(scope="module")
def small():
    return TestUniverse(SMALL, EnumerationCaps.parse("atoms=1,post=forced"))


@pytest.fixture(scope="module")
def wide():
    caps = EnumerationCaps.parse("branching=2,atoms=1,post=forced,sample=4,seed=5")
    return TestUniverse(WIDE, universe=Universe(WIDE, caps), variants=True)


def pool_of(db, i):
    entries = list(db.entries)
    if i is not None and i not in entries:
        entries = [e for e in entries if e.time != i.time] + [i]
    return IntentionDatabase(tuple(entries))


def test_databases_cover_every_order():
    sig = Signature(frozenset(), frozenset({"a"}), 2)
    dbs = all_databases(sig)
    # empty, two singletons, and one pair in two priority orders
    assert len(dbs) == 5
    assert dbs[0] == EMPTY_DB
    assert len(set(dbs)) == 5


def test_shipped_operator_passes(small):
    report = verify(small)
    assert report.passed, report.text()
    names = set(report.results)
    assert set(POSTULATES) | set(SELECTION) | set(FAITHFUL) <= names
    assert {"R-beliefs", "R-intentions"} <= names
    assert all(report.result(n).cases > 0 for n in POSTULATES)


def test_report_lines_and_json(small):
    report = check_postulates(reviser_in(small.universe), small)
    lines = report.lines()
    assert [line.split(":")[0] for line in lines] == list(POSTULATES)
    assert all(": PASS (" in line for line in lines)
    doc = json.loads(report.to_json())
    assert doc["passed"] is True
    assert check_postulates(reviser_in(small.universe), small).text() == report.text()


def test_eager_intentions_break_p7(small):
    shipped = reviser_in(small.universe)

    def eager(inp):
        out = shipped(inp)
        return Agent(out.belief, pool_of(inp.agent.intentions, inp.new_intention))

    report = check_postulates(eager, small)
    assert "P7" in report.failed()
    res = report.result("P7")
    assert res.failures and res.counterexample is not None
    assert replay(eager, small, "P7", res.counterexample)
    assert not replay(shipped, small, "P7", res.counterexample)


def test_ignoring_the_new_belief_breaks_p1(small):
    def stubborn(inp):
        return inp.agent

    report = check_postulates(stubborn, small)
    assert "P1" in report.failed()
    assert replay(stubborn, small, "P1", report.result("P1").counterexample)


def test_path_checked_p4_failure(small):
    shipped = reviser_in(small.universe)

    def syntax_sensitive(inp):
        out = shipped(inp)
        if "!!" in str(inp.agent.belief) or "!(!" in str(inp.agent.belief):
            return Agent(inp.new_belief)
        return out

    report = check_postulates(syntax_sensitive, small)
    assert "P4" in report.failed()
    assert replay(syntax_sensitive, small, "P4", report.result("P4").counterexample)


def test_empty_selection_breaks_s3(small):
    report = check_selection(lambda m, db, i: EMPTY_DB, small)
    assert "S3" in report.failed()
    assert "S1" not in report.failed()


def test_greedy_free_selection_breaks_s1(small):
    report = check_selection(lambda m, db, i: pool_of(db, i), small)
    assert "S1" in report.failed()
    assert "S3" not in report.failed()


def test_shipped_selection_passes(small):
    shipped = reviser_in(small.universe)
    report = check_selection(lambda m, db, i: shipped.select(m, db, i)[0], small)
    assert report.passed, report.text()
    assert report.result("S1").skipped > 0


class RankAssignment(FaithfulAssignment):
    def __init__(self, universe, rank):
        self.universe = universe
        self.rank = rank

    def leq(self, psi, k1, k2):
        mask = self.universe.mask(psi)
        return self.rank(mask, k1) <= self.rank(mask, k2)

    def selection(self, mask, intentions, new):
        return EMPTY_DB


def test_shipped_assignment_is_faithful(wide):
    assert check_faithful(dalal_assignment(wide), wide).passed


def test_path_dependent_rank_breaks_f4(wide):
    bad = RankAssignment(wide.universe, lambda mask, k: 0 if mask >> k & 1 else k)
    report = check_faithful(bad, wide)
    assert "F4" in report.failed()
    assert "F1" not in report.failed() and "F-transitive" not in report.failed()


def test_inverted_rank_breaks_f2(wide):
    bad = RankAssignment(wide.universe, lambda mask, k: mask >> k & 1)
    report = check_faithful(bad, wide)
    assert "F2" in report.failed()
    assert "F4" not in report.failed()


def test_triple_sampling_is_seeded():
    sig = SMALL
    caps = EnumerationCaps.parse("atoms=1,post=forced")
    a = check_postulates(reviser_in(Universe(sig, caps)), TestUniverse(sig, caps, variants=False, max_triples=500, seed=3))
    b = check_postulates(reviser_in(Universe(sig, caps)), TestUniverse(sig, caps, variants=False, max_triples=500, seed=3))
    assert a.text() == b.text()
    assert a.passed
