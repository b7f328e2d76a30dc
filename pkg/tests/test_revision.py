import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bidb.agent import EMPTY_DB, Agent, Intention, IntentionDatabase
from bidb.enumeration import EnumerationCaps
from bidb.errors import HorizonError, InvariantError
from bidb.lang import BOTTOM, TOP, And, Signature, parse_formula
from bidb.models import PointedModel, TreeModel
from bidb.revision import (
    DalalAssignment,
    RevisionInput,
    SelectionPolicy,
    assignment_from_operator,
    dalal_distance,
    greedy_select,
    min_models,
    preorder_from,
    revise,
    revise_with_trace,
    reviser_in,
    select_intentions,
)
from bidb.universe import Universe, get_universe

from conftest import FIG_CAPS, FIG_SIG

SMALL = Signature(frozenset({"p"}), frozenset({"a"}), 1)
SMALL_CAPS = EnumerationCaps.parse("atoms=1")
NMR0, IJCAI1 = Intention("nmr", 0), Intention("ijcai", 1)


@pytest.fixture(scope="module")
def small():
    return get_universe(SMALL, SMALL_CAPS)


def test_distance_examples():
    t1 = TreeModel(1, {(): {"pre(a)"}, ("a",): {"post(a)"}})
    t2 = TreeModel(1, {(): set(), ("a",): {"post(a)"}})
    m1, m2 = PointedModel(t1, ("a",)), PointedModel(t2, ("a",))
    assert dalal_distance(m1, m1) == 0
    assert dalal_distance(m1, m2) == dalal_distance(m2, m1) == 1
    with pytest.raises(ValueError):
        dalal_distance(m1, PointedModel(TreeModel(2, {(): set(), ("a",): {"post(a)"}, ("a", "a"): {"post(a)"}}), ("a", "a")))


@given(st.data())
def test_distance_is_a_metric_on_trees(fig_universe, data):
    pick = st.integers(0, len(fig_universe) - 1)
    x, y, z = (fig_universe.models[data.draw(pick)] for _ in range(3))
    assert (dalal_distance(x, y) == 0) == (x.tree == y.tree)
    assert dalal_distance(x, y) == dalal_distance(y, x)
    assert dalal_distance(x, z) <= dalal_distance(x, y) + dalal_distance(y, z)


def test_preorder_conditions(small):
    for mask in small.belief_masks():
        psi = small.form(mask)
        order = preorder_from(psi, SMALL, SMALL_CAPS)
        for k, m in enumerate(small.models):
            if mask:
                assert (order.rank(m) == 0) == bool(mask >> k & 1)
            else:
                assert order.rank(m) == 0
        assert preorder_from(And(psi, TOP), SMALL, SMALL_CAPS).ranks == order.ranks
    with pytest.raises(InvariantError):
        preorder_from(parse_formula("p@0", SMALL), SMALL, SMALL_CAPS)


def test_rank_ignores_paths(fig_universe, fig_chi):
    order = preorder_from(parse_formula("B@0 !pre(nmr)@0", FIG_SIG), FIG_SIG, FIG_CAPS)
    for tree in fig_universe.trees[:200]:
        assert len({order.rank(m) for m in tree.pointed()}) == 1


def test_min_models(small):
    psi = small.form(small.tree_masks[0])
    order = preorder_from(psi, SMALL, SMALL_CAPS)
    inside = small.models_of(small.tree_masks[0])
    assert min_models(inside, order) == inside
    assert min_models([], order) == frozenset()
    outside = [m for m in small.models if m not in inside]
    best = min(order.rank(m) for m in outside)
    assert best >= 1
    assert min_models(outside, order) == {m for m in outside if order.rank(m) == best}
    # an exhaustive scan of the distances gives the same minimal set
    d = {m: min(dalal_distance(m, n) for n in inside) for m in outside}
    assert min_models(outside, order) == {m for m in outside if d[m] == min(d.values())}


def test_selection_on_figure1(fig_universe, fig_chi):
    M = fig_universe.mod_set(fig_chi)
    db = IntentionDatabase((NMR0,))
    assert select_intentions(M, db, IJCAI1, FIG_SIG).as_set() == {IJCAI1}
    assert select_intentions(M, db, None, FIG_SIG) == db
    both = select_intentions(M, IntentionDatabase((IJCAI1,)), Intention("nop", 0), FIG_SIG)
    # the root lacks pre(nop), so the new intention is dropped and ijcai@1 kept
    assert both.as_set() == {IJCAI1}
    assert select_intentions([], db, IJCAI1, FIG_SIG) == EMPTY_DB


def test_greedy_order_and_priority_placement():
    a0, b1, a1 = Intention("a", 0), Intention("b", 1), Intention("a", 1)
    db = IntentionDatabase((a0, b1))
    assert SelectionPolicy.for_revision(db, a1).order == (a1, a0, b1)
    out, decisions = greedy_select(db, a1, lambda J: b1 not in J)
    assert out.entries == (a0, a1)
    assert decisions == [(a1, True), (a0, True), (b1, False)]
    out, _ = greedy_select(db, Intention("b", 2), lambda J: True, new_priority=0)
    assert out.entries[0] == Intention("b", 2)


def test_revise_on_figure1(fig_chi):
    agent = Agent(fig_chi, IntentionDatabase((NMR0,)))
    out, trace = revise_with_trace(RevisionInput(agent, TOP, IJCAI1), FIG_SIG, FIG_CAPS)
    assert out.belief == fig_chi
    assert out.intentions.as_set() == {IJCAI1}
    assert trace.min_rank == 0 and trace.revised == 3
    assert [ok for _, ok in trace.decisions] == [True, False]


def test_revise_conjoins_when_consistent(small):
    for mp, mf in itertools.product(small.belief_masks(), repeat=2):
        if mp & mf:
            out = revise(RevisionInput(Agent(small.form(mp)), small.form(mf)), SMALL, SMALL_CAPS)
            assert small.mask(out.belief) == mp & mf


def test_unsatisfiable_new_belief(small):
    out, trace = revise_with_trace(
        RevisionInput(Agent(TOP, IntentionDatabase((Intention("a", 0),))), BOTTOM, Intention("a", 0)),
        SMALL,
        SMALL_CAPS,
    )
    assert small.mask(out.belief) == 0
    assert out.intentions == EMPTY_DB
    assert trace.warning


def test_inputs_are_validated():
    with pytest.raises(InvariantError):
        revise(RevisionInput(Agent(TOP), parse_formula("p@0", SMALL)), SMALL, SMALL_CAPS)
    with pytest.raises(HorizonError):
        revise(RevisionInput(Agent(TOP), TOP, Intention("a", 1)), SMALL, SMALL_CAPS)


def test_induced_order_reproduces_ranking(small):
    op = reviser_in(small)
    induced = assignment_from_operator(op, small)
    dalal = DalalAssignment(op)
    n = len(small)
    for mask in small.belief_masks():
        psi = small.form(mask)
        for a in range(n):
            if mask >> a & 1:
                assert all(induced.leq(psi, a, b) for b in range(n))
            for b in range(n):
                assert induced.leq(psi, a, b) == dalal.leq(psi, a, b)


def test_induced_selection_matches_greedy():
    sig = Signature(frozenset({"p"}), frozenset({"a", "b"}), 2)
    u = Universe(sig, EnumerationCaps.parse("branching=2,atoms=1,post=forced,sample=5,seed=5"))
    op = reviser_in(u)
    induced = assignment_from_operator(op, u)
    from bidb.postulates import all_databases, all_intentions

    for mask in u.belief_masks():
        if not mask:
            continue
        for db in all_databases(sig):
            for i in [None] + all_intentions(sig):
                assert induced.selection(mask, db, i).as_set() == op.select(mask, db, i)[0].as_set()
