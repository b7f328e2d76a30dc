import json
import sys
from importlib import resources
from pathlib import Path

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from bidb.enumeration import EnumerationCaps
from bidb.lang import And, BoxAt, DoAt, Not, PostAt, PreSeqAt, PropAt, Signature, TOP, BOTTOM
from bidb.models import PointedModel, load_tree
from bidb.universe import characteristic_formula, get_universe

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

FIG_SIG = Signature(frozenset(), frozenset({"ijcai", "nmr", "nop"}), 2)
FIG_CAPS = EnumerationCaps.parse("branching=2,atoms=1,post=forced")


def data_path(name):
    return resources.files("bidb") / "data" / name


@pytest.fixture(scope="session")
def fig_sig():
    return FIG_SIG


@pytest.fixture(scope="session")
def fig_caps():
    return FIG_CAPS


@pytest.fixture(scope="session")
def fig_tree_doc():
    return json.loads(data_path("figure1.tree.json").read_text())


@pytest.fixture(scope="session")
def fig_tree(fig_tree_doc):
    tree, _ = load_tree(fig_tree_doc, FIG_SIG)
    return tree


@pytest.fixture(scope="session")
def fig_model(fig_tree_doc):
    tree, path = load_tree(fig_tree_doc, FIG_SIG)
    return PointedModel(tree, path)


@pytest.fixture(scope="session")
def fig_universe():
    return get_universe(FIG_SIG, FIG_CAPS)


@pytest.fixture(scope="session")
def fig_chi(fig_tree):
    return characteristic_formula(fig_tree, FIG_SIG)


def formulas(sig, max_leaves=8, box_times=None):
    """Well-formed formulas over sig."""
    H = sig.horizon
    acts = sorted(sig.acts)
    atoms = [st.just(TOP), st.just(BOTTOM)]
    if sig.props:
        atoms.append(st.builds(PropAt, st.sampled_from(sorted(sig.props)), st.integers(0, H)))
    atoms.append(st.builds(PostAt, st.sampled_from(acts), st.integers(0, H)))
    atoms.append(st.builds(DoAt, st.sampled_from(acts), st.integers(0, H - 1)))
    atoms.append(
        st.integers(0, H - 1).flatmap(
            lambda t: st.builds(
                PreSeqAt, st.lists(st.sampled_from(acts), min_size=1, max_size=H - t).map(tuple), st.just(t)
            )
        )
    )
    times = st.integers(0, H) if box_times is None else st.sampled_from(box_times)
    return st.recursive(
        st.one_of(atoms),
        lambda inner: st.one_of(
            st.builds(Not, inner),
            st.builds(And, inner, inner),
            st.builds(BoxAt, times, inner),
        ),
        max_leaves=max_leaves,
    )


def strong_beliefs(sig, max_leaves=6):
    body = formulas(sig, max_leaves=max_leaves)
    return st.recursive(
        st.builds(BoxAt, st.just(0), body),
        lambda inner: st.one_of(st.builds(Not, inner), st.builds(And, inner, inner)),
        max_leaves=3,
    )
