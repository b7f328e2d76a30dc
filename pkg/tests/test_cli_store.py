import io
import json
import shutil

import pytest
from hypothesis import given, settings

from bidb import store
from bidb.agent import Agent, Intention, IntentionDatabase
from bidb.cli import Session, main, parse_universe_spec, run_command
from bidb.errors import InvariantError, ParseError
from bidb.lang import Signature

from conftest import data_path, strong_beliefs

SIG = Signature(frozenset({"p"}), frozenset({"a", "b"}), 2)


def doc(**over):
    base = {
        "version": 1,
        "signature": {"props": ["p"], "acts": ["a", "b"], "horizon": 2},
        "belief": "B@0 p@1",
        "intentions": [{"action": "a", "time": 1, "priority": 0}],
    }
    base.update(over)
    return json.dumps(base)


@pytest.fixture
def fig_db(tmp_path):
    target = tmp_path / "fig.json"
    shutil.copy(str(data_path("figure1.db.json")), target)
    return target


# -- store -------------------------------------------------------------------


@settings(max_examples=40)
@given(strong_beliefs(SIG))
def test_save_load_round_trip(belief):
    agent = Agent(belief, IntentionDatabase((Intention("b", 1), Intention("a", 0))))
    again, sig = store.loads(store.dumps(agent, SIG))
    assert sig == SIG
    assert again == agent


def test_round_trip_through_a_file(tmp_path):
    agent, sig = store.loads(doc())
    store.save(agent, sig, tmp_path / "x.json")
    assert store.load(tmp_path / "x.json") == (agent, sig)


def test_two_intentions_at_one_time():
    text = doc(intentions=[{"action": "a", "time": 1, "priority": 0}, {"action": "b", "time": 1, "priority": 1}])
    with pytest.raises(InvariantError):
        store.loads(text)


def test_non_strong_belief_rejected():
    with pytest.raises(InvariantError, match="not a strong belief"):
        store.loads(doc(belief="p@1"))


@pytest.mark.parametrize(
    "text, fragment",
    [
        (doc(extra=1), "unknown field"),
        (doc(version=2), "unsupported version"),
        (doc(signature={"acts": ["a"], "horizon": 1, "colour": 3}), "unknown field"),
        (doc(intentions=[{"action": "a", "time": 1, "priority": 0, "x": 0}]), "unknown field"),
        (doc(intentions=[{"action": "a", "time": "1", "priority": 0}]), "integers"),
        (doc(belief="B@0 q@1"), "q"),
    ],
)
def test_malformed_documents(text, fragment):
    with pytest.raises(ParseError, match=fragment):
        store.loads(text)


def test_json_errors_carry_line_info():
    with pytest.raises(ParseError, match=r"db.json:3:\d+"):
        store.loads('{\n  "version": 1,\n  "belief": ,\n}', "db.json")


def test_shipped_fixture_loads():
    agent, sig = store.load(data_path("figure1.db.json"))
    assert sig.horizon == 2 and sig.acts == frozenset({"ijcai", "nmr", "nop"})
    assert agent.intentions.entries == (Intention("nmr", 0),)


# -- commands ----------------------------------------------------------------


def test_universe_spec():
    sig, caps = parse_universe_spec("props=p;acts=a,b;horizon=2;branching=2;atoms=1;post=forced")
    assert sig == SIG
    assert caps.max_branching == 2 and caps.max_atoms == 1
    with pytest.raises(ParseError):
        parse_universe_spec("acts=a;height=2")


def test_figure1_session(fig_db):
    session = Session()
    run_command(session, f"load {fig_db}")
    out = run_command(session, "intend ijcai@1")
    assert "I' = {(ijcai,1)}" in out
    assert "dropped: {(nmr,0)}" in out
    assert run_command(session, "query post(ijcai)@2") == ["yes"]
    assert run_command(session, "wb-holds post(ijcai)@2") == ["yes"]
    assert run_command(session, "query post(nmr)@1") == ["no"]
    assert run_command(session, "wb-consistent?") == run_command(session, "wb-consistent") == ["yes"]
    assert run_command(session, "coherent?") == ["yes", "witness path: nop ijcai"]


def test_incoherent_file_is_reported(fig_db):
    d = json.loads(fig_db.read_text())
    d["intentions"] = [{"action": "nmr", "time": 0, "priority": 0}, {"action": "ijcai", "time": 1, "priority": 1}]
    fig_db.write_text(json.dumps(d))
    session = Session()
    run_command(session, f"load {fig_db}")
    out = run_command(session, "coherent?")
    assert out[0] == "no"
    assert out[1].startswith("failing: D@0 ")
    assert "pre(nmr,ijcai)@0" in out[1]


def test_commands_need_a_database():
    with pytest.raises(InvariantError):
        run_command(Session(), "show")


def test_mutations_keep_the_agent_coherent(tmp_path):
    session = Session(path=str(tmp_path / "db.json"))
    run_command(session, "new props=p acts=a,b horizon=2")
    run_command(session, "assert 'B@0 pre(a)@0'")
    run_command(session, "intend a@0")
    out = run_command(session, "revise 'B@0 !pre(a)@0' b@1")
    assert out[0].startswith("models: ")
    universe = session.universe()
    from bidb.coherence import cohere_formula

    assert universe.mask(cohere_formula(session.agent.intentions.as_set(), session.sig)) & universe.mask(
        session.agent.belief
    )


SCRIPT = """\
new props=p acts=a,b horizon=2
assert 'B@0 pre(a)@0'
intend a@0
show
coherent?
query 'do(a)@0'
intend zz@0
revise 'B@0 !pre(a)@0' b@1
show
"""


def test_batch_and_repl_agree(tmp_path, monkeypatch, capsys):
    script = tmp_path / "cmds.txt"
    script.write_text(SCRIPT)
    assert main(["batch", str(script)]) == 2
    batch = capsys.readouterr().out
    monkeypatch.setattr("sys.stdin", io.StringIO(SCRIPT))
    assert main(["repl"]) == 2
    repl = capsys.readouterr().out
    assert batch == repl
    assert "error: " in batch
    # the run carries on after the error
    assert sum(line.startswith("models: ") and " -> " in line for line in batch.splitlines()) == 3


def test_exit_codes(tmp_path, fig_db, capsys):
    db = str(tmp_path / "new.json")
    assert main(["new", "acts=a", "horizon=1", "--db", db]) == 0
    assert main(["query", "p@", "--db", db]) == 2
    assert main(["enumerate", "--db", db, "--caps", "limit=1"]) == 3
    d = json.loads(fig_db.read_text())
    d["intentions"] = [{"action": "nmr", "time": 0, "priority": 0}, {"action": "nmr", "time": 0, "priority": 1}]
    fig_db.write_text(json.dumps(d))
    assert main(["show", "--db", str(fig_db)]) == 4
    capsys.readouterr()


def test_verify_command(tmp_path, capsys):
    db = str(tmp_path / "v.json")
    main(["new", "props=p", "acts=a", "horizon=1", "--db", db])
    assert main(["verify", "--db", db, "--universe", "props=p;acts=a;horizon=1;atoms=1;post=forced"]) == 0
    out = capsys.readouterr().out
    assert "P7: PASS" in out and "S5: PASS" in out and "R-beliefs: PASS" in out


def test_state_persists_between_calls(tmp_path, capsys):
    db = str(tmp_path / "s.json")
    main(["new", "acts=a,b", "horizon=1", "--db", db])
    main(["assert", "B@0 pre(a)@0", "--db", db])
    main(["intend", "a@0", "--db", db])
    capsys.readouterr()
    assert main(["show", "--db", db]) == 0
    assert "(a,0)" in capsys.readouterr().out
