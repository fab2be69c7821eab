from hypothesis import given, strategies as st

from conftest import PROCS, load, programs
from isochor.projection import project, project_all
from isochor.syntax import (
    ONE, TAU, Act, Assign, ChannelName, Lit, Md5, Par, Send, Var, action_count, actions_of, seq,
    subjects_of,
)

AB = ChannelName("a", "b")
TAU_LEAF = Act(TAU)


def test_one_and_foreign_leaves():
    assert project(ONE, "r") is ONE
    assert project(Act(Send(AB, Lit("foo"))), "b") is TAU_LEAF
    assert project(Act(Send(AB, Lit("foo"))), "a") is Act(Send(AB, Lit("foo")))
    assert project(TAU_LEAF, "a") is TAU_LEAF


def test_gab_projection_onto_a():
    expected = seq(Act(Send(AB, Lit("foo"))), TAU_LEAF,
                   Act(Assign("a", "hash", Md5(Lit("foo")))),
                   Act(Send(AB, Var("hash"))), TAU_LEAF)
    assert list(actions_of(project(load("gab").main, "a"))) == list(actions_of(expected))


def test_project_all():
    assert project_all(ONE) == {}
    assert set(project_all(load("gab").main)) == {"a", "b"}
    assert set(project_all(load("v2").main)) == {"a", "b", "c"}
    main = load("v2").main
    assert isinstance(project(main, "b"), Par)


@given(programs(), st.sampled_from(PROCS + ["z"]))
def test_projection_laws(program, role):
    local = project(program, role)
    assert project(local, role) is local
    assert action_count(local) == action_count(program)
    assert subjects_of(local) <= {role}
    if role not in subjects_of(program):
        assert all(a is TAU for a in actions_of(local))
