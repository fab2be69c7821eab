import pytest
from hypothesis import given

from conftest import PROGRAMS, corpus_text, load, programs
from isochor import logic
from isochor.parser import (
    ParseError, parse_choreography, parse_formula, parse_program, parse_properties,
    render_choreography, render_program,
)
from isochor.syntax import (
    ONE, TAU, Act, Assign, ChannelName, Choice, Lit, Md5, Par, Seq, Test, Var, action_count,
    expand_acq, expand_comm, expand_rel, seq,
)

HEADER = "processes: a, b, c\n"


def gab():
    return seq(expand_comm("a", Lit("foo"), "b", "x"),
               Act(Assign("a", "hash", Md5(Lit("foo")))),
               expand_comm("a", Var("hash"), "b", "y"))


def gcb():
    return seq(expand_comm("c", Lit("bar"), "b", "x"),
               Act(Assign("c", "hash", Md5(Lit("bar")))),
               expand_comm("c", Var("hash"), "b", "y"))


def test_gab_is_a_five_action_sequence():
    main = load("gab").main
    assert action_count(main) == 5
    assert main is gab()


def test_skip_is_one():
    assert parse_choreography("processes: a main = skip").main is ONE


def test_v2_matches_manual_construction():
    chor = load("v2")
    left = seq(expand_acq("a", "b", ["x"]), gab(), expand_rel("a", "b", ["x"]))
    right = seq(expand_acq("c", "b", ["x"]), gcb(), expand_rel("c", "b", ["x"]))
    # The parser nests sequences as written; compare modulo association.
    assert _flatten(chor.main) == _flatten(Par(left, right))
    assert isinstance(chor.main, Par)
    assert action_count(chor.main.left) == action_count(chor.main.right) == 11
    assert chor.processes == ("a", "b", "c")


def _flatten(p):
    """Sequences as lists, so that differently associated sequences compare equal."""
    if isinstance(p, Seq):
        return ("seq", tuple(x for part in (p.left, p.right) for x in _seq_items(part)))
    if isinstance(p, (Par, Choice)):
        return (type(p).__name__, _flatten(p.left), _flatten(p.right))
    return p


def _seq_items(p):
    if isinstance(p, Seq):
        return _seq_items(p.left) + _seq_items(p.right)
    return (_flatten(p),)


def test_stores_and_channels():
    chor = load("v1")
    assert chor.stores == {"a": [("hash", 0)], "b": [("x", ""), ("y", 0)], "c": [("hash", 0)]}
    assert chor.capacity is None
    chor = parse_choreography(HEADER + "channels { capacity = 2; a -> b : 1 } main = skip")
    assert chor.capacity == 2
    assert chor.capacity_of(ChannelName("a", "b")) == 1
    assert chor.capacity_of(ChannelName("b", "a")) == 2


@pytest.mark.parametrize("name", PROGRAMS)
def test_corpus_round_trip(name):
    chor = load(name)
    again = parse_choreography(render_choreography(chor))
    assert again.main is chor.main
    assert again.stores == chor.stores
    assert again.processes == chor.processes


@given(programs())
def test_render_parse_round_trip(program):
    assert parse_program(render_program(program)) is program


def test_rendering_basics():
    assert render_program(ONE) == "skip"
    assert render_program(Act(TAU)) == "tau"
    p = parse_program("((a.x := 1) + (a.y := 2)) || tau")
    assert render_program(p) == "((a.x := 1) + (a.y := 2)) || tau"
    # Without parentheses "+" continues the assigned expression.
    assert parse_program("a.x := 1 + 2") is Act(Assign("a", "x", parse_program("a.y := 1 + 2").action.expr))


def test_if_and_test():
    p = parse_program("if a.(x == 1) { a.y := 1 } else { skip }")
    assert isinstance(p, Choice)
    assert p.left.left is Act(Test("a", parse_program("test a.(x == 1)").action.expr))


def test_defs_are_inlined_in_order():
    text = HEADER + "def g = a.x := 1\ndef h = g; g\nmain = h"
    assert parse_choreography(text).main is Seq(Act(Assign("a", "x", Lit(1))),
                                                Act(Assign("a", "x", Lit(1))))


ERRORS = [
    ('main = a."x" -> a.y', "sender equals receiver", (2, 8)),
    ("main = z.x := 1", "undeclared process 'z'", (2, 8)),
    ("main = (a.x := 1) + (a.x := 2) || skip", "mixing", (2, 32)),
    ("main = g", "undefined def", (2, 8)),
    ("def g = g\nmain = g", "undefined def", (2, 9)),
    ("store a { _ = 1 }\nmain = skip", "sink", (2, 11)),
    ("store a { x = 1; x = 2 }\nmain = skip", "initialized twice", (2, 18)),
    ("main = a acq b._", "sink", (2, 8)),
    ("main = a acq a.x", "sender equals receiver", (2, 8)),
    ('main = a.x := "unterminated', "unexpected character", (2, 15)),
    ("main = a.x := 99999999999999999999", "64-bit", (2, 15)),
    ("main = a.x := 1 extra", "unexpected", (2, 17)),
    ("def a = skip\nmain = skip", "already in use", (2, 5)),
]


@pytest.mark.parametrize("body, message, where", ERRORS)
def test_located_errors(body, message, where):
    with pytest.raises(ParseError, match=message) as info:
        parse_choreography(HEADER + body)
    assert (info.value.line, info.value.col) == where


def test_duplicate_process():
    with pytest.raises(ParseError, match="duplicate process"):
        parse_choreography("processes: a, a main = skip")


# -- formulas -------------------------------------------------------------------


def test_formula_shorthands():
    assert parse_formula("tt") == logic.TOP
    assert parse_formula("ff") == logic.Not(logic.TOP)
    assert parse_formula("AG(!dead)") == logic.Not(logic.EU(logic.TOP, logic.Not(logic.Not(logic.DEAD))))
    assert parse_formula("AG(!dead)", literal_ag=True) == logic.EU(logic.TOP, logic.Not(logic.Not(logic.DEAD)))
    atom = logic.Atom("p", parse_program("test p.(x == 1)").action.expr)
    n = logic.Not
    expected = n(n(logic.And(
        n(logic.EU(n(atom), n(n(logic.And(n(logic.TOP), n(atom)))))),
        n(logic.EG(n(atom))),
    )))
    assert parse_formula("AU(tt, p:(x == 1))") == expected
    assert parse_formula("a:(x) || b:(y)") == logic.lor(logic.Atom("a", Var("x")), logic.Atom("b", Var("y")))


def test_formula_precedence():
    f = parse_formula("!tt && tt || dead")
    assert f == logic.lor(logic.And(logic.Not(logic.TOP), logic.TOP), logic.DEAD)


def test_iso_formula_core_form(props):
    iso = props["iso"]
    n, ax = logic.Not, logic.AXVar
    consistent = ax("b", "y", logic.Atom("b", parse_formula("b:(md5(x) == y)").expr))
    quiet = logic.And(ax("b", "x", logic.BOTTOM), ax("b", "y", logic.BOTTOM))
    assert iso == logic.ag(ax("b", "x", logic.au(quiet, consistent)))
    assert logic.processes_of(iso) == {"b"}


def test_formula_errors():
    with pytest.raises(ParseError, match="undeclared process"):
        parse_formula("z:(x == 1)", processes=["a", "b"])
    with pytest.raises(ParseError, match="sink"):
        parse_formula("AX[b._](tt)")
    with pytest.raises(ParseError):
        parse_formula("EU(tt)")
    with pytest.raises(ParseError, match="duplicate property"):
        parse_properties("prop p = tt prop p = ff")


def test_property_file():
    names = [n for n, _ in parse_properties(corpus_text("iso.prop") + corpus_text("nodeadlock.prop"))]
    assert names == ["iso", "nodeadlock"]

