import pytest

from sealshare.queryparse import (
    And,
    Atom,
    Not,
    Or,
    ParseError,
    count_atoms,
    parse,
    render,
    to_json,
)
from sealshare.errors import MalformedInput


def test_paper_style_or_query():
    assert parse("Pneumonia OR COVID-19") == Or(Atom("pneumonia"), Atom("covid-19"))


def test_paper_style_not_query():
    assert parse("NOT happy") == Not(Atom("happy"))


def test_precedence_not_over_and_over_or():
    assert parse("a AND b OR c") == Or(And(Atom("a"), Atom("b")), Atom("c"))
    assert parse("a OR b AND c") == Or(Atom("a"), And(Atom("b"), Atom("c")))
    assert parse("NOT a AND b") == And(Not(Atom("a")), Atom("b"))
    assert parse("NOT NOT a") == Not(Not(Atom("a")))


def test_left_associativity():
    assert parse("a OR b OR c") == Or(Or(Atom("a"), Atom("b")), Atom("c"))
    assert parse("a AND b AND c") == And(And(Atom("a"), Atom("b")), Atom("c"))


def test_parentheses_override_precedence():
    assert parse("a AND (b OR c)") == And(Atom("a"), Or(Atom("b"), Atom("c")))


def test_quoted_atoms_allow_spaces():
    assert parse('"facial emotion" OR sad') == Or(Atom("facial emotion"), Atom("sad"))


def test_atoms_are_normalized():
    assert parse("  COVID-19 ") == Atom("covid-19")
    assert parse('"Facial  Emotion"') == Atom("facial emotion")


def test_operator_names_case_insensitive():
    assert parse("a or b") == parse("a OR b") == parse("a Or b")


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as err:
        parse("(a OR")
    assert err.value.position == 5
    with pytest.raises(ParseError):
        parse("a OR OR b")
    with pytest.raises(ParseError):
        parse('"unterminated')
    with pytest.raises(ParseError):
        parse("")
    with pytest.raises(ParseError):
        parse("a b c (")


def test_atom_cap_enforced():
    expr = " OR ".join(f"k{i}" for i in range(9))
    with pytest.raises(MalformedInput):
        parse(expr)
    assert count_atoms(parse(" OR ".join(f"k{i}" for i in range(8)))) == 8


@pytest.mark.parametrize("expr", [
    "Pneumonia OR COVID-19",
    "NOT happy",
    "a AND b OR c",
    "a AND (b OR c)",
    'NOT (a OR "two words") AND c',
    "NOT NOT x OR y AND NOT z",
    '"or" AND plain',  # reserved word as a quoted atom
])
def test_render_parse_round_trip(expr):
    ast = parse(expr)
    assert parse(render(ast)) == ast


def test_to_json_shape():
    assert to_json(parse("a AND NOT b")) == {
        "op": "and",
        "lhs": {"op": "atom", "keyword": "a"},
        "rhs": {"op": "not", "child": {"op": "atom", "keyword": "b"}},
    }
