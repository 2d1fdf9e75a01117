import pytest

from racetrace import ParseError, name_sort_key
from racetrace.parsing import TokenStream, parse_constraint, parse_pattern, tokenize
from racetrace.terms import (
    Atom,
    Cmp,
    Int,
    Lst,
    PidLit,
    TagLit,
    Tup,
    Var,
    Wildcard,
    render_constraint,
    render_term,
)


def pat(text):
    return parse_pattern(TokenStream(tokenize(text)))


def test_terms_and_patterns():
    assert pat("42") == Int(42)
    assert pat("-3") == Int(-3)
    assert pat("ok") == Atom("ok")
    assert pat("M") == Var("M")
    assert pat("_") == Wildcard()
    assert pat("_tail") == Var("_tail")
    assert pat("{val,1}") == Tup((Atom("val"), Int(1)))
    assert pat("[1,2]") == Lst((Int(1), Int(2)))
    assert pat("{}") == Tup(())
    assert pat("<p1.2>") == PidLit("p1.2")
    assert pat("#l1") == TagLit("l1")


def test_render_parse_roundtrip():
    for text in ("{val,1}", "[{a,1},b]", "<p1.2.1>", "#p3.1", "{}", "[[],{x}]"):
        assert render_term(pat(text)) == text


def test_comments_are_skipped():
    assert pat("% note\n{val,1}") == Tup((Atom("val"), Int(1)))


def test_constraint_parsing_and_rendering():
    text = "cs1: {val,M} when M > 0 -> .; error -> ."
    cs = parse_constraint(TokenStream(tokenize(text)))
    assert cs.cs_id == "cs1"
    assert len(cs.clauses) == 2
    assert cs.clauses[0].guard == Cmp(">", Var("M"), Int(0))
    assert render_constraint(cs) == text


def test_constraint_guard_connectives():
    cs = parse_constraint(
        TokenStream(tokenize("c: {val,M} when M > 0 and M < 5 or M == 9 -> ."))
    )
    # left-associative: ((M>0 and M<5) or M==9)
    assert render_constraint(cs) == "c: {val,M} when ((M > 0 and M < 5) or M == 9) -> ."


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as err:
        pat("{val,")
    assert err.value.line == 1
    assert err.value.col >= 6


def test_nonlinear_pattern_rejected_in_constraint():
    with pytest.raises(ParseError):
        parse_constraint(TokenStream(tokenize("c: {A,A} -> .")))


def test_name_sort_key_is_numeric():
    names = ["p1.10", "p1.2", "p2", "p1", "l10", "l2"]
    assert sorted(names, key=name_sort_key) == ["l2", "l10", "p1", "p1.2", "p1.10", "p2"]
