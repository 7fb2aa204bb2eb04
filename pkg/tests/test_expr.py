import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsbvp.errors import EvaluationDomainError, ExpressionError, LexError, ParseError, UnboundIdentifierError
from fracsbvp.expr import BinOp, Const, Neg, Var, evaluate, free_variables, parse, to_source, tokenize


def ev(src, **env):
    return evaluate(parse(src), env)


def test_tokenize_examples():
    assert [(t.kind, t.text) for t in tokenize("1+t")[:-1]] == [("num", "1"), ("op", "+"), ("name", "t")]
    assert [t.text for t in tokenize("x^-0.9")[:-1]] == ["x", "^", "-", "0.9"]
    toks = tokenize("2e-3")
    assert len(toks) == 2 and float(toks[0].text) == 0.002
    positions = [t.pos for t in tokenize(" a + 12 * (b) ")]
    assert positions == sorted(set(positions))


def test_lex_error_position():
    with pytest.raises(LexError) as info:
        tokenize("1 + $")
    assert info.value.position == 4


@pytest.mark.parametrize("src, value", [
    ("2+3*4^0.5", 8.0),
    ("-2^2", -4.0),
    ("2^3^2", 512.0),
    ("2^-1", 0.5),
    ("(-2)^2", 4.0),
    ("10-4-3", 3.0),
    ("64/4/2", 8.0),
    ("2*-3", -6.0),
    ("-3*2", -6.0),
    ("--2", 2.0),
    ("min(3, 1, 2) + max(1, 4)", 5.0),
    ("abs(-2.5)", 2.5),
    ("exp(0) + log(1)", 1.0),
    ("(-8)^3", -512.0),
])
def test_precedence_and_associativity(src, value):
    assert ev(src) == pytest.approx(value)


def test_structure_of_unary_minus():
    assert parse("-x^2") == Neg(BinOp("^", Var("x"), Const(2.0)))
    assert parse("a-b-c") == BinOp("-", BinOp("-", Var("a"), Var("b")), Var("c"))


def test_gammafn():
    assert ev("gammafn(5)") == pytest.approx(24.0, rel=1e-14)


def test_example_expressions():
    assert ev("lambda/(1-abs(t)^0.9)^0.9", t=0.0, **{"lambda": 0.5}) == 0.5
    assert ev("1/x^0.9 - x + R", x=1.0, R=1.0) == 1.0


@pytest.mark.parametrize("src", ["min(1,2,", "(1", "1+", ")", "1 2", "f(1)", "min(1)", "exp(1, 2)", "1e999"])
def test_parse_errors(src):
    with pytest.raises(ParseError):
        parse(src)


def test_parse_error_at_end():
    with pytest.raises(ParseError) as info:
        parse("min(1,2,")
    assert info.value.position == len("min(1,2,")


@pytest.mark.parametrize("src, env", [
    ("1/x^0.9", {"x": 0.0}),
    ("1/x", {"x": 0.0}),
    ("log(x)", {"x": -1.0}),
    ("x^0.5", {"x": -4.0}),
    ("gammafn(x)", {"x": 0.0}),
])
def test_domain_errors(src, env):
    with pytest.raises(EvaluationDomainError):
        evaluate(parse(src), env)


def test_domain_error_carries_point():
    with pytest.raises(EvaluationDomainError) as info:
        evaluate(parse("log(t)"), {"t": np.array([1.0, 2.0, -3.0])})
    assert info.value.point == {"t": -3.0}


def test_unbound():
    with pytest.raises(UnboundIdentifierError, match="y"):
        ev("y + 1")


def test_vectorised_broadcast():
    out = evaluate(parse("t*x"), {"t": np.array([1.0, 2.0]), "x": 3.0})
    np.testing.assert_array_equal(out, [3.0, 6.0])


def test_free_variables():
    assert free_variables(parse("lambda*x + max(t, R)")) == {"lambda", "x", "t", "R"}


# -- round trip and fuzz ---------------------------------------------------

NAMES = st.sampled_from(["t", "x", "r", "lambda"])
LEAVES = st.one_of(
    st.floats(min_value=0, max_value=1e6, allow_nan=False).map(Const),
    NAMES.map(Var),
)


def _trees():
    return st.recursive(
        LEAVES,
        lambda kids: st.one_of(
            kids.map(Neg),
            st.tuples(st.sampled_from("+-*/^"), kids, kids).map(lambda a: BinOp(*a)),
        ),
        max_leaves=12,
    )


@settings(max_examples=300, deadline=None)
@given(_trees())
def test_print_parse_round_trip(tree):
    assert parse(to_source(tree)) == tree
    again = parse(to_source(parse(to_source(tree))))
    assert again == parse(to_source(tree))


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from(["1", "2.5", "x", "t", "+", "-", "*", "/", "^", "(", ")", ",",
                                 "min", "abs", "log", " ", "e3", "$"]), max_size=14))
def test_fuzz_never_crashes(parts):
    src = "".join(parts)
    try:
        tree = parse(src)
    except ExpressionError:
        return
    try:
        val = evaluate(tree, {"x": 0.7, "t": -0.3})
    except ExpressionError:
        return
    assert isinstance(val, float) and not math.isnan(val)
