import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horseshoe import expr as ex
from horseshoe.errors import DomainError, ExprSyntaxError, UnknownIdentifier


def test_parse_and_evaluate_basic():
    e = ex.parse("x^2 + 3*y - sin(x*y)")
    assert ex.evaluate(e, 2.0, 1.0) == pytest.approx(4 + 3 - math.sin(2.0))


def test_power_is_right_associative():
    assert ex.evaluate(ex.parse("2^3^2"), 0, 0) == 512


def test_unary_minus_precedence():
    assert ex.evaluate(ex.parse("-2^2"), 0, 0) == -4
    assert ex.evaluate(ex.parse("(-2)^2"), 0, 0) == 4


@pytest.mark.parametrize("bad", [
    "", "x +", "sin()", "2 ** 3", "x..1", "foo(x)", "(x", "x y", "1e",
    "x & y",
])
def test_rejected_inputs(bad):
    with pytest.raises((ExprSyntaxError, UnknownIdentifier)):
        ex.parse(bad)


def test_syntax_error_reports_offset():
    with pytest.raises(ExprSyntaxError) as err:
        ex.parse("x + * y")
    assert err.value.offset == 4


def test_domain_errors():
    with pytest.raises(DomainError):
        ex.evaluate(ex.parse("log(x)"), -1.0, 0.0)
    with pytest.raises(DomainError):
        ex.evaluate(ex.parse("1/x"), 0.0, 0.0)
    with pytest.raises(DomainError):
        ex.evaluate(ex.parse("sqrt(x)"), -2.0, 0.0)


def test_pretty_roundtrip():
    for src in ["x^2 - y/3", "sin(x)*cos(y)", "-(x + 1)", "exp(-x^2/2)"]:
        e = ex.parse(src)
        again = ex.parse(ex.pretty(e))
        for x, y in [(0.3, -0.7), (1.5, 2.0)]:
            assert ex.evaluate(again, x, y) == pytest.approx(
                ex.evaluate(e, x, y), rel=1e-15)


def test_simplify_preserves_value():
    e = ex.parse("0*x + 1*(y - 0) + x^1 + 0")
    s = ex.simplify(e)
    for x, y in [(0.1, 0.2), (-3.0, 5.0)]:
        assert ex.evaluate(s, x, y) == pytest.approx(x + y)


# symbolic derivative against central finite differences on random
# polynomial-ish expressions
coef = st.integers(min_value=-4, max_value=4)


@st.composite
def poly_expr(draw):
    terms = []
    for i in range(draw(st.integers(1, 4))):
        c = draw(coef)
        px = draw(st.integers(0, 3))
        py = draw(st.integers(0, 2))
        terms.append(f"({c})*x^{px}*y^{py}")
    return " + ".join(terms)


@settings(max_examples=40, deadline=None)
@given(poly_expr(), st.floats(-2, 2), st.floats(-2, 2))
def test_differentiate_matches_finite_difference(src, x, y):
    e = ex.parse(src)
    d = ex.differentiate(e, "x")
    h = 1e-5
    fd = (ex.evaluate(e, x + h, y) - ex.evaluate(e, x - h, y)) / (2 * h)
    scale = 1 + abs(fd)
    assert ex.evaluate(d, x, y) == pytest.approx(fd, abs=1e-6 * scale)


def test_differentiate_chain_rule():
    e = ex.parse("sin(x^2)")
    d = ex.differentiate(e, "x")
    x = 0.8
    assert ex.evaluate(d, x, 0) == pytest.approx(2 * x * math.cos(x * x))


def test_compile_numpy_vectorizes():
    f = ex.compile_numpy(ex.parse("x^2 + y"))
    xs = np.linspace(-1, 1, 11)
    ys = np.full(11, 2.0)
    np.testing.assert_allclose(f(xs, ys), xs**2 + 2.0)
    # scalar call returns a scalar-like value
    assert float(f(3.0, 1.0)) == 10.0


def test_antiderivative_numeric_matches_closed_form():
    e = ex.parse("x^2")
    val = ex.antiderivative_numeric(e, 0.0, 2.0)
    assert val == pytest.approx(8.0 / 3.0, rel=1e-10)
