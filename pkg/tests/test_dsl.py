import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import CORPUS_NAMES, corpus_map
from tamecert import ParseError, format_map, parse_expr, parse_map
from tamecert.expr import Root, evaluate, rational_power, sroot, to_text

CUBIC = "map R2->R2 { piece true: (x1^3, x2^3) }"
TWOPIECE = "map R2->R2 { piece x1>=0: (x1+x2^3, x1); piece true: (x1+x2^3, 0) }"


def test_parse_cubic():
    f = parse_map(CUBIC)
    assert (f.m, f.n) == (2, 2)
    assert len(f.pieces) == 1
    assert f.pieces[0].guards == ()


def test_parse_identity_1d():
    f = parse_map("map R1->R1 { piece true: (x1) }")
    assert (f.m, f.n) == (1, 1)


def test_parse_twopiece():
    f = parse_map(TWOPIECE)
    assert len(f.pieces) == 2
    assert to_text(f.pieces[0].guards[0].expr) in ("x1", "x1 - 0")


@pytest.mark.parametrize("src", [CUBIC, TWOPIECE] + [f"corpus:{n}" for n in CORPUS_NAMES])
def test_round_trip(src):
    f = corpus_map(src[7:]) if src.startswith("corpus:") else parse_map(src)
    g = parse_map(format_map(f))
    assert g == f
    assert parse_map(format_map(g)) == g
    assert g.hash == f.hash


@pytest.mark.parametrize("src, where, msg", [
    ("map R2->R2 {\n piece true: (x1^(1/2), x2) }", (2, 18), "even root"),
    ("map R2->R2 {\n piece true: (x1 +, x2) }", (2, 19), "unexpected"),
    ("map R2->R2 { piece true: (x1, x3) }", (1, 31), "exceeds"),
    ("map R2->R2 { piece true: (x1) }", (1, 26), "components"),
])
def test_parse_errors(src, where, msg):
    with pytest.raises(ParseError) as exc:
        parse_map(src)
    assert (exc.value.line, exc.value.col) == where
    assert msg in str(exc.value)


def test_rational_power_reduces():
    assert rational_power(parse_expr("x1"), 2, 6) == Root(parse_expr("x1"), 1, 3)
    assert to_text(parse_expr("x1^(4/2)")) == to_text(parse_expr("x1^2"))
    with pytest.raises(ValueError):
        rational_power(parse_expr("x1"), 1, 4)


@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_sroot_odd_symmetry(t):
    assert sroot(-t, 1, 3) == -sroot(t, 1, 3)
    assert sroot(-t, 2, 3) == sroot(t, 2, 3)


def test_sroot_values():
    assert_allclose(sroot([-8.0, 8.0, 0.0], 1, 3), [-2.0, 2.0, 0.0])
    assert_allclose(sroot([-8.0, 8.0], 2, 3), [4.0, 4.0])
    assert_allclose(sroot([-32.0], 3, 5), [-8.0])


def test_expression_evaluation():
    e = parse_expr("abs(x1 - 2*x2) / (1 + x1^2) - x2^(1/3)", 2)
    X = np.array([[1.0, 8.0], [-2.0, -1.0]])
    expected = np.abs(X[:, 0] - 2 * X[:, 1]) / (1 + X[:, 0] ** 2) - np.cbrt(X[:, 1])
    assert_allclose(evaluate(e, X), expected, rtol=1e-14)


def test_precedence_and_unary_minus():
    X = np.array([[2.0, 3.0]])
    assert_allclose(evaluate(parse_expr("-x1^2"), X), [-4.0])
    assert_allclose(evaluate(parse_expr("x1 - x2 - 1"), X), [-2.0])
    assert_allclose(evaluate(parse_expr("x2 / x1 / 2"), X), [0.75])
    assert_allclose(evaluate(parse_expr("x1^-1"), X), [0.5])


def test_domain_clauses():
    f = parse_map("map R2->R2 { domain ball (0, 0) radius 2 inner 0.5 exclude (1, 1)\n"
                  " locus x1*x2\n piece true: (x1, x2) }")
    d = f.domain
    assert d.kind == "ball"
    assert (d.radius, d.inner) == (2.0, 0.5)
    assert d.excluded == ((1.0, 1.0),)
    assert len(f.loci) == 1
    assert parse_map(format_map(f)) == f
