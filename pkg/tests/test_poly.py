import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sonclyap.poly import (
    AffineForm,
    DynSystem,
    LinearFormPoly,
    ParseError,
    SparsePoly,
    arith,
    evaluate,
    is_even,
    lie_derivative,
    lie_derivative_symbolic,
    parse_poly,
    support_split,
)

from strategies import polys

X12 = ["x1", "x2"]
X123 = ["x1", "x2", "x3"]


class TestParse:
    def test_rational_coefficient(self):
        p = parse_poly("-x1 - 3/2*x1*x2^3", X12)
        assert p.terms == {(1, 0): -1.0, (1, 3): -1.5}

    def test_zero(self):
        assert parse_poly("0", X12).terms == {}

    def test_cancellation(self):
        assert parse_poly("x1^2 + 2*x1^2 - 3*x1^2", X12).terms == {}

    def test_precedence_power_over_unary_minus(self):
        # -x^2 is -(x^2), not (-x)^2
        assert parse_poly("-x1^2", X12).terms == {(2, 0): -1.0}

    def test_parentheses_and_powers(self):
        p = parse_poly("(x1 + x2)^2", X12)
        assert p.terms == {(2, 0): 1.0, (1, 1): 2.0, (0, 2): 1.0}

    def test_whitespace_insignificant(self):
        assert parse_poly(" 2 * x1 ^ 2 ", X12) == parse_poly("2*x1^2", X12)

    def test_decimal_and_exponent_notation(self):
        assert parse_poly("1.5e-1*x1", X12).terms == {(1, 0): 0.15}

    @pytest.mark.parametrize("text, fragment", [
        ("x1 +", "position"),
        ("x3", "unknown variable"),
        ("x1^-2", "negative exponent"),
        ("x1^1.5", "fractional exponent"),
        ("2 x1", "position"),
        ("x1/x2", "/"),
    ])
    def test_errors(self, text, fragment):
        with pytest.raises(ParseError) as err:
            parse_poly(text, X12)
        assert fragment in str(err.value)

    def test_error_reports_position(self):
        with pytest.raises(ParseError) as err:
            parse_poly("x1 + * x2", X12)
        assert err.value.pos == 5


class TestEvaluateArith:
    def test_sum_of_squares(self):
        assert evaluate(parse_poly("x1^2+x2^2+x3^2", X123), [1, 2, 3]) == 14

    def test_non_sonc_oracle_point(self):
        assert evaluate(parse_poly("x^2 + x", ["x"]), [-0.5]) == -0.25

    def test_empty(self):
        assert evaluate(SparsePoly.zero(X12), [3, 4]) == 0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            evaluate(parse_poly("x1", X12), [1.0])

    def test_arith_examples(self):
        x = ["x"]
        assert arith("add", parse_poly("x^2", x), parse_poly("-x^2", x)).is_zero()
        assert arith("scale", 0.5, parse_poly("2*x^4+2*x^2", x)) == parse_poly("x^4+x^2", x)
        assert arith("mul", parse_poly("x1", X12), parse_poly("x1+x2", X12)) == parse_poly("x1^2+x1*x2", X12)

    def test_arith_mismatch(self):
        with pytest.raises(ValueError):
            arith("add", parse_poly("x1", X12), parse_poly("x1", X123))

    def test_tiny_coefficients_dropped(self):
        p = parse_poly("x1", X12) + SparsePoly(X12, {(1, 0): -1.0 + 1e-14})
        assert p.is_zero()

    @given(polys(), polys(), polys())
    @settings(max_examples=60, deadline=None)
    def test_ring_laws(self, a, b, c):
        assert (a + b) == (b + a)
        assert (a * b) == (b * a)
        assert ((a + b) + c).allclose(a + (b + c))
        assert ((a * b) * c).allclose(a * (b * c), atol=1e-9)
        assert (a * (b + c)).allclose(a * b + a * c, atol=1e-9)


class TestLie:
    def test_circuit3(self, circuit3):
        V = parse_poly("x1^2 + x2^2 + x3^2", X123)
        expected = parse_poly("-(2*x1^4 + 2*x1^2*x3^2 - 2*x1^2*x2 + 2*x1^2 + 2*x2^2 + 2*x3^2)", X123)
        assert lie_derivative(V, circuit3) == expected

    def test_pendulum_zero(self, pendulum):
        assert lie_derivative(parse_poly("1/2*x1^2 + 1/2*x2^2", X12), pendulum).is_zero()

    def test_cross_term(self):
        f = DynSystem.parse(["x2", "x1"], X12)
        assert lie_derivative(parse_poly("x1*x2", X12), f) == parse_poly("x1^2 + x2^2", X12)

    def test_symbolic_diagonal(self):
        V = LinearFormPoly.from_support(X12, [(2, 0), (0, 2)])
        d = lie_derivative_symbolic(V, DynSystem.parse(["-x1", "-x2"], X12))
        assert d.coeff((2, 0)) == AffineForm(0.0, {0: -2.0})
        assert d.coeff((0, 2)) == AffineForm(0.0, {1: -2.0})

    def test_symbolic_planar_cubic(self):
        f = DynSystem.parse(["-x1 - 3/2*x1*x2^3", "-x2^3 + 1/2*x1^2*x2^2"], X12)
        V = LinearFormPoly.from_support(X12, [(2, 0), (0, 2)])  # c1 -> x1^2, c2 -> x2^2
        d = lie_derivative_symbolic(V, f)
        assert d.coeff((2, 0)) == AffineForm(0.0, {0: -2.0})
        assert d.coeff((2, 3)) == AffineForm(0.0, {0: -3.0, 1: 1.0})

    def test_symbolic_round_trip(self, circuit3):
        V = LinearFormPoly.from_support(X123, [(2, 0, 0), (0, 2, 0), (0, 0, 2)])
        sym = lie_derivative_symbolic(V, circuit3).substitute([1.0, 1.0, 1.0])
        assert sym == lie_derivative(parse_poly("x1^2+x2^2+x3^2", X123), circuit3)

    @given(polys(max_deg=3), polys(max_deg=2), polys(max_deg=2),
           st.tuples(st.floats(-1, 1), st.floats(-1, 1)))
    @settings(max_examples=60, deadline=None)
    def test_chain_rule_finite_difference(self, V, f1, f2, x):
        f = DynSystem([f1, f2])
        x = np.array(x)
        fx = np.array([evaluate(f1, x), evaluate(f2, x)])
        h = 1e-6
        fd = (evaluate(V, x + h * fx) - evaluate(V, x - h * fx)) / (2 * h)
        exact = evaluate(lie_derivative(V, f), x)
        assert math.isclose(fd, exact, rel_tol=1e-4, abs_tol=1e-4)

    @given(polys(max_deg=3), polys(max_deg=2), polys(max_deg=2),
           st.lists(st.integers(-3, 3), min_size=2, max_size=2))
    @settings(max_examples=40, deadline=None)
    def test_symbolic_matches_numeric(self, V, f1, f2, cvals):
        f = DynSystem([f1, f2])
        support = sorted(V.support)
        if not support:
            return
        Vt = LinearFormPoly.from_support(V.vars, support)
        vals = [V.coeff(a) * (1 + cvals[i % 2]) for i, a in enumerate(support)]
        Vn = Vt.substitute(vals)
        assert lie_derivative_symbolic(Vt, f).substitute(vals).allclose(lie_derivative(Vn, f), atol=1e-12)


class TestSupportSplit:
    def test_circuit3(self, circuit3):
        nd = -lie_derivative(parse_poly("x1^2+x2^2+x3^2", X123), circuit3)
        s = support_split(nd)
        assert s.a_plus == {(4, 0, 0), (2, 0, 2), (2, 0, 0), (0, 2, 0), (0, 0, 2)}
        assert s.a_minus == {(2, 1, 0)}

    def test_small_cases(self):
        s = support_split(parse_poly("x^2 + x", ["x"]))
        assert s.a_plus == {(2,)} and s.a_minus == {(1,)}
        s = support_split(parse_poly("-x^2", ["x"]))
        assert s.a_plus == set() and s.a_minus == {(2,)}

    @given(polys())
    @settings(max_examples=60, deadline=None)
    def test_partition(self, p):
        s = support_split(p)
        assert s.a_plus.isdisjoint(s.a_minus)
        assert s.a_plus | s.a_minus == p.support
        assert all(is_even(a) and p.coeff(a) > 0 for a in s.a_plus)
        plus = SparsePoly(p.vars, {a: p.coeff(a) for a in s.a_plus})
        minus = SparsePoly(p.vars, {a: p.coeff(a) for a in s.a_minus})
        assert plus + minus == p


def test_system_equilibrium_check():
    f = DynSystem.parse(["x2 + 1", "-x1"], X12)
    assert not f.has_origin_equilibrium()
    assert f.nonzero_constant_terms() == [(0, 1.0)]
