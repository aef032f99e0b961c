import math

import numpy as np
import pytest

from sonclyap.conic import ConicProgram, Status, max_violation, maximize_lp, relent_gap, solve, solve_lp
from sonclyap.poly import AffineForm

E = math.e


def var(i, c=1.0):
    return AffineForm.var(i, c)


class TestBasics:
    def test_empty_program(self):
        res = solve(ConicProgram())
        assert res.status is Status.FEASIBLE and len(res.x) == 0

    @pytest.mark.parametrize("solver", [solve, solve_lp])
    def test_infeasible_lp(self, solver):
        prog = ConicProgram()
        x = prog.new_var("x")
        prog.add_ineq(var(x) - 1.0)
        prog.add_ineq(-var(x))
        assert solver(prog).status is Status.INFEASIBLE

    def test_maximize(self):
        res = maximize_lp([-var(0)], var(0))
        assert res.status is Status.FEASIBLE and res.objective_value == pytest.approx(0.0, abs=1e-9)

    def test_unbounded(self):
        res = maximize_lp([var(0)], var(0))
        assert res.status is Status.UNBOUNDED and res.objective_value == math.inf

    def test_duplicate_constraint_is_redundant(self):
        # maximize the violation of c <= 0 subject to the duplicate c <= 0
        res = maximize_lp([-var(0)], var(0))
        assert res.objective_value <= 0

    def test_references_checked(self):
        prog = ConicProgram()
        with pytest.raises(ValueError):
            prog.add_ineq(var(3))


class TestRelativeEntropy:
    def test_minimizer_always_feasible(self):
        for c in (0.0, 1e-3, 1.0, 7.5):
            prog = ConicProgram()
            prog.new_var("c")
            prog.add_eq(var(0) - c)
            prog.add_relative_entropy(var(0), var(0, E), AffineForm(0.0))
            assert solve(prog).status is Status.FEASIBLE

    def test_infeasible_triple(self):
        prog = ConicProgram()
        prog.new_var("dummy")
        prog.add_relative_entropy(AffineForm(1.0), AffineForm(1.0), AffineForm(-0.5))
        assert solve(prog).status is Status.INFEASIBLE

    def test_epigraph_minimum(self):
        # min t s.t. u log(u/w) <= t with u = 1, w = 2: optimum log(1/2)
        prog = ConicProgram()
        t = prog.new_var("t")
        prog.add_relative_entropy(AffineForm(1.0), AffineForm(2.0), var(t))
        prog.minimize(var(t))
        res = solve(prog)
        assert res.status is Status.FEASIBLE
        assert res.x[t] == pytest.approx(math.log(0.5), abs=1e-7)

    def test_decomposed_entropy_bound(self):
        # D(v, e c) = sum t_a <= -1 is feasible for c = (2, 2) (circuit 2x^2 - 2x y + 2y^2 ... style)
        prog = ConicProgram()
        v = prog.new_vars(2, "v")
        t = prog.new_vars(2, "t")
        for k in range(2):
            prog.add_relative_entropy(var(v[k]), AffineForm(2.0 * E), var(t[k]))
        prog.add_ineq(AffineForm(-1.0, {t[0]: -1.0, t[1]: -1.0}))
        prog.add_eq(var(v[0]) - var(v[1]))
        res = solve(prog)
        assert res.status is Status.FEASIBLE
        assert max_violation(prog, res.x) <= 1e-8

    def test_gap_measure(self):
        assert relent_gap(1.0, math.e, -1.0) == 0.0
        assert relent_gap(1.0, 1.0, 0.0) == 0.0
        assert relent_gap(1.0, 1.0, -0.5) > 0.1
        assert relent_gap(4e-4, -7e-11, 7e-3) < 1e-9


def test_lp_and_conic_agree_on_lps():
    rng = np.random.default_rng(3)
    for _ in range(15):
        prog = ConicProgram()
        xs = prog.new_vars(3, "x")
        for _ in range(5):
            a = rng.integers(-3, 4, 3)
            prog.add_ineq(AffineForm(float(rng.integers(-2, 3)), {xs[i]: float(a[i]) for i in range(3) if a[i]}))
        for i in xs:
            prog.add_ineq(AffineForm(5.0, {i: -1.0}))
            prog.add_ineq(AffineForm(5.0, {i: 1.0}))
        assert solve(prog).status is solve_lp(prog).status


def test_row_scaling_keeps_status():
    for scale in (1e-3, 1.0, 1e3):
        prog = ConicProgram()
        x = prog.new_var("x")
        prog.add_ineq(AffineForm(-scale, {x: scale}))
        prog.add_ineq(AffineForm(0.5 * scale, {x: -scale}))
        assert solve_lp(prog).status is Status.INFEASIBLE
        assert solve(prog).status is Status.INFEASIBLE


def test_dump_format():
    prog = ConicProgram()
    x = prog.new_var("x")
    prog.add_eq(var(x) - 1.0)
    prog.add_relative_entropy(var(x), AffineForm(1.0), AffineForm(0.0))
    text = prog.dump()
    assert "EQ [-1; 0:1]" in text and text.count("RELENT") == 1
