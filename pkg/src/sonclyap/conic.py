"""Linear and relative-entropy programs behind one small interface.

A :class:`ConicProgram` collects affine equalities (``form == 0``), affine
inequalities (``form >= 0``) and relative-entropy triples ``(u, w, t)``
meaning ``u*log(u/w) <= t``.  :func:`solve` hands it to Clarabel (exponential
cones); :func:`solve_lp` hands relent-free programs to HiGHS.  Both check any
returned point outside the solver before calling it feasible.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import clarabel
import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .poly import AffineForm

FEAS_TOL = 1e-8
LOG_FLOOR = 1e-300


class Status(str, enum.Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    UNKNOWN = "Unknown"
    UNBOUNDED = "Unbounded"


class SolverUnknown(RuntimeError):
    """The solver neither produced a verified point nor certified infeasibility."""


@dataclass
class SolveResult:
    status: Status
    x: Optional[np.ndarray] = None
    objective_value: Optional[float] = None
    solver_status: str = ""
    max_violation: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE


@dataclass
class ConicProgram:
    names: List[str] = field(default_factory=list)
    objective: AffineForm = field(default_factory=AffineForm)
    eqs: List[AffineForm] = field(default_factory=list)
    ineqs: List[AffineForm] = field(default_factory=list)
    relents: List[Tuple[AffineForm, AffineForm, AffineForm]] = field(default_factory=list)

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def new_var(self, name: str) -> int:
        self.names.append(name)
        return len(self.names) - 1

    def new_vars(self, count: int, prefix: str) -> List[int]:
        return [self.new_var(f"{prefix}[{k}]") for k in range(count)]

    def _check(self, *forms):
        for f in forms:
            if f.max_index() >= self.num_vars:
                raise ValueError(f"form references variable {f.max_index()} of {self.num_vars}")

    def add_eq(self, form: AffineForm) -> int:
        self._check(form)
        self.eqs.append(form)
        return len(self.eqs) - 1

    def add_ineq(self, form: AffineForm) -> int:
        """Constrain ``form >= 0``."""
        self._check(form)
        self.ineqs.append(form)
        return len(self.ineqs) - 1

    def add_relative_entropy(self, u: AffineForm, w: AffineForm, t: AffineForm) -> int:
        """Constrain ``u*log(u/w) <= t`` (with ``u, w >= 0``)."""
        self._check(u, w, t)
        self.relents.append((u, w, t))
        return len(self.relents) - 1

    def minimize(self, form: AffineForm):
        self._check(form)
        self.objective = form

    def maximize(self, form: AffineForm):
        self.minimize(-form)

    def dump(self) -> str:
        """One constraint per line: ``EQ|INEQ|RELENT`` plus sparse ``index:coef`` lists."""

        def fmt(f):
            body = " ".join(f"{i}:{v:.17g}" for i, v in sorted(f.coefs.items()))
            return f"[{f.const:.17g}; {body}]"

        lines = [f"VARS {self.num_vars}", f"OBJ {fmt(self.objective)}"]
        lines += [f"EQ {fmt(f)}" for f in self.eqs]
        lines += [f"INEQ {fmt(f)}" for f in self.ineqs]
        lines += [f"RELENT {fmt(u)} {fmt(w)} {fmt(t)}" for u, w, t in self.relents]
        return "\n".join(lines) + "\n"


def _row_scale(f: AffineForm, x) -> float:
    return max(1.0, abs(f.const) + sum(abs(v * x[i]) for i, v in f.coefs.items()))


def relent_value(u: float, w: float) -> float:
    """``u*log(u/w)`` with ``0*log(0/w) = 0`` and arguments clamped at LOG_FLOOR."""
    if u <= LOG_FLOOR:
        return 0.0
    return u * math.log(u / max(w, LOG_FLOOR))


def max_violation(prog: ConicProgram, x) -> float:
    """Largest constraint violation at ``x``, each row relative to its own magnitude."""
    worst = 0.0
    for f in prog.eqs:
        worst = max(worst, abs(f.value(x)) / _row_scale(f, x))
    for f in prog.ineqs:
        worst = max(worst, -f.value(x) / _row_scale(f, x))
    for u, w, t in prog.relents:
        uv, wv, tv = u.value(x), w.value(x), t.value(x)
        scale = max(1.0, abs(uv), abs(wv), abs(tv))
        worst = max(worst, relent_gap(uv, wv, tv) / scale)
    return worst


def relent_gap(u: float, w: float, t: float) -> float:
    """Smallest ``d >= 0`` with ``u >= -d`` and ``max(u, 0) log(max(u, 0) / (w + d)) <= t + d``.

    The entropy is steep near ``w = 0``, so an interior-point answer that
    is within ``1e-10`` of the cone can still have a huge literal residual
    there; this measures the distance-like gap instead.
    """
    def ok(d):
        if u < -d or w + d < 0:
            return False
        uu = max(u, 0.0)
        return relent_value(uu, w + d) <= t + d

    if ok(0.0):
        return 0.0
    hi = max(1e-300, -u, -w)
    while not ok(hi):
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-3 * hi:
            break
    return hi


def _empty_result(prog):
    return SolveResult(Status.FEASIBLE, np.zeros(0), prog.objective.const, "empty", 0.0)


# ---------------------------------------------------------------- LP path


def _lp_matrices(prog):
    n = prog.num_vars
    c = np.zeros(n)
    for i, v in prog.objective.coefs.items():
        c[i] = v

    def rows(forms, sign):
        # sign * a.x  (<= or ==)  -sign * k
        if not forms:
            return None, None
        M = sp.lil_matrix((len(forms), n))
        rhs = np.zeros(len(forms))
        for r, f in enumerate(forms):
            for i, v in f.coefs.items():
                M[r, i] = sign * v
            rhs[r] = -sign * f.const
        return M.tocsr(), rhs

    # a.x + k >= 0  <=>  -a.x <= k
    A_ub, b_ub = rows(prog.ineqs, -1.0)
    A_eq, b_eq = rows(prog.eqs, 1.0)
    return c, A_ub, b_ub, A_eq, b_eq


def solve_lp(prog: ConicProgram, tol: float = FEAS_TOL) -> SolveResult:
    if prog.relents:
        raise ValueError("solve_lp called on a program with relative-entropy constraints")
    if prog.num_vars == 0:
        bad = any(abs(f.const) > tol for f in prog.eqs) or any(f.const < -tol for f in prog.ineqs)
        return SolveResult(Status.INFEASIBLE, solver_status="constant") if bad else _empty_result(prog)
    c, A_ub, b_ub, A_eq, b_eq = _lp_matrices(prog)
    res = linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
        bounds=[(None, None)] * prog.num_vars, method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 2:
        return SolveResult(Status.INFEASIBLE, solver_status=res.message)
    if res.status == 3:
        return SolveResult(Status.UNBOUNDED, objective_value=-math.inf, solver_status=res.message)
    if res.status != 0 or res.x is None:
        return SolveResult(Status.UNKNOWN, solver_status=res.message)
    x = np.asarray(res.x)
    viol = max_violation(prog, x)
    status = Status.FEASIBLE if viol <= tol else Status.UNKNOWN
    return SolveResult(status, x, prog.objective.value(x), res.message, viol)


# ---------------------------------------------------------------- conic path


def _conic_data(prog):
    """Clarabel form ``A x + s = b`` with ``s`` in zero, nonnegative, then exponential cones."""
    n = prog.num_vars
    rows, cols, vals, b = [], [], [], []

    def push(f):
        # s = f(x) = a.x + k  ->  row of A is -a, b = k
        r = len(b)
        for i, v in f.coefs.items():
            rows.append(r)
            cols.append(i)
            vals.append(-v)
        b.append(f.const)

    for f in prog.eqs:
        push(f)
    for f in prog.ineqs:
        push(f)
    for u, w, t in prog.relents:
        # u log(u/w) <= t  <=>  (-t, u, w) in K_exp
        push(-t)
        push(u)
        push(w)
    A = sp.csc_matrix((vals, (rows, cols)), shape=(len(b), n))
    cones = []
    if prog.eqs:
        cones.append(clarabel.ZeroConeT(len(prog.eqs)))
    if prog.ineqs:
        cones.append(clarabel.NonnegativeConeT(len(prog.ineqs)))
    cones += [clarabel.ExponentialConeT() for _ in prog.relents]
    return A, np.array(b, dtype=float), cones


def _in_dual_exp(z, tol):
    # K_exp^* = cl{(u, v, w): u < 0, -u exp(v/u) <= e w}
    u, v, w = z
    if u > tol:
        return False
    if u > -tol:
        return v >= -tol and w >= -tol
    return -u * math.exp(min(v / u, 700.0)) <= math.e * w + tol


def _farkas_certified(prog, A, b, z, tol=1e-7) -> bool:
    """Check ``A^T z = 0``, ``b.z < 0``, ``z`` in the dual cone, after normalizing ``z``."""
    z = np.asarray(z, dtype=float)
    bz = float(b @ z)
    if not bz < 0:
        return False
    z = z / -bz
    if np.max(np.abs(A.T @ z), initial=0.0) > tol * max(1.0, np.max(np.abs(z), initial=0.0)):
        return False
    neq, nin = len(prog.eqs), len(prog.ineqs)
    if np.any(z[neq:neq + nin] < -tol):
        return False
    base = neq + nin
    for k in range(len(prog.relents)):
        if not _in_dual_exp(z[base + 3 * k: base + 3 * k + 3], tol):
            return False
    return True


def _settings(max_iter=400):
    s = clarabel.DefaultSettings()
    s.verbose = False
    s.max_iter = max_iter
    s.tol_feas = 1e-10
    s.tol_gap_abs = 1e-10
    s.tol_gap_rel = 1e-10
    s.tol_infeas_abs = 1e-9
    s.tol_infeas_rel = 1e-9
    s.tol_ktratio = 1e-8
    return s


def solve(prog: ConicProgram, tol: float = FEAS_TOL) -> SolveResult:
    """Solve with the exponential-cone interior-point method.

    ``Feasible`` only when the returned point passes :func:`max_violation` at
    ``tol``; ``Infeasible`` only when the dual ray passes an independent
    Farkas check.  Everything else is ``Unknown``.
    """
    if prog.num_vars == 0:
        if not prog.relents:
            return solve_lp(prog, tol)
        bad = max_violation(prog, np.zeros(0)) > tol
        return SolveResult(Status.INFEASIBLE, solver_status="constant") if bad else _empty_result(prog)
    A, b, cones = _conic_data(prog)
    q = np.zeros(prog.num_vars)
    for i, v in prog.objective.coefs.items():
        q[i] = v
    P = sp.csc_matrix((prog.num_vars, prog.num_vars))
    try:
        sol = clarabel.DefaultSolver(P, q, A, b, cones, _settings()).solve()
    except BaseException as exc:  # the Rust core raises PanicException on numerical breakdowns
        if isinstance(exc, (KeyboardInterrupt, SystemExit)):
            raise
        return SolveResult(Status.UNKNOWN, solver_status=f"error: {exc}")
    name = str(sol.status)
    if name in ("Solved", "AlmostSolved", "MaxIterations", "InsufficientProgress", "MaxTime"):
        x = np.asarray(sol.x, dtype=float)
        if np.all(np.isfinite(x)):
            viol = max_violation(prog, x)
            if viol <= tol:
                return SolveResult(Status.FEASIBLE, x, prog.objective.value(x), name, viol)
            return SolveResult(Status.UNKNOWN, x, None, name, viol)
    if name in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        if _farkas_certified(prog, A, b, sol.z):
            return SolveResult(Status.INFEASIBLE, solver_status=name)
    if name in ("DualInfeasible", "AlmostDualInfeasible"):
        return SolveResult(Status.UNBOUNDED, solver_status=name)
    return SolveResult(Status.UNKNOWN, solver_status=name)


def add_relative_entropy(prog: ConicProgram, u: AffineForm, w: AffineForm, t: AffineForm) -> int:
    return prog.add_relative_entropy(u, w, t)


def maximize_lp(constraints_ge: Sequence[AffineForm], objective: AffineForm,
                eqs: Sequence[AffineForm] = (), num_vars: Optional[int] = None) -> SolveResult:
    """Convenience for the many tiny LPs used by geometry and pruning."""
    nv = num_vars
    if nv is None:
        nv = 1 + max([f.max_index() for f in [objective, *constraints_ge, *eqs]], default=-1)
    prog = ConicProgram(names=[f"y{i}" for i in range(nv)])
    for f in constraints_ge:
        prog.add_ineq(f)
    for f in eqs:
        prog.add_eq(f)
    prog.maximize(objective)
    res = solve_lp(prog)
    if res.objective_value is not None and res.status is not Status.UNBOUNDED:
        res.objective_value = -res.objective_value
    elif res.status is Status.UNBOUNDED:
        res.objective_value = math.inf
    return res
