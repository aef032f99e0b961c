"""Lyapunov certificates: checking a candidate and searching over a support.

Both paths assemble one conic program in which the margin polynomials
``p1`` and ``p2`` carry their own nonnegative decision variables, then read
back witnesses for ``V - p1`` and ``-Vdot - p2`` and re-verify them without
the solver.
"""
from __future__ import annotations

import enum
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .certificates import (
    WITNESS_TOL,
    add_membership_constraints,
    dsonc_membership,
    extract_witness,
    membership,
    verify_witness,
    witness_residuals,
)
from .conic import ConicProgram, SolverUnknown, Status, maximize_lp, solve
from .geometry import polytope_vertices
from .poly import (
    AffineForm,
    DynSystem,
    evaluate_many,
    Exponent,
    LinearFormPoly,
    SparsePoly,
    is_even,
    lie_derivative,
    lie_derivative_symbolic,
    support_split,
)

EPSILON_MIN = 1e-3
PRUNE_THRESHOLD = 1e-3
# a margin coefficient below this does not count towards positivity
MARGIN_FLOOR = 1e-8


class Verdict(str, enum.Enum):
    ASYMPTOTICALLY_STABLE = "AsymptoticallyStable"
    STABLE = "Stable"
    NOT_CERTIFIED = "NotCertified"


class Mode(str, enum.Enum):
    ASYMPTOTIC = "asymptotic"
    STABLE = "stable"


def _mode(mode) -> Mode:
    return mode if isinstance(mode, Mode) else Mode(str(mode).lower())


def _kind(kind) -> str:
    kind = str(kind).upper()
    if kind not in ("SONC", "DSONC"):
        raise ValueError(f"unsupported certificate kind {kind!r}")
    return kind


@dataclass
class LyapunovResult:
    V: SparsePoly
    p1: SparsePoly
    p2: SparsePoly
    cert_V: object
    cert_dV: object
    verdict: Verdict
    certificate_kind: str
    minus_vdot: Optional[SparsePoly] = None
    mode: Mode = Mode.ASYMPTOTIC
    solver_status: str = ""
    note: str = ""

    def reverify(self, tol: float = WITNESS_TOL) -> bool:
        """Check both witnesses against the stored polynomials, solver-free."""
        P = self.V - self.p1
        Pp = self.minus_vdot - self.p2
        ok_v = self.cert_V is not None and verify_witness(P, self.cert_V, tol)
        ok_d = Pp.is_zero() or (self.cert_dV is not None and verify_witness(Pp, self.cert_dV, tol))
        return ok_v and ok_d


@dataclass
class StabilityReport:
    verdict: Verdict
    result: Optional[LyapunovResult]
    residuals: Dict[str, Dict[str, float]] = field(default_factory=dict)
    wall_time: float = 0.0
    solver_statuses: List[str] = field(default_factory=list)
    message: str = ""


# ----------------------------------------------------------------- margins


def covers_all_variables(p: SparsePoly, floor: float = MARGIN_FLOOR) -> bool:
    """True iff every variable has a pure even power with coefficient above ``floor``.

    For a polynomial with nonnegative coefficients on even exponents this is
    exactly positive definiteness.
    """
    hit = [False] * p.n
    for a, c in p.items():
        nz = [j for j, e in enumerate(a) if e]
        if len(nz) == 1 and is_even(a) and c > floor:
            hit[nz[0]] = True
    return all(hit)


def build_epsilon_poly(prog: ConicProgram, vars: Sequence[str], a_plus, epsilon_min: float = EPSILON_MIN,
                       label: str = "eps") -> Dict[Exponent, int]:
    """Add ``sum(eps_a * x**a)`` with ``eps >= 0`` and ``sum(eps) >= epsilon_min`` to ``prog``.

    Returns the exponent to variable-index map.
    """
    a_plus = sorted(set(a_plus))
    if not a_plus:
        raise ValueError("empty positive support: no margin polynomial can be formed")
    idx = {}
    for a in a_plus:
        i = prog.new_var(f"{label}{list(a)}")
        prog.add_ineq(AffineForm.var(i))
        idx[a] = i
    prog.add_ineq(AffineForm(-epsilon_min, {i: 1.0 for i in idx.values()}))
    return idx


def epsilon_values(idx: Dict[Exponent, int], x, vars) -> SparsePoly:
    return SparsePoly(vars, {a: max(0.0, float(x[i])) for a, i in idx.items()})


# ----------------------------------------------------------------- sign distribution


@dataclass
class SignConstraintSet:
    """Sign pattern for ``V`` (coefficients ``c``) and ``-Vdot`` (forms ``d(c)``)."""

    v_zero: frozenset
    v_nonneg: frozenset
    v_nonpos: frozenset
    v_free: frozenset
    d_zero: frozenset
    d_nonneg: frozenset
    d_nonpos: frozenset
    d_free: frozenset
    equalities: List[AffineForm]
    inequalities: List[AffineForm]
    V: LinearFormPoly
    minus_vdot: LinearFormPoly

    @property
    def zero_set(self):
        return self.v_zero | self.d_zero

    @property
    def nonneg_set(self):
        return self.v_nonneg | self.d_nonneg


def reduce_redundant(constraints: Sequence[AffineForm], equalities: Sequence[AffineForm] = (),
                     threshold: float = PRUNE_THRESHOLD) -> List[AffineForm]:
    """Drop constraints ``g >= 0`` implied by the ones kept before them.

    For each ``g_j`` in order, maximize ``-g_j`` subject to the kept set and
    ``equalities``; keep ``g_j`` iff that optimum reaches ``threshold`` or is
    unbounded.  A failed LP keeps the constraint.
    """
    kept: List[AffineForm] = []
    nv = 1 + max([f.max_index() for f in [*constraints, *equalities]], default=-1)
    for g in constraints:
        res = maximize_lp(kept, -g, equalities, num_vars=nv)
        if res.status is not Status.FEASIBLE or res.objective_value >= threshold:
            kept.append(g)
    return kept


def _odd_vertices(support) -> set:
    if not support:
        return set()
    return {a for a in polytope_vertices(support) if not is_even(a)}


def _classify(support, forms, interior_negative):
    """Split the remaining support into nonneg / nonpos / free and emit ``>= 0`` forms."""
    nonneg, nonpos, free, ineqs = set(), set(), set(), []
    verts = polytope_vertices(support) if support else frozenset()
    for a in sorted(support):
        if not is_even(a):
            free.add(a)
        elif interior_negative and a not in verts:
            nonpos.add(a)
            ineqs.append(-forms[a])
        else:
            nonneg.add(a)
            ineqs.append(forms[a])
    return nonneg, nonpos, free, ineqs


def distribute_signs(V: LinearFormPoly, f: DynSystem, interior_negative: bool = False,
                     prune: bool = True) -> SignConstraintSet:
    """Fix coefficient signs for ``V`` and ``-Vdot`` before the certificate program.

    Odd Newton-polytope vertices cannot appear in a nonnegative polynomial,
    so their coefficients are pinned to zero (for ``V`` the term is removed
    before differentiating).  Remaining even exponents are constrained
    nonnegative, or nonpositive when ``interior_negative`` is set and the
    exponent is not a vertex (it may sit on a facet, as the Motzkin term
    does).  Odd non-vertices stay free.
    """
    A = set(V.support)
    v_zero = _odd_vertices(A)
    eqs = [V.coeff(a) for a in sorted(v_zero)]
    V_red = V.partial_substitute({i: 0.0 for a in v_zero for i in V.coeff(a).coefs})
    A_red = set(V_red.support)
    if not any(is_even(a) for a in A_red):
        raise ValueError("no even exponent left in the candidate support")
    nd = -lie_derivative_symbolic(V_red, f)
    Ap = set(nd.support)
    d_zero = _odd_vertices(Ap)
    eqs += [nd.coeff(a) for a in sorted(d_zero)]
    Ap_red = Ap - d_zero

    v_nonneg, v_nonpos, v_free, v_ineqs = _classify(A_red, V_red.terms, interior_negative)
    d_nonneg, d_nonpos, d_free, d_ineqs = _classify(Ap_red, nd.terms, interior_negative)
    ineqs = v_ineqs + d_ineqs
    if prune:
        ineqs = reduce_redundant(ineqs, eqs)
    return SignConstraintSet(frozenset(v_zero), frozenset(v_nonneg), frozenset(v_nonpos), frozenset(v_free),
                             frozenset(d_zero), frozenset(d_nonneg), frozenset(d_nonpos), frozenset(d_free),
                             eqs, ineqs, V_red, nd)


# ----------------------------------------------------------------- supports


def generate_support(n: int, degree: int, template: str = "diagonal", extras: Sequence[Exponent] = ()) -> frozenset:
    """Candidate exponent sets for ``V``; the zero exponent is never included."""
    if degree < 2:
        raise ValueError("degree must be at least 2")
    diag = {tuple(2 if j == i else 0 for j in range(n)) for i in range(n)}
    if template == "diagonal":
        out = diag
    elif template == "diagonal_plus":
        out = diag | {tuple(int(e) for e in a) for a in extras}
    elif template == "full_even":
        half = degree // 2
        out = {tuple(2 * k for k in ks) for ks in itertools.product(range(half + 1), repeat=n)
               if 0 < 2 * sum(ks) <= degree}
    else:
        raise ValueError(f"unknown template {template!r}")
    for a in out:
        if len(a) != n or any(e < 0 for e in a):
            raise ValueError(f"bad exponent {a}")
    return frozenset(a for a in out if any(a))


# ----------------------------------------------------------------- verification


def _check_inputs(V: SparsePoly, f: DynSystem):
    if not f.has_origin_equilibrium():
        bad = ", ".join(f"{f.vars[i]}' has constant {c:g}" for i, c in f.nonzero_constant_terms())
        raise ValueError(f"origin is not an equilibrium: {bad}")
    if V.vars != f.vars:
        raise ValueError("candidate and system use different variables")
    if V.coeff((0,) * V.n) != 0.0:
        raise ValueError("V has a constant term, so V(0) != 0")


def _positive_part(p: SparsePoly) -> SparsePoly:
    return SparsePoly(p.vars, {a: p.coeff(a) for a in support_split(p).a_plus})


def derive_verdict(r: LyapunovResult, tol: float = WITNESS_TOL) -> Tuple[Verdict, str]:
    """Verdict from the payload alone: polynomials, margins, witnesses and mode.

    DSONC results without margins rely on the positive support of the
    certified polynomial itself carrying a pure even power of every variable.
    """
    nc = Verdict.NOT_CERTIFIED
    V, nd, p1, p2 = r.V, r.minus_vdot, r.p1, r.p2
    if V.is_zero():
        return nc, "V is the zero polynomial"
    if V.coeff((0,) * V.n) != 0.0:
        return nc, "V has a constant term"
    P, Pp = V - p1, nd - p2
    if r.cert_V is None or not verify_witness(P, r.cert_V, tol):
        return nc, "no valid certificate for V - p1"
    bare = r.certificate_kind == "DSONC" and p1.is_zero()
    if not covers_all_variables(_positive_part(V) if bare else p1):
        return nc, "V is not certified positive definite (a variable has no pure even margin term)"
    if not Pp.is_zero() and (r.cert_dV is None or not verify_witness(Pp, r.cert_dV, tol)):
        return nc, "no valid certificate for -Vdot - p2"
    if r.mode is Mode.STABLE:
        return Verdict.STABLE, ""
    if nd.is_zero():
        return nc, "-Vdot is identically zero, so no strict decrease"
    margin = _positive_part(nd) if bare else p2
    if margin.is_zero():
        return nc, "no decrease margin"
    if covers_all_variables(margin):
        return Verdict.ASYMPTOTICALLY_STABLE, ""
    return Verdict.STABLE, "decrease margin is not positive definite, only stability is certified"


def verify_candidate(V: SparsePoly, f: DynSystem, kind="SONC", mode="asymptotic",
                     epsilon_min: float = EPSILON_MIN, tol: float = WITNESS_TOL) -> StabilityReport:
    """Certify ``V`` as a Lyapunov function for ``x' = f(x)`` at the origin."""
    t0 = time.perf_counter()
    kind, mode = _kind(kind), _mode(mode)
    _check_inputs(V, f)
    nd = -lie_derivative(V, f)
    if kind == "DSONC":
        rep = _verify_dsonc(V, nd, mode, tol)
    else:
        rep = _verify_sonc(V, f, nd, mode, epsilon_min, tol)
    rep.wall_time = time.perf_counter() - t0
    return rep


def _not_certified(msg, statuses=()):
    return StabilityReport(Verdict.NOT_CERTIFIED, None, solver_statuses=list(statuses), message=msg)


def _verify_sonc(V, f, nd, mode, epsilon_min, tol):
    vars = V.vars
    if V.is_zero():
        return _not_certified("V is the zero polynomial")
    sv, sd = support_split(V), support_split(nd)
    if not polytope_vertices(V.support) <= sv.a_plus:
        return _not_certified("V has a Newton polytope vertex that is odd or carries a negative coefficient")
    if not nd.is_zero() and not polytope_vertices(nd.support) <= sd.a_plus:
        return _not_certified("-Vdot has a Newton polytope vertex that is odd or carries a negative coefficient")
    if mode is Mode.ASYMPTOTIC and not sd.a_plus:
        return _not_certified("-Vdot has no positive even terms, so no strict decrease margin exists")

    prog = ConicProgram()
    e1 = build_epsilon_poly(prog, vars, sv.a_plus, epsilon_min, "eps1")
    P = {a: AffineForm(c) for a, c in V.items()}
    for a, i in e1.items():
        P[a] = P[a] - AffineForm.var(i)
    hP = add_membership_constraints(prog, "SONC", P, sv.a_plus, sv.a_minus, "P")
    e2 = {}
    Pp = {a: AffineForm(c) for a, c in nd.items()}
    if mode is Mode.ASYMPTOTIC:
        e2 = build_epsilon_poly(prog, vars, sd.a_plus, epsilon_min, "eps2")
        for a, i in e2.items():
            Pp[a] = Pp[a] - AffineForm.var(i)
    hPp = None
    if not nd.is_zero():
        hPp = add_membership_constraints(prog, "SONC", Pp, sd.a_plus, sd.a_minus, "Q")
    return _finish_verify(prog, V, nd, e1, e2, hP, hPp, mode, "SONC", tol)


def _finish_verify(prog, V, nd, e1, e2, hP, hPp, mode, kind, tol):
    res = solve(prog)
    statuses = [res.solver_status]
    if res.status is Status.INFEASIBLE:
        return _not_certified("certificate program is infeasible", statuses)
    if res.status is not Status.FEASIBLE:
        raise SolverUnknown(f"solver status {res.solver_status}")
    result = _assemble(res.x, V, nd, e1, e2, hP, hPp, mode, kind, tol)
    result.solver_status = res.solver_status
    return _report(result, statuses)


def _recertify(P: SparsePoly, kind: str, tol: float):
    """Fresh fixed-coefficient certificate, or ``None`` if that fails too."""
    try:
        return membership(P, kind, tol)
    except SolverUnknown:
        return None


def _assemble(x, V, nd, e1, e2, hP, hPp, mode, kind, tol) -> LyapunovResult:
    vars = V.vars
    p1 = epsilon_values(e1, x, vars)
    p2 = epsilon_values(e2, x, vars) if e2 else SparsePoly.zero(vars)
    P, Pp = V - p1, nd - p2
    wV = extract_witness(hP, x, P)
    if not verify_witness(P, wV, tol):
        wV = _recertify(P, kind, tol)
    wD = None
    if not Pp.is_zero():
        wD = extract_witness(hPp, x, Pp) if hPp is not None else None
        if wD is None or not verify_witness(Pp, wD, tol):
            wD = _recertify(Pp, kind, tol)
    r = LyapunovResult(V, p1, p2, wV, wD, Verdict.NOT_CERTIFIED, kind, nd, mode)
    if wV is None or (wD is None and not Pp.is_zero()):
        r.note = "solver point failed independent witness verification"
    else:
        r.verdict, r.note = derive_verdict(r, tol)
    return r


def _project_equalities(x, eqs: Sequence[AffineForm], k: int):
    """Least-squares projection of the first ``k`` entries onto ``{g(x) = 0 : g in eqs}``."""
    x = np.array(x, dtype=float)
    if not eqs:
        return x
    E = np.zeros((len(eqs), k))
    e0 = np.zeros(len(eqs))
    for r, g in enumerate(eqs):
        e0[r] = g.const
        for i, a in g.coefs.items():
            E[r, i] = a
    resid = E @ x[:k] + e0
    x[:k] -= np.linalg.pinv(E) @ resid
    return x


def _report(result: LyapunovResult, statuses) -> StabilityReport:
    res = {"V-p1": witness_residuals(result.V - result.p1, result.cert_V)}
    if result.cert_dV is not None:
        res["-Vdot-p2"] = witness_residuals(result.minus_vdot - result.p2, result.cert_dV)
    return StabilityReport(result.verdict, result, res, solver_statuses=list(statuses), message=result.note)


def _verify_dsonc(V, nd, mode, tol):
    zero = SparsePoly.zero(V.vars)
    if V.is_zero():
        return _not_certified("V is the zero polynomial")
    wV = dsonc_membership(V, tol)
    if wV is None:
        return _not_certified("V is not in the DSONC cone")
    wD = None
    if not nd.is_zero():
        wD = dsonc_membership(nd, tol)
        if wD is None:
            return _not_certified("-Vdot is not in the DSONC cone")
    r = LyapunovResult(V, zero, zero, wV, wD, Verdict.NOT_CERTIFIED, "DSONC", nd, mode)
    r.verdict, r.note = derive_verdict(r, tol)
    return _report(r, [])


# ----------------------------------------------------------------- search


@dataclass
class SearchOptions:
    mode: Mode = Mode.ASYMPTOTIC
    interior_negative: bool = False
    epsilon_min: float = EPSILON_MIN
    tol: float = WITNESS_TOL
    dump: Optional[list] = None  # receives the program text when not None


def _options(options, kw) -> SearchOptions:
    opts = options or SearchOptions()
    for k, v in kw.items():
        setattr(opts, k, v)
    opts.mode = _mode(opts.mode)
    return opts


def search(f: DynSystem, A, kind="SONC", options: Optional[SearchOptions] = None, **kw) -> Optional[LyapunovResult]:
    """Search for ``V`` supported on ``A``; ``None`` when the program is infeasible."""
    kind = _kind(kind)
    opts = _options(options, kw)
    A = {tuple(int(e) for e in a) for a in A}
    if not A:
        raise ValueError("empty candidate support")
    if (0,) * f.n in A:
        raise ValueError("the candidate support must not contain the zero exponent")
    if not f.has_origin_equilibrium():
        bad = ", ".join(f"{f.vars[i]}'" for i, _ in f.nonzero_constant_terms())
        raise ValueError(f"origin is not an equilibrium ({bad} has a constant term)")

    Vt = LinearFormPoly.from_support(f.vars, A)
    try:
        signs = distribute_signs(Vt, f, opts.interior_negative)
    except ValueError:
        return None
    if not signs.v_nonneg:
        return None
    prog = ConicProgram(names=list(Vt.dvars))
    for g in signs.equalities:
        prog.add_eq(g)
    for g in signs.inequalities:
        prog.add_ineq(g)

    V, nd = signs.V, signs.minus_vdot
    e1 = build_epsilon_poly(prog, f.vars, signs.v_nonneg, opts.epsilon_min, "eps1")
    P = dict(V.terms)
    for a, i in e1.items():
        P[a] = P[a] - AffineForm.var(i)
    hP = add_membership_constraints(prog, kind, P, signs.v_nonneg, signs.v_free | signs.v_nonpos, "P")

    Pp = dict(nd.terms)
    e2 = {}
    if opts.mode is Mode.ASYMPTOTIC:
        if not signs.d_nonneg:
            return None
        e2 = build_epsilon_poly(prog, f.vars, signs.d_nonneg, opts.epsilon_min, "eps2")
        for a, i in e2.items():
            Pp[a] = Pp[a] - AffineForm.var(i)
    hPp = add_membership_constraints(prog, kind, Pp, signs.d_nonneg, signs.d_free | signs.d_nonpos, "Q")
    if opts.dump is not None:
        opts.dump.append(prog.dump())

    res = solve(prog)
    if res.status is Status.INFEASIBLE:
        return None
    if res.status is not Status.FEASIBLE:
        raise SolverUnknown(f"solver status {res.solver_status}")
    k = len(Vt.dvars)
    x = _project_equalities(res.x, signs.equalities, k)
    Vnum = Vt.substitute({i: float(x[i]) for i in range(k)})
    ndnum = -lie_derivative(Vnum, f)
    result = _assemble(x, Vnum, ndnum, e1, e2, hP, hPp, opts.mode, kind, opts.tol)
    result.solver_status = res.solver_status
    return result


def search_sonc(f: DynSystem, A, options: Optional[SearchOptions] = None, **kw) -> Optional[LyapunovResult]:
    return search(f, A, "SONC", options, **kw)


def search_dsonc(f: DynSystem, A, options: Optional[SearchOptions] = None, **kw) -> Optional[LyapunovResult]:
    return search(f, A, "DSONC", options, **kw)


# ----------------------------------------------------------------- simulation


class SimulationError(RuntimeError):
    def __init__(self, t: float):
        super().__init__(f"state became non-finite at t = {t:g}")
        self.t = t


def simulate(f: DynSystem, x0, t_end: float, dt: float, V: Optional[SparsePoly] = None):
    """Fixed-step RK4.  Returns ``(t, X, v)`` with ``v`` the values of ``V`` or ``None``."""
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    x = np.asarray(x0, dtype=float)
    if x.shape != (f.n,):
        raise ValueError(f"x0 must have length {f.n}")
    rhs = f.evaluator()
    steps = int(math.ceil(t_end / dt - 1e-9))
    T = np.empty(steps + 1)
    X = np.empty((steps + 1, f.n))
    T[0], X[0] = 0.0, x
    for k in range(steps):
        h = min(dt, t_end - k * dt)
        with np.errstate(over="ignore", invalid="ignore"):  # blow-up is reported below
            k1 = rhs(x)
            k2 = rhs(x + 0.5 * h * k1)
            k3 = rhs(x + 0.5 * h * k2)
            k4 = rhs(x + h * k3)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        T[k + 1] = k * dt + h
        if not np.all(np.isfinite(x)):
            raise SimulationError(T[k + 1])
        X[k + 1] = x
    vals = None
    if V is not None:
        vals = evaluate_many(V, X)
    return T, X, vals
