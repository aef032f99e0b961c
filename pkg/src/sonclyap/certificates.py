"""Nonnegativity certificates: circuit numbers, SONC and DSONC membership.

SONC membership is decided through the relative-entropy (SAGE) formulation:
for every negative term ``beta`` we look for nonnegative vectors ``c_beta``
and ``v_beta`` over the positive support with

    sum_beta c_beta[a] <= c[a]
    D(v_beta, e * c_beta) <= -|c[beta]|
    sum_a v_beta[a] * (a - beta) = 0

DSONC membership uses the dual-circuit condition
``log(|c[beta]| / c_beta[a]) <= (a - beta) . tau_beta``.

Witnesses are plain data and are re-checked here without any solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .conic import ConicProgram, SolveResult, SolverUnknown, Status, solve, solve_lp
from .geometry import detect_circuit, in_convex_hull, polytope_vertices
from .poly import AffineForm, Exponent, SparsePoly, evaluate, is_even, support_split

WITNESS_TOL = 1e-8
CIRCUIT_TOL = 1e-9
VANISH_TOL = 1e-12


# --------------------------------------------------------------- circuits


def circuit_number(p: SparsePoly) -> float:
    """``prod((c_a / lam_a) ** lam_a)`` over the outer terms, computed in log space."""
    circ = detect_circuit(p.support)
    if circ is None or circ.inner is None:
        raise ValueError("polynomial is not supported on a circuit with an inner term")
    log_theta = 0.0
    for a in circ.outer:
        c, lam = p.coeff(a), circ.lam[a]
        if c <= 0:
            raise ValueError(f"outer coefficient at {a} is not positive")
        log_theta += lam * (math.log(c) - math.log(lam))
    return math.exp(log_theta)


def is_nonneg_circuit(p: SparsePoly) -> bool:
    """Decide nonnegativity of a circuit polynomial by its circuit number."""
    if p.is_zero():
        return True
    circ = detect_circuit(p.support)
    if circ is None:
        raise ValueError("polynomial is not supported on a circuit")
    if any(p.coeff(a) <= 0 for a in circ.outer):
        return False
    if circ.inner is None:
        return True
    cb = p.coeff(circ.inner)
    if is_even(circ.inner) and cb > 0:
        return True
    theta = circuit_number(p)
    return abs(cb) <= theta * (1.0 + CIRCUIT_TOL)


# --------------------------------------------------------------- witnesses


def _exp_key(a):
    return list(a)


@dataclass
class SoncBlock:
    beta: Exponent
    coeff: float
    c: Dict[Exponent, float]
    v: Dict[Exponent, float]

    def to_json(self):
        return {
            "beta": list(self.beta),
            "coeff": self.coeff,
            "terms": [[list(a), self.c.get(a, 0.0), self.v.get(a, 0.0)] for a in sorted(set(self.c) | set(self.v))],
        }

    @classmethod
    def from_json(cls, d):
        terms = d["terms"]
        return cls(tuple(d["beta"]), float(d["coeff"]),
                   {tuple(a): float(c) for a, c, _ in terms}, {tuple(a): float(v) for a, _, v in terms})


@dataclass
class SoncWitness:
    a_plus: Tuple[Exponent, ...]
    blocks: List[SoncBlock] = field(default_factory=list)
    kind = "SONC"

    def to_json(self):
        return {"kind": "SONC", "a_plus": [list(a) for a in self.a_plus],
                "blocks": [b.to_json() for b in self.blocks]}

    @classmethod
    def from_json(cls, d):
        return cls(tuple(tuple(a) for a in d["a_plus"]), [SoncBlock.from_json(b) for b in d["blocks"]])


@dataclass
class DsoncBlock:
    beta: Exponent
    coeff: float
    tau: Tuple[float, ...]
    c: Dict[Exponent, float]

    def to_json(self):
        return {"beta": list(self.beta), "coeff": self.coeff, "tau": list(self.tau),
                "terms": [[list(a), c] for a, c in sorted(self.c.items())]}

    @classmethod
    def from_json(cls, d):
        return cls(tuple(d["beta"]), float(d["coeff"]), tuple(float(t) for t in d["tau"]),
                   {tuple(a): float(c) for a, c in d["terms"]})


@dataclass
class DsoncWitness:
    a_plus: Tuple[Exponent, ...]
    blocks: List[DsoncBlock] = field(default_factory=list)
    kind = "DSONC"

    def to_json(self):
        return {"kind": "DSONC", "a_plus": [list(a) for a in self.a_plus],
                "blocks": [b.to_json() for b in self.blocks]}

    @classmethod
    def from_json(cls, d):
        return cls(tuple(tuple(a) for a in d["a_plus"]), [DsoncBlock.from_json(b) for b in d["blocks"]])


def witness_from_json(d):
    if d is None:
        return None
    return {"SONC": SoncWitness, "DSONC": DsoncWitness}[d["kind"]].from_json(d)


# Verification is scale-aware so that a solver's absolute error cannot pose as
# certificate mass on terms that are tiny or absent:
#   coverage/sign:  uncovered or negative "positive" terms, relative to max(1, |p|_inf)
#   split:          overuse of c[a], relative to c[a] itself
#   entropy:        D(v, e*c_beta) + |c[beta]|, relative to |c[beta]|
#   balance:        |sum v_a (a - beta)|_inf, relative to sum v_a |a - beta|_inf
#   dual (DSONC):   log-space violation, already scale free
STRUCT_TOL = 1e-12


def _struct_scale(p: SparsePoly) -> float:
    return max(1.0, p.max_abs_coeff())


def _common_residuals(p: SparsePoly, a_plus, blocks):
    res = {"coverage": 0.0, "sign": 0.0, "coeff_match": 0.0, "split": 0.0}
    scale = _struct_scale(p)
    a_plus = set(a_plus)
    betas = {b.beta for b in blocks}
    if len(betas) != len(blocks) or betas & a_plus or any(not is_even(a) for a in a_plus):
        res["coverage"] = math.inf
    for a, c in p.items():
        if a not in a_plus and a not in betas:
            res["coverage"] = max(res["coverage"], abs(c) / scale)
    for a in a_plus:
        res["sign"] = max(res["sign"], -p.coeff(a) / scale)
    for b in blocks:
        res["coeff_match"] = max(res["coeff_match"], abs(b.coeff - p.coeff(b.beta)) / scale)
        for a, c in b.c.items():
            if a not in a_plus or c < 0:
                res["coverage"] = math.inf
    for a in a_plus:
        used = sum(b.c.get(a, 0.0) for b in blocks)
        avail = p.coeff(a)
        if used > avail:
            res["split"] = max(res["split"], math.inf if avail <= 0 else (used - avail) / avail)
    return res


def _thresholds(tol):
    return {"coverage": STRUCT_TOL, "sign": STRUCT_TOL, "coeff_match": STRUCT_TOL,
            "split": tol, "entropy": tol, "balance": tol, "dual": tol, "hull": 0.0}


def _entropy(v: Mapping, c: Mapping) -> float:
    D = 0.0
    for a, va in v.items():
        if va > 0:
            ca = c.get(a, 0.0)
            if ca <= 0:
                return math.inf
            D += va * math.log(va / (math.e * ca))
    return D


def _balance(v: Mapping, beta) -> Tuple[float, float]:
    """Absolute imbalance and the natural scale it is measured against."""
    beta = np.array(beta, dtype=float)
    bal = np.zeros(len(beta))
    mass = 0.0
    for a, va in v.items():
        if va > 0:
            d = np.array(a, dtype=float) - beta
            bal += va * d
            mass += va * float(np.max(np.abs(d), initial=0.0))
    return float(np.max(np.abs(bal), initial=0.0)), mass


def sonc_residuals(p: SparsePoly, w: SoncWitness) -> Dict[str, float]:
    """Normalized violation of each witness condition (0 means exactly satisfied)."""
    res = _common_residuals(p, w.a_plus, w.blocks)
    res["entropy"] = 0.0
    res["balance"] = 0.0
    a_plus = set(w.a_plus)
    for b in w.blocks:
        if any(a not in a_plus or v < 0 for a, v in b.v.items()):
            res["coverage"] = math.inf
        mag = abs(b.coeff)
        excess = _entropy(b.v, b.c) + mag
        if excess > 0:
            res["entropy"] = max(res["entropy"], math.inf if mag == 0 else excess / mag)
        bal, mass = _balance(b.v, b.beta)
        if bal > 0:
            res["balance"] = max(res["balance"], bal / mass)
    return res


def dsonc_residuals(p: SparsePoly, w: DsoncWitness) -> Dict[str, float]:
    res = _common_residuals(p, w.a_plus, w.blocks)
    res["dual"] = 0.0
    res["hull"] = 0.0
    for b in w.blocks:
        mag = abs(b.coeff)
        if mag == 0.0:
            continue
        pos = [a for a, c in b.c.items() if c > 0]
        if not pos or not in_convex_hull(b.beta, pos):
            res["hull"] = math.inf
            continue
        res["dual"] = max(res["dual"], _dual_violation(b.beta, mag, b.c, b.tau))
    return res


def _dual_violation(beta, mag, c, tau) -> float:
    beta = np.array(beta, dtype=float)
    tau = np.array(tau, dtype=float)
    worst = 0.0
    for a, ca in c.items():
        if ca > 0:
            lhs = math.log(mag / ca)
            worst = max(worst, lhs - float((np.array(a, dtype=float) - beta) @ tau))
    return worst


def witness_residuals(p: SparsePoly, w) -> Dict[str, float]:
    if isinstance(w, SoncWitness):
        return sonc_residuals(p, w)
    return dsonc_residuals(p, w)


def _passes(res: Dict[str, float], tol: float) -> bool:
    th = _thresholds(tol)
    return all(v <= th[k] for k, v in res.items())


def verify_sonc_witness(p: SparsePoly, w: SoncWitness, tol: float = WITNESS_TOL) -> bool:
    """Re-check a SONC witness without a solver (see the tolerance notes above)."""
    return isinstance(w, SoncWitness) and _passes(sonc_residuals(p, w), tol)


def verify_dsonc_witness(p: SparsePoly, w: DsoncWitness, tol: float = WITNESS_TOL) -> bool:
    return isinstance(w, DsoncWitness) and _passes(dsonc_residuals(p, w), tol)


def verify_witness(p: SparsePoly, w, tol: float = WITNESS_TOL) -> bool:
    if isinstance(w, SoncWitness):
        return verify_sonc_witness(p, w, tol)
    if isinstance(w, DsoncWitness):
        return verify_dsonc_witness(p, w, tol)
    return False


# --------------------------------------------------------------- program builders


@dataclass
class _Block:
    beta: Exponent
    c_idx: Dict[Exponent, int]
    v_idx: Dict[Exponent, int] = field(default_factory=dict)
    tau_idx: List[int] = field(default_factory=list)
    mag: Optional[AffineForm] = None


@dataclass
class CertificateHandle:
    """Variable bookkeeping for one membership constraint inside a larger program."""

    kind: str
    a_plus: Tuple[Exponent, ...]
    a_minus: Tuple[Exponent, ...]
    coeffs: Dict[Exponent, AffineForm]
    blocks: List[_Block]


def _abs_form(prog: ConicProgram, form: AffineForm, name: str) -> AffineForm:
    """An affine expression that upper-bounds ``|form|`` (exact for constants)."""
    if form.is_constant():
        return AffineForm(abs(form.const))
    s = prog.new_var(name)
    sv = AffineForm.var(s)
    prog.add_ineq(sv - form)
    prog.add_ineq(sv + form)
    return sv


def add_sonc_constraints(prog: ConicProgram, coeffs: Mapping[Exponent, AffineForm],
                         a_plus: Sequence[Exponent], a_minus: Sequence[Exponent],
                         label: str = "P") -> CertificateHandle:
    """Constrain the polynomial with (possibly variable) ``coeffs`` to the SONC cone.

    ``a_plus`` terms must be even and receive the nonnegative mass; every
    ``a_minus`` term gets its own AGE block.  Coefficients missing from
    ``coeffs`` are zero.
    """
    a_plus = tuple(sorted(a_plus))
    a_minus = tuple(sorted(a_minus))
    coeffs = {a: coeffs.get(a, AffineForm()) for a in a_plus + a_minus}
    blocks = []
    for j, beta in enumerate(a_minus):
        mag = _abs_form(prog, coeffs[beta], f"{label}.abs{list(beta)}")
        blk = _Block(beta, {}, {}, mag=mag)
        tsum = AffineForm()
        balance = [AffineForm() for _ in beta]
        for a in a_plus:
            ci = prog.new_var(f"{label}.c{list(beta)}{list(a)}")
            vi = prog.new_var(f"{label}.v{list(beta)}{list(a)}")
            ti = prog.new_var(f"{label}.t{list(beta)}{list(a)}")
            blk.c_idx[a], blk.v_idx[a] = ci, vi
            prog.add_ineq(AffineForm.var(ci))
            prog.add_ineq(AffineForm.var(vi))
            prog.add_relative_entropy(AffineForm.var(vi), AffineForm.var(ci, math.e), AffineForm.var(ti))
            tsum = tsum + AffineForm.var(ti)
            for k in range(len(beta)):
                if a[k] != beta[k]:
                    balance[k] = balance[k] + AffineForm.var(vi, a[k] - beta[k])
        prog.add_ineq(-(tsum + mag))
        for form in balance:
            if form.coefs:
                prog.add_eq(form)
        blocks.append(blk)
    _add_split(prog, coeffs, a_plus, blocks)
    return CertificateHandle("SONC", a_plus, a_minus, coeffs, blocks)


def _add_split(prog, coeffs, a_plus, blocks):
    for a in a_plus:
        used = AffineForm()
        for blk in blocks:
            used = used + AffineForm.var(blk.c_idx[a])
        prog.add_ineq(coeffs[a] - used)


def add_dsonc_constraints(prog: ConicProgram, coeffs: Mapping[Exponent, AffineForm],
                          a_plus: Sequence[Exponent], a_minus: Sequence[Exponent],
                          label: str = "P") -> CertificateHandle:
    """Constrain to the DSONC cone via ``m * log(m / c_beta[a]) <= (a - beta) . tau_scaled``.

    ``m`` upper-bounds ``|c[beta]|``.  Terms outside ``conv(a_plus)`` cannot be
    dominated by a dual-circuit block, so their coefficient is pinned to zero.
    """
    a_plus = tuple(sorted(a_plus))
    a_minus = tuple(sorted(a_minus))
    coeffs = {a: coeffs.get(a, AffineForm()) for a in a_plus + a_minus}
    blocks = []
    for beta in a_minus:
        if not a_plus or not in_convex_hull(beta, a_plus):
            prog.add_eq(coeffs[beta])
            continue
        mag = _abs_form(prog, coeffs[beta], f"{label}.abs{list(beta)}")
        tau = prog.new_vars(len(beta), f"{label}.tau{list(beta)}")
        blk = _Block(beta, {}, tau_idx=tau, mag=mag)
        for a in a_plus:
            ci = prog.new_var(f"{label}.c{list(beta)}{list(a)}")
            blk.c_idx[a] = ci
            prog.add_ineq(AffineForm.var(ci))
            rhs = AffineForm(0.0, {tau[k]: a[k] - beta[k] for k in range(len(beta)) if a[k] != beta[k]})
            prog.add_relative_entropy(mag, AffineForm.var(ci), rhs)
        blocks.append(blk)
    _add_split(prog, coeffs, a_plus, blocks)
    return CertificateHandle("DSONC", a_plus, a_minus, coeffs, blocks)


def add_membership_constraints(prog, kind, coeffs, a_plus, a_minus, label="P"):
    if kind == "SONC":
        return add_sonc_constraints(prog, coeffs, a_plus, a_minus, label)
    if kind == "DSONC":
        return add_dsonc_constraints(prog, coeffs, a_plus, a_minus, label)
    raise ValueError(f"unsupported certificate kind {kind!r}")


def _fit_split(p: SparsePoly, blocks, a_plus):
    """Shrink block masses so that no term is used beyond its coefficient.

    Solver noise can overdraw a term slightly; scaling the draws back is
    exact and the entropy/dual conditions absorb the small loss.
    """
    for a in a_plus:
        used = sum(b.c.get(a, 0.0) for b in blocks)
        avail = max(p.coeff(a), 0.0)
        if used > avail:
            r = avail / used
            for b in blocks:
                if a in b.c:
                    b.c[a] *= r


def _polish_split(p: SparsePoly, blocks, a_plus):
    """Hand unused positive mass to a block that already uses that term.

    Raising ``c_beta[a]`` never hurts either certificate, and afterwards the
    split sums to ``c[a]`` exactly whenever some block touches ``a``.
    """
    for a in a_plus:
        left = p.coeff(a) - sum(b.c.get(a, 0.0) for b in blocks)
        if left <= 0:
            continue
        owners = [b for b in blocks if b.c.get(a, 0.0) > 0]
        if owners:
            owners[0].c[a] += left


def _rescale_v(b: SoncBlock):
    """Replace ``v`` by its best positive multiple; the balance equation is unaffected.

    For ``s * v`` the entropy is ``s * D + s * log(s) * sum(v)``, minimized at
    ``s = exp(-D / sum(v) - 1)``.
    """
    mass = sum(b.v.values())
    if mass <= 0:
        return
    D = _entropy(b.v, b.c)
    if not math.isfinite(D):
        return
    s = math.exp(min(-D / mass - 1.0, 700.0))
    b.v = {a: v * s for a, v in b.v.items()}


def _refit_tau(b: DsoncBlock):
    """Re-solve the small LP for ``tau`` given the block's coefficients."""
    pos = [a for a, c in b.c.items() if c > 0]
    mag = abs(b.coeff)
    if mag == 0.0 or not pos:
        return
    n = len(b.beta)
    prog = ConicProgram()
    tau = prog.new_vars(n, "tau")
    slack = prog.new_var("slack")
    for a in pos:
        coefs = {tau[k]: a[k] - b.beta[k] for k in range(n) if a[k] != b.beta[k]}
        coefs[slack] = 1.0
        prog.add_ineq(AffineForm(-math.log(mag / b.c[a]), coefs))
    prog.add_ineq(AffineForm(1.0, {slack: 1.0}))
    prog.minimize(AffineForm.var(slack))
    res = solve_lp(prog)
    if res.status is Status.FEASIBLE:
        t = tuple(float(res.x[i]) for i in tau)
        if _dual_violation(b.beta, mag, b.c, t) < _dual_violation(b.beta, mag, b.c, b.tau):
            b.tau = t


def repair_witness(p: SparsePoly, w):
    """Make the split exact, then tighten v (SONC) or tau (DSONC) for the final coefficients."""
    _fit_split(p, w.blocks, w.a_plus)
    _polish_split(p, w.blocks, w.a_plus)
    for b in w.blocks:
        if isinstance(b, SoncBlock):
            b.v = {a: (v if b.c.get(a, 0.0) > 0 else 0.0) for a, v in b.v.items()}
            _rescale_v(b)
        elif _dual_violation(b.beta, abs(b.coeff), b.c, b.tau) > 0:
            _refit_tau(b)
    return w


def extract_witness(handle: CertificateHandle, x: np.ndarray, p: SparsePoly):
    """Read a witness for the numeric polynomial ``p`` out of a solved program."""
    blocks = []
    for blk in handle.blocks:
        coeff = p.coeff(blk.beta)
        c = {a: max(0.0, float(x[i])) for a, i in blk.c_idx.items()}
        if handle.kind == "SONC":
            v = {a: max(0.0, float(x[i])) for a, i in blk.v_idx.items()}
            if coeff == 0.0 and not any(v.values()):
                continue
            blocks.append(SoncBlock(blk.beta, coeff, c, v))
        else:
            if coeff == 0.0:
                continue
            mag = blk.mag.value(x)
            tau = tuple(float(x[i]) / mag for i in blk.tau_idx) if mag > VANISH_TOL else (0.0,) * len(blk.beta)
            blocks.append(DsoncBlock(blk.beta, coeff, tau, c))
    cls = SoncWitness if handle.kind == "SONC" else DsoncWitness
    return repair_witness(p, cls(handle.a_plus, blocks))


# --------------------------------------------------------------- fixed-coefficient membership


def _quick_reject(p: SparsePoly, split) -> bool:
    """A Newton polytope vertex that is odd or has a negative coefficient rules out nonnegativity."""
    return not polytope_vertices(p.support) <= split.a_plus


def sonc_membership(p: SparsePoly, tol: float = WITNESS_TOL) -> Optional[SoncWitness]:
    """SONC witness for ``p``, or ``None`` if the cone program is infeasible.

    Raises :class:`SolverUnknown` when the solver cannot decide.
    """
    if p.is_zero():
        return SoncWitness(())
    split = support_split(p)
    if _quick_reject(p, split):
        return None
    a_plus = tuple(sorted(split.a_plus))
    if not split.a_minus:
        return SoncWitness(a_plus)
    scale = p.max_abs_coeff()
    q = p.scale(1.0 / scale)
    prog = ConicProgram()
    handle = add_sonc_constraints(prog, {a: AffineForm(c) for a, c in q.items()}, a_plus, split.a_minus)
    res = solve(prog)
    return _finish(res, handle, q, scale, p, tol, verify_sonc_witness)


def _finish(res: SolveResult, handle, q, scale, p, tol, verifier):
    if res.status is Status.INFEASIBLE:
        return None
    if res.status is not Status.FEASIBLE:
        raise SolverUnknown(f"solver status {res.solver_status}")
    w = extract_witness(handle, res.x, q)
    w = repair_witness(p, rescale_witness(w, scale))
    if not verifier(p, w, tol):
        raise SolverUnknown("solver point failed independent witness verification")
    return w


def rescale_witness(w, s: float):
    """Witness for ``s * p`` from a witness for ``p`` (both witness types are homogeneous)."""
    if isinstance(w, SoncWitness):
        return SoncWitness(w.a_plus, [
            SoncBlock(b.beta, b.coeff * s, {a: c * s for a, c in b.c.items()}, {a: v * s for a, v in b.v.items()})
            for b in w.blocks])
    return DsoncWitness(w.a_plus, [
        DsoncBlock(b.beta, b.coeff * s, b.tau, {a: c * s for a, c in b.c.items()}) for b in w.blocks])


def dsonc_membership(p: SparsePoly, tol: float = WITNESS_TOL) -> Optional[DsoncWitness]:
    """DSONC witness for ``p``, or ``None``.

    One negative term is a pure LP in ``tau`` (smallest l1 norm is returned);
    several negative terms need the coefficient split and go through the
    relative-entropy form.
    """
    if p.is_zero():
        return DsoncWitness(())
    split = support_split(p)
    if _quick_reject(p, split):
        return None
    a_plus = tuple(sorted(split.a_plus))
    if not split.a_minus:
        return DsoncWitness(a_plus)
    scale = p.max_abs_coeff()
    q = p.scale(1.0 / scale)
    if len(split.a_minus) == 1:
        (beta,) = split.a_minus
        return _dsonc_single(p, q, scale, a_plus, beta, tol)
    prog = ConicProgram()
    handle = add_dsonc_constraints(prog, {a: AffineForm(c) for a, c in q.items()}, a_plus, split.a_minus)
    res = solve(prog)
    return _finish(res, handle, q, scale, p, tol, verify_dsonc_witness)


def _dsonc_single(p, q, scale, a_plus, beta, tol):
    n = len(beta)
    prog = ConicProgram()
    tau = prog.new_vars(n, "tau")
    aux = prog.new_vars(n, "abs_tau")
    mag = abs(q.coeff(beta))
    for a in a_plus:
        form = AffineForm(-math.log(mag / q.coeff(a)),
                          {tau[k]: a[k] - beta[k] for k in range(n) if a[k] != beta[k]})
        prog.add_ineq(form)
    for k in range(n):
        prog.add_ineq(AffineForm(0.0, {aux[k]: 1.0, tau[k]: -1.0}))
        prog.add_ineq(AffineForm(0.0, {aux[k]: 1.0, tau[k]: 1.0}))
    prog.minimize(AffineForm(0.0, {i: 1.0 for i in aux}))
    res = solve_lp(prog)
    if res.status is Status.INFEASIBLE:
        return None
    if res.status is not Status.FEASIBLE:
        raise SolverUnknown(f"LP status {res.solver_status}")
    t = tuple(0.0 if abs(res.x[i]) < 1e-13 else float(res.x[i]) for i in tau)
    w = DsoncWitness(a_plus, [DsoncBlock(beta, p.coeff(beta), t, {a: p.coeff(a) for a in a_plus})])
    if not verify_dsonc_witness(p, w, tol):
        raise SolverUnknown("LP point failed independent witness verification")
    return w


def membership(p: SparsePoly, kind: str, tol: float = WITNESS_TOL):
    kind = kind.upper()
    if kind == "SONC":
        return sonc_membership(p, tol)
    if kind == "DSONC":
        return dsonc_membership(p, tol)
    raise ValueError(f"unsupported certificate kind {kind!r}")


def dsonc_membership_variable(p, nonneg: Sequence[Exponent] = (), nonpos: Sequence[Exponent] = (),
                              bound: float = 50.0) -> Optional[Dict[int, float]]:
    """DSONC membership of a template whose coefficients are constants or single free variables.

    With ``rho[a] = log c[a]`` and ``sigma[b] = -log|c[b]|`` every dual-circuit
    inequality is linear: ``0 <= (a - b) . tau_b + sigma[b] + rho[a] - log m``
    where ``m`` is the number of negative terms (each block receives the
    share ``c[a] / m``).  Terms in ``nonneg`` must be even; the others are the
    negative terms, signed by ``nonpos`` (default negative).  Returns an
    assignment ``{decision variable index: value}`` or ``None``.
    """
    nonneg = {tuple(a) for a in nonneg}
    nonpos = {tuple(a) for a in nonpos}
    support = set(p.support)
    plus = sorted(a for a in support if a in nonneg)
    minus = sorted(a for a in support if a not in nonneg)
    for a in plus:
        if not is_even(a):
            raise ValueError(f"nonnegative term {a} is not even")
    for a, f in p.terms.items():
        if not (f.is_constant() or (f.const == 0.0 and len(f.coefs) == 1 and list(f.coefs.values())[0] == 1.0)):
            raise ValueError("every coefficient must be a constant or a single free decision variable")
        if f.is_constant() and a in nonneg and f.const <= 0:
            return None
    if not polytope_vertices(support) <= set(plus):
        return None
    if not minus:
        return {i: 1.0 for f in p.terms.values() for i in f.coefs}
    m = len(minus)
    n = p.n
    prog = ConicProgram()
    rho = {a: prog.new_var(f"rho{list(a)}") for a in plus}
    sigma = {b: prog.new_var(f"sigma{list(b)}") for b in minus}
    for var in list(rho.values()) + list(sigma.values()):
        prog.add_ineq(AffineForm(bound, {var: -1.0}))
        prog.add_ineq(AffineForm(bound, {var: 1.0}))
    for a in plus:
        f = p.coeff(a)
        if f.is_constant():
            prog.add_eq(AffineForm(-math.log(f.const), {rho[a]: 1.0}))
    for b in minus:
        f = p.coeff(b)
        if f.is_constant():
            prog.add_eq(AffineForm(math.log(abs(f.const)), {sigma[b]: 1.0}))
        if not in_convex_hull(b, plus):
            return None
        tau = prog.new_vars(n, f"tau{list(b)}")
        for a in plus:
            coefs = {tau[k]: a[k] - b[k] for k in range(n) if a[k] != b[k]}
            coefs[sigma[b]] = 1.0
            coefs[rho[a]] = coefs.get(rho[a], 0.0) + 1.0
            prog.add_ineq(AffineForm(-math.log(m), coefs))
    # stay near unit coefficients rather than drifting to the box corners
    dev = prog.new_vars(len(rho) + len(sigma), "dev")
    for d, var in zip(dev, list(rho.values()) + list(sigma.values())):
        prog.add_ineq(AffineForm(0.0, {d: 1.0, var: -1.0}))
        prog.add_ineq(AffineForm(0.0, {d: 1.0, var: 1.0}))
    prog.minimize(AffineForm(0.0, {d: 1.0 for d in dev}))
    res = solve_lp(prog)
    if res.status is Status.INFEASIBLE:
        return None
    if res.status is not Status.FEASIBLE:
        raise SolverUnknown(f"LP status {res.solver_status}")
    out = {}
    for a in plus:
        f = p.coeff(a)
        if not f.is_constant():
            out[next(iter(f.coefs))] = math.exp(res.x[rho[a]])
    for b in minus:
        f = p.coeff(b)
        if not f.is_constant():
            out[next(iter(f.coefs))] = -math.exp(-res.x[sigma[b]])
    return out


# --------------------------------------------------------------- counterexamples


def find_negative_point(p: SparsePoly, box: float = 2.0, starts: int = 40, seed: int = 0):
    """Search for ``x`` with ``p(x) < 0``; returns the best point found or ``None``.

    Local minimization from a deterministic set of starts, so a miss proves nothing.
    """
    if p.is_zero():
        return None
    rng = np.random.default_rng(seed)
    thresh = -1e-9 * max(1.0, p.max_abs_coeff())
    best, best_val = None, thresh
    fun = lambda x: evaluate(p, x)
    candidates = [np.zeros(p.n)] + [rng.uniform(-box, box, p.n) for _ in range(starts)]
    for x0 in candidates:
        r = minimize(fun, x0, method="L-BFGS-B", bounds=[(-box, box)] * p.n)
        if r.fun < best_val:
            best, best_val = np.asarray(r.x), float(r.fun)
    if best is None:
        return None
    rounded = np.round(best, 6)
    if evaluate(p, rounded) < thresh:
        best = rounded
    return best
