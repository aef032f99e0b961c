"""Newton polytope queries over small lattice point sets.

Everything is decided by tiny LPs (HiGHS through scipy) rather than facet
enumeration, so any dimension works.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
from scipy.optimize import linprog

from .poly import Exponent, is_even

INTERIOR_TOL = 1e-9
BARY_TOL = 1e-9


@dataclass(frozen=True)
class CircuitStructure:
    outer: Tuple[Exponent, ...]
    inner: Optional[Exponent]
    lam: Dict[Exponent, float]

    def weights(self):
        return np.array([self.lam[a] for a in self.outer])


def _dedupe(points: Iterable) -> list:
    return sorted(set(tuple(int(v) for v in p) for p in points))


def _convex_weights(target, pts: np.ndarray):
    """Convex weights of ``pts`` rows reproducing ``target``, or None."""
    k = pts.shape[0]
    if k == 0:
        return None
    A_eq = np.vstack([pts.T, np.ones((1, k))])
    b_eq = np.append(np.asarray(target, dtype=float), 1.0)
    res = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * k, method="highs")
    return res.x if res.status == 0 else None


def in_convex_hull(beta, points) -> bool:
    pts = np.array(_dedupe(points), dtype=float)
    if len(pts) == 0:
        return False
    return _convex_weights(beta, pts) is not None


def polytope_vertices(A: Iterable[Exponent]) -> frozenset:
    """Vertices of ``conv(A)``: points not expressible as convex combinations of the others."""
    pts = _dedupe(A)
    if not pts:
        raise ValueError("empty point set")
    arr = np.array(pts, dtype=float)
    verts = []
    for i, p in enumerate(pts):
        others = np.delete(arr, i, axis=0)
        if _convex_weights(p, others) is None:
            verts.append(p)
    return frozenset(verts)


def is_strict_interior(beta: Exponent, A: Iterable[Exponent]) -> bool:
    """True iff ``beta`` lies in the relative interior of ``conv(A)`` and is not a vertex.

    Uses the fact that relint(conv V) is exactly the set of convex combinations
    with all weights positive: maximize the smallest weight over the vertices.
    """
    beta = tuple(int(b) for b in beta)
    verts = polytope_vertices(list(A) + [beta])
    if beta in verts:
        return False
    V = np.array(sorted(verts), dtype=float)
    k = V.shape[0]
    # variables: w_1..w_k, s ; maximize s
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-np.eye(k), np.ones((k, 1))])  # s - w_i <= 0
    b_ub = np.zeros(k)
    A_eq = np.hstack([np.vstack([V.T, np.ones((1, k))]), np.zeros((V.shape[1] + 1, 1))])
    b_eq = np.append(np.asarray(beta, dtype=float), 1.0)
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * k + [(None, 1.0)], method="highs")
    return res.status == 0 and -res.fun > INTERIOR_TOL


def affinely_independent(points) -> bool:
    pts = np.array(_dedupe(points), dtype=float)
    if len(pts) <= 1:
        return True
    D = pts[1:] - pts[0]
    return np.linalg.matrix_rank(D) == len(pts) - 1


def barycentric(beta, outer) -> np.ndarray:
    """Affine coordinates of ``beta`` w.r.t. affinely independent ``outer`` (in the given order)."""
    outer = [tuple(a) for a in outer]
    if len(set(outer)) != len(outer) or not affinely_independent(outer):
        raise ValueError("outer points are not affinely independent")
    O = np.array(outer, dtype=float)
    M = np.vstack([O.T, np.ones((1, len(outer)))])
    rhs = np.append(np.asarray(beta, dtype=float), 1.0)
    lam, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.max(np.abs(M @ lam - rhs)) > BARY_TOL:
        raise ValueError(f"{tuple(beta)} is not in the affine hull of {outer}")
    return lam


def detect_circuit(A: Iterable[Exponent]) -> Optional[CircuitStructure]:
    """Recognize a simplicial circuit with even vertices (plus at most one inner point).

    Returns ``None`` when ``A`` does not have that shape.  A set of even,
    affinely independent points comes back with ``inner=None``.
    """
    pts = _dedupe(A)
    if not pts:
        return None
    verts = polytope_vertices(pts)
    inner = [p for p in pts if p not in verts]
    outer = tuple(sorted(verts))
    if len(inner) > 1 or not all(is_even(a) for a in outer) or not affinely_independent(outer):
        return None
    if not inner:
        return CircuitStructure(outer, None, {})
    beta = inner[0]
    if not is_strict_interior(beta, outer):
        return None
    lam = barycentric(beta, outer)
    return CircuitStructure(outer, beta, {a: float(l) for a, l in zip(outer, lam)})
