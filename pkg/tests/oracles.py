"""Solver-free checks shared by the test modules."""
import numpy as np

from sonclyap.poly import evaluate_many, lie_derivative


def sample_points(n, count=10_000, seed=0, radius=2.0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-radius, radius, (count, n))
    # include points near the origin and on the axes, where margins are thinnest
    X[: count // 10] *= 1e-2
    for j in range(n):
        X[count // 10 + j, :] = 0.0
        X[count // 10 + j, j] = 0.7
    return X[np.linalg.norm(X, axis=1) > 1e-9]


def nonneg_on_samples(p, count=10_000, seed=0):
    """True if ``p`` is nonnegative (up to rounding) on random samples."""
    X = sample_points(p.n, count, seed)
    vals = evaluate_many(p, X)
    return bool(np.all(vals >= -1e-9 * max(1.0, p.max_abs_coeff()) * (1 + np.abs(X).max(axis=1) ** max(p.degree(), 1))))


def lyapunov_on_samples(V, f, strict=True, count=10_000, seed=0):
    """V > 0 and Vdot < 0 (or <= 0) at sampled points off the origin."""
    X = sample_points(V.n, count, seed)
    v = evaluate_many(V, X)
    vd = evaluate_many(lie_derivative(V, f), X)
    ok_v = np.all(v > 0)
    ok_d = np.all(vd < 0) if strict else np.all(vd <= 1e-12)
    return bool(ok_v and ok_d)


def brute_force_vertices(points):
    """Hull vertices by enumeration, without any LP.

    Caratheodory: p is a non-vertex iff it is a convex combination of some
    affinely independent subset of the other points with at most d + 1
    members.  For such a subset the weights are unique, so a stacked
    pseudo-inverse decides every subset of one size at once.
    """
    import itertools

    pts = sorted(set(tuple(int(v) for v in p) for p in points))
    d = len(pts[0])
    verts = set()
    for p in pts:
        others = np.array([q for q in pts if q != p], dtype=float)
        rhs = np.append(np.array(p, dtype=float), 1.0)
        inside = False
        for k in range(1, min(d + 1, len(others)) + 1):
            subs = np.array(list(itertools.combinations(range(len(others)), k)))
            M = np.concatenate([others[subs].transpose(0, 2, 1), np.ones((len(subs), 1, k))], axis=1)
            full_rank = np.linalg.matrix_rank(M) == k
            lam = np.linalg.pinv(M) @ rhs
            fit = np.abs(np.einsum("cij,cj->ci", M, lam) - rhs).max(axis=1) < 1e-9
            if np.any(full_rank & fit & np.all(lam >= -1e-12, axis=1)):
                inside = True
                break
        if not inside:
            verts.add(p)
    return verts
