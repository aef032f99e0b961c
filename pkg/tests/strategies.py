"""Shared hypothesis strategies."""
from hypothesis import strategies as st

from sonclyap.poly import SparsePoly

VARS2 = ("x1", "x2")


def exponents(n, max_deg=4):
    return st.tuples(*[st.integers(0, max_deg)] * n)


def coeffs():
    return st.integers(-6, 6).filter(lambda c: c != 0).map(float)


def polys(vars=VARS2, max_terms=5, max_deg=4):
    n = len(vars)
    return st.dictionaries(exponents(n, max_deg), coeffs(), max_size=max_terms).map(lambda d: SparsePoly(vars, d))
