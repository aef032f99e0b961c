"""Sparse multivariate polynomials with real or affine-form coefficients.

Exponents are plain tuples of nonnegative ints.  Every polynomial carries its
ordered variable names; binary operations require identical name tuples.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Sequence, Tuple

import numpy as np

Exponent = Tuple[int, ...]

ZERO_TOL = 1e-12


def is_even(alpha: Sequence[int]) -> bool:
    return all(a % 2 == 0 for a in alpha)


def _check_exponent(alpha, n):
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n:
        raise ValueError(f"exponent {alpha} has length {len(alpha)}, expected {n}")
    if any(a < 0 for a in alpha):
        raise ValueError(f"exponent {alpha} has a negative entry")
    return alpha


def monomial_order(alpha):
    """Graded order with earlier variables first: x1^2 < x2^2 < x1^4 < x1^2*x2^2."""
    return (sum(alpha), tuple(-e for e in alpha))


def _add_exp(a: Exponent, b: Exponent) -> Exponent:
    return tuple(x + y for x, y in zip(a, b))


class SparsePoly:
    """A polynomial ``sum(c_a * x**a)`` stored as a map exponent -> coefficient.

    Coefficients with magnitude below ``ZERO_TOL`` are dropped on construction,
    so ``support`` is always the set of stored exponents.
    """

    __slots__ = ("vars", "_terms")

    def __init__(self, vars: Sequence[str], terms: Mapping[Exponent, float] | None = None):
        self.vars = tuple(vars)
        n = len(self.vars)
        merged: Dict[Exponent, float] = {}
        for alpha, c in (terms or {}).items():
            alpha = _check_exponent(alpha, n)
            merged[alpha] = merged.get(alpha, 0.0) + float(c)
        self._terms = {a: c for a, c in merged.items() if abs(c) >= ZERO_TOL}

    # construction helpers

    @classmethod
    def zero(cls, vars):
        return cls(vars)

    @classmethod
    def constant(cls, vars, c):
        return cls(vars, {(0,) * len(vars): c})

    @classmethod
    def monomial(cls, vars, alpha, c=1.0):
        return cls(vars, {tuple(alpha): c})

    @classmethod
    def variable(cls, vars, name):
        vars = tuple(vars)
        alpha = [0] * len(vars)
        alpha[vars.index(name)] = 1
        return cls(vars, {tuple(alpha): 1.0})

    # basic accessors

    @property
    def n(self) -> int:
        return len(self.vars)

    @property
    def terms(self) -> Dict[Exponent, float]:
        return dict(self._terms)

    @property
    def support(self) -> frozenset:
        return frozenset(self._terms)

    def coeff(self, alpha) -> float:
        return self._terms.get(tuple(alpha), 0.0)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((sum(a) for a in self._terms), default=0)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, SparsePoly):
            return NotImplemented
        return self.vars == other.vars and self._terms == other._terms

    def __hash__(self):
        return hash((self.vars, frozenset(self._terms.items())))

    def allclose(self, other: "SparsePoly", atol=1e-12) -> bool:
        self._same_vars(other)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.coeff(k) - other.coeff(k)) <= atol for k in keys)

    # evaluation

    def __call__(self, x):
        return evaluate(self, x)

    def exponent_matrix(self):
        """Return ``(E, c)`` with exponents as rows of ``E``; handy for vectorized evaluation."""
        if not self._terms:
            return np.zeros((0, self.n), dtype=int), np.zeros(0)
        keys = sorted(self._terms)
        return np.array(keys, dtype=int), np.array([self._terms[k] for k in keys])

    # arithmetic

    def _same_vars(self, other):
        if self.vars != other.vars:
            raise ValueError(f"variable mismatch: {self.vars} vs {other.vars}")

    def _coerce(self, other):
        if isinstance(other, SparsePoly):
            self._same_vars(other)
            return other
        if isinstance(other, (int, float, np.floating, np.integer, Fraction)):
            return SparsePoly.constant(self.vars, float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for a, c in other._terms.items():
            out[a] = out.get(a, 0.0) + c
        return SparsePoly(self.vars, out)

    __radd__ = __add__

    def __neg__(self):
        return SparsePoly(self.vars, {a: -c for a, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer, Fraction)):
            return self.scale(float(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: Dict[Exponent, float] = {}
        for a, ca in self._terms.items():
            for b, cb in other._terms.items():
                k = _add_exp(a, b)
                out[k] = out.get(k, 0.0) + ca * cb
        return SparsePoly(self.vars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        out = SparsePoly.constant(self.vars, 1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scale(self, s: float) -> "SparsePoly":
        return SparsePoly(self.vars, {a: s * c for a, c in self._terms.items()})

    def diff(self, i: int) -> "SparsePoly":
        out = {}
        for a, c in self._terms.items():
            if a[i] > 0:
                b = list(a)
                b[i] -= 1
                out[tuple(b)] = c * a[i]
        return SparsePoly(self.vars, out)

    def __repr__(self):
        return f"SparsePoly({format_poly(self)!r}, vars={self.vars})"


def evaluate(p: SparsePoly, x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != p.n:
        raise ValueError(f"point has dimension {x.shape[0]}, polynomial has {p.n} variables")
    return float(sum(c * np.prod(x ** np.array(a)) for a, c in p.items()))


def evaluate_many(p: SparsePoly, X) -> np.ndarray:
    """Evaluate at each row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != p.n:
        raise ValueError("dimension mismatch")
    E, c = p.exponent_matrix()
    if len(c) == 0:
        return np.zeros(X.shape[0])
    mons = np.prod(X[:, None, :] ** E[None, :, :], axis=2)
    return mons @ c


def arith(op: str, *operands):
    """Functional entry point: ``arith('add', p, q)``, ``arith('scale', 0.5, p)``."""
    if op == "add":
        p, q = operands
        return p + q
    if op == "sub":
        p, q = operands
        return p - q
    if op == "mul":
        p, q = operands
        return p * q
    if op == "scale":
        s, p = operands
        return p.scale(float(s))
    raise ValueError(f"unknown operation {op!r}")


def format_poly(p: SparsePoly, digits: int = 12) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for a in sorted(p.support, key=lambda a: (-sum(a), tuple(-x for x in a))):
        c = p.coeff(a)
        mono = "*".join(
            (v if e == 1 else f"{v}^{e}") for v, e in zip(p.vars, a) if e > 0
        )
        cs = f"{abs(c):.{digits}g}"
        if mono:
            body = mono if cs == "1" else f"{cs}*{mono}"
        else:
            body = cs
        parts.append(("- " if c < 0 else "+ ") + body)
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else "-" + s[2:]


# --------------------------------------------------------------------------
# affine forms and variable-coefficient polynomials


class AffineForm:
    """``const + sum(coef_i * var_i)`` over integer-indexed decision variables."""

    __slots__ = ("const", "coefs")

    def __init__(self, const: float = 0.0, coefs: Mapping[int, float] | None = None):
        self.const = float(const)
        self.coefs = {int(i): float(v) for i, v in (coefs or {}).items() if v != 0.0}

    @classmethod
    def var(cls, i: int, coef: float = 1.0):
        return cls(0.0, {i: coef})

    def is_constant(self) -> bool:
        return not self.coefs

    def is_zero(self, tol: float = ZERO_TOL) -> bool:
        return abs(self.const) < tol and all(abs(v) < tol for v in self.coefs.values())

    def __add__(self, other):
        if isinstance(other, (int, float)):
            return AffineForm(self.const + other, self.coefs)
        out = dict(self.coefs)
        for i, v in other.coefs.items():
            out[i] = out.get(i, 0.0) + v
        return AffineForm(self.const + other.const, out)

    __radd__ = __add__

    def __neg__(self):
        return AffineForm(-self.const, {i: -v for i, v in self.coefs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, s):
        s = float(s)
        return AffineForm(self.const * s, {i: v * s for i, v in self.coefs.items()})

    __rmul__ = __mul__

    def value(self, x) -> float:
        return self.const + sum(v * float(x[i]) for i, v in self.coefs.items())

    def substitute(self, values: Mapping[int, float]) -> "AffineForm":
        """Fix some variables to numbers."""
        const = self.const
        rest = {}
        for i, v in self.coefs.items():
            if i in values:
                const += v * values[i]
            else:
                rest[i] = v
        return AffineForm(const, rest)

    def shift(self, offset: int) -> "AffineForm":
        return AffineForm(self.const, {i + offset: v for i, v in self.coefs.items()})

    def cleaned(self, tol: float = ZERO_TOL) -> "AffineForm":
        return AffineForm(
            0.0 if abs(self.const) < tol else self.const,
            {i: v for i, v in self.coefs.items() if abs(v) >= tol},
        )

    def max_index(self) -> int:
        return max(self.coefs, default=-1)

    def __eq__(self, other):
        if not isinstance(other, AffineForm):
            return NotImplemented
        return self.const == other.const and self.coefs == other.coefs

    def __repr__(self):
        parts = [f"{self.const:g}"] if self.const or not self.coefs else []
        parts += [f"{v:+g}*v{i}" for i, v in sorted(self.coefs.items())]
        return "AffineForm(" + " ".join(parts) + ")"


class LinearFormPoly:
    """Polynomial whose coefficients are affine forms in named decision variables.

    Decision variable ``k`` of every form refers to ``dvars[k]``.
    """

    def __init__(self, vars: Sequence[str], dvars: Sequence[str], terms: Mapping[Exponent, AffineForm]):
        self.vars = tuple(vars)
        self.dvars = tuple(dvars)
        n = len(self.vars)
        out: Dict[Exponent, AffineForm] = {}
        for alpha, form in terms.items():
            alpha = _check_exponent(alpha, n)
            if not isinstance(form, AffineForm):
                form = AffineForm(float(form))
            out[alpha] = out[alpha] + form if alpha in out else form
        self.terms = {}
        for a, f in out.items():
            f = f.cleaned()
            if not f.is_zero():
                if f.max_index() >= len(self.dvars):
                    raise ValueError("affine form references an unknown decision variable")
                self.terms[a] = f

    @classmethod
    def from_support(cls, vars, support: Iterable[Exponent], prefix: str = "c"):
        """``sum(c_k * x**alpha_k)`` with one fresh decision variable per exponent."""
        support = sorted(set(tuple(a) for a in support), key=monomial_order)
        dvars = [f"{prefix}{k + 1}" for k in range(len(support))]
        return cls(vars, dvars, {a: AffineForm.var(k) for k, a in enumerate(support)})

    @property
    def n(self):
        return len(self.vars)

    @property
    def support(self):
        return frozenset(self.terms)

    def coeff(self, alpha) -> AffineForm:
        return self.terms.get(tuple(alpha), AffineForm())

    def substitute(self, values) -> SparsePoly:
        """Numeric polynomial for a full assignment (sequence or index->value map)."""
        if not isinstance(values, Mapping):
            values = {i: float(v) for i, v in enumerate(values)}
        out = {}
        for a, f in self.terms.items():
            g = f.substitute(values)
            if not g.is_constant():
                raise ValueError("assignment does not fix every decision variable")
            out[a] = g.const
        return SparsePoly(self.vars, out)

    def partial_substitute(self, values: Mapping[int, float]) -> "LinearFormPoly":
        return LinearFormPoly(self.vars, self.dvars, {a: f.substitute(values) for a, f in self.terms.items()})

    def __neg__(self):
        return LinearFormPoly(self.vars, self.dvars, {a: -f for a, f in self.terms.items()})

    def __add__(self, other):
        if isinstance(other, SparsePoly):
            other = LinearFormPoly(other.vars, self.dvars, {a: AffineForm(c) for a, c in other.items()})
        if self.vars != other.vars or self.dvars != other.dvars:
            raise ValueError("variable mismatch")
        out = dict(self.terms)
        for a, f in other.terms.items():
            out[a] = out[a] + f if a in out else f
        return LinearFormPoly(self.vars, self.dvars, out)

    def __sub__(self, other):
        return self + (-other)

    def __repr__(self):
        return f"LinearFormPoly({len(self.terms)} terms, vars={self.vars}, dvars={self.dvars})"


# --------------------------------------------------------------------------
# dynamical systems and Lie derivatives


class DynSystem:
    """Right-hand side of ``x' = f(x)``, one polynomial per state variable."""

    def __init__(self, rhs: Sequence[SparsePoly]):
        rhs = list(rhs)
        if not rhs:
            raise ValueError("empty system")
        vars = rhs[0].vars
        if len(rhs) != len(vars):
            raise ValueError(f"{len(rhs)} equations for {len(vars)} variables")
        for f in rhs:
            if f.vars != vars:
                raise ValueError("all right-hand sides must share the variable list")
        self.vars = vars
        self.rhs = tuple(rhs)

    @classmethod
    def parse(cls, exprs: Sequence[str], vars: Sequence[str]):
        return cls([parse_poly(e, vars) for e in exprs])

    @property
    def n(self):
        return len(self.vars)

    def has_origin_equilibrium(self) -> bool:
        zero = (0,) * self.n
        return all(f.coeff(zero) == 0.0 for f in self.rhs)

    def nonzero_constant_terms(self):
        zero = (0,) * self.n
        return [(i, f.coeff(zero)) for i, f in enumerate(self.rhs) if f.coeff(zero) != 0.0]

    def evaluator(self):
        """Vectorized ``f`` suitable for numerical integration."""
        mats = [f.exponent_matrix() for f in self.rhs]

        def f(x):
            x = np.asarray(x, dtype=float)
            out = np.empty(self.n)
            for i, (E, c) in enumerate(mats):
                out[i] = np.prod(x[None, :] ** E, axis=1) @ c if len(c) else 0.0
            return out

        return f


def lie_derivative(V: SparsePoly, f: DynSystem) -> SparsePoly:
    """``sum_i dV/dx_i * f_i`` (the time derivative of V along trajectories)."""
    if V.vars != f.vars:
        raise ValueError(f"variable mismatch: {V.vars} vs {f.vars}")
    out = SparsePoly.zero(V.vars)
    for i, fi in enumerate(f.rhs):
        out = out + V.diff(i) * fi
    return out


def lie_derivative_symbolic(V: LinearFormPoly, f: DynSystem) -> LinearFormPoly:
    if V.vars != f.vars:
        raise ValueError(f"variable mismatch: {V.vars} vs {f.vars}")
    acc: Dict[Exponent, AffineForm] = {}
    for alpha, form in V.terms.items():
        for i, fi in enumerate(f.rhs):
            if alpha[i] == 0:
                continue
            da = list(alpha)
            da[i] -= 1
            da = tuple(da)
            for gamma, c in fi.items():
                k = _add_exp(da, gamma)
                term = form * (alpha[i] * c)
                acc[k] = acc[k] + term if k in acc else term
    return LinearFormPoly(V.vars, V.dvars, acc)


# --------------------------------------------------------------------------
# sign structure


class SupportSplit:
    """``a_plus``: even exponents with positive coefficient; ``a_minus``: the rest."""

    __slots__ = ("a_plus", "a_minus")

    def __init__(self, a_plus, a_minus):
        self.a_plus = frozenset(a_plus)
        self.a_minus = frozenset(a_minus)

    def __repr__(self):
        return f"SupportSplit(a_plus={sorted(self.a_plus)}, a_minus={sorted(self.a_minus)})"


def support_split(p: SparsePoly) -> SupportSplit:
    plus = {a for a, c in p.items() if c > 0 and is_even(a)}
    return SupportSplit(plus, p.support - plus)


# --------------------------------------------------------------------------
# parsing


class ParseError(ValueError):
    """Syntax or semantic error in a polynomial expression; ``pos`` is a 0-based offset."""

    def __init__(self, message: str, pos: int, text: str = ""):
        super().__init__(f"{message} at position {pos}")
        self.message = message
        self.pos = pos
        self.text = text


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*^/()]))"
)


def _tokenize(text):
    pos = 0
    toks = []
    text_len = len(text)
    while pos < text_len:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[start]!r}", start, text)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), start))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    # expr   := term (('+'|'-') term)*
    # term   := unary ('*' unary)*
    # unary  := '-' unary | '+' unary | power
    # power  := atom ('^' INT)?
    # atom   := NUM ('/' NUM)? | NAME | '(' expr ')'

    def __init__(self, text, vars):
        self.text = text
        self.vars = tuple(vars)
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, tok[2], self.text)

    def parse(self):
        if self.peek()[0] == "end":
            self.error("empty expression")
        p = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return p

    def expr(self):
        p = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.unary()
        while self.peek()[1] == "*" and self.peek()[0] == "op":
            self.take()
            p = p * self.unary()
        return p

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("-", "+"):
            self.take()
            p = self.unary()
            return -p if tok[1] == "-" else p
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            tok = self.peek()
            if tok[0] == "op" and tok[1] == "-":
                self.error("negative exponent")
            if tok[0] != "num":
                self.error("exponent must be a nonnegative integer literal")
            self.take()
            if not re.fullmatch(r"\d+", tok[1]):
                self.error("fractional exponent", tok)
            if self.peek()[1] == "/" and self.peek()[0] == "op":
                self.error("fractional exponent")
            return base ** int(tok[1])
        return base

    def atom(self):
        tok = self.take()
        kind, val, pos = tok
        if kind == "num":
            value = Fraction(val)
            if self.peek()[1] == "/" and self.peek()[0] == "op":
                self.take()
                den = self.take()
                if den[0] != "num":
                    self.error("expected a number after '/'", den)
                d = Fraction(den[1])
                if d == 0:
                    self.error("division by zero", den)
                value = value / d
            return SparsePoly.constant(self.vars, float(value))
        if kind == "name":
            if val not in self.vars:
                raise ParseError(f"unknown variable {val!r}", pos, self.text)
            return SparsePoly.variable(self.vars, val)
        if kind == "op" and val == "(":
            p = self.expr()
            close = self.take()
            if close[1] != ")":
                self.error("expected ')'", close)
            return p
        if kind == "end":
            raise ParseError("unexpected end of expression", pos, self.text)
        if val == "/":
            raise ParseError("'/' is only allowed between numeric literals", pos, self.text)
        raise ParseError(f"unexpected token {val!r}", pos, self.text)


def parse_poly(text: str, vars: Sequence[str]) -> SparsePoly:
    """Parse an expression such as ``"-x1 - 3/2*x1*x2^3"`` over the given variables."""
    return _Parser(text, vars).parse()
