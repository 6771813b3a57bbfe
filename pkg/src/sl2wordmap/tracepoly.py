"""Trace calculus for words in SL(2): tr(x^a y^b) = u*f_{a,b}(s,t) + h_{a,b}(s,t).

Everything is computed over the integers once and reduced mod p at
evaluation time, so one polynomial serves every q.  Variables are the
three trace coordinates s = tr(x), u = tr(xy), t = tr(y).

The f/h pair comes from the two-term recursions

    f_{a,b} = s f_{a-1,b} - f_{a-2,b}      (and symmetrically in b),

anchored at tr(xy) = u, tr(y^b) and tr(x^a).  Numeric evaluation runs the
same recursions through 2x2 companion-matrix powering, so astronomically
large exponents cost O(log a + log b) field operations.

General positive words are handled by Cayley-Hamilton reduction in the
basis (1, x, y, xy) of the generic trace algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .field import FieldElem, ZeroElement
from .sl2 import Mat2

SYMBOLIC_LIMIT = 64


class SymbolicSizeExceeded(ValueError):
    """Raised when a symbolic polynomial build would be too large; use fh_eval."""


class NonPositiveWord(ValueError):
    """Raised for word specs with negative exponents."""


Term = tuple[int, int, int]  # exponents (i on s, k on u, j on t)


class TracePoly:
    """Sparse integer polynomial in (s, u, t); no zero coefficients stored."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[Term, int] | None = None):
        self.terms = terms or {}

    @classmethod
    def const(cls, c: int) -> "TracePoly":
        return cls({(0, 0, 0): c} if c else {})

    @classmethod
    def monomial(cls, i: int, k: int, j: int, c: int = 1) -> "TracePoly":
        return cls({(i, k, j): c} if c else {})

    @classmethod
    def var_s(cls) -> "TracePoly":
        return cls.monomial(1, 0, 0)

    @classmethod
    def var_u(cls) -> "TracePoly":
        return cls.monomial(0, 1, 0)

    @classmethod
    def var_t(cls) -> "TracePoly":
        return cls.monomial(0, 0, 1)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other):
        if isinstance(other, int):
            other = TracePoly.const(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            nv = out.get(k, 0) + v
            if nv:
                out[k] = nv
            else:
                out.pop(k, None)
        return TracePoly(out)

    __radd__ = __add__

    def __neg__(self):
        return TracePoly({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, int):
            other = TracePoly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            if other == 0:
                return TracePoly()
            return TracePoly({k: v * other for k, v in self.terms.items()})
        out: dict[Term, int] = {}
        for (i1, k1, j1), c1 in self.terms.items():
            for (i2, k2, j2), c2 in other.terms.items():
                key = (i1 + i2, k1 + k2, j1 + j2)
                nv = out.get(key, 0) + c1 * c2
                if nv:
                    out[key] = nv
                else:
                    out.pop(key, None)
        return TracePoly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, TracePoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def deg_s(self) -> int:
        return max((i for (i, _, _) in self.terms), default=-1)

    def deg_u(self) -> int:
        return max((k for (_, k, _) in self.terms), default=-1)

    def deg_t(self) -> int:
        return max((j for (_, _, j) in self.terms), default=-1)

    def total_degree(self) -> int:
        return max((i + k + j for (i, k, j) in self.terms), default=-1)

    def coeff_of_u(self, r: int) -> "TracePoly":
        """The (s,t)-polynomial multiplying u^r."""
        return TracePoly({(i, 0, j): c for (i, k, j), c in self.terms.items() if k == r})

    def evaluate(self, s: FieldElem, u: FieldElem, t: FieldElem) -> FieldElem:
        ctx = s.ctx
        acc = ctx.zero
        spow = _power_cache(s, self.deg_s())
        upow = _power_cache(u, self.deg_u())
        tpow = _power_cache(t, self.deg_t())
        for (i, k, j), c in self.terms.items():
            acc = acc + ctx.scalar(c) * spow[i] * upow[k] * tpow[j]
        return acc

    def eval_batch(self, tables, s_idx, u_idx, t_idx) -> np.ndarray:
        """Vectorised evaluation on encoding arrays, via dense field tables."""
        spow = _power_cache_idx(tables, s_idx, self.deg_s())
        upow = _power_cache_idx(tables, u_idx, self.deg_u())
        tpow = _power_cache_idx(tables, t_idx, self.deg_t())
        ctx = tables.ctx
        acc = np.zeros_like(np.asarray(s_idx))
        for (i, k, j), c in self.terms.items():
            term = tables.mul[spow[i], upow[k]]
            term = tables.mul[term, tpow[j]]
            cidx = ctx.scalar(c).index
            term = tables.mul[np.full_like(term, cidx), term]
            acc = tables.add[acc, term]
        return acc

    def format(self) -> str:
        """Canonical text: descending total degree, then s-degree, then u-degree."""
        if not self.terms:
            return "0"
        keys = sorted(self.terms, key=lambda ikj: (sum(ikj), ikj[0], ikj[1]), reverse=True)
        pieces = []
        for n, key in enumerate(keys):
            c = self.terms[key]
            body = _monomial_str(key)
            mag = abs(c)
            if body:
                coef = "" if mag == 1 else f"{mag}*"
                text = coef + body
            else:
                text = str(mag)
            if n == 0:
                pieces.append(("-" if c < 0 else "") + text)
            else:
                pieces.append(("- " if c < 0 else "+ ") + text)
        return " ".join(pieces)

    def __str__(self):
        return self.format()

    def __repr__(self):
        return f"TracePoly({self.format()})"


def _monomial_str(key: Term) -> str:
    i, k, j = key
    parts = []
    for name, exp in (("s", i), ("t", j), ("u", k)):
        if exp == 1:
            parts.append(name)
        elif exp > 1:
            parts.append(f"{name}^{exp}")
    return "*".join(parts)


def _power_cache(x: FieldElem, maxdeg: int) -> list[FieldElem]:
    ctx = x.ctx
    out = [ctx.one]
    for _ in range(max(maxdeg, 0)):
        out.append(out[-1] * x)
    return out


def _power_cache_idx(tables, idx, maxdeg: int) -> list[np.ndarray]:
    idx = np.asarray(idx)
    out = [np.full_like(idx, tables.one)]
    for _ in range(max(maxdeg, 0)):
        out.append(tables.mul[out[-1], idx])
    return out


# -- tr(x^n) and the f/h pair ---------------------------------------------------


@lru_cache(maxsize=None)
def power_trace_poly(n: int) -> TracePoly:
    """tr(x^n) as a polynomial in s = tr(x): T_{n+1} = s T_n - T_{n-1}."""
    assert n >= 0
    if n == 0:
        return TracePoly.const(2)
    if n == 1:
        return TracePoly.var_s()
    return TracePoly.var_s() * power_trace_poly(n - 1) - power_trace_poly(n - 2)


@dataclass(frozen=True)
class FHPair:
    """tr(x^a y^b) = u*f + h with f, h in (s, t) only."""

    f: TracePoly
    h: TracePoly
    a: int
    b: int

    @property
    def poly(self) -> TracePoly:
        return TracePoly.var_u() * self.f + self.h

    def evaluate(self, s: FieldElem, t: FieldElem) -> tuple[FieldElem, FieldElem]:
        u = s.ctx.zero  # dummy; f, h do not involve u
        return self.f.evaluate(s, u, t), self.h.evaluate(s, u, t)


def _subst_t(poly_in_s: TracePoly) -> TracePoly:
    """Rename the s variable to t in a univariate polynomial."""
    return TracePoly({(0, 0, i): c for (i, k, j), c in poly_in_s.terms.items()})


@lru_cache(maxsize=None)
def _fh(a: int, b: int) -> tuple[TracePoly, TracePoly]:
    if a == 0:
        return TracePoly(), _subst_t(power_trace_poly(b))
    if b == 0:
        return TracePoly(), power_trace_poly(a)
    if a == 1 and b == 1:
        return TracePoly.const(1), TracePoly()
    if a >= 2:
        f1, h1 = _fh(a - 1, b)
        f2, h2 = _fh(a - 2, b)
        s = TracePoly.var_s()
        return s * f1 - f2, s * h1 - h2
    f1, h1 = _fh(a, b - 1)
    f2, h2 = _fh(a, b - 2)
    t = TracePoly.var_t()
    return t * f1 - f2, t * h1 - h2


def fh_pair(a: int, b: int, limit: int = SYMBOLIC_LIMIT) -> FHPair:
    """Symbolic f_{a,b}, h_{a,b} for a, b >= 1 with a + b <= limit."""
    assert a >= 1 and b >= 1
    if a + b > limit:
        raise SymbolicSizeExceeded(
            f"a+b = {a + b} exceeds the symbolic limit {limit}; use fh_eval"
        )
    f, h = _fh(a, b)
    return FHPair(f, h, a, b)


def _linrec2(coef: FieldElem, x0: FieldElem, x1: FieldElem, n: int) -> FieldElem:
    """X_n of the recursion X_k = coef*X_{k-1} - X_{k-2}, by companion powering."""
    if n == 0:
        return x0
    ctx = coef.ctx
    m = Mat2(coef, -ctx.one, ctx.one, ctx.zero) ** (n - 1)
    return m.a * x1 + m.b * x0


def fh_eval(a: int, b: int, s: FieldElem, t: FieldElem) -> tuple[FieldElem, FieldElem]:
    """(f_{a,b}(s,t), h_{a,b}(s,t)) in O(log a + log b) field operations."""
    assert a >= 1 and b >= 1
    ctx = s.ctx
    # stage 1 along a at b = 1: f_{0,1} = 0, f_{1,1} = 1; h_{0,1} = t, h_{1,1} = 0
    fa1 = _linrec2(s, ctx.zero, ctx.one, a)
    ha1 = _linrec2(s, t, ctx.zero, a)
    # stage 2 along b: f_{a,0} = 0; h_{a,0} = tr(x^a) = T_a(s)
    ta = _linrec2(s, ctx.scalar(2), s, a)
    f = _linrec2(t, ctx.zero, fa1, b)
    h = _linrec2(t, ta, ha1, b)
    return f, h


def fh_eval_iter(a: int, b: int, s: FieldElem, t: FieldElem) -> tuple[FieldElem, FieldElem]:
    """O(a+b) reference path for fh_eval."""
    assert a >= 1 and b >= 1
    ctx = s.ctx

    def run(coef, x0, x1, n):
        prev, cur = x0, x1
        for _ in range(n):
            prev, cur = cur, coef * cur - prev
        return prev

    fa1 = run(s, ctx.zero, ctx.one, a)
    ha1 = run(s, t, ctx.zero, a)
    ta = run(s, ctx.scalar(2), s, a)
    f = run(t, ctx.zero, fa1, b)
    h = run(t, ta, ha1, b)
    return f, h


# -- general positive words ------------------------------------------------------


class WordSpec:
    """A positive word x^{a1} y^{b1} ... x^{ak} y^{bk}, all exponents >= 1.

    Leading a_1 = 0 and trailing b_k = 0 are merged away (cyclic shift /
    block merge keep the trace); any other zero or negative exponent is
    rejected.
    """

    def __init__(self, pairs):
        pairs = [(int(a), int(b)) for a, b in pairs]
        if not pairs:
            raise NonPositiveWord("empty word")
        if any(a < 0 or b < 0 for a, b in pairs):
            raise NonPositiveWord(f"negative exponents in {pairs}")
        if pairs[0][0] == 0 and len(pairs) > 1:
            # tr is invariant under cyclic shifts: fold y^{b} to the tail
            a1, b1 = pairs[0]
            ak, bk = pairs[-1]
            pairs = pairs[1:-1] + [(ak, bk + b1)]
        if pairs[-1][1] == 0 and len(pairs) > 1:
            ak, _ = pairs[-1]
            a1, b1 = pairs[0]
            pairs = [(a1 + ak, b1)] + pairs[1:-1]
        if any(a == 0 or b == 0 for a, b in pairs) and len(pairs) > 1:
            raise NonPositiveWord(f"interior zero exponents in {pairs}")
        self.pairs = tuple(pairs)
        self.k = len(self.pairs)
        self.A = sum(a for a, _ in self.pairs)
        self.B = sum(b for _, b in self.pairs)

    def __repr__(self):
        return "WordSpec(" + " ".join(f"x^{a}y^{b}" for a, b in self.pairs) + ")"


@lru_cache(maxsize=None)
def _cheb(n: int, var: str) -> TracePoly:
    """P_n with P_0 = 0, P_1 = 1, P_{n+1} = v P_n - P_{n-1}; x^n = P_n x - P_{n-1}."""
    v = TracePoly.var_s() if var == "s" else TracePoly.var_t()
    if n == 0:
        return TracePoly()
    if n == 1:
        return TracePoly.const(1)
    return v * _cheb(n - 1, var) - _cheb(n - 2, var)


# products of the basis (1, x, y, xy) of the generic trace algebra; entry
# [left][right] lists (basis index, coefficient poly factory) pairs
def _basis_products():
    S, U, T = TracePoly.var_s, TracePoly.var_u, TracePoly.var_t
    one = TracePoly.const(1)
    return {
        ("x", "x"): [(0, lambda: TracePoly.const(-1)), (1, S)],
        ("x", "y"): [(3, lambda: one)],
        ("x", "xy"): [(2, lambda: TracePoly.const(-1)), (3, S)],
        ("y", "x"): [
            (0, lambda: U() - S() * T()),
            (1, T),
            (2, S),
            (3, lambda: TracePoly.const(-1)),
        ],
        ("y", "y"): [(0, lambda: TracePoly.const(-1)), (2, T)],
        ("y", "xy"): [(0, lambda: -S()), (1, lambda: one), (2, U)],
        ("xy", "x"): [(0, lambda: -T()), (1, U), (2, lambda: one)],
        ("xy", "y"): [(1, lambda: TracePoly.const(-1)), (3, T)],
        ("xy", "xy"): [(0, lambda: TracePoly.const(-1)), (3, U)],
    }


_BASIS_NAMES = ("1", "x", "y", "xy")
_PRODUCTS = None


def _gen_mul(left: tuple, right: tuple) -> tuple:
    """Multiply two elements written in the basis (1, x, y, xy)."""
    global _PRODUCTS
    if _PRODUCTS is None:
        _PRODUCTS = {
            key: [(ix, fac()) for ix, fac in rules] for key, rules in _basis_products().items()
        }
    out = [TracePoly(), TracePoly(), TracePoly(), TracePoly()]
    for i, ci in enumerate(left):
        if ci.is_zero():
            continue
        for j, cj in enumerate(right):
            if cj.is_zero():
                continue
            c = ci * cj
            if i == 0:
                out[j] = out[j] + c
            elif j == 0:
                out[i] = out[i] + c
            else:
                for ix, coeff in _PRODUCTS[(_BASIS_NAMES[i], _BASIS_NAMES[j])]:
                    out[ix] = out[ix] + coeff * c
    return tuple(out)


def _gen_xpow(n: int) -> tuple:
    return (-_cheb(n - 1, "s"), _cheb(n, "s"), TracePoly(), TracePoly())


def _gen_ypow(n: int) -> tuple:
    return (-_cheb(n - 1, "t"), TracePoly(), _cheb(n, "t"), TracePoly())


def _gen_trace(m: tuple) -> TracePoly:
    c0, cx, cy, cxy = m
    return (
        2 * c0
        + TracePoly.var_s() * cx
        + TracePoly.var_t() * cy
        + TracePoly.var_u() * cxy
    )


def word_trace_poly(word: WordSpec | list | tuple, limit: int = SYMBOLIC_LIMIT) -> TracePoly:
    """P(s,u,t) with tr(w(x,y)) = P(tr x, tr xy, tr y) for a positive word w.

    Computed by Cayley-Hamilton reduction (x^2 -> s x - 1 and the product
    rules of the generic trace algebra).
    """
    if not isinstance(word, WordSpec):
        word = WordSpec(word)
    if word.A + word.B > limit:
        raise SymbolicSizeExceeded(
            f"A+B = {word.A + word.B} exceeds the symbolic limit {limit}"
        )
    if word.k == 1:
        a, b = word.pairs[0]
        if b == 0:
            return power_trace_poly(a)
        if a == 0:
            return _subst_t(power_trace_poly(b))
    acc = (TracePoly.const(1), TracePoly(), TracePoly(), TracePoly())
    for a, b in word.pairs:
        if a:
            acc = _gen_mul(acc, _gen_xpow(a))
        if b:
            acc = _gen_mul(acc, _gen_ypow(b))
    return _gen_trace(acc)


def word_eval_mat(word: WordSpec, x: Mat2, y: Mat2) -> Mat2:
    """Direct matrix evaluation of a positive word; the test oracle."""
    acc = Mat2.identity(x.ctx)
    for a, b in word.pairs:
        acc = acc * (x**a) * (y**b)
    return acc


# -- the h_n closed form ---------------------------------------------------------


def hn_value(zeta, n: int):
    """h_n(zeta) = (zeta^{2n} - 1) / (zeta^{n-1} (zeta^2 - 1)); h_n(+-1) = +-n.

    The off-diagonal growth factor of triangular matrices: [[z, c], [0, 1/z]]^n
    has upper-right entry c * h_n(z).  Works in the base field or the
    quadratic extension.
    """
    assert n >= 1
    if zeta.is_zero():
        raise ZeroElement("h_n at zero")
    ctx = zeta.ctx
    zsq = zeta * zeta
    if zsq == ctx.one:
        # zeta = +-1: recursion value h_n(1) = n, h_n(-1) = (-1)^{n+1} n
        return ctx.scalar(n) * zeta ** (n + 1)
    zn = zeta**n
    return (zn * zn - 1) / ((zeta ** (n - 1)) * (zsq - 1))
