"""Exact arithmetic in F_q = F_{p^e} and its quadratic extension F_{q^2}.

Elements are coefficient vectors in the power basis of a deterministically
chosen modulus, so two runs (or two machines) always build bit-identical
fields.  The modulus is the first monic irreducible polynomial of degree e
when candidates are ordered by the integer encoding sum(c_i * p^i) of their
non-leading coefficients.

The quadratic extension F_{q^2} is built as a degree-2 extension of F_q
(elements are pairs of base-field elements), which makes the Frobenius
x -> x^q and the relative trace one-step operations.

Scalar arithmetic is table-free and works up to the configured size limit;
dense numpy lookup tables for vectorised work are available through
``Fq.tables()`` for small q.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

DEFAULT_MAX_Q = 1 << 16
TABLE_MAX_Q = 4096
_EXT_SCAN_MAX = 1 << 16  # largest extension (q^2) we solve quadratics in by table


class NotPrime(ValueError):
    """Raised when a field characteristic is not prime."""


class SizeLimitExceeded(ValueError):
    """Raised when a requested field or enumeration exceeds the size limit."""


class ZeroElement(ZeroDivisionError):
    """Raised when an operation requires a nonzero element."""


def env_max_q() -> int:
    """Size limit, overridable through the WORDMAP_MAX_Q environment variable."""
    raw = os.environ.get("WORDMAP_MAX_Q")
    if raw is None:
        return DEFAULT_MAX_Q
    return int(raw)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    i = 3
    while i * i <= n:
        if n % i == 0:
            return False
        i += 2
    return True


def factorize(n: int) -> dict[int, int]:
    """Prime factorization by trial division (desk scale)."""
    factors: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            factors[d] = factors.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        factors[n] = factors.get(n, 0) + 1
    return factors


def split_prime_power(q: int) -> tuple[int, int]:
    """Return (p, e) with q = p^e, or raise NotPrime."""
    if q < 2:
        raise NotPrime(q)
    factors = factorize(q)
    if len(factors) != 1:
        raise NotPrime(q)
    [(p, e)] = factors.items()
    return p, e


class FieldElem:
    """An element of F_{p^e}, stored as a tuple of e residues mod p."""

    __slots__ = ("ctx", "coeffs", "_index")

    def __init__(self, ctx: "Fq", coeffs: tuple[int, ...]):
        self.ctx = ctx
        self.coeffs = coeffs
        self._index = -1

    @property
    def index(self) -> int:
        """Canonical integer encoding sum(c_i * p^i); doubles as sort key."""
        if self._index < 0:
            p = self.ctx.p
            ix = 0
            for c in reversed(self.coeffs):
                ix = ix * p + c
            self._index = ix
        return self._index

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def _coerce(self, other):
        if isinstance(other, FieldElem):
            assert other.ctx is self.ctx, "mixing field contexts"
            return other
        if isinstance(other, int):
            return self.ctx.scalar(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        p = self.ctx.p
        return FieldElem(self.ctx, tuple((a + b) % p for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        p = self.ctx.p
        return FieldElem(self.ctx, tuple((a - b) % p for a, b in zip(self.coeffs, o.coeffs)))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        p = self.ctx.p
        return FieldElem(self.ctx, tuple((-a) % p for a in self.coeffs))

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        ctx = self.ctx
        if ctx.e == 1:
            return FieldElem(ctx, ((self.coeffs[0] * o.coeffs[0]) % ctx.p,))
        return FieldElem(ctx, ctx._polymul(self.coeffs, o.coeffs))

    __rmul__ = __mul__

    def inverse(self) -> "FieldElem":
        if self.is_zero():
            raise ZeroElement("inverse of zero")
        if self.ctx.e == 1:
            return FieldElem(self.ctx, (pow(self.coeffs[0], self.ctx.p - 2, self.ctx.p),))
        return self ** (self.ctx.q - 2)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int) -> "FieldElem":
        if n < 0:
            return self.inverse() ** (-n)
        result = self.ctx.one
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, FieldElem):
            assert other.ctx is self.ctx, "mixing field contexts"
            return self.coeffs == other.coeffs
        if isinstance(other, int):
            return self.coeffs == self.ctx.scalar(other).coeffs
        return NotImplemented

    def __hash__(self):
        return hash((id(self.ctx), self.coeffs))

    def __repr__(self):
        return f"F{self.ctx.q}({self.index})"


class Fq:
    """Context for F_{p^e}: modulus, element factory, square roots, tables.

    Construct through :func:`make_field`, which caches contexts so that
    element arithmetic can assert context identity.
    """

    def __init__(self, p: int, e: int):
        self.p = p
        self.e = e
        self.q = p**e
        self.units = self.q - 1
        self.char2_dim = e  # dimension over F_2 when p == 2
        self.modulus = self._find_modulus()
        # reduction table: x^(e+k) mod modulus for k in 0..e-2, as coeff tuples
        self._red = self._reduction_rows()
        self.zero = FieldElem(self, (0,) * e)
        self.one = self.scalar(1)
        self._elems: list[FieldElem] | None = None
        self._sqrt_table: list[int] | None = None
        self._as_table: dict[int, FieldElem] | None = None
        self._quad_ext: QuadExt | None = None
        self._tables: FieldTables | None = None
        self._primitive: FieldElem | None = None
        self._unit_factors = factorize(self.units) if self.units > 1 else {}

    # -- construction -------------------------------------------------------

    def _find_modulus(self) -> tuple[int, ...]:
        """First irreducible monic degree-e polynomial in encoding order.

        Returned as the tuple of e non-leading coefficients (c_0 .. c_{e-1});
        the leading coefficient is an implicit 1.  For e == 1 the modulus is
        the convention "lambda - 0", i.e. all-zero tail.
        """
        if self.e == 1:
            return (0,)
        for enc in range(self.q):
            tail = _digits(enc, self.p, self.e)
            if _is_irreducible(tail, self.p):
                return tail
        raise AssertionError("no irreducible polynomial found")

    def _reduction_rows(self) -> list[tuple[int, ...]]:
        e, p = self.e, self.p
        if e == 1:
            return []
        rows = []
        # row 0: x^e = -tail
        cur = [(-c) % p for c in self.modulus]
        rows.append(tuple(cur))
        for _ in range(e - 2):
            # multiply by x and reduce
            carry = cur[e - 1]
            cur = [0] + cur[: e - 1]
            if carry:
                cur = [(cur[i] + carry * rows[0][i]) % p for i in range(e)]
            rows.append(tuple(cur))
        return rows

    def _polymul(self, a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
        e, p = self.e, self.p
        prod = [0] * (2 * e - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    prod[i + j] += ai * bj
        out = [c % p for c in prod[:e]]
        for k in range(e, 2 * e - 1):
            c = prod[k] % p
            if c:
                row = self._red[k - e]
                for i in range(e):
                    out[i] = (out[i] + c * row[i]) % p
        return tuple(out)

    # -- element factories ---------------------------------------------------

    def scalar(self, n: int) -> FieldElem:
        coeffs = (n % self.p,) + (0,) * (self.e - 1)
        return FieldElem(self, coeffs)

    def elem(self, coeffs) -> FieldElem:
        coeffs = tuple(int(c) % self.p for c in coeffs)
        assert len(coeffs) == self.e
        return FieldElem(self, coeffs)

    def from_index(self, ix: int) -> FieldElem:
        assert 0 <= ix < self.q
        return FieldElem(self, _digits(ix, self.p, self.e))

    def elements(self) -> list[FieldElem]:
        if self._elems is None:
            self._elems = [self.from_index(i) for i in range(self.q)]
        return self._elems

    # -- squares and quadratics ----------------------------------------------

    def _sqrt_tab(self) -> list[int]:
        if self._sqrt_table is None:
            tab = [-1] * self.q
            for x in self.elements():
                sq = (x * x).index
                if tab[sq] < 0:
                    tab[sq] = x.index
            self._sqrt_table = tab
        return self._sqrt_table

    def is_square(self, x: FieldElem) -> bool:
        """Squareness in F_q; 0 counts as a square.  Everything is in char 2."""
        if self.p == 2:
            return True
        if self.q <= TABLE_MAX_Q:
            return self._sqrt_tab()[x.index] >= 0
        return x.is_zero() or (x ** (self.units // 2)) == self.one

    def sqrt(self, x: FieldElem) -> FieldElem | None:
        """Smallest square root by encoding, or None."""
        if self.p == 2:
            # squaring is the Frobenius, hence bijective
            return x ** (self.q // 2)
        ix = self._sqrt_tab()[x.index]
        return None if ix < 0 else self.from_index(ix)

    def char2_abs_trace(self, x) -> int:
        """Absolute trace F_{2^m} -> F_2 (m = char2_dim of the context)."""
        assert self.p == 2
        acc = x
        cur = x
        for _ in range(self.char2_dim - 1):
            cur = cur * cur
            acc = acc + cur
        return 0 if acc.is_zero() else 1

    def _artin_schreier_tab(self) -> dict[int, FieldElem]:
        if self._as_table is None:
            tab: dict[int, FieldElem] = {}
            for mu in self.elements():
                v = (mu * mu + mu).index
                if v not in tab:
                    tab[v] = mu
            self._as_table = tab
        return self._as_table

    def solve_artin_schreier(self, v: FieldElem) -> FieldElem | None:
        """Smallest mu with mu^2 + mu = v, or None (char 2 only)."""
        assert self.p == 2
        if self.q > _EXT_SCAN_MAX:
            raise SizeLimitExceeded(f"Artin-Schreier table refused for q={self.q}")
        return self._artin_schreier_tab().get(v.index)

    def quadratic_roots(self, B: FieldElem, C: FieldElem) -> tuple[FieldElem, ...]:
        """Roots of lambda^2 - B*lambda + C in F_q, sorted by encoding.

        Returns a 2-tuple (double roots repeated) or the empty tuple.
        """
        if self.p == 2:
            if B.is_zero():
                r = self.sqrt(C)
                return (r, r)
            mu = self.solve_artin_schreier(C / (B * B))
            if mu is None:
                return ()
            r1, r2 = B * mu, B * (mu + self.one)
            return (r1, r2) if r1.index <= r2.index else (r2, r1)
        disc = B * B - 4 * C
        if disc.is_zero():
            r = B / 2
            return (r, r)
        sd = self.sqrt(disc)
        if sd is None:
            return ()
        inv2 = self.scalar(2).inverse()
        r1, r2 = (B + sd) * inv2, (B - sd) * inv2
        return (r1, r2) if r1.index <= r2.index else (r2, r1)

    # -- extension -----------------------------------------------------------

    @property
    def quad_ext(self) -> "QuadExt":
        if self._quad_ext is None:
            self._quad_ext = QuadExt(self)
        return self._quad_ext

    def tables(self) -> "FieldTables":
        if self._tables is None:
            if self.q > TABLE_MAX_Q:
                raise SizeLimitExceeded(f"dense tables refused for q={self.q} > {TABLE_MAX_Q}")
            self._tables = FieldTables(self)
        return self._tables

    def __repr__(self):
        return f"Fq(p={self.p}, e={self.e})"


def _digits(n: int, p: int, e: int) -> tuple[int, ...]:
    out = []
    for _ in range(e):
        out.append(n % p)
        n //= p
    return tuple(out)


def _poly_eval(tail: tuple[int, ...], x: int, p: int) -> int:
    """Evaluate monic poly x^e + tail at x, mod p."""
    e = len(tail)
    acc = 1
    for i in range(e - 1, -1, -1):
        acc = (acc * x + tail[i]) % p
    # acc currently = x^e + c_{e-1} x^{e-1} + ... evaluated via Horner with
    # leading 1 folded in at the start
    return acc


def _is_irreducible(tail: tuple[int, ...], p: int) -> bool:
    """Irreducibility of the monic polynomial x^e + tail over F_p.

    Exhaustive: checks divisibility by every monic polynomial of degree
    <= e/2.  Fine at desk scale (e * log p small).
    """
    e = len(tail)
    if tail[0] == 0:
        return False  # root at 0
    for x in range(p):
        if _poly_eval(tail, x, p) == 0:
            return False
    if e < 4:
        return True
    full = list(tail) + [1]
    for deg in range(2, e // 2 + 1):
        for enc in range(p**deg):
            div = list(_digits(enc, p, deg)) + [1]
            if _poly_divides(div, full, p):
                return False
    return True


def _poly_divides(d: list[int], f: list[int], p: int) -> bool:
    rem = list(f)
    dd = len(d) - 1
    while len(rem) - 1 >= dd:
        lead = rem[-1]
        if lead:
            shift = len(rem) - 1 - dd
            for i in range(dd + 1):
                rem[shift + i] = (rem[shift + i] - lead * d[i]) % p
        rem.pop()
    return all(c == 0 for c in rem)


# -- quadratic extension ------------------------------------------------------


class QuadElem:
    """An element of F_{q^2}, stored as a pair (x0, x1) over F_q."""

    __slots__ = ("ctx", "c0", "c1", "_index")

    def __init__(self, ctx: "QuadExt", c0: FieldElem, c1: FieldElem):
        self.ctx = ctx
        self.c0 = c0
        self.c1 = c1
        self._index = -1

    @property
    def index(self) -> int:
        if self._index < 0:
            self._index = self.c0.index + self.c1.index * self.ctx.base.q
        return self._index

    def is_zero(self) -> bool:
        return self.c0.is_zero() and self.c1.is_zero()

    def in_base(self) -> bool:
        return self.c1.is_zero()

    def to_base(self) -> FieldElem:
        assert self.in_base(), "element not in the base field"
        return self.c0

    def _coerce(self, other):
        if isinstance(other, QuadElem):
            assert other.ctx is self.ctx, "mixing field contexts"
            return other
        if isinstance(other, int):
            return self.ctx.scalar(other)
        if isinstance(other, FieldElem):
            return self.ctx.embed(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadElem(self.ctx, self.c0 + o.c0, self.c1 + o.c1)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadElem(self.ctx, self.c0 - o.c0, self.c1 - o.c1)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return QuadElem(self.ctx, -self.c0, -self.c1)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        # (a + b z)(c + d z) = ac + bd z^2 + (ad + bc) z, with
        # z^2 = -m0 - m1 z from the extension modulus
        a, b, c, d = self.c0, self.c1, o.c0, o.c1
        bd = b * d
        m0, m1 = self.ctx.m0, self.ctx.m1
        return QuadElem(self.ctx, a * c - bd * m0, a * d + b * c - bd * m1)

    __rmul__ = __mul__

    def inverse(self) -> "QuadElem":
        if self.is_zero():
            raise ZeroElement("inverse of zero")
        return self ** (self.ctx.q - 2)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __pow__(self, n: int) -> "QuadElem":
        if n < 0:
            return self.inverse() ** (-n)
        result = self.ctx.one
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, QuadElem):
            assert other.ctx is self.ctx, "mixing field contexts"
            return self.c0 == other.c0 and self.c1 == other.c1
        if isinstance(other, (int, FieldElem)):
            o = self._coerce(other)
            return self == o
        return NotImplemented

    def __hash__(self):
        return hash((id(self.ctx), self.c0.coeffs, self.c1.coeffs))

    def __repr__(self):
        return f"F{self.ctx.q}ext({self.index})"


class QuadExt:
    """F_{q^2} as a degree-2 extension of F_q.

    The modulus z^2 + m1 z + m0 is the first irreducible monic quadratic
    over F_q in encoding order (m0.index + m1.index * q).  For odd q this
    always gives m1 = 0, so z^2 = -m0 is a fixed non-square of F_q.
    """

    def __init__(self, base: Fq):
        self.base = base
        self.q = base.q**2
        self.units = self.q - 1
        self.p = base.p
        self.char2_dim = 2 * base.e
        self.m0, self.m1 = self._find_modulus()
        self.zero = QuadElem(self, base.zero, base.zero)
        self.one = QuadElem(self, base.one, base.zero)
        self.gen = QuadElem(self, base.zero, base.one)
        self._frob_gen: QuadElem | None = None
        self._as_table: dict[int, QuadElem] | None = None
        self._unit_factors = factorize(self.units)
        self._norm_one_gen: QuadElem | None = None

    def _find_modulus(self) -> tuple[FieldElem, FieldElem]:
        base = self.base
        for enc in range(self.q):
            m0 = base.from_index(enc % base.q)
            m1 = base.from_index(enc // base.q)
            # z^2 + m1 z + m0 irreducible over F_q <=> no root in F_q
            # <=> lambda^2 - (-m1) lambda + m0 has no roots
            if not base.quadratic_roots(-m1, m0):
                return m0, m1
        raise AssertionError("no irreducible quadratic over the base field")

    def scalar(self, n: int) -> QuadElem:
        return QuadElem(self, self.base.scalar(n), self.base.zero)

    def embed(self, x: FieldElem) -> QuadElem:
        assert x.ctx is self.base
        return QuadElem(self, x, self.base.zero)

    def from_index(self, ix: int) -> QuadElem:
        assert 0 <= ix < self.q
        bq = self.base.q
        return QuadElem(self, self.base.from_index(ix % bq), self.base.from_index(ix // bq))

    def elements(self):
        for ix in range(self.q):
            yield self.from_index(ix)

    def frobenius(self, x: QuadElem) -> QuadElem:
        """x -> x^q, one multiplication once z^q is cached."""
        if self._frob_gen is None:
            self._frob_gen = self.gen ** self.base.q
        return self.embed(x.c0) + self.embed(x.c1) * self._frob_gen

    def rel_trace(self, x: QuadElem) -> FieldElem:
        """Trace to the base field, x + x^q."""
        return (x + self.frobenius(x)).to_base()

    def char2_abs_trace(self, x: QuadElem) -> int:
        assert self.p == 2
        acc = x
        cur = x
        for _ in range(self.char2_dim - 1):
            cur = cur * cur
            acc = acc + cur
        return 0 if acc.is_zero() else 1

    def solve_artin_schreier(self, v: QuadElem) -> QuadElem | None:
        assert self.p == 2
        if self.q > _EXT_SCAN_MAX:
            raise SizeLimitExceeded(f"Artin-Schreier table refused for q^2={self.q}")
        if self._as_table is None:
            tab: dict[int, QuadElem] = {}
            for mu in self.elements():
                key = (mu * mu + mu).index
                if key not in tab:
                    tab[key] = mu
            self._as_table = tab
        return self._as_table.get(v.index)

    def sqrt_of_base(self, x: FieldElem) -> QuadElem:
        """A square root in F_{q^2} of a base-field element (odd q)."""
        assert self.p != 2
        r = self.base.sqrt(x)
        if r is not None:
            return self.embed(r)
        # z^2 = -m0 is a non-square of F_q, so x / z^2 is a square
        nu0 = -self.m0
        r = self.base.sqrt(x / nu0)
        assert r is not None
        return self.gen * self.embed(r)

    def __repr__(self):
        return f"QuadExt(q={self.base.q})"


# -- orders and generators ----------------------------------------------------


def element_order(x) -> int:
    """Multiplicative order; divides q-1 (base) or q^2-1 (extension)."""
    if x.is_zero():
        raise ZeroElement("order of zero")
    ctx = x.ctx
    order = ctx.units
    one = ctx.one
    for prime in ctx._unit_factors:
        while order % prime == 0 and x ** (order // prime) == one:
            order //= prime
    return order


def primitive_element(ctx: Fq) -> FieldElem:
    """First element in encoding order of multiplicative order q-1."""
    if ctx._primitive is None:
        target = ctx.units
        found = None
        for ix in range(1, ctx.q):
            x = ctx.from_index(ix)
            if element_order(x) == target:
                found = x
                break
        assert found is not None
        ctx._primitive = found
    return ctx._primitive


def nonsplit_generator(ctx: Fq) -> QuadElem:
    """First element of F_{q^2} in encoding order with multiplicative order q+1.

    This is the generator beta with beta^(q+1) = 1 of the norm-one subgroup;
    it never lies in the base field for q > 2.
    """
    ext = ctx.quad_ext
    if ext._norm_one_gen is None:
        target = ctx.q + 1
        found = None
        for ix in range(1, ext.q):
            x = ext.from_index(ix)
            if x ** target == ext.one and element_order(x) == target:
                found = x
                break
        assert found is not None
        ext._norm_one_gen = found
    return ext._norm_one_gen


def make_field(p: int, e: int, max_q: int | None = None) -> Fq:
    """Deterministic context for F_{p^e}; cached so repeated calls share it."""
    if not is_prime(p):
        raise NotPrime(p)
    if e < 1:
        raise ValueError(f"e must be >= 1, got {e}")
    limit = env_max_q() if max_q is None else max_q
    if p**e > limit:
        raise SizeLimitExceeded(f"q = {p}^{e} exceeds the size limit {limit}")
    key = (p, e)
    ctx = _FIELD_CACHE.get(key)
    if ctx is None:
        ctx = Fq(p, e)
        _FIELD_CACHE[key] = ctx
    return ctx


_FIELD_CACHE: dict[tuple[int, int], Fq] = {}


def field_for_q(q: int, max_q: int | None = None) -> Fq:
    p, e = split_prime_power(q)
    return make_field(p, e, max_q=max_q)


# -- roots of the characteristic polynomial -----------------------------------


@dataclass(frozen=True)
class CharRoots:
    """Roots nu1, nu2 of lambda^2 - t*lambda + 1 with nu1*nu2 = 1, nu1+nu2 = t.

    ``split`` is True when the roots lie in F_q; otherwise nu1, nu2 are the
    two Frobenius-conjugate roots in F_{q^2}.  omega_sq = t^2 - 4 always.
    """

    t: FieldElem
    nu1: object
    nu2: object
    omega_sq: FieldElem
    split: bool


def char_roots(t: FieldElem) -> CharRoots:
    ctx = t.ctx
    omega_sq = t * t - 4
    roots = ctx.quadratic_roots(t, ctx.one)
    if roots:
        return CharRoots(t, roots[0], roots[1], omega_sq, True)
    ext = ctx.quad_ext
    if ctx.p == 2:
        # t != 0 here (t = 0 gives the split double root 1)
        tt = ext.embed(t)
        mu = ext.solve_artin_schreier(ext.one / (tt * tt))
        assert mu is not None
        r1 = tt * mu
    else:
        sd = ext.sqrt_of_base(omega_sq)
        r1 = (ext.embed(t) + sd) * ext.scalar(2).inverse()
    r2 = ext.frobenius(r1)
    if r2.index < r1.index:
        r1, r2 = r2, r1
    return CharRoots(t, r1, r2, omega_sq, False)


# -- dense tables for vectorised work ------------------------------------------


class FieldTables:
    """Dense numpy lookup tables over element encodings, for the oracle.

    add/mul are (q, q) int32 arrays; neg/inv are length-q arrays (inv[0] = 0
    by convention); issq is a uint8 squareness mask (1 everywhere in char 2).
    """

    def __init__(self, ctx: Fq):
        self.ctx = ctx
        q = ctx.q
        elems = ctx.elements()
        add = np.empty((q, q), dtype=np.int32)
        mul = np.empty((q, q), dtype=np.int32)
        for i, x in enumerate(elems):
            for j in range(i, q):
                y = elems[j]
                s = (x + y).index
                m = (x * y).index
                add[i, j] = add[j, i] = s
                mul[i, j] = mul[j, i] = m
        self.add = add
        self.mul = mul
        self.neg = np.array([(-x).index for x in elems], dtype=np.int32)
        inv = np.zeros(q, dtype=np.int32)
        for i in range(1, q):
            inv[i] = elems[i].inverse().index
        self.inv = inv
        self.issq = np.array([1 if ctx.is_square(x) else 0 for x in elems], dtype=np.uint8)
        self.one = ctx.one.index
        self.two = ctx.scalar(2).index
        self.minus_one = ctx.scalar(-1).index
        self.minus_two = ctx.scalar(-2).index

    def pow_idx(self, i: int, n: int) -> int:
        """Scalar power on encodings (n >= 0)."""
        result = self.one
        base = i
        while n:
            if n & 1:
                result = self.mul[result, base]
            base = self.mul[base, base]
            n >>= 1
        return result
