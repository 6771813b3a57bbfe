"""The groups SL(2,q) and PSL(2,q): matrices, orders, conjugacy classes.

Conjugacy data follows the standard classification by the characteristic
polynomial lambda^2 - t*lambda + 1: central, unipotent (one class per trace
for even q, two per trace for odd q, told apart by a squareness bit), and
semisimple split / non-split (one class per trace).  Class keys are
canonical tuples; two matrices are conjugate in SL(2,q) iff their keys agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

from .field import (
    FieldElem,
    Fq,
    SizeLimitExceeded,
    char_roots,
    element_order,
    split_prime_power,
)

ENUM_MAX_Q = 128  # full-group enumeration guard


class Mat2:
    """2x2 matrix of determinant 1 (entries row-major: a, b, c, d)."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d, check: bool = True):
        self.a = a
        self.b = b
        self.c = c
        self.d = d
        if check:
            det = a * d - b * c
            assert det == a.ctx.one, "determinant must be 1"

    @classmethod
    def identity(cls, ctx) -> "Mat2":
        return cls(ctx.one, ctx.zero, ctx.zero, ctx.one, check=False)

    @classmethod
    def minus_identity(cls, ctx) -> "Mat2":
        m1 = -ctx.one
        return cls(m1, ctx.zero, ctx.zero, m1, check=False)

    @property
    def ctx(self):
        return self.a.ctx

    def trace(self):
        return self.a + self.d

    def det(self):
        return self.a * self.d - self.b * self.c

    def __mul__(self, other: "Mat2") -> "Mat2":
        return Mat2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
            check=False,
        )

    def inverse(self) -> "Mat2":
        return Mat2(self.d, -self.b, -self.c, self.a, check=False)

    def __neg__(self) -> "Mat2":
        return Mat2(-self.a, -self.b, -self.c, -self.d, check=False)

    def __pow__(self, n: int) -> "Mat2":
        if n < 0:
            return self.inverse() ** (-n)
        result = Mat2.identity(self.ctx)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conj_by(self, h: "Mat2") -> "Mat2":
        """h * self * h^-1."""
        return h * self * h.inverse()

    def key4(self) -> tuple[int, int, int, int]:
        """Entry-encoding tuple; the lexicographic order used by psl_rep."""
        return (self.a.index, self.b.index, self.c.index, self.d.index)

    def is_identity(self) -> bool:
        one, zero = self.ctx.one, self.ctx.zero
        return self.a == one and self.d == one and self.b == zero and self.c == zero

    def is_minus_identity(self) -> bool:
        m1, zero = -self.ctx.one, self.ctx.zero
        return self.a == m1 and self.d == m1 and self.b == zero and self.c == zero

    def is_central(self) -> bool:
        return self.is_identity() or self.is_minus_identity()

    def __eq__(self, other):
        if not isinstance(other, Mat2):
            return NotImplemented
        return (
            self.a == other.a and self.b == other.b and self.c == other.c and self.d == other.d
        )

    def __hash__(self):
        return hash(self.key4())

    def __repr__(self):
        return f"Mat2[{self.a.index},{self.b.index};{self.c.index},{self.d.index}]"


def mat_pow(x: Mat2, n: int) -> Mat2:
    """x^n by binary powering; mat_pow(x, 0) is the identity."""
    return x**n


@dataclass(frozen=True)
class GroupParams:
    """Orders and exponents of SL(2,q) and PSL(2,q)."""

    q: int
    p: int
    e: int
    d: int
    order_sl: int
    order_psl: int
    exp_sl: int
    exp_psl: int

    @classmethod
    def for_q(cls, q: int) -> "GroupParams":
        p, e = split_prime_power(q)
        d = 2 if q % 2 else 1
        order_sl = q * (q - 1) * (q + 1)
        return cls(
            q=q,
            p=p,
            e=e,
            d=d,
            order_sl=order_sl,
            order_psl=order_sl // d,
            exp_sl=p * (q * q - 1) // d,
            exp_psl=p * (q * q - 1) // (d * d),
        )


class ClassKind(IntEnum):
    CENTRAL_PLUS = 0
    CENTRAL_MINUS = 1
    UNIPOTENT = 2
    SPLIT = 3
    NONSPLIT = 4


@dataclass(frozen=True)
class ElementClass:
    """Conjugacy class data: kind, trace, unipotent bit, class size."""

    kind: ClassKind
    trace: FieldElem
    unip_bit: int
    class_size: int

    def key(self) -> tuple[int, int, int]:
        return (int(self.kind), self.trace.index, self.unip_bit)


def unipotent_bit(x: Mat2) -> int:
    """Which of the two unipotent classes x belongs to (odd q).

    Conjugating x = [[+-1, beta], [0, +-1]]-type elements multiplies the
    off-diagonal entry by a square, so the squareness of beta is the class
    invariant.  Reducing a general x with lower-left gamma != 0 to upper
    triangular form lands on beta' = -1/gamma.  Bit 1 is the class of the
    canonical form [[+-1, 1], [0, +-1]].
    """
    ctx = x.ctx
    if x.c.is_zero():
        val = x.b
    else:
        val = -x.c  # same square class as -1/gamma
    return 1 if ctx.is_square(val) else 0


def classify(x: Mat2) -> ElementClass:
    ctx = x.ctx
    q = ctx.q
    d = 2 if q % 2 else 1
    t = x.trace()
    if x.is_identity():
        return ElementClass(ClassKind.CENTRAL_PLUS, t, 0, 1)
    if q % 2 and x.is_minus_identity():
        return ElementClass(ClassKind.CENTRAL_MINUS, t, 0, 1)
    roots = char_roots(t)
    if roots.split and roots.nu1 == roots.nu2:
        bit = unipotent_bit(x) if q % 2 else 1
        return ElementClass(ClassKind.UNIPOTENT, t, bit, (q * q - 1) // d)
    if roots.split:
        return ElementClass(ClassKind.SPLIT, t, 0, q * (q + 1))
    return ElementClass(ClassKind.NONSPLIT, t, 0, q * (q - 1))


def class_key(x: Mat2) -> tuple[int, int, int]:
    return classify(x).key()


def element_order_sl(x: Mat2) -> int:
    """Order of x in SL(2,q), from the classification."""
    ctx = x.ctx
    p = ctx.p
    cls = classify(x)
    if cls.kind == ClassKind.CENTRAL_PLUS:
        return 1
    if cls.kind == ClassKind.CENTRAL_MINUS:
        return 2
    if cls.kind == ClassKind.UNIPOTENT:
        if ctx.q % 2 == 0 or cls.trace == ctx.scalar(2):
            return p
        return 2 * p  # trace -2, odd q
    nu = char_roots(cls.trace).nu1
    return element_order(nu)


def element_order_brute(x: Mat2, bound: int) -> int:
    """Reference order computation by repeated multiplication."""
    acc = x
    for k in range(1, bound + 1):
        if acc.is_identity():
            return k
        acc = acc * x
    raise AssertionError("order exceeds bound")


def split_traces(ctx: Fq) -> list[FieldElem]:
    """Traces t (t^2 != 4) whose characteristic roots lie in F_q, ascending."""
    out = []
    for t in ctx.elements():
        if (t * t - 4).is_zero():
            continue
        if char_roots(t).split:
            out.append(t)
    return out


def enumerate_classes(ctx: Fq) -> list[tuple[Mat2, ElementClass]]:
    """All conjugacy classes of SL(2,q) as (canonical representative, data).

    Ordered by class key.  Sizes sum to |SL(2,q)|.
    """
    q = ctx.q
    d = 2 if q % 2 else 1
    one, zero = ctx.one, ctx.zero
    out: list[tuple[Mat2, ElementClass]] = []
    out.append((Mat2.identity(ctx), classify(Mat2.identity(ctx))))
    if q % 2:
        out.append((Mat2.minus_identity(ctx), classify(Mat2.minus_identity(ctx))))
        nonsq = next(x for x in ctx.elements() if not x.is_zero() and not ctx.is_square(x))
        for diag in (one, -one):
            for beta in (one, nonsq):
                rep = Mat2(diag, beta, zero, diag, check=False)
                out.append((rep, classify(rep)))
    else:
        rep = Mat2(one, one, zero, one, check=False)
        out.append((rep, classify(rep)))
    for t in ctx.elements():
        if (t * t - 4) == zero:
            continue
        rep = Mat2(t, one, -one, zero)  # trace t, det 1
        out.append((rep, classify(rep)))
    out.sort(key=lambda rc: rc[1].key())
    total = sum(c.class_size for _, c in out)
    assert total == q * (q - 1) * (q + 1)
    return out


def enumerate_group(ctx: Fq):
    """Stream all of SL(2,q) in a fixed lexicographic order.

    Order: a ascending by encoding; for a = 0, (b, d) ascend with c = -1/b;
    for a != 0, (b, c) ascend with d = (1 + b c) / a.
    """
    q = ctx.q
    if q > ENUM_MAX_Q:
        raise SizeLimitExceeded(f"group enumeration refused for q={q} > {ENUM_MAX_Q}")
    elems = ctx.elements()
    zero = ctx.zero
    for a in elems:
        if a.is_zero():
            for b in elems:
                if b.is_zero():
                    continue
                c = -b.inverse()
                for dd in elems:
                    yield Mat2(a, b, c, dd, check=False)
        else:
            ainv = a.inverse()
            for b in elems:
                for c in elems:
                    dd = ainv * (ctx.one + b * c)
                    yield Mat2(a, b, c, dd, check=False)


def psl_rep(x: Mat2) -> Mat2:
    """Canonical SL representative of the PSL image: min(x, -x) by encoding."""
    if x.ctx.p == 2:
        return x
    nx = -x
    return x if x.key4() <= nx.key4() else nx


def random_sl2(ctx: Fq, rng) -> Mat2:
    """Random element (not uniform, reaches the whole group); test helper."""
    q = ctx.q
    while True:
        a = ctx.from_index(rng.randrange(q))
        b = ctx.from_index(rng.randrange(q))
        c = ctx.from_index(rng.randrange(q))
        if a.is_zero():
            if b.is_zero():
                continue
            return Mat2(a, b, -b.inverse(), c, check=False)
        return Mat2(a, b, c, a.inverse() * (ctx.one + b * c), check=False)


