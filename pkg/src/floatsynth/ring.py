"""Exact arithmetic in Z[omega, 1/sqrt2], omega = exp(i*pi/4).

Two value types live here:

``RingElement``
    (a + b*w + c*w^2 + d*w^3) / sqrt2^kappa, the entries of Clifford+T unitaries.
``Root2Scaled``
    (A + B*sqrt2) / sqrt2^m, the real subring that |u|^2 lives in.

Both are kept in canonical (fully reduced) form, so structural equality is value
equality and ``Root2Scaled.m`` is the smallest denominator exponent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

SQRT2 = math.sqrt(2.0)

Quad = tuple[int, int, int, int]


def zsqrt2_float(x: int, y: int) -> float:
    """Float value of x + y*sqrt2 without catastrophic cancellation."""
    if x == 0 or y == 0 or (x > 0) == (y > 0):
        return x + y * SQRT2
    # opposite signs: x + y√2 = (x² - 2y²) / (x - y√2), the denominator has no cancellation
    return (x * x - 2 * y * y) / (x - y * SQRT2)


def _pow_sqrt2_inv(m: int) -> float:
    return 2.0 ** (-m / 2)


# -- numerator helpers on Z[omega] quadruples ------------------------------------

def quad_mul(x: Quad, y: Quad) -> Quad:
    a0, a1, a2, a3 = x
    b0, b1, b2, b3 = y
    return (
        a0 * b0 - a1 * b3 - a2 * b2 - a3 * b1,
        a0 * b1 + a1 * b0 - a2 * b3 - a3 * b2,
        a0 * b2 + a1 * b1 + a2 * b0 - a3 * b3,
        a0 * b3 + a1 * b2 + a2 * b1 + a3 * b0,
    )


def quad_times_omega(x: Quad, k: int = 1) -> Quad:
    a, b, c, d = x
    for _ in range(k % 8):
        a, b, c, d = -d, a, b, c
    return (a, b, c, d)


def quad_times_sqrt2(x: Quad) -> Quad:
    # sqrt2 = w - w^3
    a, b, c, d = x
    return (b - d, a + c, b + d, c - a)


def quad_divisible_by_sqrt2(x: Quad) -> bool:
    a, b, c, d = x
    return (a - c) % 2 == 0 and (b - d) % 2 == 0


def quad_div_sqrt2(x: Quad) -> Quad:
    a, b, c, d = x
    return ((b - d) // 2, (a + c) // 2, (b + d) // 2, (c - a) // 2)


def quad_conj(x: Quad) -> Quad:
    a, b, c, d = x
    return (a, -d, -c, -b)


def quad_norm(x: Quad) -> tuple[int, int]:
    """|x|^2 = A + B*sqrt2 for x in Z[omega]."""
    a, b, c, d = x
    return a * a + b * b + c * c + d * d, a * b + b * c + c * d - d * a


def quad_scale(x: Quad, k: int) -> Quad:
    """Multiply by sqrt2^k (k >= 0)."""
    if k % 2:
        x = quad_times_sqrt2(x)
    f = 1 << (k // 2)
    return (x[0] * f, x[1] * f, x[2] * f, x[3] * f)


def reduce_quads(quads: Iterable[Quad], kappa: int) -> tuple[tuple[Quad, ...], int]:
    """Jointly divide numerators by sqrt2 while possible (shared denominator)."""
    qs = tuple(quads)
    while kappa > 0 and all(quad_divisible_by_sqrt2(q) for q in qs):
        qs = tuple(quad_div_sqrt2(q) for q in qs)
        kappa -= 1
    if all(q == (0, 0, 0, 0) for q in qs):
        kappa = 0
    return qs, kappa


@dataclass(frozen=True)
class Root2Scaled:
    """(A + B*sqrt2) / sqrt2^m, canonical: m == 0 or A odd."""

    A: int
    B: int
    m: int = 0

    def __post_init__(self) -> None:
        if self.m < 0:
            raise ValueError("denominator exponent must be non-negative")
        A, B, m = self.A, self.B, self.m
        if A == 0 and B == 0:
            m = 0
        while m > 0 and A % 2 == 0:
            A, B, m = B, A // 2, m - 1
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "m", m)

    @classmethod
    def raw(cls, A: int, B: int, m: int) -> Root2Scaled:
        return cls(A, B, m)

    def __float__(self) -> float:
        return zsqrt2_float(self.A, self.B) * _pow_sqrt2_inv(self.m)

    def with_exponent(self, m: int) -> tuple[int, int]:
        """Numerator (A', B') of this value written over sqrt2^m (m >= self.m)."""
        if m < self.m:
            raise ValueError("cannot lower the exponent below sde")
        A, B = self.A, self.B
        for _ in range(m - self.m):
            A, B = 2 * B, A
        return A, B

    def __add__(self, other: Root2Scaled) -> Root2Scaled:
        m = max(self.m, other.m)
        a1, b1 = self.with_exponent(m)
        a2, b2 = other.with_exponent(m)
        return Root2Scaled(a1 + a2, b1 + b2, m)

    def __neg__(self) -> Root2Scaled:
        return Root2Scaled(-self.A, -self.B, self.m)

    def __sub__(self, other: Root2Scaled) -> Root2Scaled:
        return self + (-other)

    def __str__(self) -> str:
        return f"({self.A}{self.B:+d}√2)/√2^{self.m}"


def sde(x: Root2Scaled) -> int:
    """Smallest denominator exponent; the canonical form already stores it."""
    return x.m


def sqrt2_conj(x: Root2Scaled) -> Root2Scaled:
    """Galois conjugate sqrt2 -> -sqrt2."""
    if x.m % 2 == 0:
        return Root2Scaled(x.A, -x.B, x.m)
    # odd m: move to even exponent so the conjugation acts on the numerator only
    A, B = 2 * x.B, x.A
    return Root2Scaled(A, -B, x.m + 1)


@dataclass(frozen=True)
class RingElement:
    """(a + b*w + c*w^2 + d*w^3) / sqrt2^kappa, canonical."""

    a: int
    b: int
    c: int
    d: int
    kappa: int = 0

    def __post_init__(self) -> None:
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        (q,), k = reduce_quads([(self.a, self.b, self.c, self.d)], self.kappa)
        object.__setattr__(self, "a", q[0])
        object.__setattr__(self, "b", q[1])
        object.__setattr__(self, "c", q[2])
        object.__setattr__(self, "d", q[3])
        object.__setattr__(self, "kappa", k)

    @classmethod
    def from_quad(cls, q: Quad, kappa: int = 0) -> RingElement:
        return cls(q[0], q[1], q[2], q[3], kappa)

    @classmethod
    def omega_power(cls, k: int) -> RingElement:
        return cls.from_quad(quad_times_omega((1, 0, 0, 0), k))

    @property
    def quad(self) -> Quad:
        return (self.a, self.b, self.c, self.d)

    def numerator_at(self, kappa: int) -> Quad:
        if kappa < self.kappa:
            raise ValueError("kappa below canonical exponent")
        return quad_scale(self.quad, kappa - self.kappa)

    def is_zero(self) -> bool:
        return self.quad == (0, 0, 0, 0)

    def __add__(self, other: RingElement) -> RingElement:
        k = max(self.kappa, other.kappa)
        x, y = self.numerator_at(k), other.numerator_at(k)
        return RingElement(x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3], k)

    def __neg__(self) -> RingElement:
        return RingElement(-self.a, -self.b, -self.c, -self.d, self.kappa)

    def __sub__(self, other: RingElement) -> RingElement:
        return self + (-other)

    def __mul__(self, other: RingElement) -> RingElement:
        return ring_mul(self, other)

    def conj(self) -> RingElement:
        return RingElement.from_quad(quad_conj(self.quad), self.kappa)

    def times_omega(self, k: int = 1) -> RingElement:
        return RingElement.from_quad(quad_times_omega(self.quad, k), self.kappa)

    def __complex__(self) -> complex:
        # a + (b-d)/√2 + i(c + (b+d)/√2), each part scaled by √2 to stay in Z[√2]
        s = _pow_sqrt2_inv(self.kappa + 1)
        re = zsqrt2_float(self.b - self.d, self.a) * s
        im = zsqrt2_float(self.b + self.d, self.c) * s
        return complex(re, im)

    def __str__(self) -> str:
        return f"({self.a},{self.b},{self.c},{self.d})/√2^{self.kappa}"

    def to_json(self) -> dict[str, int]:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d, "kappa": self.kappa}

    @classmethod
    def from_json(cls, obj: dict[str, int]) -> RingElement:
        return cls(int(obj["a"]), int(obj["b"]), int(obj["c"]), int(obj["d"]), int(obj.get("kappa", 0)))

    @classmethod
    def parse(cls, text: str) -> RingElement:
        """Inverse of ``str``: "(a,b,c,d)/√2^k" (also accepts "sqrt2^k" or a bare tuple)."""
        t = text.strip().replace("sqrt2", "√2").replace(" ", "")
        kappa = 0
        if "/√2^" in t:
            t, k = t.split("/√2^")
            kappa = int(k)
        parts = t.strip("()").split(",")
        if len(parts) != 4:
            raise ValueError(f"expected four coefficients in {text!r}")
        a, b, c, d = (int(p) for p in parts)
        return cls(a, b, c, d, kappa)


ZERO = RingElement(0, 0, 0, 0)
ONE = RingElement(1, 0, 0, 0)


def ring_mul(x: RingElement, y: RingElement) -> RingElement:
    return RingElement.from_quad(quad_mul(x.quad, y.quad), x.kappa + y.kappa)


def abs_sq(x: RingElement) -> Root2Scaled:
    """|x|^2 exactly, as (A + B*sqrt2)/sqrt2^(2*kappa) reduced."""
    A, B = quad_norm(x.quad)
    return Root2Scaled(A, B, 2 * x.kappa)


def sde_abs_sq(x: RingElement) -> int:
    return sde(abs_sq(x))
