"""Gearbox angle algebra, circuit trees and static T accounting.

A gearbox over children U^1..U^d with off-diagonal magnitudes |u_l| has
sin^2(theta) = prod |u_l|^2.  On the all-zero measurement outcome it enacts
exp(-i * atan(tan^2 theta) * X), with probability cos^4 theta + sin^4 theta.

Angles that come out of repeated squaring underflow binary64 quickly, so
``Angle`` carries log2(1/radians) next to the float value and all chains here are
evaluated in log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

from .exact import GateWord, eval_circuit, format_word, parse_word, tcount

PI_8 = math.pi / 8
LOG2_TAN_PI_8 = math.log2(math.tan(PI_8))  # log2(sqrt2 - 1)
# below this, atan(y) == y and sin(atan(y)) == y to binary64 precision
_TINY_LOG2 = -80.0


class GearboxError(ValueError):
    pass


# -- angles ------------------------------------------------------------------------

@dataclass(frozen=True)
class Angle:
    """An angle in [0, pi/4] with its log-scale magnitude.

    ``radians`` may underflow to 0.0 for very small angles; ``log2_inv`` stays
    finite.  ``tan_base``/``tan_power`` are set when the angle is exactly
    atan(tan(tan_base) ** tan_power).
    """

    radians: float
    log2_inv: float
    tan_base: float | None = None
    tan_power: int | None = None

    def __float__(self) -> float:
        return self.radians

    @classmethod
    def of(cls, radians: float) -> Angle:
        if radians < 0:
            raise GearboxError("angles must be non-negative")
        return cls(radians, math.inf if radians == 0 else -math.log2(radians))

    @classmethod
    def from_log2_tan(cls, log2_tan: float, base: float | None = None,
                      power: int | None = None) -> Angle:
        """atan(2 ** log2_tan)."""
        if log2_tan == -math.inf:
            return cls(0.0, math.inf, base, power)
        if log2_tan < _TINY_LOG2:
            rad = 2.0 ** log2_tan if log2_tan > -1074 else 0.0
            return cls(rad, -log2_tan, base, power)
        rad = math.atan(2.0 ** log2_tan)
        return cls(rad, -math.log2(rad), base, power)

    def log2_tan(self) -> float:
        if self.tan_base is not None and self.tan_power is not None:
            return self.tan_power * math.log2(math.tan(self.tan_base))
        if self.log2_inv > -_TINY_LOG2:
            return -self.log2_inv
        return math.log2(math.tan(self.radians))

    def log2_sin(self) -> float:
        lt = self.log2_tan()
        if lt < _TINY_LOG2:
            return lt
        return lt - 0.5 * math.log2(1.0 + 4.0 ** lt)

    def sin(self) -> float:
        return 2.0 ** self.log2_sin() if self.log2_inv < 1074 else 0.0


def _angle_value(theta: Angle | float) -> float:
    return theta.radians if isinstance(theta, Angle) else float(theta)


def _log2_tan_sq_from_log2_sin_sq(log2_s: float) -> float:
    """log2(s / (1 - s)) for s = sin^2 theta given as log2 s."""
    if log2_s == -math.inf:
        return -math.inf
    if log2_s < _TINY_LOG2:
        return log2_s
    s = 2.0 ** log2_s
    if s >= 1.0:
        raise GearboxError("product of off-diagonal magnitudes must be < 1")
    return log2_s - math.log2(1.0 - s)


def gearbox_angle_log(log2_mags: Sequence[float]) -> Angle:
    """Output angle for children given by log2 of their off-diagonal magnitudes."""
    if not log2_mags:
        raise GearboxError("a gearbox needs at least one child")
    return Angle.from_log2_tan(_log2_tan_sq_from_log2_sin_sq(2.0 * math.fsum(log2_mags)))


def gearbox_angle(offdiag_mags: Sequence[float]) -> Angle:
    """atan(tan^2 theta) with sin^2 theta = prod |u_l|^2."""
    logs = []
    for m in offdiag_mags:
        if not 0.0 <= m <= 1.0:
            raise GearboxError(f"off-diagonal magnitude {m} outside [0, 1]")
        logs.append(-math.inf if m == 0 else math.log2(m))
    return gearbox_angle_log(logs)


def gearbox_theta(offdiag_mags: Sequence[float]) -> float:
    """The theta of sin^2 theta = prod |u_l|^2 (not the output angle)."""
    p = math.prod(offdiag_mags)
    if p >= 1.0:
        raise GearboxError("product of off-diagonal magnitudes must be < 1")
    return math.asin(p)


def gearbox_success_prob(theta: Angle | float) -> float:
    """cos^4 + sin^4 = 1 - 2 sin^2 cos^2 = 1 - sin^2(2 theta) / 2."""
    t = _angle_value(theta)
    if not 0.0 <= t < math.pi / 2:
        raise GearboxError("theta must lie in [0, pi/2)")
    return 1.0 - 0.5 * math.sin(2.0 * t) ** 2


def success_prob_from_log2_sin_sq(log2_s: float) -> float:
    """Success probability written through s = sin^2 theta (exact for tiny s)."""
    if log2_s == -math.inf:
        return 1.0
    s = 2.0 ** log2_s if log2_s > -1074 else 0.0
    return 1.0 - 2.0 * s * (1.0 - s)


def composed_angle(theta0: Angle | float, d: int) -> Angle:
    """atan(tan(theta0) ** 2**d), the angle of the d-fold composed gearbox."""
    if d < 1:
        raise GearboxError("composition depth must be >= 1")
    t0 = _angle_value(theta0)
    if not 0.0 < t0 < math.pi / 4:
        raise GearboxError("theta0 must lie in (0, pi/4)")
    p = 1 << d
    return Angle.from_log2_tan(p * math.log2(math.tan(t0)), base=t0, power=p)


# -- exponent sets -----------------------------------------------------------------

def _check_dset(D: Sequence[int]) -> None:
    if not D:
        raise GearboxError("D must be non-empty")
    if any(x < 1 for x in D):
        raise GearboxError("D entries must be positive")
    if any(b <= a for a, b in zip(D, D[1:])):
        raise GearboxError("D must be strictly increasing")


def log2_sin_phi_of_D(D: Sequence[int]) -> float:
    """log2 sin(phi(D)) = sum_j log2 sin(atan(tan(pi/8) ** 2**D_j))."""
    _check_dset(D)
    total = []
    for dj in D:
        lt = (1 << dj) * LOG2_TAN_PI_8
        total.append(lt if lt < _TINY_LOG2 else lt - 0.5 * math.log2(1.0 + 4.0 ** lt))
    return math.fsum(total)


def phi_of_D(D: Sequence[int]) -> Angle:
    ls = log2_sin_phi_of_D(D)
    if ls < _TINY_LOG2:
        return Angle(2.0 ** ls if ls > -1074 else 0.0, -ls)
    rad = math.asin(2.0 ** ls)
    return Angle(rad, -math.log2(rad))


def weight_to_D(w: int) -> list[int]:
    """Binary expansion: w = sum 2**D_j with distinct positive D_j (w even, > 0)."""
    if w <= 0 or w % 2:
        raise GearboxError("weights are positive even integers")
    return [j for j in range(1, w.bit_length()) if (w >> j) & 1]


def D_to_weight(D: Sequence[int]) -> int:
    _check_dset(D)
    return sum(1 << d for d in D)


# -- circuit trees -----------------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    word: GateWord

    def __str__(self) -> str:
        return format_word(self.word) or "I"


@dataclass(frozen=True)
class Gearbox:
    children: tuple[GearboxNode, ...]

    def __post_init__(self) -> None:
        if not self.children:
            raise GearboxError("gearbox arity must be >= 1")

    def __str__(self) -> str:
        return "GB(" + ", ".join(str(c) for c in self.children) + ")"


@dataclass(frozen=True)
class Composed:
    base: GearboxNode
    depth: int

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise GearboxError("composition depth must be >= 1")

    def __str__(self) -> str:
        return f"C*{self.depth}({self.base})"

    def unrolled(self) -> Gearbox:
        """One level: C*d(U) = GB(C*(d-1)(U)), C*1(U) = GB(U)."""
        inner = self.base if self.depth == 1 else Composed(self.base, self.depth - 1)
        return Gearbox((inner,))


GearboxNode = Union[Leaf, Gearbox, Composed]


def leaf(word: str | Sequence[str]) -> Leaf:
    return Leaf(parse_word(word))


def parse_node(text: str) -> GearboxNode:
    """Parse ``GB(child, ...)``, ``C*d(child)`` or a bare gate word."""
    p = _NodeParser(text)
    node = p.node()
    p.skip_ws()
    if p.i != len(text):
        raise GearboxError(f"unexpected {text[p.i]!r} at position {p.i}")
    return node


@dataclass
class _NodeParser:
    s: str
    i: int = field(default=0)

    def skip_ws(self) -> None:
        while self.i < len(self.s) and self.s[self.i].isspace():
            self.i += 1

    def expect(self, ch: str) -> None:
        self.skip_ws()
        if self.i >= len(self.s) or self.s[self.i] != ch:
            raise GearboxError(f"expected {ch!r} at position {self.i}")
        self.i += 1

    def node(self) -> GearboxNode:
        self.skip_ws()
        rest = self.s[self.i:]
        if rest.startswith("GB("):
            self.i += 3
            kids = [self.node()]
            self.skip_ws()
            while self.i < len(self.s) and self.s[self.i] == ",":
                self.i += 1
                kids.append(self.node())
                self.skip_ws()
            self.expect(")")
            return Gearbox(tuple(kids))
        if rest.startswith("C*"):
            self.i += 2
            j = self.i
            while self.i < len(self.s) and self.s[self.i].isdigit():
                self.i += 1
            if j == self.i:
                raise GearboxError(f"expected composition depth at position {j}")
            depth = int(self.s[j:self.i])
            self.expect("(")
            base = self.node()
            self.expect(")")
            return Composed(base, depth)
        j = self.i
        while self.i < len(self.s) and self.s[self.i] not in ",()":
            self.i += 1
        text = self.s[j:self.i].strip()
        if not text:
            raise GearboxError(f"empty leaf at position {j}")
        return Leaf(parse_word([] if text == "I" else text))


# -- evaluation --------------------------------------------------------------------

@lru_cache(maxsize=4096)
def _leaf_log2_mag(word: GateWord) -> float:
    u = eval_circuit(word).entry(1, 0)
    mag = abs(complex(u))
    return -math.inf if mag == 0 else math.log2(mag)


def node_log2_offdiag(node: GearboxNode) -> float:
    """log2 |u| of the node's success-path unitary."""
    if isinstance(node, Leaf):
        return _leaf_log2_mag(node.word)
    return node_angle(node).log2_sin()


def node_log2_sin_sq(node: Gearbox) -> float:
    """log2 sin^2(theta) for a gearbox: twice the sum of child log-magnitudes."""
    return 2.0 * math.fsum(node_log2_offdiag(c) for c in node.children)


def node_angle(node: GearboxNode) -> Angle:
    """Rotation angle enacted on the success path."""
    if isinstance(node, Leaf):
        raise GearboxError("leaves are arbitrary unitaries, not X rotations")
    if isinstance(node, Composed):
        base = node.base
        if isinstance(base, Leaf):
            lm = node_log2_offdiag(base)
            if lm == -math.inf:
                return Angle(0.0, math.inf)
            # theta0 = asin|u|; the chain is atan(tan(theta0) ** 2**depth)
            t0 = math.asin(2.0 ** lm)
            if 0.0 < t0 < math.pi / 4:
                return composed_angle(t0, node.depth)
        return node_angle(node.unrolled())
    return gearbox_angle_log([node_log2_offdiag(c) for c in node.children])


def node_success_prob(node: Gearbox | Composed) -> float:
    if isinstance(node, Composed):
        node = node.unrolled()
    return success_prob_from_log2_sin_sq(node_log2_sin_sq(node))


def word_tdepth(word: Sequence[str]) -> int:
    # a single-qubit word has no parallel T layers
    return tcount(word)


def static_tcount(node: GearboxNode) -> int:
    """T gates on one attempt where every measurement succeeds: 4(d-1) + 2 sum T(child)."""
    if isinstance(node, Leaf):
        return tcount(node.word)
    if isinstance(node, Composed):
        t = static_tcount(node.base)
        for _ in range(node.depth):
            t = 2 * t
        return t
    return 4 * (len(node.children) - 1) + 2 * sum(static_tcount(c) for c in node.children)


def static_tdepth(node: GearboxNode) -> int:
    """(d-1) + 2 max T-depth(child)."""
    if isinstance(node, Leaf):
        return word_tdepth(node.word)
    if isinstance(node, Composed):
        t = static_tdepth(node.base)
        for _ in range(node.depth):
            t = 2 * t
        return t
    return (len(node.children) - 1) + 2 * max(static_tdepth(c) for c in node.children)
