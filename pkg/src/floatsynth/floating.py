"""Floating-point rotation synthesis: exp(-i phi X) as mantissa times exponent.

A small angle phi_rem is produced by one gearbox over a coarse "mantissa"
unitary U_m and a handful of composed HTH gearboxes C*D_j(HTH).  The exponent
set D fixes the scale sin(phi(D)); |u_m| then only needs relative precision.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .cost import CostStats, simulate_plan
from .exact import (
    GateWord,
    eval_circuit,
    format_word,
    min_tcount_over_t_multiples,
    parse_word,
    tcount,
    unitary_from_column,
)
from .gearbox import (
    Angle,
    Composed,
    Gearbox,
    GearboxError,
    GearboxNode,
    Leaf,
    gearbox_angle_log,
    log2_sin_phi_of_D,
    phi_of_D,
    weight_to_D,
)
from .ring import RingElement, abs_sq, zsqrt2_float
from .errors import ResourceError
from .search import PairList, _completion, canonical_unit_multiple
from . import kernels

PI_4 = math.pi / 4
HTH: GateWord = ("H", "T", "H")
DEFAULT_C = 4.2
DEFAULT_K = 12.0
CROSSOVER_EXPONENT = 143 / 200
# largest T-count the mantissa oracle will enumerate
MAX_T_BUDGET = 40


@dataclass
class FloatingPlan:
    k: int
    D: list[int]
    mantissa_word: GateWord
    phi_rem: float
    phi_D: float
    phi_tilde: float
    target_mag: float
    delta: float
    gamma: int
    alpha: float
    abs_um: float = math.nan
    realized_angle: float = math.nan
    relative_error: float = math.nan
    log2_inv_phi_rem: float = math.nan
    mantissa_only: bool = False

    def node(self) -> GearboxNode | None:
        if self.phi_rem == 0.0:
            return None
        kids: list[GearboxNode] = [Leaf(self.mantissa_word)]
        kids += [Composed(Leaf(HTH), dj) for dj in self.D]
        return Gearbox(tuple(kids))

    def to_json(self) -> dict:
        d = asdict(self)
        d["mantissa_word"] = format_word(self.mantissa_word)
        node = self.node()
        d["circuit"] = "" if node is None else str(node)
        return d


def _as_angle(phi: Angle | float) -> Angle:
    return phi if isinstance(phi, Angle) else Angle.of(float(phi))


def decompose_angle(phi_in: float) -> tuple[int, float]:
    """k = floor(phi / (pi/4)), phi_rem = phi - k pi/4 in [0, pi/4)."""
    if not math.isfinite(phi_in):
        raise ValueError("angle must be finite")
    k = math.floor(phi_in / PI_4)
    rem = phi_in - k * PI_4
    # rounding can leave rem a hair outside [0, pi/4)
    if rem >= PI_4:
        k, rem = k + 1, rem - PI_4
    if rem < 0 or abs(rem) < 1e-15 * max(1.0, abs(phi_in)):
        rem = max(rem, 0.0)
        if rem < 1e-15 * max(1.0, abs(phi_in)):
            rem = 0.0
    return k, rem


def gamma_alpha(phi_rem: Angle | float) -> tuple[int, float]:
    """phi_rem = alpha * 10^-gamma with gamma = max(0, ceil(-log10 phi_rem))."""
    a = _as_angle(phi_rem)
    if a.log2_inv == math.inf:
        return 0, 0.0
    log10_phi = -a.log2_inv * math.log10(2.0)
    gamma = max(0, math.ceil(-log10_phi))
    return gamma, 10.0 ** (log10_phi + gamma)


def _log2_tan(a: Angle) -> float:
    if a.log2_inv > 80:
        return -a.log2_inv
    return math.log2(math.tan(a.radians))


def feasibility_log2(phi_rem: Angle | float) -> float:
    """log2 sqrt(tan phi / (1 + tan phi)), the floor that sin(phi(D)) must reach."""
    lt = _log2_tan(_as_angle(phi_rem))
    return 0.5 * (lt - math.log2(1.0 + 2.0 ** lt))


def select_exponent(phi_rem: Angle | float) -> tuple[list[int], Angle, bool]:
    """Largest weight w = sum 2^D_j whose phi(D) still satisfies the feasibility floor.

    Returns (D, phi_D, mantissa_only).  When even D = [1] is infeasible the angle
    is coarse enough for the mantissa alone: D is empty and phi_D = pi/2, so the
    plan is a one-leaf gearbox over U_m.
    """
    a = _as_angle(phi_rem)
    if not 0.0 < a.radians < PI_4 and a.log2_inv == math.inf:
        raise GearboxError("phi_rem must lie in (0, pi/4)")
    floor = feasibility_log2(a)
    tol = 1e-12 * max(1.0, abs(floor))

    def ok(half_w: int) -> bool:
        return log2_sin_phi_of_D(weight_to_D(2 * half_w)) >= floor - tol

    if not ok(1):
        return [], Angle.of(math.pi / 2), True
    hi = 2
    while ok(hi):
        hi *= 2
    lo = hi // 2  # ok(lo) holds, ok(hi) fails
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    D = weight_to_D(2 * lo)
    return D, phi_of_D(D), False


def mantissa_target(phi_rem: Angle | float, phi_D: Angle | Sequence[int]) -> tuple[float, float]:
    """|u_m| = sqrt(sin phi / (cos phi + sin phi)) / sin phi_D and phi_tilde = asin |u_m|."""
    ls_D = log2_sin_phi_of_D(phi_D) if isinstance(phi_D, (list, tuple)) else phi_D.log2_sin()
    lt = feasibility_log2(phi_rem) - ls_D
    if lt > 1e-12:
        raise GearboxError("phi(D) too small for this angle (infeasible)")
    mag = min(1.0, 2.0 ** lt)
    return mag, math.asin(mag)


def realized_angle(abs_um: float, phi_D: Angle | Sequence[int]) -> Angle:
    """atan(tan^2 theta) with sin theta = |u_m| sin phi_D."""
    ls_D = log2_sin_phi_of_D(phi_D) if isinstance(phi_D, (list, tuple)) else phi_D.log2_sin()
    if abs_um <= 0:
        return Angle(0.0, math.inf)
    return gearbox_angle_log([math.log2(abs_um), ls_D])


def relative_error(realized: Angle, phi_rem: Angle | float) -> float:
    """|realized - phi_rem| / phi_rem, computed on log scale for tiny angles."""
    a = _as_angle(phi_rem)
    return abs(math.expm1((a.log2_inv - realized.log2_inv) * math.log(2.0)))


# -- mantissa oracle ---------------------------------------------------------------

CLIFFORD_MAGS: tuple[tuple[float, GateWord], ...] = (
    (0.0, ()),
    (math.sqrt(0.5), ("H",)),
    (1.0, ("X",)),
)


@dataclass
class ApproxResult:
    word: GateWord
    abs_u: float
    error: float
    tcount: int
    within: bool
    candidates_checked: int = 0


def _annulus(m: int, lo_mag: float, hi_mag: float, max_pairs: int,
             target: float) -> list[RingElement]:
    """Unit classes of u with sde(|u|^2) = m and lo_mag <= |u| <= hi_mag, nearest target first."""
    kappa = (m + 1) // 2
    K = kappa + 1
    scale = float(2 ** K)
    lo = scale * max(lo_mag, 0.0) ** 2
    hi = scale * min(hi_mag, 1.0) ** 2
    pl = PairList.build(hi, scale, max_pairs)
    if len(pl) == 0:
        return []
    stop = int(np.searchsorted(pl.value, hi, side="right"))
    _, q = kernels.band_join(pl.value, pl.x0, pl.x1, pl.conj, lo, hi, K, m, True, 0, stop)
    seen, out = set(), []
    for a, b, c, d, A, B in q.tolist():
        u = canonical_unit_multiple(RingElement(a, b, c, d, kappa))
        if u.quad in seen:
            continue
        seen.add(u.quad)
        out.append((abs(math.sqrt(max(zsqrt2_float(A, B), 0.0) / 2 ** kappa) - target), u))
    return [u for _, u in sorted(out, key=lambda r: (r[0], r[1].quad))]


def approx_synthesize(target_mag: float, delta: float, max_t: int = 24,
                      per_sde: int = 48, max_pairs: int = 5_000_000) -> ApproxResult:
    """Smallest-T word whose off-diagonal magnitude is within delta of target_mag.

    Searches sde levels m = 3, 4, ... (a unitary with sde m needs at least m - 2
    T gates); at each level up to ``per_sde`` completable entries closest to the
    target are synthesized exactly, keeping the best T-count after trying left and
    right T-multiples.  If nothing within delta exists below ``max_t`` the closest
    word found is returned with ``within=False``.
    """
    if not 0.0 < target_mag <= 1.0:
        raise ValueError("target_mag must lie in (0, 1]")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if max_t > MAX_T_BUDGET:
        raise ResourceError(f"max_t={max_t} exceeds the enumeration budget ({MAX_T_BUDGET})")
    slack = max(delta, 1e-12 * target_mag)
    best: ApproxResult | None = None
    closest: ApproxResult | None = None
    for mag, w in CLIFFORD_MAGS:
        r = ApproxResult(w, mag, abs(mag - target_mag), 0, abs(mag - target_mag) <= slack)
        if r.within:
            return r
        if closest is None or r.error < closest.error:
            closest = r
    checked = 0
    for m in range(3, max_t + 3):
        if best is not None and m - 2 > best.tcount:
            break
        found = []
        for u in _annulus(m, target_mag - slack, target_mag + slack, max_pairs, target_mag):
            v = _completion(u)
            if v is None:
                continue
            found.append(u)
            if len(found) >= per_sde:
                break
        for u in found:
            checked += 1
            v = _completion(u)
            U = unitary_from_column(u, v)
            t, word = min_tcount_over_t_multiples(U, drop_phase=True)
            mag = abs(complex(eval_circuit(word).entry(1, 0)))
            r = ApproxResult(word, mag, abs(mag - target_mag), t, True)
            if best is None or (r.tcount, r.error) < (best.tcount, best.error):
                best = r
    if best is not None:
        best.candidates_checked = checked
        return best
    assert closest is not None
    closest.candidates_checked = checked
    return closest


# -- end to end --------------------------------------------------------------------

def plan_floating(phi_in: Angle | float, delta: float, um: str | Sequence[str] | None = None,
                  max_t: int = 24) -> FloatingPlan:
    """Build the plan: Clifford multiple, exponent set, mantissa target and word."""
    if delta <= 0:
        raise ValueError("delta must be > 0")
    if isinstance(phi_in, Angle):
        k, rem_a = 0, phi_in
    else:
        k, rem = decompose_angle(phi_in)
        rem_a = Angle.of(rem)
    gamma, alpha = gamma_alpha(rem_a)
    if rem_a.log2_inv == math.inf:
        return FloatingPlan(k, [], (), 0.0, 0.0, 0.0, 0.0, delta, gamma, alpha, 0.0, 0.0, 0.0,
                            math.inf)
    D, phi_D, mantissa_only = select_exponent(rem_a)
    target, tilde = mantissa_target(rem_a, phi_D)
    if um is not None:
        word = parse_word(um)
    else:
        word = approx_synthesize(target, delta, max_t).word
    abs_um = abs(complex(eval_circuit(word).entry(1, 0)))
    real = realized_angle(abs_um, phi_D)
    return FloatingPlan(
        k=k, D=D, mantissa_word=word, phi_rem=rem_a.radians, phi_D=phi_D.radians,
        phi_tilde=tilde, target_mag=target, delta=delta, gamma=gamma, alpha=alpha,
        abs_um=abs_um, realized_angle=real.radians,
        relative_error=relative_error(real, rem_a), log2_inv_phi_rem=rem_a.log2_inv,
        mantissa_only=mantissa_only,
    )


def synthesize_floating(phi_in: Angle | float, delta: float, seed: int, trials: int = 40000,
                        um: str | Sequence[str] | None = None, max_t: int = 24,
                        ancilla_mode: str = "online", jobs: int = 1
                        ) -> tuple[FloatingPlan, CostStats]:
    plan = plan_floating(phi_in, delta, um, max_t)
    node = plan.node()
    if node is None:
        return plan, CostStats.from_samples(np.zeros(trials, dtype=np.int64), 0.0, 0.0)
    return plan, simulate_plan(node, trials, seed, ancilla_mode, jobs)


def exponent_node(D: Sequence[int]) -> Gearbox:
    """C^(d)(C*D_1(HTH), ..., C*D_d(HTH)) without a mantissa."""
    return Gearbox(tuple(Composed(Leaf(HTH), dj) for dj in D))


def predicted_cost(gamma: float, delta: float, C: float = DEFAULT_C, K: float = DEFAULT_K,
                   D: Sequence[int] | None = None) -> tuple[float, float, bool]:
    """(mean T-count, T-depth bound, crossover_ok) from the asymptotic cost model.

    mean = 8 log2(1/delta) + 1.14 log2(10^gamma) + C.  The depth bound needs the
    exponent set; when D is not given it is derived from phi = 10^-gamma.
    """
    if gamma < 0 or not 0 < delta < 1:
        raise ValueError("need gamma >= 0 and 0 < delta < 1")
    l10 = gamma * math.log2(10.0)
    mean = 8.0 * math.log2(1.0 / delta) + 1.14 * l10 + C
    if D is None:
        D = select_exponent(Angle(2.0 ** -l10, l10))[0] if gamma > 0 else [1]
    d = len(D) + 1
    depth = 2 * max(D) + 8.0 * math.log2(1.0 / delta) + 2 * math.floor(math.log2(d) + 1) + K
    threshold = 10.0 ** (-gamma * CROSSOVER_EXPONENT)
    ok = delta >= threshold * (1 - 1e-12)
    return mean, depth, ok
