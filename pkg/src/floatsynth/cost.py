"""Repeat-until-success cost model: closed forms and a seeded Monte-Carlo sampler.

Cost is counted in T gates only; Clifford corrections after a failed measurement
are free.  A gearbox attempt with d children costs 4(d-1) T gates for its
multiply-controlled -iX plus, for each child, one preparation and one
un-computation (each a full, independently retried run of the child).  A failed
attempt discards everything and starts again with fresh resources.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .gearbox import (
    Angle,
    Composed,
    Gearbox,
    GearboxError,
    GearboxNode,
    Leaf,
    composed_angle,
    gearbox_angle,
    gearbox_success_prob,
    node_log2_sin_sq,
    static_tcount,
    success_prob_from_log2_sin_sq,
)
from .exact import tcount

DEFAULT_PERCENTILES = (2.5, 50.0, 97.5)
CSV_FIELDS = ("theta", "log2_inv_theta", "mean_t", "var_t", "p2_5", "p97_5", "analytic_mean")


@dataclass
class CostStats:
    samples: int
    mean: float
    variance: float
    percentiles: dict[float, float]
    analytic_mean: float | None = None
    analytic_variance_bound: float | None = None
    extra: dict[str, float] = field(default_factory=dict)

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.samples) if self.samples > 1 else math.inf

    @classmethod
    def from_samples(cls, x: np.ndarray, analytic_mean: float | None = None,
                     analytic_variance_bound: float | None = None,
                     percentiles: Sequence[float] = DEFAULT_PERCENTILES) -> CostStats:
        x = np.asarray(x)
        n = int(x.size)
        if n == 0:
            raise ValueError("no samples")
        xf = x.astype(np.float64)
        mean = float(xf.mean())
        var = float(xf.var(ddof=1)) if n > 1 else 0.0
        s = np.sort(x)
        pct = {float(p): float(s[nearest_rank(p, n) - 1]) for p in percentiles}
        return cls(n, mean, var, pct, analytic_mean, analytic_variance_bound)

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "mean": self.mean,
            "variance": self.variance,
            "percentiles": {str(k): v for k, v in self.percentiles.items()},
            "analytic_mean": self.analytic_mean,
            "analytic_variance_bound": self.analytic_variance_bound,
            **self.extra,
        }


def nearest_rank(p: float, n: int) -> int:
    """1-based nearest-rank index of the p-th percentile of n sorted values."""
    return min(n, max(1, math.ceil(p / 100.0 * n)))


# -- closed forms ------------------------------------------------------------------

def _theta0(theta0: Angle | float) -> float:
    t = theta0.radians if isinstance(theta0, Angle) else float(theta0)
    if not 0.0 < t < math.pi / 4:
        raise GearboxError("theta0 must lie in (0, pi/4)")
    return t


def level_probs(theta0: Angle | float, d: int) -> list[float]:
    """P_q = cos^4 phi_q + sin^4 phi_q with phi_1 = theta0, phi_q = atan(tan(theta0)^(2^(q-1)))."""
    t = _theta0(theta0)
    out = [gearbox_success_prob(t)]
    for q in range(2, d + 1):
        out.append(success_prob_from_log2_sin_sq(2.0 * composed_angle(t, q - 1).log2_sin()))
    return out


def ancilla_fail_bound(theta0: Angle | float) -> float:
    """(1 - cos 4 theta0)/4 + 2 tan^4 theta0 / (1 - tan^2 theta0)."""
    t = _theta0(theta0)
    tn = math.tan(t)
    return (1.0 - math.cos(4.0 * t)) / 4.0 + 2.0 * tn ** 4 / (1.0 - tn * tn)


def ancilla_trial_moments(theta0: Angle | float) -> tuple[float, float]:
    """Published mean/variance bounds for the number of online trials.

    These are reproduced as printed, including the sign of the tan^4 term; see
    ``ancilla_trial_moments_geometric`` for the geometric bound 1/(1-p), p/(1-p)^2.
    """
    t = _theta0(theta0)
    tn = math.tan(t)
    r = 2.0 * tn ** 4 / (1.0 - tn * tn)
    q = (3.0 + math.cos(4.0 * t)) / 4.0 + r
    return 1.0 / q, ((1.0 - math.cos(4.0 * t)) / 4.0 - r) / (q * q)


def ancilla_trial_moments_geometric(theta0: Angle | float) -> tuple[float, float]:
    p = ancilla_fail_bound(theta0)
    return 1.0 / (1.0 - p), p / (1.0 - p) ** 2


def expected_n(theta0: Angle | float, d: int) -> float:
    """2^d / (P_1 ... P_d): mean number of U, U^dagger applications."""
    return (1 << d) / math.prod(level_probs(theta0, d))


def variance_n_bound(theta0: Angle | float, d: int) -> float:
    """2^(2d+1) (1-P_1) / (P_d...P_1)^2 * (1 + P_d...P_1 / (2^d P_1))."""
    P = level_probs(theta0, d)
    pr = math.prod(P)
    fail1 = 0.5 * math.sin(2.0 * _theta0(theta0)) ** 2  # 1 - P_1 without cancellation
    return 2.0 ** (2 * d + 1) * fail1 / pr ** 2 * (1.0 + pr / ((1 << d) * P[0]))


def composed_moments(theta0: Angle | float, d: int, leaf_mean: float = 1.0,
                     leaf_var: float = 0.0) -> tuple[float, float]:
    """Exact mean and variance of the composed-gearbox cost.

    Level q repeats Geometric(P_q) attempts, each a sum of two independent
    level-(q-1) costs, so V_q = 2 V_{q-1} / P + (1-P)/P^2 (2 mu_{q-1})^2.
    """
    mu, var = leaf_mean, leaf_var
    for p in level_probs(theta0, d):
        ey, vy = 2.0 * mu, 2.0 * var
        mu, var = ey / p, vy / p + (1.0 - p) / (p * p) * ey * ey
    return mu, var


def reference_tcount(theta: Angle | float) -> float:
    """4 log2(1/theta), the single-qubit synthesis reference line (no additive constant)."""
    if isinstance(theta, Angle):
        return 4.0 * theta.log2_inv
    t = float(theta)
    if not 0.0 < t <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    return 4.0 * math.log2(1.0 / t)


# -- plan compilation --------------------------------------------------------------

@dataclass
class CompiledPlan:
    kind: np.ndarray
    leaf_t: np.ndarray
    toffoli: np.ndarray
    prob: np.ndarray
    cstart: np.ndarray
    ccount: np.ndarray
    children: np.ndarray
    root: int

    def arrays(self) -> tuple:
        return (self.kind, self.leaf_t, self.toffoli, self.prob, self.cstart, self.ccount,
                self.children)


def compile_plan(node: GearboxNode) -> CompiledPlan:
    """Flatten a node tree into the index arrays the samplers walk.

    Shared sub-trees are emitted once; success probabilities come from the
    realized child magnitudes, not a small-angle approximation.
    """
    kind: list[int] = []
    leaf_t: list[int] = []
    toffoli: list[int] = []
    prob: list[float] = []
    kids: list[list[int]] = []
    memo: dict[GearboxNode, int] = {}

    def emit(n: GearboxNode) -> int:
        if n in memo:
            return memo[n]
        if isinstance(n, Composed):
            idx = emit(n.unrolled())
        elif isinstance(n, Leaf):
            idx = len(kind)
            kind.append(0)
            leaf_t.append(tcount(n.word))
            toffoli.append(0)
            prob.append(1.0)
            kids.append([])
        else:
            ch = [emit(c) for c in n.children]
            idx = len(kind)
            kind.append(1)
            leaf_t.append(0)
            toffoli.append(4 * (len(n.children) - 1))
            prob.append(success_prob_from_log2_sin_sq(node_log2_sin_sq(n)))
            kids.append(ch)
        memo[n] = idx
        return idx

    root = emit(node)
    cstart, ccount, flat = [], [], []
    for ch in kids:
        cstart.append(len(flat))
        ccount.append(len(ch))
        flat.extend(ch)
    i64 = np.int64
    return CompiledPlan(np.array(kind, i64), np.array(leaf_t, i64), np.array(toffoli, i64),
                        np.array(prob, np.float64), np.array(cstart, i64), np.array(ccount, i64),
                        np.array(flat, i64), root)


def chain_plan(probs: Sequence[float], leaf_t: int = 1) -> CompiledPlan:
    """Composed gearbox written directly in terms of its level probabilities."""
    d = len(probs)
    i64 = np.int64
    return CompiledPlan(
        kind=np.array([0] + [1] * d, i64),
        leaf_t=np.array([leaf_t] + [0] * d, i64),
        toffoli=np.zeros(d + 1, i64),
        prob=np.array([1.0] + list(probs), np.float64),
        cstart=np.array([0] + list(range(d)), i64),
        ccount=np.array([0] + [1] * d, i64),
        children=np.arange(d, dtype=i64),
        root=d,
    )


def plan_moments(plan: CompiledPlan) -> tuple[float, float]:
    """Exact mean and variance of the total T-count (Wald / compound-geometric)."""
    mom: dict[int, tuple[float, float]] = {}

    def go(i: int) -> tuple[float, float]:
        if i in mom:
            return mom[i]
        if plan.kind[i] == 0:
            r = (float(plan.leaf_t[i]), 0.0)
        else:
            ey, vy = float(plan.toffoli[i]), 0.0
            s = plan.cstart[i]
            for c in plan.children[s:s + plan.ccount[i]]:
                m, v = go(int(c))
                ey += 2.0 * m
                vy += 2.0 * v
            p = float(plan.prob[i])
            r = (ey / p, vy / p + (1.0 - p) / (p * p) * ey * ey)
        mom[i] = r
        return r

    return go(plan.root)


# -- sampling ----------------------------------------------------------------------

def _chunks(trials: int, jobs: int) -> list[tuple[int, int]]:
    jobs = max(1, min(jobs, trials))
    step = -(-trials // jobs)
    return [(s, min(step, trials - s)) for s in range(0, trials, step)]


def run_plan(plan: CompiledPlan, trials: int, seed: int, jobs: int = 1
             ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(total, online, root_attempts) per trial; trial i always uses stream (seed, i)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    arrs = plan.arrays()

    def work(chunk: tuple[int, int]):
        return kernels.sample_plan(*arrs, plan.root, seed, chunk[0], chunk[1])

    chunks = _chunks(trials, jobs)
    if len(chunks) == 1:
        parts = [work(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as ex:
            parts = list(ex.map(work, chunks))
    return tuple(np.concatenate([p[k] for p in parts]) for k in range(3))  # type: ignore[return-value]


def simulate_composed(theta0: Angle | float, d: int, trials: int, seed: int,
                      jobs: int = 1) -> CostStats:
    """Samples of n_d, the number of U / U^dagger applications for the d-fold composition."""
    if d < 1:
        raise GearboxError("d must be >= 1")
    t = theta0.radians if isinstance(theta0, Angle) else float(theta0)
    probs = [1.0] * d if t == 0.0 else level_probs(t, d)
    total, _, _ = run_plan(chain_plan(probs), trials, seed, jobs)
    if t == 0.0:
        return CostStats.from_samples(total, float(1 << d), 0.0)
    return CostStats.from_samples(total, expected_n(t, d), variance_n_bound(t, d))


def simulate_plan(node: GearboxNode, trials: int, seed: int, ancilla_mode: str = "online",
                  jobs: int = 1) -> CostStats:
    """T-count distribution of a full plan.

    ``online`` counts every T gate.  ``offline`` reports the online part only
    (ancilla preparations happen ahead of time); the total is kept in ``extra``.
    """
    if ancilla_mode not in ("online", "offline"):
        raise ValueError("ancilla_mode must be 'online' or 'offline'")
    plan = compile_plan(node)
    total, online, attempts = run_plan(plan, trials, seed, jobs)
    mean, var = plan_moments(plan)
    x = total if ancilla_mode == "online" else online
    st = CostStats.from_samples(x, mean if ancilla_mode == "online" else None,
                                var if ancilla_mode == "online" else None)
    st.extra = {
        "total_mean": float(total.mean()),
        "online_mean": float(online.mean()),
        "root_attempts_mean": float(attempts.mean()),
        "static_tcount": float(static_tcount(node)),
    }
    return st


def simulate_direct_gearbox(j_offdiag: float, d: int, trials: int, seed: int,
                            leaf_t: int = 1, jobs: int = 1) -> CostStats:
    """One flat gearbox over d identical leaves of off-diagonal magnitude j_offdiag."""
    if not 0.0 <= j_offdiag < 1.0:
        raise ValueError("j_offdiag must lie in [0, 1)")
    if d < 1:
        raise GearboxError("d must be >= 1")
    log2_s = -math.inf if j_offdiag == 0 else 2.0 * d * math.log2(j_offdiag)
    p = success_prob_from_log2_sin_sq(log2_s)
    i64 = np.int64
    plan = CompiledPlan(
        kind=np.array([0, 1], i64), leaf_t=np.array([leaf_t, 0], i64),
        toffoli=np.array([0, 4 * (d - 1)], i64), prob=np.array([1.0, p]),
        cstart=np.array([0, 0], i64), ccount=np.array([0, d], i64),
        children=np.zeros(d, i64), root=1,
    )
    total, _, _ = run_plan(plan, trials, seed, jobs)
    mean, var = plan_moments(plan)
    st = CostStats.from_samples(total, mean, var)
    ang = gearbox_angle([j_offdiag] * d) if j_offdiag > 0 else Angle(0.0, math.inf)
    st.extra = {"theta": ang.radians, "log2_inv_theta": ang.log2_inv, "success_prob": p}
    return st


@dataclass
class ChainStats:
    attempts: CostStats
    level_first_success_mean: list[float]
    level_probs: list[float]
    fail_rate: float
    fail_rate_stderr: float


def simulate_ancilla_chain(theta0: Angle | float, d: int, trials: int, seed: int,
                           jobs: int = 1) -> ChainStats:
    """Online attempts when every level's ancilla was prepared offline.

    An attempt runs the level measurements in order and fails at the first
    failing one; the attempt count is geometric with mean 1 / prod P_q.
    """
    probs = level_probs(theta0, d)

    def work(chunk: tuple[int, int]):
        return kernels.sample_chain(np.array(probs), seed, chunk[0], chunk[1])

    chunks = _chunks(trials, jobs)
    if len(chunks) == 1:
        parts = [work(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as ex:
            parts = list(ex.map(work, chunks))
    att = np.concatenate([p[0] for p in parts])
    first = np.concatenate([p[1] for p in parts])
    em, ev = ancilla_trial_moments(theta0)
    fail = float(np.mean(att > 1))
    return ChainStats(
        attempts=CostStats.from_samples(att, em, ev),
        level_first_success_mean=[float(x) for x in first.mean(axis=0)],
        level_probs=probs,
        fail_rate=fail,
        fail_rate_stderr=math.sqrt(max(fail * (1 - fail), 1e-300) / trials),
    )


# -- CSV ---------------------------------------------------------------------------

def cost_row(theta: Angle, st: CostStats) -> dict[str, float | str]:
    return {
        "theta": theta.radians,
        "log2_inv_theta": theta.log2_inv,
        "mean_t": st.mean,
        "var_t": st.variance,
        "p2_5": st.percentiles.get(2.5, math.nan),
        "p97_5": st.percentiles.get(97.5, math.nan),
        "analytic_mean": "" if st.analytic_mean is None else st.analytic_mean,
    }


def format_csv(rows: Iterable[dict], fields: Sequence[str] = CSV_FIELDS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


def _fmt(v: object) -> object:
    if isinstance(v, float):
        return repr(v)
    return v
