"""Smallest off-diagonal entries of Clifford+T unitaries at a given optimal T-count.

An off-diagonal entry with sde(|u|^2) = m is written u = (p + i q)/sqrt2^K with
K = ceil(m/2) + 1, p = p0 + p1 sqrt2 and q = q0 + q1 sqrt2, p0 = q0 (mod 2).  In
omega coordinates over sqrt2^kappa (kappa = K - 1) this is
a = p1, b = (p0 + q0)/2, c = q1, d = (q0 - p0)/2.

The search keeps a list of the real parts x0 + x1 sqrt2 sorted by their square,
joins it with itself band by band in increasing |p|^2 + |q|^2 and stops at the
first u that completes to a unitary, i.e. 1 - |u|^2 is a norm |v|^2.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy import stats

from . import kernels
from .errors import ResourceError
from .ring import (
    RingElement,
    Root2Scaled,
    abs_sq,
    quad_times_omega,
    sde,
    zsqrt2_float,
)

SQRT2 = math.sqrt(2.0)
DEFAULT_MAX_PAIRS = 20_000_000


@dataclass(frozen=True)
class SearchResult:
    m: int
    n_t: int
    u: RingElement
    abs_u: float
    witness_v: RingElement | None = None

    def row(self) -> dict[str, object]:
        return {"n_t": self.n_t, "abs_u": f"{self.abs_u:.6e}", "a": self.u.a, "b": self.u.b,
                "c": self.u.c, "d": self.u.d, "kappa": self.u.kappa}


@dataclass
class PairList:
    """Sorted x0 + x1 sqrt2 with value (x0 + x1 sqrt2)^2 and conjugate (x0 - x1 sqrt2)^2."""

    x0: np.ndarray
    x1: np.ndarray
    value: np.ndarray
    conj: np.ndarray

    def __len__(self) -> int:
        return int(self.value.size)

    def triples(self) -> Iterator[tuple[int, int, float]]:
        for a, b, v in zip(self.x0, self.x1, self.value):
            yield int(a), int(b), float(v)

    @classmethod
    def build(cls, bound: float, conj_bound: float, max_len: int = DEFAULT_MAX_PAIRS) -> PairList:
        """All x with |x|^2 <= bound and |x*|^2 <= conj_bound."""
        r = math.sqrt(bound)
        rc = math.sqrt(conj_bound)
        x1max = int((r + rc) / (2 * SQRT2)) + 1
        est = (2 * x1max + 1) * (2 * r + 3)
        if est > 4 * max_len:
            raise ResourceError(f"pair list would hold ~{int(est)} entries (cap {max_len})")
        xs0, xs1 = [], []
        for x1 in range(-x1max, x1max + 1):
            c = -x1 * SQRT2
            xs0.append(np.arange(math.floor(c - r), math.ceil(c + r) + 1, dtype=np.int64))
            xs1.append(np.full(xs0[-1].size, x1, dtype=np.int64))
        x0 = np.concatenate(xs0)
        x1 = np.concatenate(xs1)
        s = x0 + x1 * SQRT2
        w = x0 - x1 * SQRT2
        n = (x0 * x0 - 2 * x1 * x1).astype(np.float64)
        # whichever of s, w has no cancellation gives the other via s*w = n
        big_s = np.abs(s) >= np.abs(w)
        with np.errstate(divide="ignore", invalid="ignore"):
            sv = np.where(big_s, s, n / w)
            wv = np.where(big_s, n / s, w)
        sv = np.where((x0 == 0) & (x1 == 0), 0.0, sv)
        wv = np.where((x0 == 0) & (x1 == 0), 0.0, wv)
        val = sv * sv
        cj = wv * wv
        keep = (val <= bound * (1 + 1e-12)) & (cj <= conj_bound * (1 + 1e-12))
        x0, x1, val, cj = x0[keep], x1[keep], val[keep], cj[keep]
        if val.size > max_len:
            raise ResourceError(f"pair list holds {val.size} entries (cap {max_len})")
        order = np.lexsort((x1, x0, val))
        return cls(x0[order], x1[order], val[order], cj[order])


def norm_solvable(xi: Root2Scaled | tuple[int, int]) -> RingElement | None:
    """v in Z[omega] with |v|^2 = A + B sqrt2, or None."""
    if isinstance(xi, Root2Scaled):
        if xi.m != 0:
            raise ValueError("norm_solvable expects an element of Z[sqrt2] (m = 0)")
        A, B = xi.A, xi.B
    else:
        A, B = int(xi[0]), int(xi[1])
    w = kernels.norm_solve(A, B)
    if w is None:
        return None
    v = RingElement.from_quad(tuple(int(t) for t in w))
    got = abs_sq(v)
    if (got.A, got.B, got.m) != (Root2Scaled(A, B).A, Root2Scaled(A, B).B, 0):
        raise AssertionError(f"norm solver returned a wrong witness for ({A}, {B})")
    return v


def canonical_unit_multiple(u: RingElement) -> RingElement:
    """Lexicographically smallest omega^k u."""
    best = min(quad_times_omega(u.quad, k) for k in range(8))
    return RingElement.from_quad(best, u.kappa)


def _kappa(m: int) -> int:
    return (m + 1) // 2


@dataclass
class _Band:
    t: np.ndarray
    quads: np.ndarray  # rows a, b, c, d, A, B


@dataclass
class CandidateStream:
    """Iterator over candidates with sde(|u|^2) = m and |u|^2 <= eps, band by band.

    ``status`` is "running", then "done" or "too_tight" (nothing at all under eps).
    Each band is sorted by |u|^2 and deduplicated up to unit multiples.
    """

    m: int
    eps: float
    jobs: int = 1
    max_pairs: int = DEFAULT_MAX_PAIRS
    status: str = "running"
    lo: float = 0.0
    pairs_scanned: int = 0
    _seen: set = field(default_factory=set)

    def __post_init__(self) -> None:
        if self.m < 3:
            raise ValueError("m must be >= 3")
        self.kappa = _kappa(self.m)
        self.K = self.kappa + 1
        self.E0 = float(2 ** self.K) * min(self.eps, 1.0)
        self.pairs = PairList.build(self.E0, float(2 ** self.K), self.max_pairs)
        self.delta = self.E0 / 16.0
        self._any = False

    def bands(self) -> Iterator[_Band]:
        while self.lo < self.E0:
            hi = min(self.lo + self.delta, self.E0)
            band = self._join(self.lo, hi, self.lo == 0.0)
            if band.t.size == 0:
                self.delta *= 2.0
            else:
                self._any = True
                yield band
            self.lo = hi
        self.status = "done" if self._any else "too_tight"

    def _join(self, lo: float, hi: float, include_lo: bool) -> _Band:
        pl = self.pairs
        n = len(pl)
        if n == 0:
            return _Band(np.zeros(0), np.zeros((0, 6), dtype=np.int64))
        # p only needs |p|^2 <= hi
        stop = int(np.searchsorted(pl.value, hi, side="right"))
        chunks = _split(stop, self.jobs)

        def work(c: tuple[int, int]):
            return kernels.band_join(pl.value, pl.x0, pl.x1, pl.conj, lo, hi, self.K, self.m,
                                     include_lo, c[0], c[1])

        if len(chunks) <= 1:
            parts = [work(chunks[0])] if chunks else []
        else:
            with ThreadPoolExecutor(max_workers=len(chunks)) as ex:
                parts = list(ex.map(work, chunks))
        if not parts:
            return _Band(np.zeros(0), np.zeros((0, 6), dtype=np.int64))
        t = np.concatenate([p[0] for p in parts])
        q = np.concatenate([p[1] for p in parts])
        self.pairs_scanned += stop
        return _Band(t, q)

    def __iter__(self) -> Iterator[RingElement]:
        for band in self.bands():
            for u in _sorted_unique(band, self.kappa, self._seen):
                yield u


def _split(n: int, jobs: int) -> list[tuple[int, int]]:
    if n <= 0:
        return []
    jobs = max(1, min(jobs, n))
    step = -(-n // jobs)
    return [(s, min(s + step, n)) for s in range(0, n, step)]


def _exact_key(A: int, B: int) -> float:
    return zsqrt2_float(A, B)


def _sorted_unique(band: _Band, kappa: int, seen: set) -> list[RingElement]:
    """Band entries ordered by exact |u|^2 then canonical quad, one per unit class."""
    rows = []
    for a, b, c, d, A, B in band.quads.tolist():
        u = canonical_unit_multiple(RingElement(a, b, c, d, kappa))
        key = (u.quad, u.kappa)
        if key in seen:
            continue
        seen.add(key)
        rows.append((_exact_key(A, B), A, B, u.quad, u))
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    return [r[4] for r in rows]


def enumerate_candidates(m: int, eps: float, jobs: int = 1,
                         max_pairs: int = DEFAULT_MAX_PAIRS) -> CandidateStream:
    return CandidateStream(m, eps, jobs=jobs, max_pairs=max_pairs)


def _completion(u: RingElement) -> RingElement | None:
    """v with |u|^2 + |v|^2 = 1, expressed over the same kappa."""
    k = u.kappa if u.kappa > 0 else 0
    x = abs_sq(u)
    A, B = x.with_exponent(2 * k)
    # 1 - (A + B sqrt2)/2^k  =  (2^k - A - B sqrt2)/2^k
    w = norm_solvable((2 ** k - A, -B))
    if w is None:
        return None
    return RingElement.from_quad(w.quad, k)


_MIN_CACHE: dict[int, SearchResult] = {}


def min_offdiag(n_t: int, eps: float | None = None, jobs: int = 1,
                max_pairs: int = DEFAULT_MAX_PAIRS, time_budget: float | None = None,
                use_cache: bool = True) -> SearchResult:
    """Minimal non-zero |u| over unitaries whose off-diagonal has sde(|u|^2) = n_t + 2."""
    if n_t < 1:
        raise ValueError("n_t must be >= 1")
    if use_cache and eps is None and n_t in _MIN_CACHE:
        return _MIN_CACHE[n_t]
    m = n_t + 2
    if eps is None:
        eps = 1.0 if n_t == 1 else min_offdiag(n_t - 1, None, jobs, max_pairs, time_budget,
                                               use_cache).abs_u ** 2
    start = time.monotonic()
    e = min(eps, 1.0)
    while True:
        stream = enumerate_candidates(m, e, jobs=jobs, max_pairs=max_pairs)
        for band in stream.bands():
            for u in _sorted_unique(band, stream.kappa, stream._seen):
                v = _completion(u)
                if v is not None:
                    x = abs_sq(u)
                    if sde(x) != m:
                        raise AssertionError("candidate violates the sde filter")
                    res = SearchResult(m, m - 2, u, math.sqrt(float(x)), v)
                    if use_cache:
                        _MIN_CACHE.setdefault(n_t, res)
                    return res
            if time_budget is not None and time.monotonic() - start > time_budget:
                raise ResourceError(
                    f"n_t={n_t}: time budget exhausted at |u|^2 band {stream.lo / 2 ** stream.K:.3e}"
                    f" of {e:.3e} ({stream.pairs_scanned} pair rows scanned)")
        if e >= 1.0:
            raise AssertionError(f"no completable entry with sde {m}")
        # bound too tight: nothing completable under eps
        e = min(4.0 * e, 1.0)


def table2(max_tcount: int, jobs: int = 1, max_pairs: int = DEFAULT_MAX_PAIRS,
           time_budget: float | None = None) -> list[SearchResult]:
    """Minima for n_t = 1..max_tcount, each seeded by the previous one."""
    return [min_offdiag(n, None, jobs, max_pairs, time_budget) for n in range(1, max_tcount + 1)]


def record_rows(results: Sequence[SearchResult]) -> list[SearchResult]:
    """Rows that improve on every smaller T-count (the ones worth tabulating)."""
    out, best = [], math.inf
    for r in results:
        if r.abs_u < best:
            out.append(r)
            best = r.abs_u
    return out


def ht_word_min_offdiag(max_t: int) -> tuple[float, tuple[str, ...]]:
    """Smallest nonzero |u| over words in H and T alone with at most ``max_t`` T gates.

    Breadth-first by T-count: level k holds every distinct unitary (up to phase)
    reachable with k T gates, closed under a trailing H.
    """
    from .exact import eval_circuit

    if max_t < 1:
        raise ValueError("max_t must be >= 1")
    if max_t > 20:
        raise ResourceError(f"H,T word enumeration capped at 20 T gates, asked {max_t}")
    H, T = eval_circuit("H"), eval_circuit("T")
    seen: set = set()
    level: list[tuple[object, tuple[str, ...]]] = []
    for U, w in ((eval_circuit(""), ()), (H, ("H",))):
        seen.add(U.canonical_key())
        level.append((U, w))
    best: tuple[float, tuple[str, ...]] = (math.inf, ())
    for _ in range(max_t):
        nxt = []
        for U, w in level:
            V = U @ T
            for W, ww in ((V, w + ("T",)), (V @ H, w + ("T", "H"))):
                key = W.canonical_key()
                if key in seen:
                    continue
                seen.add(key)
                nxt.append((W, ww))
                s = float(W.offdiag_abs_sq())
                if s > 0 and math.sqrt(s) < best[0] - 1e-15:
                    best = (math.sqrt(s), ww)
        level = nxt
    return best


# -- log-linear fit ----------------------------------------------------------------

@dataclass(frozen=True)
class LogFit:
    a: float
    b: float
    ci_a: tuple[float, float]
    n: int

    def __iter__(self):
        return iter((self.a, self.b, self.ci_a))


def fit_log_model(points: Sequence[tuple[float, float]], log2_inv: bool = False,
                  level: float = 0.95, base: float = 2.0) -> LogFit:
    """Least squares cost = a log_base(1/theta) + b with a t-based confidence interval for a.

    With ``log2_inv`` the first coordinate is already log2(1/theta), which keeps
    angles far below the binary64 range usable.  The intercept does not depend
    on ``base``; the slope scales by log2(base).
    """
    if len(points) < 3:
        raise ValueError("need at least three points")
    xs, ys = [], []
    for th, c in points:
        if log2_inv:
            xs.append(float(th))
        else:
            if not 0.0 < th < 1.0:
                raise ValueError("theta must lie in (0, 1)")
            xs.append(-math.log2(th))
        ys.append(float(c))
    x = np.array(xs) / math.log2(base)
    y = np.array(ys)
    if np.ptp(x) <= 1e-12 * max(1.0, float(np.abs(x).max())):
        raise ValueError("degenerate spread in log2(1/theta)")
    res = stats.linregress(x, y)
    n = len(xs)
    tq = stats.t.ppf(0.5 + level / 2, n - 2) if n > 2 else math.inf
    half = tq * res.stderr
    return LogFit(float(res.slope), float(res.intercept), (float(res.slope - half),
                                                          float(res.slope + half)), n)
