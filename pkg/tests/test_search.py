from __future__ import annotations

import itertools
import json
import math
from importlib import resources

import numpy as np
import pytest

from floatsynth.errors import ResourceError
from floatsynth.exact import GATES, IDENTITY, unitary_from_column
from floatsynth.ring import RingElement, Root2Scaled, abs_sq, quad_norm, sde
from floatsynth.search import (
    PairList,
    _completion,
    canonical_unit_multiple,
    enumerate_candidates,
    fit_log_model,
    ht_word_min_offdiag,
    min_offdiag,
    norm_solvable,
    record_rows,
    table2,
)


def reference() -> dict:
    with resources.files("floatsynth").joinpath("data/reference.json").open() as fh:
        return json.load(fh)


def test_norm_solvable_examples():
    assert norm_solvable((1, 0)) == RingElement(1, 0, 0, 0) or abs_sq(norm_solvable((1, 0))) == Root2Scaled(1, 0)
    assert norm_solvable((0, 0)).is_zero()
    v = norm_solvable((2, 1))
    assert v is not None and abs_sq(v) == Root2Scaled(2, 1)
    assert abs_sq(RingElement(1, 1, 0, 0)) == Root2Scaled(2, 1)
    assert norm_solvable((1, 1)) is None  # 1 - sqrt2 < 0, so 1 + sqrt2 is not a norm
    with pytest.raises(ValueError):
        norm_solvable(Root2Scaled(1, 0, 1))


def brute_norms(R: int) -> set[tuple[int, int]]:
    out = set()
    for q in itertools.product(range(-R, R + 1), repeat=4):
        out.add(quad_norm(q))
    return out


def test_norm_solvable_matches_four_loop_search():
    # a^2+b^2+c^2+d^2 = A, so every witness for A <= 60 has coefficients in [-7, 7]
    norms = brute_norms(7)
    for A in range(0, 61):
        for B in range(-A, A + 1):
            if A * A < 2 * B * B:
                continue  # not totally positive, never a norm
            got = norm_solvable((A, B))
            assert (got is not None) == ((A, B) in norms), (A, B)


def test_pairlist_sorted_and_bounded():
    pl = PairList.build(50.0, 50.0)
    assert np.all(np.diff(pl.value) >= 0)
    s2 = math.sqrt(2)
    for a, b, v in list(pl.triples())[:200]:
        assert v == pytest.approx((a + b * s2) ** 2, abs=1e-9)
    with pytest.raises(ResourceError):
        PairList.build(1e12, 1e12, max_len=1000)


def completable_classes(us) -> set:
    return {canonical_unit_multiple(u).quad for u in us if _completion(u) is not None}


@pytest.mark.parametrize("m", [3, 4, 5])
def test_candidates_match_ball_scan(m):
    kappa = (m + 1) // 2
    brute = []
    for q in itertools.product(range(-3, 4), repeat=4):
        u = RingElement(*q, kappa)
        if u.kappa != kappa:
            continue
        if sde(abs_sq(u)) == m and float(abs_sq(u)) <= 1.0 + 1e-12:
            brute.append(u)
    stream = list(enumerate_candidates(m, 1.0))
    assert all(sde(abs_sq(u)) == m for u in stream)
    assert completable_classes(stream) == completable_classes(brute)


def test_candidates_examples():
    st = enumerate_candidates(3, 1.0)
    mags = [float(abs_sq(u)) for u in st]
    assert any(abs(x - (2 - math.sqrt(2)) / 4) < 1e-15 for x in mags)
    assert st.status == "done"
    tight = enumerate_candidates(3, 0.1)
    assert list(tight) == [] and tight.status == "too_tight"


def bfs_min_by_sde(max_t: int) -> dict[int, float]:
    seen = {IDENTITY.canonical_key()}
    frontier = [(IDENTITY, 0)]
    best: dict[int, float] = {}
    while frontier:
        nxt = []
        for U, t in frontier:
            for tok in ("H", "S", "T"):
                nt = t + (tok == "T")
                if nt > max_t:
                    continue
                V = U @ GATES[tok]
                k = V.canonical_key()
                if k in seen:
                    continue
                seen.add(k)
                nxt.append((V, nt))
                r = V.offdiag_abs_sq()
                if float(r) > 0:
                    m = sde(r)
                    best[m] = min(best.get(m, 1.0), math.sqrt(float(r)))
        frontier = nxt
    return best


def test_min_offdiag_matches_word_bfs():
    best = bfs_min_by_sde(7)
    for n_t in range(1, 6):
        assert min_offdiag(n_t).abs_u == pytest.approx(best[n_t + 2], rel=1e-12)


@pytest.mark.parametrize("n_t,want", [(7, 5.604e-02), (10, 2.145e-02), (21, 3.520e-04)])
def test_min_offdiag_examples(n_t, want):
    r = min_offdiag(n_t)
    assert f"{r.abs_u:.3e}" == f"{want:.3e}"
    assert sde(abs_sq(r.u)) == n_t + 2
    U = unitary_from_column(r.u, _completion(r.u))
    assert U.is_unitary()


def test_min_offdiag_eps_paths():
    a = min_offdiag(6, use_cache=False)
    b = min_offdiag(6, eps=1e-6, use_cache=False)  # too tight, widened until something completes
    assert a.abs_u == b.abs_u
    with pytest.raises(ValueError):
        min_offdiag(0)


def test_table2_prefix_and_records():
    ref = {int(n): float(u) for n, u in reference()["table2"]["rows"]}
    res = table2(12)
    assert [r.n_t for r in res] == list(range(1, 13))
    for r in res:
        if r.n_t in ref:
            assert f"{r.abs_u:.3e}" == f"{ref[r.n_t]:.3e}"
    rec = record_rows(res)
    assert all(b.abs_u < a.abs_u for a, b in zip(rec, rec[1:]))
    assert res[0].row()["abs_u"] == "3.826834e-01"


def test_ht_word_minimum():
    mag, word = ht_word_min_offdiag(1)
    assert mag == pytest.approx(math.sin(math.pi / 8), abs=1e-15)
    assert word == ("H", "T", "H")
    assert ht_word_min_offdiag(4)[0] < mag


def test_fit_exact_synthetic():
    pts = [(2.0**-k, 3 * k + 1) for k in range(1, 20)]
    f = fit_log_model(pts)
    assert f.a == pytest.approx(3.0, abs=1e-12) and f.b == pytest.approx(1.0, abs=1e-10)
    assert f.ci_a[0] <= 3.0 <= f.ci_a[1]
    f2 = fit_log_model([(float(k), 3 * k + 1) for k in range(1, 10)], log2_inv=True)
    assert f2.a == pytest.approx(3.0)


def test_fit_full_table_natural_log():
    rows = reference()["table2"]["rows"]
    pts = [(-math.log2(float(u)), float(n)) for n, u in rows]
    f = fit_log_model(pts, log2_inv=True, base=math.e)
    assert f.a == pytest.approx(2.98, abs=0.01)
    assert (round(f.ci_a[0], 2), round(f.ci_a[1], 2)) == (2.95, 3.03)


def test_fit_errors():
    with pytest.raises(ValueError):
        fit_log_model([(0.1, 1), (0.01, 2)])
    with pytest.raises(ValueError):
        fit_log_model([(0.1, 1), (0.1, 2), (0.1, 3)])
    with pytest.raises(ValueError):
        fit_log_model([(2.0, 1), (0.1, 2), (0.01, 3)])
