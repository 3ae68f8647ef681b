"""Acceptance criteria 1-8, one PASS/FAIL line each, checked at the stated tolerances.

Run with pytest, or directly (``python3 tests/test_acceptance.py``) for the lines alone.
"""
from __future__ import annotations

import json
import math
import random
import sys
import time
from importlib import resources

import numpy as np
import pytest

from floatsynth.cost import (
    ancilla_trial_moments,
    composed_moments,
    expected_n,
    simulate_ancilla_chain,
    simulate_composed,
    simulate_plan,
    variance_n_bound,
)
from floatsynth.exact import eval_circuit, exact_synthesize, tcount
from floatsynth.floating import exponent_node, plan_floating
from floatsynth.gearbox import Gearbox, composed_angle, leaf, node_angle, node_log2_sin_sq, weight_to_D
from floatsynth.search import fit_log_model, record_rows, table2
from floatsynth.simulate import verify_gearbox

SEED = 20130
PI8 = math.pi / 8


def reference() -> dict:
    with resources.files("floatsynth").joinpath("data/reference.json").open() as fh:
        return json.load(fh)


def report(n: int, ok: bool, detail: str, seconds: float) -> None:
    line = f"acceptance {n}: {'PASS' if ok else 'FAIL'} ({seconds:.1f}s) {detail}"
    capman = _capture_manager()
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)
    else:
        print(line, flush=True)


_CONFIG = None


def _capture_manager():
    if _CONFIG is None:
        return None
    return _CONFIG.pluginmanager.getplugin("capturemanager")


@pytest.fixture(autouse=True)
def _grab_config(request):
    global _CONFIG
    _CONFIG = request.config
    yield


def random_leaf_word(rng: random.Random, max_t: int) -> tuple[str, ...]:
    out: list[str] = []
    for _ in range(rng.randint(0, max_t)):
        out += [rng.choice(("H", "S", "X", "Z")) for _ in range(rng.randint(0, 2))]
        out.append(rng.choice(("T", "Tdg")))
    return tuple(out + ["H"] * rng.randint(0, 1))


# 1 -----------------------------------------------------------------------------------

def check_1() -> tuple[bool, str]:
    rng = random.Random(SEED)
    worst, bad = 0.0, 0
    for i in range(200):
        d = rng.randint(1, 4)
        while True:
            node = Gearbox(tuple(leaf(random_leaf_word(rng, 6)) for _ in range(d)))
            # all-antidiagonal leaves give |u| product 1, outside the closed form
            if node_log2_sin_sq(node) < 0:
                break
        v = verify_gearbox(node, tol=1e-10, n_states=4, seed=i)
        worst = max(worst, v.max_deviation)
        bad += not v.ok
    return bad == 0, f"200 flat gearboxes (d<=4, <=6 T per leaf), max deviation {worst:.2e}, {bad} over 1e-10"


def test_criterion_1():
    t = time.monotonic()
    ok, detail = check_1()
    dt = time.monotonic() - t
    ok = ok and dt < 60
    report(1, ok, detail, dt)
    assert ok, detail


# 2 -----------------------------------------------------------------------------------

SKIPPED = (8, 9, 12, 14, 16, 20, 22)


def check_2() -> tuple[bool, str]:
    ref = {int(n): float(u) for n, u in reference()["table2"]["rows"]}
    res = {r.n_t: r for r in table2(23)}
    mism = [n for n in range(1, 24) if n in ref and f"{res[n].abs_u:.3e}" != f"{ref[n]:.3e}"]
    better = []
    for n in SKIPPED:
        prev = max(k for k in ref if k < n)
        if res[n].abs_u < ref[prev]:
            better.append(f"n_t={n}: {res[n].abs_u:.3e} < {ref[prev]:.3e} (listed at n_t={prev})")
    ok = not mism and not better
    detail = f"listed rows matching {sum(1 for n in ref if n <= 23) - len(mism)}/{sum(1 for n in ref if n <= 23)}"
    if mism:
        detail += f"; mismatches at {mism}"
    if better:
        detail += "; skipped n_t with a smaller |u|: " + ", ".join(better)
    return ok, detail


def test_criterion_2():
    t = time.monotonic()
    ok, detail = check_2()
    dt = time.monotonic() - t
    ok = ok and dt < 1800
    report(2, ok, detail, dt)
    assert ok, detail


# 3 -----------------------------------------------------------------------------------

def check_3() -> tuple[bool, str]:
    phi = math.pi / 2**16
    specs = [("H Z T H Z T H Z T H", 21.3, (18, 30), 0.35), ("H T H T H T H T H T H T H", 27.3, (24, 36), 0.13)]
    ok, parts = True, []
    for word, mean, ci, rel in specs:
        plan = plan_floating(phi, 0.02, um=word)
        st = simulate_plan(plan.node(), 40_000, SEED)
        lo, hi = st.percentiles[2.5], st.percentiles[97.5]
        checks = {
            "mean": abs(st.mean - mean) <= 0.2,
            "var": abs(st.variance - 11.0) <= 1.0,
            "ci": abs(lo - ci[0]) <= 2 and abs(hi - ci[1]) <= 2,
            "rel_err": abs(plan.relative_error - rel) <= 0.02,
        }
        ok &= all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        parts.append(f"{word.replace(' ', '')}: mean {st.mean:.3f} var {st.variance:.2f} CI [{lo:g},{hi:g}] "
                     f"rel.err {plan.relative_error:.4f} (want {rel})" + (f" off: {failed}" if failed else ""))
    mu2, _ = composed_moments(PI8, 2)
    m29 = 4 + 2 * 29 + 2 * mu2
    ok &= abs(m29 - 73.29) <= 0.2
    parts.append(f"M29 analytic {m29:.3f}")
    return ok, "; ".join(parts)


def test_criterion_3():
    t = time.monotonic()
    ok, detail = check_3()
    dt = time.monotonic() - t
    ok = ok and dt < 60
    report(3, ok, detail, dt)
    assert ok, detail


# 4 -----------------------------------------------------------------------------------

def check_4() -> tuple[bool, str]:
    ok, worst_z, notes = True, 0.0, []
    for th in (PI8, math.pi / 12):
        for d in range(1, 7):
            st = simulate_composed(th, d, 100_000, SEED + d)
            z = abs(st.mean - expected_n(th, d)) / st.stderr
            worst_z = max(worst_z, z)
            vb = variance_n_bound(th, d)
            if z > 4 or st.variance > vb:
                ok = False
                notes.append(f"theta0={th:.4f} d={d}: z={z:.2f} var {st.variance:.3f} vs bound {vb:.3f}")
    st = simulate_composed(PI8, 2, 100_000, SEED)
    detail = f"12 cases, worst |z| {worst_z:.2f}; (pi/8,2) mean {st.mean:.4f} vs {expected_n(PI8, 2):.4f}"
    return ok, detail + ("; " + "; ".join(notes) if notes else "")


def test_criterion_4():
    t = time.monotonic()
    ok, detail = check_4()
    dt = time.monotonic() - t
    ok = ok and dt < 120
    report(4, ok, detail, dt)
    assert ok, detail


# 5 -----------------------------------------------------------------------------------

PLAN_INTERCEPT_TOL = 3.0


def check_5() -> tuple[bool, str]:
    pts = []
    for d in range(1, 10):
        st = simulate_composed(PI8, d, 2000, SEED)
        pts.append((composed_angle(PI8, d).log2_inv, st.mean))
    comp = fit_log_model(pts, log2_inv=True)
    pts = []
    w = 2
    while w <= 512:
        node = exponent_node(weight_to_D(w))
        pts.append((node_angle(node).log2_inv, simulate_plan(node, 2000, SEED).mean))
        w = w + 2 if w < 64 else int(w * 1.25) // 2 * 2
    plan = fit_log_model(pts, log2_inv=True)
    rows = record_rows(table2(23))
    t2 = fit_log_model([(-math.log2(r.abs_u), r.n_t) for r in rows if r.n_t >= 7], log2_inv=True, base=math.e)
    tiny = composed_angle(PI8, 12)  # about 10^-1200 radians
    log_ok = tiny.radians == 0.0 and math.isfinite(tiny.log2_inv) and tiny.log2_inv > 664 and tiny.tan_power == 4096
    checks = {
        "composed": 1.01 <= comp.a <= 1.21,
        "plan": 1.05 <= plan.a <= 1.20 and abs(plan.b - 4.2) <= PLAN_INTERCEPT_TOL,
        "table2": 2.7 <= t2.a <= 3.3,
        "log-space": log_ok,
    }
    detail = (f"composed a={comp.a:.3f} b={comp.b:.2f}; plan a={plan.a:.3f} b={plan.b:.2f}; "
              f"table2 prefix a={t2.a:.3f} (natural log); 10^-200 range via tan powers: {log_ok}")
    failed = [k for k, v in checks.items() if not v]
    return not failed, detail + (f"; off: {failed}" if failed else "")


def test_criterion_5():
    t = time.monotonic()
    ok, detail = check_5()
    report(5, ok, detail, time.monotonic() - t)
    assert ok, detail


# 6 -----------------------------------------------------------------------------------

def check_6() -> tuple[bool, str]:
    e, v = ancilla_trial_moments(PI8)
    analytic_ok = round(e, 5) == 1.21793 and round(v, 5) == 0.26542 and e < 1.25 and v < 1 / 3
    notes = []
    mc_ok = True
    for d in (1, 2, 4, 6):
        ch = simulate_ancilla_chain(PI8, d, 100_000, SEED)
        a = ch.attempts
        # one-sided 3 sigma: the sample mean may exceed the bound by at most 3 standard errors
        mean_ok = a.mean - 3 * a.stderr <= e
        # the variance of a sample variance is about 2 var^2 / n for these light tails
        var_se = a.variance * math.sqrt(2 / a.samples)
        var_ok = a.variance - 3 * var_se <= v
        mc_ok &= mean_ok and var_ok
        notes.append(f"d={d}: mean {a.mean:.4f} var {a.variance:.4f}")
    detail = f"E bound {e:.5f}, V bound {v:.5f}; offline retries " + ", ".join(notes)
    return analytic_ok and mc_ok, detail + ("" if mc_ok else "; MC exceeds the printed bounds")


def test_criterion_6():
    t = time.monotonic()
    ok, detail = check_6()
    dt = time.monotonic() - t
    ok = ok and dt < 60
    report(6, ok, detail, dt)
    assert ok, detail


# 7 -----------------------------------------------------------------------------------

def check_7() -> tuple[bool, str]:
    rng = random.Random(SEED)
    bad = 0
    for _ in range(1000):
        nt = rng.randint(0, 20)
        w: list[str] = []
        for _ in range(nt):
            w += [rng.choice(("H", "S", "Sdg", "X", "Y", "Z")) for _ in range(rng.randint(0, 3))]
            w.append(rng.choice(("T", "Tdg")))
        U = eval_circuit(w)
        out = exact_synthesize(U)
        m, t = U.sde(), tcount(out)
        exact = eval_circuit(out) == U and U.equal_up_to_phase(eval_circuit(out))
        # the sandwich applies from sde 4 up; below that the database answer is optimal
        window = t in (m - 2, m - 1, m) if m >= 4 else True
        bad += not (exact and window and t <= tcount(w))
    return bad == 0, f"1000 round trips, {bad} failures"


def test_criterion_7():
    t = time.monotonic()
    ok, detail = check_7()
    dt = time.monotonic() - t
    ok = ok and dt < 60
    report(7, ok, detail, dt)
    assert ok, detail


# 8 -----------------------------------------------------------------------------------

def check_8() -> tuple[bool, str]:
    p = plan_floating(math.pi / 2**16, 0.02)
    first = p.D == [2] and abs(p.target_mag - 0.2353) <= 0.0005
    rng = np.random.default_rng(SEED)
    delta, worst = 1e-3, 0.0
    for phi in np.exp(rng.uniform(math.log(1e-8), math.log(math.pi / 4), size=100)):
        q = plan_floating(float(phi), delta)
        got = q.k * math.pi / 4 + q.realized_angle
        worst = max(worst, abs(got - phi) / (delta * phi))
    contract = worst <= 10
    h = plan_floating(math.pi / 2**8, 0.02, um="H")
    st = simulate_plan(h.node(), 40_000, SEED)
    mean_ok = abs(st.mean - 9.2) <= 0.3
    detail = (f"pi/2^16: D={p.D} target {p.target_mag:.5f}; 100 random angles: worst |err|/(delta*phi) "
              f"{worst:.2f} (<= 10); pi/2^8 with U_m=H: mean {st.mean:.3f} (want 9.2 +- 0.3)")
    failed = [k for k, v in {"plan": first, "contract": contract, "pi/2^8 mean": mean_ok}.items() if not v]
    return not failed, detail + (f"; off: {failed}" if failed else "")


def test_criterion_8():
    t = time.monotonic()
    ok, detail = check_8()
    report(8, ok, detail, time.monotonic() - t)
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for n, fn in enumerate((check_1, check_2, check_3, check_4, check_5, check_6, check_7, check_8), 1):
        t = time.monotonic()
        ok, detail = fn()
        report(n, ok, detail, time.monotonic() - t)
        failures += not ok
    sys.exit(1 if failures else 0)
