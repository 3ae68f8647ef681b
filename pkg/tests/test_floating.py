from __future__ import annotations

import math
import random

import pytest

from floatsynth.errors import ResourceError
from floatsynth.exact import eval_circuit, tcount
from floatsynth.floating import (
    CROSSOVER_EXPONENT,
    DEFAULT_C,
    approx_synthesize,
    decompose_angle,
    feasibility_log2,
    gamma_alpha,
    mantissa_target,
    plan_floating,
    predicted_cost,
    realized_angle,
    relative_error,
    select_exponent,
    synthesize_floating,
)
from floatsynth.gearbox import D_to_weight, Angle, phi_of_D

PHI16 = math.pi / 2**16
PHI8 = math.pi / 2**8


def offdiag(word) -> float:
    return abs(complex(eval_circuit(word).entry(1, 0)))


def test_decompose_angle():
    k, rem = decompose_angle(PHI16)
    assert k == 0 and rem == pytest.approx(4.79369e-5, abs=5e-11)
    assert decompose_angle(math.pi / 4) == (1, 0.0)
    k, rem = decompose_angle(math.pi / 3)
    assert k == 1 and rem == pytest.approx(math.pi / 12, abs=1e-15)
    with pytest.raises(ValueError):
        decompose_angle(math.inf)


def test_gamma_alpha():
    g, a = gamma_alpha(PHI16)
    assert g == 5 and a == pytest.approx(4.79369, abs=5e-6)
    assert gamma_alpha(0.5) == (1, pytest.approx(5.0))


def test_select_exponent_examples():
    D, phi_D, mono = select_exponent(PHI16)
    assert D == [2] and not mono
    assert phi_D.radians == pytest.approx(0.0294288, abs=5e-8)
    D, phi_D, _ = select_exponent(PHI8)
    assert D == [1]
    floor = math.sqrt(math.tan(PHI8) / (1 + math.tan(PHI8)))
    assert floor == pytest.approx(0.1099, abs=5e-4)  # printed from tan evaluated at 0.0123
    assert math.sin(phi_D.radians) >= floor


def test_select_exponent_monotone_and_feasible(rng):
    prev = 0
    for e in range(2, 200):
        phi = Angle(2.0**-e, float(e)) if e > 60 else Angle.of(2.0**-e)
        D, phi_D, mono = select_exponent(phi)
        w = 0 if mono else D_to_weight(D)
        assert w >= prev
        prev = w
        if not mono:
            assert phi_D.log2_sin() >= feasibility_log2(phi) - 1e-12


def test_coarse_angles_use_the_mantissa_alone():
    D, phi_D, mono = select_exponent(0.3)
    assert mono and D == [] and phi_D.log2_sin() == 0.0
    p = plan_floating(0.3, 1e-3)
    assert p.relative_error < 1e-2
    assert str(p.node()).count("C*") == 0


def test_mantissa_target_examples():
    t, tilde = mantissa_target(PHI16, phi_of_D([2]))
    assert t == pytest.approx(0.23530, abs=5e-6)
    assert tilde == pytest.approx(math.asin(t))
    small = [mantissa_target(x, [2])[0] for x in (1e-6, 1e-8, 1e-10)]
    assert small[0] > small[1] > small[2] and small[2] < 1e-3
    # sin phi_D exactly at the floor forces |u_m| = 1
    phi = 0.01
    tn = math.tan(phi)
    exact = Angle.of(math.asin(math.sqrt(tn / (1 + tn))))
    assert mantissa_target(phi, exact)[0] == pytest.approx(1.0, abs=1e-12)


def test_realized_angle_reproduces_target(rng):
    for _ in range(100):
        phi = math.exp(rng.uniform(math.log(1e-12), math.log(0.02)))
        D, phi_D, _ = select_exponent(phi)
        t, _ = mantissa_target(phi, phi_D)
        assert 0 < t <= 1
        r = realized_angle(t, phi_D)
        assert relative_error(r, phi) <= 1e-12


def test_perturbation_is_linear():
    D, phi_D, _ = select_exponent(PHI16)
    t, _ = mantissa_target(PHI16, phi_D)
    s2 = math.sin(phi_D.radians) ** 2
    ratios = []
    for dl in (1e-3, 1e-4, 1e-5):
        shift = realized_angle(t + dl, phi_D).radians - realized_angle(t, phi_D).radians
        ratios.append(shift / (dl * s2))
    assert all(0 < r < 3 for r in ratios)
    assert ratios[0] == pytest.approx(ratios[2], rel=0.01)


def test_approx_synthesize_examples():
    r = approx_synthesize(1.0, 0.1)
    assert r.word == ("X",) and r.tcount == 0
    r = approx_synthesize(math.sin(math.pi / 8), 0.0)
    assert r.tcount == 1 and r.abs_u == pytest.approx(math.sin(math.pi / 8), abs=1e-14)
    assert eval_circuit(r.word).equal_up_to_phase(eval_circuit("H T H")) or tcount(r.word) == 1


def test_approx_synthesize_table1_target():
    r = approx_synthesize(0.2353, 0.02)
    assert r.within and abs(offdiag(r.word) - 0.2353) <= 0.02
    # a 3-T word is 0.035 away from the target, so no 3-T word qualifies at this delta
    assert offdiag("H Z T H Z T H Z T H") == pytest.approx(0.270598, abs=1e-6)
    assert r.tcount > 3
    fine = approx_synthesize(0.2353, 0.0005)
    assert fine.within and fine.tcount >= r.tcount


def test_approx_synthesize_budget():
    with pytest.raises(ResourceError):
        approx_synthesize(0.3, 1e-9, max_t=60)
    r = approx_synthesize(0.123456789, 1e-12, max_t=6)
    assert not r.within and r.tcount <= 6


def test_clifford_angles_cost_nothing():
    for k in range(8):
        plan, st = synthesize_floating(k * math.pi / 4, 0.01, seed=1, trials=100)
        assert plan.node() is None and plan.k == k
        assert st.mean == 0


def test_end_to_end_error_follows_mantissa_error():
    # first order: angle error = (d realized / d|u_m|) * |du| with |du| <= delta
    rng = random.Random(8)
    delta = 1e-3
    for _ in range(100):
        phi = math.exp(rng.uniform(math.log(1e-8), math.log(math.pi / 4)))
        p = plan_floating(phi, delta)
        du = abs(p.abs_um - p.target_mag)
        assert du <= delta
        phi_D = Angle.of(p.phi_D) if p.D else Angle.of(math.pi / 2)
        h = 1e-6
        slope = (realized_angle(p.target_mag + h, phi_D).radians
                 - realized_angle(p.target_mag - h, phi_D).radians) / (2 * h)
        total = p.k * math.pi / 4 + p.realized_angle
        assert abs(total - phi) <= slope * du * 1.05 + 1e-15


def test_plan_pi_over_2_16():
    p = plan_floating(PHI16, 0.02)
    assert p.D == [2]
    assert p.target_mag == pytest.approx(0.2353, abs=5e-4)
    assert abs(p.abs_um - p.target_mag) <= 0.02
    d = p.to_json()
    assert d["circuit"].startswith("GB(") and "C*2(H T H)" in d["circuit"]


def test_predicted_cost():
    mean, depth, ok = predicted_cost(0, 0.01)
    assert mean == pytest.approx(8 * math.log2(100) + DEFAULT_C)
    g = 4.0
    _, _, ok = predicted_cost(g, 10 ** (-g * CROSSOVER_EXPONENT))
    assert ok
    assert not predicted_cost(g, 10 ** (-g * CROSSOVER_EXPONENT) / 2)[2]
    mean43, _, _ = predicted_cost(4.3, 0.3)
    assert mean43 - 8 * math.log2(1 / 0.3) - DEFAULT_C == pytest.approx(16.3, abs=0.05)
    with pytest.raises(ValueError):
        predicted_cost(-1, 0.1)
