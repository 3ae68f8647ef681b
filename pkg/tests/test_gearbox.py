from __future__ import annotations

import math

import pytest

from floatsynth.gearbox import (
    Angle,
    Composed,
    Gearbox,
    GearboxError,
    Leaf,
    composed_angle,
    D_to_weight,
    gearbox_angle,
    gearbox_angle_log,
    gearbox_success_prob,
    leaf,
    log2_sin_phi_of_D,
    node_angle,
    node_success_prob,
    parse_node,
    phi_of_D,
    static_tcount,
    static_tdepth,
    weight_to_D,
)

S8 = math.sin(math.pi / 8)
TAN2_PI_8 = 0.1715728753  # tan^2(pi/8)
HTH = leaf("H T H")


def test_gearbox_angle_examples():
    assert gearbox_angle([S8]).radians == pytest.approx(0.169919, abs=1e-6)
    assert gearbox_angle([S8]).radians == pytest.approx(math.atan((math.sqrt(2) - 1) ** 2), abs=1e-15)
    assert gearbox_angle([0.0]).radians == 0.0
    # the two-leaf value is 0.0219131 (closed form below); compared at the printed 4-figure level
    two = gearbox_angle([S8, S8]).radians
    th = math.asin(S8**2)
    assert two == pytest.approx(math.atan(math.tan(th) ** 2), rel=1e-13)
    assert two == pytest.approx(0.021915, abs=5e-6)


def test_gearbox_angle_rejects_bad_magnitudes():
    with pytest.raises(GearboxError):
        gearbox_angle([1.5])
    with pytest.raises(GearboxError):
        gearbox_angle([])


def test_success_prob_examples():
    assert gearbox_success_prob(math.pi / 8) == pytest.approx(0.75, abs=1e-15)
    assert gearbox_success_prob(0.0) == 1.0
    assert gearbox_success_prob(math.pi / 4) == pytest.approx(0.5, abs=1e-15)
    for t in (0.01, 0.3, 0.7):
        assert gearbox_success_prob(t) == pytest.approx(math.cos(t) ** 4 + math.sin(t) ** 4, abs=1e-15)


def test_composed_angle_examples():
    assert composed_angle(math.pi / 8, 1).radians == pytest.approx(0.169919, abs=1e-6)
    assert composed_angle(math.pi / 8, 1).radians == pytest.approx(gearbox_angle([S8]).radians, rel=1e-14)
    assert composed_angle(math.pi / 8, 2).radians == pytest.approx(0.0294288, abs=5e-8)
    for d in (4, 6, 8):
        want = TAN2_PI_8 ** (2 ** (d - 1))
        assert composed_angle(math.pi / 8, d).radians == pytest.approx(want, rel=1e-8)


def test_composed_angle_log_scale_beyond_underflow():
    a = composed_angle(math.pi / 8, 12)
    assert a.radians == 0.0
    assert a.log2_inv == pytest.approx(-(2**12) * math.log2(math.tan(math.pi / 8)), rel=1e-12)
    assert math.isfinite(a.log2_inv)


def test_phi_of_D_examples():
    assert phi_of_D([2]).radians == pytest.approx(0.0294288, abs=5e-8)
    assert phi_of_D([1]).radians == pytest.approx(0.169919, abs=1e-6)
    # sin phi(D) ~ tan^2(pi/8) ** sum 2^(D_j - 1)
    got = 2 ** log2_sin_phi_of_D([1, 2])
    direct = math.sin(phi_of_D([1]).radians) * math.sin(phi_of_D([2]).radians)
    assert got == pytest.approx(direct, rel=1e-13)
    assert got == pytest.approx(TAN2_PI_8 ** (1 + 2), rel=0.05)


def test_phi_of_D_validation():
    for bad in ([], [0], [2, 1], [1, 1]):
        with pytest.raises(GearboxError):
            phi_of_D(bad)


def test_weight_roundtrip():
    for w in range(2, 400, 2):
        assert D_to_weight(weight_to_D(w)) == w
    with pytest.raises(GearboxError):
        weight_to_D(3)


def test_static_counts():
    assert static_tcount(Gearbox((HTH, HTH))) == 8
    assert static_tcount(Gearbox((HTH,))) == 2
    assert static_tdepth(Gearbox((HTH, HTH))) == 3
    assert static_tdepth(Gearbox((HTH,))) == 2
    um = leaf("H Z T H Z T H Z T H")
    # 4 for the doubly controlled -iX, 2 per mantissa T, 2 per attempt of the composed child
    assert static_tcount(Gearbox((um, Composed(HTH, 2)))) == 4 + 2 * 3 + 2 * static_tcount(Composed(HTH, 2))
    assert static_tcount(Composed(HTH, 2)) == 4


def test_node_angle_matches_closed_forms():
    assert node_angle(Gearbox((HTH,))).radians == pytest.approx(0.169919, abs=1e-6)
    c = node_angle(Composed(HTH, 3))
    assert c.radians == pytest.approx(composed_angle(math.pi / 8, 3).radians, rel=1e-12)
    g = Gearbox((HTH, Composed(HTH, 2)))
    want = gearbox_angle([S8, math.sin(composed_angle(math.pi / 8, 2).radians)])
    assert node_angle(g).radians == pytest.approx(want.radians, rel=1e-12)
    assert node_success_prob(Gearbox((HTH,))) == pytest.approx(0.75, abs=1e-15)


def test_parse_node_roundtrip():
    for text in ("GB(H T H)", "GB(H T H, C*2(H T H))", "C*3(GB(H T H, I))", "GB(H Z T H Z T H Z T H, C*2(H T H))"):
        node = parse_node(text)
        assert parse_node(str(node)) == node
    assert parse_node("GB(I)") == Gearbox((Leaf(()),))


@pytest.mark.parametrize("bad,pos", [("GB(H T H", 8), ("GB()", 3), ("C*(H)", 2), ("GB(H T H))", 9)])
def test_parse_node_errors_report_position(bad, pos):
    with pytest.raises(GearboxError, match=f"position {pos}"):
        parse_node(bad)


def test_angle_helpers():
    a = Angle.of(0.25)
    assert a.sin() == pytest.approx(math.sin(0.25), rel=1e-14)
    assert gearbox_angle_log([-3000.0]).log2_inv == pytest.approx(6000.0)
