import numpy as np
import pytest

from su2lab import fields
from su2lab.quadrature import Shell, energy_norm
from su2lab.weyl import (
    GaussianSpinorSum,
    build_packet,
    kato_deficit,
    laplacian_term_norms,
    standard_bump,
    weyl_scaling_scan,
)

from oracles import fit_loglog_slope, simpson

BUMP = standard_bump()


# ---- bump profile ----


def test_bump_contract():
    assert BUMP.phi(np.array([0.0]))[0] == 1.0
    assert np.all(BUMP.phi(np.array([-1.0, 1.0, 1.5, -2.0])) == 0.0)
    assert BUMP.i0 > 0.0


def test_bump_derivatives_match_finite_differences():
    s = np.linspace(-0.95, 0.95, 101)
    h1, h2 = 1e-6, 1e-4
    fd1 = (BUMP.phi(s + h1) - BUMP.phi(s - h1)) / (2 * h1)
    fd2 = (BUMP.phi(s + h2) - 2 * BUMP.phi(s) + BUMP.phi(s - h2)) / h2 ** 2
    assert np.max(np.abs(BUMP.dphi(s) - fd1)) < 1e-6
    scale = np.maximum(np.abs(BUMP.d2phi(s)), 1.0)
    assert np.max(np.abs(BUMP.d2phi(s) - fd2) / scale) < 1e-4


# ---- packets ----


def test_packet_normalized_independent_quadrature():
    for R, w in ((16.0, 4.0), (100.0, 10.0), (1024.0, 32.0)):
        p = build_packet(BUMP, R, w)
        rr = np.linspace(R - w, R + w, 40001)
        mass = 4.0 * np.pi * simpson(p.profile(rr) ** 2 * rr * rr, rr)
        assert abs(mass - 1.0) < 1e-10


def test_packet_support_and_width_guard():
    p = build_packet(BUMP, 100.0, 10.0)
    assert p.profile(np.array([89.9, 110.1])).tolist() == [0.0, 0.0]
    with pytest.raises(ValueError):
        build_packet(BUMP, 100.0, 50.0)
    with pytest.raises(ValueError):
        build_packet(BUMP, 100.0, 0.0)
    with pytest.raises(ValueError):
        build_packet(BUMP, 100.0, 10.0, v=(0.0, 0.0))


def test_normalization_ratio_asymptotic():
    # c_R * sqrt(4 pi R^2 w I0) within (w/R)^2 of 1
    i0 = BUMP.moment(0, 40001)
    p = build_packet(BUMP, 100.0, 10.0)
    ratio = p.c * np.sqrt(4.0 * np.pi * 100.0 ** 2 * 10.0 * i0)
    assert abs(ratio - 1.0) <= (10.0 / 100.0) ** 2


def test_gradient_norm_scales_like_inverse_width():
    # ||grad Phi_R|| <= C / w with C stable across R, here via 1D quadrature
    cs = []
    for R in (64.0, 256.0, 1024.0):
        w = np.sqrt(R)
        p = build_packet(BUMP, R, w)
        rr = np.linspace(R - w, R + w, 20001)
        g2 = 4.0 * np.pi * simpson(p.profile_prime(rr) ** 2 * rr * rr, rr)
        cs.append(np.sqrt(g2) * w)
    assert max(cs) / min(cs) < 1.05


# ---- laplacian term norms ----


def test_flat_field_terms():
    p = build_packet(BUMP, 64.0, 8.0)
    tn = laplacian_term_norms(p, fields.flat())
    assert tn.cross == 0.0 and tn.div == 0.0 and tn.asq == 0.0
    assert tn.total == pytest.approx(tn.lap, rel=1e-12)


def test_hedgehog_cross_and_div_vanish(hedgehog_field):
    tn = laplacian_term_norms(build_packet(BUMP, 64.0, 8.0), hedgehog_field)
    assert tn.cross <= 1e-10
    assert tn.div <= 1e-10


def test_two_point_scaling_consistency(hedgehog_field):
    # lap ~ 1/w^2 and asq ~ kappa^2 R^-4: extrapolate R=32 -> R=64 within 20%
    a = laplacian_term_norms(build_packet(BUMP, 32.0, np.sqrt(32.0)), hedgehog_field)
    b = laplacian_term_norms(build_packet(BUMP, 64.0, 8.0), hedgehog_field)
    assert b.lap == pytest.approx(a.lap * 32.0 / 64.0, rel=0.2)
    assert b.asq == pytest.approx(a.asq * (32.0 / 64.0) ** 4, rel=0.2)


def test_doubling_width_quarters_lap(hedgehog_field):
    a = laplacian_term_norms(build_packet(BUMP, 100.0, 5.0), hedgehog_field)
    b = laplacian_term_norms(build_packet(BUMP, 100.0, 10.0), hedgehog_field)
    assert a.lap / b.lap == pytest.approx(4.0, rel=0.1)


def test_rayleigh_identity(hedgehog_field):
    p = build_packet(BUMP, 64.0, 8.0)
    tn = laplacian_term_norms(p, hedgehog_field)
    en = energy_norm(p.spinor(), hedgehog_field, Shell(56.0, 72.0))
    assert abs(tn.pairing - en.covariant) / en.covariant < 1e-8


def test_covariant_energy_small_and_decreasing(hedgehog_field):
    vals = []
    for R in (16.0, 64.0, 256.0):
        p = build_packet(BUMP, R, np.sqrt(R))
        en = energy_norm(p.spinor(), hedgehog_field, Shell(R - np.sqrt(R), R + np.sqrt(R)))
        vals.append(en.covariant)
    assert vals[0] < 1.0
    assert vals[2] < vals[1] < vals[0]


# ---- scaling scan ----


def test_scan_slope_hedgehog(hedgehog_field):
    scan = weyl_scaling_scan(BUMP, hedgehog_field, [16, 32, 64, 128, 256], np.sqrt)
    assert scan.slope <= -0.9
    # the total is carried by the laplacian term; cross and div vanish
    for row in scan.rows:
        assert row.total == pytest.approx(row.lap, rel=1e-4)
        assert row.cross < 1e-12 and row.div < 1e-10


def test_scan_slope_flat_control():
    scan = weyl_scaling_scan(BUMP, fields.flat(), [16, 32, 64, 128, 256], np.sqrt)
    assert scan.slope == pytest.approx(-1.0, abs=0.05)


def test_constant_width_rule_kills_the_scaling(hedgehog_field):
    scan = weyl_scaling_scan(BUMP, hedgehog_field, [16, 32, 64, 128], lambda R: 4.0)
    laps = [row.lap for row in scan.rows]
    assert fit_loglog_slope([16, 32, 64, 128], laps) == pytest.approx(0.0, abs=0.05)


def test_scan_validations(hedgehog_field):
    with pytest.raises(ValueError):
        weyl_scaling_scan(BUMP, hedgehog_field, [32, 16], np.sqrt)
    with pytest.raises(ValueError):
        weyl_scaling_scan(BUMP, hedgehog_field, [16, 32, 64], lambda R: R)


def test_weak_nullity_proxy(hedgehog_field):
    # against a fixed compactly supported g the packet overlaps die out
    def g_profile(r):
        return BUMP.phi(r / 20.0)

    overlaps = []
    for R in (16.0, 32.0, 64.0, 128.0):
        p = build_packet(BUMP, R, 4.0)
        rr = np.linspace(0.0, max(40.0, R + 5.0), 80001)
        val = 4.0 * np.pi * simpson(p.profile(rr) * g_profile(rr) * rr * rr, rr)
        overlaps.append(abs(val))
    assert overlaps[0] > 0.0
    assert all(b <= a + 1e-15 for a, b in zip(overlaps, overlaps[1:]))
    assert overlaps[-1] == 0.0


# ---- kato deficit ----


def test_kato_flat_field_zero(rng):
    psi = GaussianSpinorSum.random(seed=4)
    pts = rng.standard_normal((100, 3)) * 3.0
    res = kato_deficit(fields.flat(), psi, pts)
    assert res.min_c == 0.0


def test_kato_radial_packet_zero(hedgehog_field, rng):
    p = build_packet(BUMP, 12.0, 3.0)
    dirs = rng.standard_normal((80, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pts = dirs * rng.uniform(9.5, 14.5, size=(80, 1))
    res = kato_deficit(hedgehog_field, p.spinor(), pts)
    assert res.min_c == 0.0


def test_kato_nonradial_seed_stable(hedgehog_field):
    rng = np.random.default_rng(42)
    pts = rng.standard_normal((150, 3)) * 2.5
    vals = []
    for _ in range(2):
        res = kato_deficit(hedgehog_field, GaussianSpinorSum.random(seed=17), pts)
        vals.append(res.min_c)
    assert vals[0] == vals[1]
    assert np.isfinite(vals[0]) and vals[0] >= 0.0


def test_kato_rejects_vanishing_sections(hedgehog_field):
    psi = GaussianSpinorSum([0.0], [[0, 0, 0]], [1.0], [[1.0, 0.0]])
    with pytest.raises(ValueError):
        kato_deficit(hedgehog_field, psi, np.array([[1.0, 0, 0], [0, 1.0, 0]]))
