import numpy as np
import pytest

from su2lab import algebra, fields
from su2lab.curvature import curvature_norm, curvature_numeric_coeffs
from su2lab.errors import ProfileError


# ---- radial profiles ----


def test_smoothed_profile_contract(smoothed_profile):
    p = smoothed_profile
    assert p.value(0.0) == 1.0
    assert p.derivative(0.0) == 0.0
    # tail: |K - (1 - kappa/r)| <= C / r^2 for r >= 10, C finite
    r = np.geomspace(10, 1e4, 50)
    dev = np.abs(p.value(r) - (1.0 - 1.0 / r)) * r ** 2
    assert np.all(np.isfinite(dev))
    assert np.max(dev) < 1.0  # actual tail defect is O(r^-4); any finite C does


def test_profile_shape_consistency(smoothed_profile):
    # f = (1 - K)/r^2 and its derivative agree with the closed forms
    r = np.geomspace(0.1, 50, 40)
    p = smoothed_profile
    assert np.allclose(p.shape(r), (1.0 - p.value(r)) / r ** 2, rtol=1e-12)
    h = 1e-6
    fd = (p.shape(r + h) - p.shape(r - h)) / (2 * h)
    assert np.allclose(p.shape_prime(r), fd, rtol=1e-7, atol=1e-12)


def test_profile_requires_positive_kappa():
    with pytest.raises(ProfileError):
        fields.smoothed_tail_profile(-1.0)
    with pytest.raises(ValueError):
        fields.fast_decay_profile(1.0, 0.0)


# ---- hedgehog construction ----


def test_constant_profile_gives_zero_field():
    z = fields.hedgehog(fields.constant_profile())
    pts = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0], [5.0, -1.0, 0.5]])
    assert np.max(np.abs(z.coefficients(pts))) == 0.0


def test_singular_profile_rejected(tail_profile):
    with pytest.raises(ProfileError):
        fields.hedgehog(tail_profile)
    # tail-only use is possible explicitly
    f = fields.hedgehog(tail_profile, check_origin=False)
    assert np.isfinite(f.norm(np.array([[10.0, 0, 0]]))[0])


def test_pure_tail_components_at_10(tail_profile):
    # A_i^a = f eps_{a i j} x^j with f = 1e-3 at x = (10,0,0): the only
    # nonzero entries are A_3^2 = +1e-2 and A_2^3 = -1e-2
    f = fields.hedgehog(tail_profile, check_origin=False)
    a = f.coefficients(np.array([[10.0, 0.0, 0.0]]))[0]  # [i, a]
    expect = np.zeros((3, 3))
    expect[2, 1] = +1e-2  # A_3^2
    expect[1, 2] = -1e-2  # A_2^3
    assert np.max(np.abs(a - expect)) < 1e-15


def test_hedgehog_norm_far_field(hedgehog_field):
    val = hedgehog_field.norm(np.array([[100.0, 0.0, 0.0]]))[0]
    assert abs(val - np.sqrt(2) * 1e-4) < 0.01 * np.sqrt(2) * 1e-4


def test_hedgehog_tangentiality_machine_precision(hedgehog_field, rng):
    pts = rng.standard_normal((200, 3)) * 5.0
    a = hedgehog_field.coefficients(pts)  # [n, i, alg]
    radial = np.einsum("nia,ni->na", a, pts)
    scale = max(float(np.max(np.abs(a))) * float(np.max(np.abs(pts))), 1e-300)
    assert np.max(np.abs(radial)) < 1e-14 * scale


def test_hedgehog_divergence_small_step(hedgehog_field, rng):
    # central differences at the default step: the ansatz is divergence-free
    dirs = rng.standard_normal((30, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pts = dirs * rng.uniform(1.0, 6.0, size=(30, 1))
    div = hedgehog_field.divergence_fd(pts, h=1e-4)
    assert np.max(np.abs(div)) < 1e-8


def test_smoothness_second_order_convergence(hedgehog_field, rng):
    # central differences converge at O(h^2) against the exact gradient
    pts = rng.standard_normal((10, 3)) * 3.0 + np.array([1.5, 0, 0])
    prof = hedgehog_field.profile
    r = np.linalg.norm(pts, axis=-1)

    exact = np.empty((10, 3, 3, 3))
    f, fp = prof.shape(r), prof.shape_prime(r)
    e = np.einsum("aij,nj->nia", algebra.EPS, pts)
    for i in range(3):
        exact[:, i] = fp[:, None, None] * (pts[:, i] / r)[:, None, None] * e
        for j in range(3):
            exact[:, i, j] += f[:, None] * algebra.EPS[:, j, i]
    e1 = np.max(np.abs(hedgehog_field.gradient_fd(pts, h=2e-3) - exact))
    e2 = np.max(np.abs(hedgehog_field.gradient_fd(pts, h=1e-3) - exact))
    assert 3.0 < e1 / e2 < 5.0


def test_declared_decay_bound(hedgehog_field, rng):
    dirs = rng.standard_normal((40, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = np.geomspace(0.5, 500, 40)
    c_fit = 0.0
    for r in radii:
        c_fit = max(c_fit, float(np.max(hedgehog_field.norm(r * dirs))) * (1 + r) ** 2)
    assert np.isfinite(c_fit) and c_fit < 10.0


# ---- fast-decay family ----


def test_fast_decay_requires_positive_extra():
    with pytest.raises(ValueError):
        fields.fast_decay_family(1.0, -0.5)


def test_fast_decay_zero_limit_recovers_critical(hedgehog_field, rng):
    eps_field = fields.fast_decay_family(1.0, 1e-9)
    pts = rng.standard_normal((50, 3)) * 8.0
    a0 = hedgehog_field.coefficients(pts)
    a1 = eps_field.coefficients(pts)
    assert np.max(np.abs(a1 - a0)) < 1e-7 * max(np.max(np.abs(a0)), 1e-30)


def test_fast_decay_slopes():
    from su2lab.curvature import decay_exponent_fit

    f = fields.fast_decay_family(1.0, 1.0)
    assert abs(decay_exponent_fit(f, "A", 10, 1000, 16).slope + 3.0) < 0.1
    assert abs(decay_exponent_fit(f, "F", 10, 1000, 16).slope + 4.0) < 0.1


# ---- gauge transformations ----


def _axis_gauge(amplitude=0.7, freq=0.6):
    # g(x) = exp(theta(x) tau_1) with a smooth, decaying theta
    def coeff(x):
        theta = amplitude * np.sin(freq * x[..., 0]) * np.exp(-0.05 * np.sum(x * x, -1))
        out = np.zeros(x.shape[:-1] + (3,))
        out[..., 0] = theta
        return out

    def coeff_grad(x):
        e = np.exp(-0.05 * np.sum(x * x, -1))
        s = np.sin(freq * x[..., 0])
        out = np.zeros(x.shape[:-1] + (3, 3))
        out[..., 0, 0] = amplitude * e * (freq * np.cos(freq * x[..., 0]) - 0.1 * x[..., 0] * s)
        out[..., 1, 0] = amplitude * s * e * (-0.1 * x[..., 1])
        out[..., 2, 0] = amplitude * s * e * (-0.1 * x[..., 2])
        return out

    return fields.GaugeFunction.from_algebra(coeff, coeff_grad, name="axis")


def _random_gauge(seed=5):
    rng = np.random.default_rng(seed)
    amp = rng.uniform(0.3, 0.8, size=3)
    k = rng.uniform(0.3, 0.8, size=(3, 3))

    def coeff(x):
        out = np.empty(x.shape[:-1] + (3,))
        damp = np.exp(-0.03 * np.sum(x * x, -1))
        for a in range(3):
            out[..., a] = amp[a] * np.sin(x @ k[a]) * damp
        return out

    def coeff_grad(x):
        out = np.empty(x.shape[:-1] + (3, 3))
        damp = np.exp(-0.03 * np.sum(x * x, -1))
        for a in range(3):
            s = np.sin(x @ k[a])
            c = np.cos(x @ k[a])
            for i in range(3):
                out[..., i, a] = amp[a] * damp * (c * k[a][i] - 0.06 * x[..., i] * s)
        return out

    return fields.GaugeFunction.from_algebra(coeff, coeff_grad, name="rand")


def test_gauge_partials_match_finite_differences(rng):
    g = _random_gauge()
    pts = rng.standard_normal((20, 3)) * 2.0
    exact = g.partials(pts)
    h = 1e-5
    for i in range(3):
        step = np.zeros_like(pts)
        step[:, i] = h
        fd = (g.value(pts + step) - g.value(pts - step)) / (2 * h)
        assert np.max(np.abs(fd - exact[:, i])) < 1e-8


def test_identity_gauge_leaves_field(hedgehog_field, rng):
    t = fields.gauge_transform(hedgehog_field, fields.GaugeFunction.identity())
    pts = rng.standard_normal((30, 3)) * 4.0
    assert np.max(np.abs(t.coefficients(pts) - hedgehog_field.coefficients(pts))) < 1e-14


def test_pure_gauge_curvature_second_order(rng):
    pure = fields.gauge_transform(fields.flat(), _axis_gauge())
    pts = rng.standard_normal((15, 3)) * 2.0
    n1 = np.max(curvature_norm(curvature_numeric_coeffs(pure, pts, 2e-2)))
    n2 = np.max(curvature_norm(curvature_numeric_coeffs(pure, pts, 1e-2)))
    assert n1 > 1e-9  # the finite-difference curvature is not trivially zero
    assert 3.0 < n1 / n2 < 5.0  # and shrinks at O(h^2)


def test_conjugation_invariance_of_curvature_norm(hedgehog_field, rng):
    t = fields.gauge_transform(hedgehog_field, _random_gauge())
    dirs = rng.standard_normal((12, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pts = dirs * rng.uniform(1.5, 5.0, size=(12, 1))
    h = 3e-5
    na = curvature_norm(curvature_numeric_coeffs(hedgehog_field, pts, h))
    nb = curvature_norm(curvature_numeric_coeffs(t, pts, h))
    assert np.max(np.abs(na - nb)) < 1e-8


def test_non_unitary_gauge_rejected(hedgehog_field):
    bad = fields.GaugeFunction(
        value=lambda x: 2.0 * np.broadcast_to(np.eye(2, dtype=complex), x.shape[:-1] + (2, 2)),
        partials=lambda x: np.zeros(x.shape[:-1] + (3, 2, 2), dtype=complex),
        name="bad",
    )
    t = fields.gauge_transform(hedgehog_field, bad)
    with pytest.raises(ValueError):
        t.coefficients(np.array([[1.0, 0.0, 0.0]]))


def test_transformed_field_decay_unchanged(hedgehog_field):
    # |A~| picks up the gauge derivative but the fitted |F| slope survives
    t = fields.gauge_transform(hedgehog_field, _axis_gauge(amplitude=0.4))
    from su2lab.curvature import decay_exponent_fit

    fit = decay_exponent_fit(t, "F", 10, 200, 10)
    assert fit.slope == pytest.approx(-3.0, abs=0.3)
