"""Connection fields on R^3 with su(2) values.

A ConnectionField maps a point x to the three components (A_1, A_2, A_3),
each an su(2) coefficient vector (units: inverse length).  Coefficient
arrays are indexed ``[..., i, a]`` with i the spatial direction and a the
algebra index.

The concrete families:

* ``flat()``                      -- A == 0 everywhere.
* ``hedgehog(profile)``           -- the spherically symmetric ansatz
      A_i^a(x) = f(r) eps_{a i j} x^j,   f(r) = (1 - K(r)) / r^2,
  where K is a radial profile with K(0) = 1 (smooth at the origin) and
  K ~ 1 - kappa/r at infinity, so |A| ~ sqrt(2) kappa / r^2 and the
  curvature decays like r^-3.
* ``fast_decay_family(kappa, e)`` -- the same ansatz with an extra
  (1+r)^-e factor on 1-K, pushing |A| to O(r^{-2-e}) and the curvature
  strictly below the r^-3 rate.

Gauge transforms act by  A~_i = g A_i g^-1 - (d_i g) g^-1,  the convention
under which d_(A~)(g psi) = g d_A psi for d_A psi = d psi + A psi.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import algebra
from .errors import ProfileError

__all__ = [
    "RadialProfile",
    "ConnectionField",
    "GaugeFunction",
    "smoothed_tail_profile",
    "pure_tail_profile",
    "fast_decay_profile",
    "constant_profile",
    "flat",
    "hedgehog",
    "fast_decay_family",
    "gauge_transform",
    "fd_step",
]


def fd_step(r):
    """Central-difference step used for field derivatives: min(1e-3, r/100).

    The radius is floored at 1e-3 so steps never collapse to zero near the
    origin (the fields are smooth there; the tiny-step regime would only
    add roundoff).
    """
    r = np.asarray(r, dtype=float)
    return np.minimum(1e-3, np.maximum(r, 1e-3) / 100.0)


@dataclass(frozen=True)
class RadialProfile:
    """Scalar profile K(r) driving a hedgehog field.

    ``value``/``derivative`` give K and K'.  ``shape``/``shape_prime`` give
    the combination f = (1 - K)/r^2 and its derivative in closed form, which
    is what the field and curvature formulas actually consume (and stays
    finite at the origin whenever 1 - K = O(r^2)).
    """

    name: str
    kappa: float
    value: Callable
    derivative: Callable
    shape: Callable
    shape_prime: Callable
    smooth_at_origin: bool = True
    params: Mapping = field(default_factory=dict)


def smoothed_tail_profile(kappa: float, r0: float = 1.0) -> RadialProfile:
    """Profile with 1 - K(r) = kappa r^2 / (r^3 + c), c = kappa r0^3.

    Gives K(0) = 1, K'(0) = 0 and the exact tail K = 1 - kappa/r + O(r^-4);
    the rational form keeps f = kappa/(r^3 + c) and f' exact everywhere.
    """
    if kappa <= 0:
        raise ProfileError("smoothed_tail_profile requires kappa > 0")
    c = kappa * r0 ** 3

    def K(r):
        r = np.asarray(r, dtype=float)
        return 1.0 - kappa * r * r / (r ** 3 + c)

    def Kp(r):
        r = np.asarray(r, dtype=float)
        return kappa * (r ** 4 - 2.0 * r * c) / (r ** 3 + c) ** 2

    def f(r):
        r = np.asarray(r, dtype=float)
        return kappa / (r ** 3 + c)

    def fp(r):
        r = np.asarray(r, dtype=float)
        return -3.0 * kappa * r * r / (r ** 3 + c) ** 2

    return RadialProfile(
        name="smoothed_tail",
        kappa=kappa,
        value=K,
        derivative=Kp,
        shape=f,
        shape_prime=fp,
        params={"kappa": kappa, "r0": r0},
    )


def pure_tail_profile(kappa: float) -> RadialProfile:
    """Unsmoothed profile K = 1 - kappa/r (singular at the origin).

    Only for closed-form checks away from r = 0; it does not satisfy the
    K(0) = 1 contract and ``hedgehog`` rejects it unless told otherwise.
    """

    def K(r):
        return 1.0 - kappa / np.asarray(r, dtype=float)

    def Kp(r):
        return kappa / np.asarray(r, dtype=float) ** 2

    def f(r):
        return kappa / np.asarray(r, dtype=float) ** 3

    def fp(r):
        return -3.0 * kappa / np.asarray(r, dtype=float) ** 4

    return RadialProfile(
        name="pure_tail",
        kappa=kappa,
        value=K,
        derivative=Kp,
        shape=f,
        shape_prime=fp,
        smooth_at_origin=False,
        params={"kappa": kappa},
    )


def fast_decay_profile(kappa: float, extra_decay: float, r0: float = 1.0) -> RadialProfile:
    """Profile with 1 - K = kappa r^2 (1+r)^(-e) / (r^3 + c), e = extra_decay."""
    if kappa <= 0:
        raise ProfileError("fast_decay_profile requires kappa > 0")
    if extra_decay <= 0:
        raise ValueError("fast_decay_profile requires extra_decay > 0")
    c = kappa * r0 ** 3
    e = float(extra_decay)

    def f(r):
        r = np.asarray(r, dtype=float)
        return kappa * (1.0 + r) ** (-e) / (r ** 3 + c)

    def fp(r):
        r = np.asarray(r, dtype=float)
        return f(r) * (-e / (1.0 + r) - 3.0 * r * r / (r ** 3 + c))

    def K(r):
        r = np.asarray(r, dtype=float)
        return 1.0 - r * r * f(r)

    def Kp(r):
        r = np.asarray(r, dtype=float)
        return -(2.0 * r * f(r) + r * r * fp(r))

    return RadialProfile(
        name="fast_decay",
        kappa=kappa,
        value=K,
        derivative=Kp,
        shape=f,
        shape_prime=fp,
        params={"kappa": kappa, "r0": r0, "extra_decay": e},
    )


def constant_profile() -> RadialProfile:
    """K == 1: the hedgehog of this profile is the zero connection."""

    def K(r):
        return np.ones_like(np.asarray(r, dtype=float))

    def zero(r):
        return np.zeros_like(np.asarray(r, dtype=float))

    return RadialProfile(
        name="constant", kappa=0.0, value=K, derivative=zero, shape=zero, shape_prime=zero
    )


@dataclass(frozen=True)
class ConnectionField:
    """A smooth map x -> (A_1, A_2, A_3) of su(2) coefficient vectors.

    Immutable after construction; evaluation is pure and batched
    (``coefficients`` maps points of shape (..., 3) to (..., 3, 3)).
    """

    name: str
    coeff_fn: Callable
    params: Mapping = field(default_factory=dict)
    profile: RadialProfile | None = None

    def coefficients(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.coeff_fn(x)

    def matrices(self, x):
        """A_i as 2x2 matrices, shape (..., 3, 2, 2)."""
        return algebra.to_matrix(self.coefficients(x))

    def norm(self, x):
        """Pointwise |A| = sqrt(sum_{i,a} (A_i^a)^2)."""
        c = self.coefficients(x)
        return np.sqrt(np.sum(c * c, axis=(-2, -1)))

    def gradient_fd(self, x, h=None):
        """Central-difference gradient d_i A_j^a, shape (..., 3, 3, 3).

        First axis of the trailing triple is the derivative direction i.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if h is None:
            h = fd_step(np.linalg.norm(x, axis=-1))
        h = np.broadcast_to(np.asarray(h, dtype=float), x.shape[:-1])
        out = np.empty(x.shape[:-1] + (3, 3, 3))
        for i in range(3):
            step = np.zeros_like(x)
            step[..., i] = h
            out[..., i, :, :] = (self.coeff_fn(x + step) - self.coeff_fn(x - step)) / (
                2.0 * h
            )[..., None, None]
        return out

    def divergence_fd(self, x, h=None):
        """Central-difference divergence sum_i d_i A_i^a, shape (..., 3)."""
        g = self.gradient_fd(x, h=h)
        return g[..., 0, 0, :] + g[..., 1, 1, :] + g[..., 2, 2, :]

    def grad_norm_fd(self, x, h=None):
        """Pointwise |grad A| = sqrt(sum_{i,j,a} (d_i A_j^a)^2)."""
        g = self.gradient_fd(x, h=h)
        return np.sqrt(np.sum(g * g, axis=(-3, -2, -1)))


def flat() -> ConnectionField:
    """The zero connection."""

    def coeffs(x):
        return np.zeros(x.shape[:-1] + (3, 3))

    return ConnectionField(name="flat", coeff_fn=coeffs)


def _hedgehog_coeff_fn(profile: RadialProfile):
    def coeffs(x):
        r = np.linalg.norm(x, axis=-1)
        f = profile.shape(r)
        # A[..., i, a] = f(r) eps_{a i j} x_j
        e = np.einsum("aij,...j->...ia", algebra.EPS, x)
        return f[..., None, None] * e

    return coeffs


def hedgehog(profile: RadialProfile, check_origin: bool = True) -> ConnectionField:
    """The hedgehog field A_i^a(x) = f(r) eps_{a i j} x^j, f = (1-K)/r^2.

    Profiles that are singular at the origin (K(0) != 1) are rejected; pass
    ``check_origin=False`` to build the field anyway for tail-only use.
    """
    if check_origin and not profile.smooth_at_origin:
        raise ProfileError(
            f"profile {profile.name!r} violates K(0)=1; the field would be "
            "singular at the origin (pass check_origin=False for tail-only use)"
        )
    return ConnectionField(
        name=f"hedgehog[{profile.name}]",
        coeff_fn=_hedgehog_coeff_fn(profile),
        params=dict(profile.params),
        profile=profile,
    )


def fast_decay_family(kappa: float, extra_decay: float) -> ConnectionField:
    """Hedgehog with |A| = O(r^{-2-extra_decay}); strictly faster than critical."""
    return hedgehog(fast_decay_profile(kappa, extra_decay))


# --------------------------------------------------------------------------
# gauge transformations


def _beta_gamma(theta):
    """beta = sin(t)/t and gamma = (t cos t - sin t)/t^3, series-guarded."""
    theta = np.asarray(theta, dtype=float)
    beta = np.empty_like(theta)
    gamma = np.empty_like(theta)
    small = theta < 1e-4
    ts = theta[small]
    beta[small] = 1.0 - ts ** 2 / 6.0 + ts ** 4 / 120.0
    gamma[small] = -1.0 / 3.0 + ts ** 2 / 30.0 - ts ** 4 / 840.0
    tl = theta[~small]
    beta[~small] = np.sin(tl) / tl
    gamma[~small] = (tl * np.cos(tl) - np.sin(tl)) / tl ** 3
    return beta, gamma


@dataclass(frozen=True)
class GaugeFunction:
    """A smooth map x -> SU(2) together with its spatial derivative.

    ``value(x)`` has shape (..., 2, 2), ``partials(x)`` shape (..., 3, 2, 2)
    with the first trailing-triple axis the derivative direction.
    """

    value: Callable
    partials: Callable
    name: str = "gauge"

    @classmethod
    def identity(cls):
        def val(x):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            return np.broadcast_to(algebra.IDENTITY2, x.shape[:-1] + (2, 2)).copy()

        def par(x):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            return np.zeros(x.shape[:-1] + (3, 2, 2), dtype=complex)

        return cls(value=val, partials=par, name="identity")

    @classmethod
    def from_algebra(cls, coeff_fn, coeff_grad_fn, name="exp_gauge"):
        """g(x) = exp(sum_a p_a(x) tau_a) with exact derivative.

        ``coeff_fn``: (..., 3) points -> (..., 3) coefficients p.
        ``coeff_grad_fn``: points -> (..., 3, 3) with [..., i, a] = d_i p_a.

        Writing theta = |p|/2, the Rodrigues form g = cos(theta) Id + beta X
        (X the matrix of p, beta = sin(theta)/theta) differentiates to

            d_i g = -beta q_i Id + gamma q_i X + beta dX_i,

        with q_i = (p . d_i p)/4 and gamma = (theta cos - sin)/theta^3; both
        beta and gamma are series-guarded near theta = 0.
        """

        def val(x):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            return algebra.exponential(coeff_fn(x))

        def par(x):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            p = np.asarray(coeff_fn(x), dtype=float)
            dp = np.asarray(coeff_grad_fn(x), dtype=float)
            theta = 0.5 * algebra.coeff_norm(p)
            beta, gamma = _beta_gamma(theta)
            q = np.einsum("...a,...ia->...i", p, dp) / 4.0
            X = algebra.to_matrix(p)
            dX = algebra.to_matrix(dp)  # (..., i, 2, 2)
            out = (
                -(beta[..., None] * q)[..., None, None] * algebra.IDENTITY2
                + (gamma[..., None] * q)[..., None, None] * X[..., None, :, :]
                + beta[..., None, None, None] * dX
            )
            return out

        return cls(value=val, partials=par, name=name)


def gauge_transform(field_in: ConnectionField, gauge: GaugeFunction) -> ConnectionField:
    """A~_i = g A_i g^-1 - (d_i g) g^-1.

    Sampled gauge matrices are checked for unitarity (input error otherwise);
    the returned field evaluates lazily and stays batch-capable.
    """

    def coeffs(x):
        g = gauge.value(x)
        if algebra.unitarity_residual(g) > 1e-8:
            raise ValueError("gauge_transform: non-unitary gauge samples")
        gh = np.conj(np.swapaxes(g, -1, -2))
        a_mat = algebra.to_matrix(field_in.coeff_fn(x))  # (..., i, 2, 2)
        dg = gauge.partials(x)
        out = np.einsum("...jk,...ikl,...ml->...ijm", g, a_mat, np.conj(g))
        out = out - np.einsum("...ijk,...lk->...ijl", dg, np.conj(g))
        return algebra.from_matrix(out)

    return ConnectionField(
        name=f"{field_in.name}~{gauge.name}",
        coeff_fn=coeffs,
        params=dict(field_in.params),
        profile=None,
    )
