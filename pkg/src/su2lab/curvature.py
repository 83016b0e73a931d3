"""Curvature F = dA + A ^ A of a connection, and decay-exponent fits.

Componentwise F_ij = d_i A_j - d_j A_i + [A_i, A_j].  The tensor is
antisymmetric in (i, j); it is stored upper-triangular over the pairs
(1,2), (1,3), (2,3) and reconstructed with a sign.

For the hedgehog ansatz A_j^b = f(r) eps_{b j k} x^k the curvature has the
closed form

    F_ij^b = f'(r) (xhat_i eps_{b j k} x^k - xhat_j eps_{b i k} x^k)
             - 2 f(r) eps_{b i j}
             + f(r)^2 x^b eps_{i j n} x^n ,

where the plus sign on the commutator term is fixed by the eps-contraction
identity verified in algebra.contraction_identity_check (the minus-sign
variant is exposed through ``commutator_sign`` for side-by-side comparison;
it disagrees with the finite-difference curvature at O(1/r) relative).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import numpy as np

from . import algebra
from .errors import DegenerateFitError
from .fields import ConnectionField, RadialProfile, fd_step

__all__ = [
    "PAIRS",
    "CurvatureTensor",
    "curvature_numeric",
    "curvature_numeric_coeffs",
    "curvature_analytic_hedgehog",
    "hedgehog_curvature_coeffs",
    "curvature_norm",
    "DecayFit",
    "decay_exponent_fit",
    "sphere_direction_set",
    "QUANTITIES",
]

PAIRS = ((0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class CurvatureTensor:
    """Antisymmetric curvature components at one point.

    ``pair_components[p, a]`` holds F_ij^a for (i, j) the p-th entry of
    PAIRS; ``component(i, j)`` reconstructs any (i, j) with the sign.
    """

    point: np.ndarray
    pair_components: np.ndarray

    def component(self, i: int, j: int) -> np.ndarray:
        if i == j:
            return np.zeros(3)
        if (i, j) in PAIRS:
            return self.pair_components[PAIRS.index((i, j))]
        return -self.pair_components[PAIRS.index((j, i))]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.pair_components ** 2)))


def curvature_numeric_coeffs(field: ConnectionField, x, h):
    """Batched numeric curvature, shape (..., 3, 3) over (pair, algebra).

    Derivative terms by central differences with step h (O(h^2) for smooth
    fields); the commutator term is exact.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    h = float(h)
    if h <= 0:
        raise ValueError("curvature step h must be positive")
    a = field.coeff_fn(x)  # (..., i, a)
    grads = []
    for i in range(3):
        step = np.zeros_like(x)
        step[..., i] = h
        grads.append((field.coeff_fn(x + step) - field.coeff_fn(x - step)) / (2.0 * h))
    out = np.empty(x.shape[:-1] + (3, 3))
    for p, (i, j) in enumerate(PAIRS):
        comm = algebra.commutator(a[..., i, :], a[..., j, :])
        out[..., p, :] = grads[i][..., j, :] - grads[j][..., i, :] + comm
    return out


def curvature_numeric(field: ConnectionField, x, h: float) -> CurvatureTensor:
    """Numeric curvature at a single point."""
    x = np.asarray(x, dtype=float)
    comps = curvature_numeric_coeffs(field, x[None, :], h)[0]
    return CurvatureTensor(point=x, pair_components=comps)


def hedgehog_curvature_coeffs(profile: RadialProfile, x, commutator_sign: float = 1.0):
    """Batched closed-form hedgehog curvature, shape (..., 3, 3).

    ``commutator_sign`` scales the f^2 x^b eps_{ijn} x^n term; +1 is the
    verified sign, -1 the flipped variant kept for comparison output.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.linalg.norm(x, axis=-1)
    if not profile.smooth_at_origin and np.any(r == 0.0):
        raise ValueError("singular profile evaluated at the origin")
    f = profile.shape(r)
    fp = profile.shape_prime(r)
    with np.errstate(invalid="ignore", divide="ignore"):
        xhat = np.where(r[..., None] > 0.0, x / np.maximum(r, 1e-300)[..., None], 0.0)
    exk = np.einsum("bjk,...k->...bj", algebra.EPS, x)  # eps_{b j k} x^k
    exn = np.einsum("ijn,...n->...ij", algebra.EPS, x)  # eps_{i j n} x^n
    out = np.empty(x.shape[:-1] + (3, 3))
    for p, (i, j) in enumerate(PAIRS):
        t1 = fp[..., None] * (
            xhat[..., i, None] * exk[..., :, j] - xhat[..., j, None] * exk[..., :, i]
        )
        t2 = -2.0 * f[..., None] * algebra.EPS[:, i, j]
        t3 = commutator_sign * (f ** 2 * exn[..., i, j])[..., None] * x
        out[..., p, :] = t1 + t2 + t3
    return out


def curvature_analytic_hedgehog(
    profile: RadialProfile, x, commutator_sign: float = 1.0
) -> CurvatureTensor:
    """Closed-form hedgehog curvature at a single point."""
    x = np.asarray(x, dtype=float)
    comps = hedgehog_curvature_coeffs(profile, x[None, :], commutator_sign)[0]
    return CurvatureTensor(point=x, pair_components=comps)


def curvature_norm(coeffs):
    """|F| = sqrt(sum over pairs and algebra index) for batched coefficients."""
    return np.sqrt(np.sum(np.asarray(coeffs) ** 2, axis=(-2, -1)))


# --------------------------------------------------------------------------
# decay-exponent fitting

_CUBE_DIRS = None


def _cube_directions():
    global _CUBE_DIRS
    if _CUBE_DIRS is None:
        dirs = []
        for ix in (-1, 0, 1):
            for iy in (-1, 0, 1):
                for iz in (-1, 0, 1):
                    if ix == iy == iz == 0:
                        continue
                    v = np.array([ix, iy, iz], dtype=float)
                    dirs.append(v / np.linalg.norm(v))
        _CUBE_DIRS = np.array(dirs)  # 26 directions
    return _CUBE_DIRS


def sphere_direction_set(seed: int = 0, extra: int = 50):
    """Fixed angular sample set: 26 cube directions + ``extra`` seeded ones."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((extra, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return np.vstack([_cube_directions(), v])


QUANTITIES = ("A", "F", "gradA", "AwedgeA")


def _quantity_norms(field: ConnectionField, pts, quantity: str):
    if quantity == "A":
        return field.norm(pts)
    if quantity == "F":
        r = np.linalg.norm(pts, axis=-1)
        h = float(np.min(fd_step(r)))
        return curvature_norm(curvature_numeric_coeffs(field, pts, h))
    if quantity == "gradA":
        return field.grad_norm_fd(pts)
    if quantity == "AwedgeA":
        a = field.coefficients(pts)
        sq = 0.0
        for i, j in PAIRS:
            comm = algebra.commutator(a[..., i, :], a[..., j, :])
            sq = sq + np.sum(comm * comm, axis=-1)
        return np.sqrt(sq)
    raise ValueError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    residual: float
    radii: np.ndarray
    values: np.ndarray

    @property
    def power_law_ok(self) -> bool:
        # RMS log-residual above 0.1 flags non-power-law behavior
        return self.residual <= 0.1


def decay_exponent_fit(
    field: ConnectionField,
    quantity: str,
    r_min: float,
    r_max: float,
    samples: int,
    *,
    seed: int = 0,
    threads: int = 1,
) -> DecayFit:
    """Fit log(max-over-sphere norm) against log(r) on log-spaced radii.

    Returns slope (the decay exponent), intercept, and the RMS fit residual.
    Raises DegenerateFitError when the quantity carries no signal on the
    sampled range (the flat-field case).
    """
    if r_min < 1.0:
        raise ValueError("r_min must be >= 1")
    if r_max <= 2.0 * r_min:
        raise ValueError("r_max must exceed 2 * r_min")
    if samples < 8:
        raise ValueError("need at least 8 radial samples")
    dirs = sphere_direction_set(seed)
    radii = np.geomspace(r_min, r_max, samples)

    def one(r):
        return float(np.max(_quantity_norms(field, r * dirs, quantity)))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            values = np.array(list(ex.map(one, radii)))
    else:
        values = np.array([one(r) for r in radii])
    if np.max(values) <= 0.0:
        raise DegenerateFitError(
            f"quantity {quantity!r} vanishes on [{r_min}, {r_max}]; nothing to fit"
        )
    logs = np.log(values)
    logr = np.log(radii)
    design = np.column_stack([logr, np.ones_like(logr)])
    coef, *_ = np.linalg.lstsq(design, logs, rcond=None)
    resid = float(np.sqrt(np.mean((logs - design @ coef) ** 2)))
    return DecayFit(
        slope=float(coef[0]),
        intercept=float(coef[1]),
        residual=resid,
        radii=radii,
        values=values,
    )
