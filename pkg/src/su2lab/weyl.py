"""Shell-supported Weyl packets and the scaling law that probes sigma_ess near 0.

A packet is psi_R(x) = Phi_R(|x|) v with Phi_R(r) = c_R phi((r - R)/w), phi a
smooth bump supported in [-1, 1] with phi(0) = 1, and c_R fixed by exact
radial quadrature of the L^2 normalization.  Acting with the covariant
Laplacian and splitting by order,

    Delta_A psi = -[ (Phi'' + (2/r) Phi') v
                     + 2 Phi' (xhat . A) v
                     + Phi (div A) v
                     + Phi (sum_j A_j^2) v ],

whose four term norms scale like 1/w^2, 1/(R^2 w), R^-3 and R^-4 on the
critical hedgehog; the cross and divergence terms vanish identically there
(tangentiality and divergence-freeness of the ansatz).  With the width rule
w(R) = sqrt(R) the total decays like 1/R, which is the mechanism that puts 0
in the essential spectrum at the critical decay rate.

Also hosts the curvature-adjusted Kato-inequality checker: the smallest C
with |d_A psi|^2 >= |grad|psi||^2 - C (|F_A| + |A|^2) |psi|^2 pointwise on a
sample set.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import algebra
from .curvature import curvature_norm, curvature_numeric_coeffs
from .errors import AccuracyError
from .fields import ConnectionField
from .quadrature import Shell, integrate_channels, _leggauss

__all__ = [
    "BumpProfile",
    "standard_bump",
    "WeylPacket",
    "build_packet",
    "PacketSpinor",
    "GaussianSpinorSum",
    "TermNorms",
    "laplacian_term_norms",
    "WeylScanRow",
    "WeylScan",
    "weyl_scaling_scan",
    "KatoResult",
    "kato_deficit",
]


@dataclass(frozen=True)
class BumpProfile:
    """Smooth bump phi supported in [-1, 1] with phi(0) = 1, and derivatives."""

    phi: Callable
    dphi: Callable
    d2phi: Callable
    name: str = "bump"

    def moment(self, power: int = 0, n: int = 4001) -> float:
        """integral of s^power phi(s)^2 over [-1, 1] (composite Simpson)."""
        s = np.linspace(-1.0, 1.0, n)
        y = s ** power * self.phi(s) ** 2
        return float(_simpson(y, s))

    @property
    def i0(self) -> float:
        return self.moment(0)


def _simpson(y, x):
    n = len(x) - 1
    if n % 2 == 1:
        raise ValueError("simpson needs an even interval count")
    h = x[1] - x[0]
    return h / 3.0 * (y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-1:2]))


def standard_bump() -> BumpProfile:
    """phi(s) = exp(1 - 1/(1 - s^2)) inside (-1, 1), zero outside."""

    def phi(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
        return out

    def _g(si):
        # phi' = g phi with g = -2s/(1-s^2)^2
        return -2.0 * si / (1.0 - si * si) ** 2

    def dphi(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        out[inside] = _g(si) * np.exp(1.0 - 1.0 / (1.0 - si * si))
        return out

    def d2phi(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        g = _g(si)
        gp = (-2.0 - 6.0 * si * si) / (1.0 - si * si) ** 3
        out[inside] = (gp + g * g) * np.exp(1.0 - 1.0 / (1.0 - si * si))
        return out

    return BumpProfile(phi=phi, dphi=dphi, d2phi=d2phi, name="exp_bump")


@dataclass(frozen=True)
class WeylPacket:
    """Normalized radial shell packet Phi_R(r) = c phi((r - R)/w) times spinor v."""

    bump: BumpProfile
    R: float
    w: float
    c: float
    v: np.ndarray

    def profile(self, r):
        return self.c * self.bump.phi((np.asarray(r, dtype=float) - self.R) / self.w)

    def profile_prime(self, r):
        return (self.c / self.w) * self.bump.dphi(
            (np.asarray(r, dtype=float) - self.R) / self.w
        )

    def profile_second(self, r):
        return (self.c / self.w ** 2) * self.bump.d2phi(
            (np.asarray(r, dtype=float) - self.R) / self.w
        )

    def support(self):
        return (self.R - self.w, self.R + self.w)

    def spinor(self) -> "PacketSpinor":
        return PacketSpinor(self)


def _shell_mass(bump: BumpProfile, R: float, w: float) -> float:
    """4 pi integral of phi((r-R)/w)^2 r^2 dr, by Gauss-Legendre on [-1, 1]."""
    nodes, wts = _leggauss(80)
    s = nodes
    r = R + w * s
    vals = bump.phi(s) ** 2 * r * r
    return 4.0 * np.pi * w * float(np.dot(wts, vals))


def build_packet(bump: BumpProfile, R: float, w: float, v=(1.0, 0.0)) -> WeylPacket:
    """Packet with c fixed so that the full-space L^2 norm is exactly one.

    Requires 0 < w < R/2 so the shell stays clear of the origin region.
    """
    if not (0.0 < w < R / 2.0):
        raise ValueError("build_packet requires 0 < w < R/2")
    v = np.asarray(v, dtype=complex)
    nv = np.sqrt(np.sum(np.abs(v) ** 2))
    if nv == 0.0:
        raise ValueError("spinor v must be nonzero")
    mass = _shell_mass(bump, R, w)
    return WeylPacket(bump=bump, R=R, w=w, c=1.0 / np.sqrt(mass), v=v / nv)


class PacketSpinor:
    """psi(x) = Phi_R(|x|) v with analytic gradient, for quadrature consumers."""

    def __init__(self, packet: WeylPacket):
        self.packet = packet

    def value(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r = np.linalg.norm(pts, axis=-1)
        return self.packet.profile(r)[:, None] * self.packet.v

    def gradient(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r = np.linalg.norm(pts, axis=-1)
        rs = np.maximum(r, 1e-300)
        xhat = pts / rs[:, None]
        dp = self.packet.profile_prime(r)
        return (dp[:, None] * xhat)[:, :, None] * self.packet.v


class GaussianSpinorSum:
    """Sum of Gaussian bumps with fixed spinor directions; analytic gradient.

    psi(x) = sum_k a_k exp(-|x - p_k|^2 / s_k^2) u_k.  Used as a generic
    smooth, non-radial test section.
    """

    def __init__(self, amplitudes, centers, widths, spinors):
        self.a = np.asarray(amplitudes, dtype=complex)
        self.p = np.asarray(centers, dtype=float)
        self.s = np.asarray(widths, dtype=float)
        self.u = np.asarray(spinors, dtype=complex)

    @classmethod
    def random(cls, seed: int, n_bumps: int = 3, spread: float = 3.0):
        rng = np.random.default_rng(seed)
        amp = rng.standard_normal(n_bumps) + 1j * rng.standard_normal(n_bumps)
        ctr = spread * rng.standard_normal((n_bumps, 3))
        wid = 1.0 + rng.random(n_bumps)
        spn = rng.standard_normal((n_bumps, 2)) + 1j * rng.standard_normal((n_bumps, 2))
        spn /= np.linalg.norm(spn, axis=1, keepdims=True)
        return cls(amp, ctr, wid, spn)

    def value(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d = pts[:, None, :] - self.p[None, :, :]
        e = np.exp(-np.sum(d * d, axis=-1) / self.s ** 2)
        return np.einsum("k,nk,ka->na", self.a, e, self.u)

    def gradient(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d = pts[:, None, :] - self.p[None, :, :]
        e = np.exp(-np.sum(d * d, axis=-1) / self.s ** 2)
        pref = -2.0 * d / self.s[None, :, None] ** 2
        return np.einsum("k,nk,nki,ka->nia", self.a, e, pref, self.u)


# --------------------------------------------------------------------------
# term norms of Delta_A psi_R


class TermNorms(NamedTuple):
    lap: float
    cross: float
    div: float
    asq: float
    total: float
    pairing: float  # <Delta_A psi, psi>, for the Rayleigh identity
    quad_error: float


def laplacian_term_norms(
    packet: WeylPacket, field: ConnectionField, *, rtol: float = 1e-11
) -> TermNorms:
    """L^2 norms of the four terms of Delta_A psi_R, plus the true total.

    All five are shell integrals over the packet support; the divergence
    enters by central differences (no analytic gradient is required of a
    ConnectionField).  ``total`` is the norm of the pointwise sum, not the
    triangle-inequality bound.  ``pairing`` is <Delta_A psi, psi>.
    """
    v = packet.v

    def chan(pts):
        r = np.linalg.norm(pts, axis=-1)
        rs = np.maximum(r, 1e-300)
        xhat = pts / rs[:, None]
        phi = packet.profile(r)
        dphi = packet.profile_prime(r)
        d2phi = packet.profile_second(r)
        amat = field.matrices(pts)  # (n, 3, 2, 2)
        lap_vec = (d2phi + 2.0 * dphi / rs)[:, None] * v
        m = np.einsum("ni,nijk->njk", xhat, amat)
        cross_vec = 2.0 * dphi[:, None] * np.einsum("njk,k->nj", m, v)
        divc = field.divergence_fd(pts)
        div_vec = phi[:, None] * np.einsum("njk,k->nj", algebra.to_matrix(divc), v)
        asq_mat = np.einsum("nijk,nikl->njl", amat, amat)
        asq_vec = phi[:, None] * np.einsum("njk,k->nj", asq_mat, v)
        total_vec = lap_vec + cross_vec + div_vec + asq_vec
        psi_vec = phi[:, None] * v
        out = np.empty((pts.shape[0], 6))
        out[:, 0] = np.sum(np.abs(lap_vec) ** 2, axis=-1)
        out[:, 1] = np.sum(np.abs(cross_vec) ** 2, axis=-1)
        out[:, 2] = np.sum(np.abs(div_vec) ** 2, axis=-1)
        out[:, 3] = np.sum(np.abs(asq_vec) ** 2, axis=-1)
        out[:, 4] = np.sum(np.abs(total_vec) ** 2, axis=-1)
        # Delta_A psi = -(total_vec); pairing with psi stays sign-correct
        out[:, 5] = -np.real(np.sum(np.conj(total_vec) * psi_vec, axis=-1))
        return out

    lo, hi = packet.support()
    vals, errs = integrate_channels(
        chan, 6, Shell(max(lo, 0.0), hi), rtol=rtol, angular_check=False
    )
    sq = np.sqrt(np.maximum(vals[:5], 0.0))
    return TermNorms(
        lap=float(sq[0]),
        cross=float(sq[1]),
        div=float(sq[2]),
        asq=float(sq[3]),
        total=float(sq[4]),
        pairing=float(vals[5]),
        quad_error=float(np.max(errs)),
    )


class WeylScanRow(NamedTuple):
    R: float
    w: float
    norm_ratio: float  # c_R * sqrt(4 pi R^2 w I0)
    lap: float
    cross: float
    div: float
    asq: float
    total: float
    pairing: float


class WeylScan(NamedTuple):
    rows: list
    slope: float
    intercept: float


def weyl_scaling_scan(
    bump: BumpProfile,
    field: ConnectionField,
    R_list: Sequence[float],
    width_rule: Callable,
    *,
    v=(1.0, 0.0),
    rtol: float = 1e-11,
    threads: int = 1,
) -> WeylScan:
    """Term norms across R with w = width_rule(R); fits log(total) vs log(R)."""
    R_list = list(R_list)
    if any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ValueError("R_list must be increasing")
    for R in R_list:
        if not (0.0 < width_rule(R) < R / 2.0):
            raise ValueError(f"width rule gives w outside (0, R/2) at R={R}")
    i0 = bump.i0

    def one(R):
        w = width_rule(R)
        packet = build_packet(bump, R, w, v=v)
        tn = laplacian_term_norms(packet, field, rtol=rtol)
        ratio = packet.c * np.sqrt(4.0 * np.pi * R * R * w * i0)
        return WeylScanRow(R, w, float(ratio), tn.lap, tn.cross, tn.div, tn.asq, tn.total, tn.pairing)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(one, R_list))
    else:
        rows = [one(R) for R in R_list]
    totals = np.array([row.total for row in rows])
    if np.any(totals <= 0.0):
        raise AccuracyError("total norms underflowed the quadrature floor", partial=rows)
    logr = np.log(np.array(R_list, dtype=float))
    design = np.column_stack([logr, np.ones_like(logr)])
    coef, *_ = np.linalg.lstsq(design, np.log(totals), rcond=None)
    return WeylScan(rows=rows, slope=float(coef[0]), intercept=float(coef[1]))


# --------------------------------------------------------------------------
# curvature-adjusted Kato inequality


class KatoResult(NamedTuple):
    min_c: float
    worst_point: np.ndarray


def kato_deficit(
    field: ConnectionField,
    psi,
    points,
    *,
    curvature_h: float = 1e-4,
) -> KatoResult:
    """Smallest C with |d_A psi|^2 >= |grad|psi||^2 - C (|F| + |A|^2) |psi|^2.

    Evaluated pointwise on the sample set; equals the clamped maximum of
    (|grad|psi||^2 - |d_A psi|^2) / ((|F| + |A|^2) |psi|^2).  Points where
    psi (numerically) vanishes are skipped; where the curvature-potential
    weight vanishes the inequality reduces to the diamagnetic bound and the
    point contributes zero.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    v = np.asarray(psi.value(pts))
    g = np.asarray(psi.gradient(pts))
    mod2 = np.sum(np.abs(v) ** 2, axis=-1)
    keep = mod2 > 1e-14 * max(float(np.max(mod2)), 1e-300)
    if not np.any(keep):
        raise ValueError("kato_deficit: psi vanishes on the whole sample set")
    pts, v, g, mod2 = pts[keep], v[keep], g[keep], mod2[keep]
    amat = field.matrices(pts)
    cov = g + np.einsum("nijk,nk->nij", amat, v)
    cov2 = np.sum(np.abs(cov) ** 2, axis=(-2, -1))
    inner = np.sum(np.real(np.conj(v)[:, None, :] * g), axis=-1)  # Re(psi^H d_j psi)
    grad_mod = np.sum(inner * inner, axis=-1) / mod2  # |grad |psi||^2
    fnorm = curvature_norm(curvature_numeric_coeffs(field, pts, curvature_h))
    a2 = field.norm(pts) ** 2
    weight = (fnorm + a2) * mod2
    ratio = np.zeros(len(pts))
    ok = weight > 1e-300
    ratio[ok] = (grad_mod[ok] - cov2[ok]) / weight[ok]
    ratio = np.where(ratio > 0.0, ratio, 0.0)
    idx = int(np.argmax(ratio))
    return KatoResult(min_c=float(ratio[idx]), worst_point=pts[idx].copy())
