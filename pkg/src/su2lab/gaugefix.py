"""Discrete Coulomb gauge fixing by site-local relaxation on link variables.

The gauge functional on a link configuration is

    F[g] = sum_{links} (1 - (1/2) Re tr V_j(x)),
    V_j(x) = g(x) U_j(x) g(x + h e_j)^dagger,

the compact stand-in for sum ||A~||^2 (they agree to O(h^2 A^2)).  A local
update at site x multiplies the adjacent links by an SU(2) element l; the
trace-maximizing choice is closed-form because a sum W of SU(2) matrices is
a nonnegative multiple of an SU(2) matrix: l* = W^dagger / sqrt(det W).
Sweeps run in red-black order (adjacent sites never share a color), so a
full relaxation sweep (omega = 1) cannot increase the functional;
overrelaxation exponentiates the local rotation, l = exp(omega log l*).

Stationarity of the functional is exactly the vanishing of the backward-
difference divergence of the projected link field

    A_j(x) = (antihermitian traceless part of U_j(x)) / h,

which agrees with the midpoint-sampled connection to O(h^2).  The Coulomb
residual below is the h^3-weighted L^2 norm of that divergence over
interior sites, so relaxation drives it to roundoff rather than to an
O(h^2) floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algebra
from .errors import ConvergenceError
from .lattice import LatticeSpec, LinkField

__all__ = [
    "GaugeTransformField",
    "coulomb_residual",
    "gauge_functional",
    "link_field_l2",
    "plaquette_norms",
    "fix_coulomb",
]


@dataclass
class GaugeTransformField:
    """Per-site SU(2) transformation, shape (n, n, n, 2, 2)."""

    g: np.ndarray
    spec: LatticeSpec

    def unitarity_residual(self) -> float:
        return algebra.unitarity_residual(self.g)


def _link_coeffs(links: LinkField):
    """sin-projected link coefficients divided by h: the lattice A_j on edges."""
    h = links.spec.h
    return [algebra.sin_projection(uj) / h for uj in links.u]


def coulomb_residual(links: LinkField) -> float:
    """h^3-weighted L^2 norm of the discrete divergence over interior sites.

    div(x) = sum_j [A_j(x) - A_j(x - h e_j)] / h with A_j the projected link
    field; interior means every axis index is in [1, n-2] so both edges
    exist.
    """
    spec = links.spec
    n, h = spec.n, spec.h
    a = _link_coeffs(links)
    inner = (slice(1, n - 1),) * 3
    div = np.zeros((n - 2, n - 2, n - 2, 3))
    for j in range(3):
        out_sl = [slice(1, n - 1)] * 3  # link leaving x in +j
        in_sl = [slice(1, n - 1)] * 3  # link entering x from -j
        out_sl[j] = slice(1, n - 1)
        in_sl[j] = slice(0, n - 2)
        div += (a[j][tuple(out_sl)] - a[j][tuple(in_sl)]) / h
    return float(np.sqrt(h ** 3 * np.sum(div * div)))


def gauge_functional(links: LinkField) -> float:
    """sum over links of (1 - (1/2) Re tr U); zero iff every link is identity."""
    total = 0.0
    for uj in links.u:
        total += float(np.sum(1.0 - 0.5 * np.real(np.trace(uj, axis1=-2, axis2=-1))))
    return total


def link_field_l2(links: LinkField) -> float:
    """h^3-weighted L^2 norm of the exact link logs over all edges."""
    h = links.spec.h
    total = 0.0
    for uj in links.u:
        c = algebra.log_unitary(uj) / h
        total += float(np.sum(c * c))
    return float(np.sqrt(h ** 3 * total))


def plaquette_norms(links: LinkField):
    """Pointwise plaquette curvature norms sqrt(sum_pairs |log P_ij|^2) / h^2.

    P_ij(x) = U_i(x) U_j(x+e_i) U_i(x+e_j)^dagger U_j(x)^dagger, evaluated on
    the (n-1)^3 corner block of sites.  Invariant under lattice gauge
    transforms (plaquettes conjugate, and the coefficient norm is
    conjugation invariant).
    """
    spec = links.spec
    n, h = spec.n, spec.h
    m = n - 1

    def corner(arr, shift_axis=None):
        sl = [slice(0, m)] * 3
        if shift_axis is not None:
            sl[shift_axis] = slice(1, m + 1)
        return arr[tuple(sl)]

    total = np.zeros((m, m, m))
    for i, j in ((0, 1), (0, 2), (1, 2)):
        p = np.einsum(
            "...ab,...bc,...dc,...ed->...ae",
            corner(links.u[i]),
            corner(links.u[j], shift_axis=i),
            np.conj(corner(links.u[i], shift_axis=j)),
            np.conj(corner(links.u[j])),
        )
        c = algebra.log_unitary(p)
        total += np.sum(c * c, axis=-1)
    return np.sqrt(total) / h ** 2


def _local_rotation(W, omega):
    """Trace-maximizing SU(2) element for stack W, overrelaxed by omega."""
    det = W[..., 0, 0] * W[..., 1, 1] - W[..., 0, 1] * W[..., 1, 0]
    rho = np.sqrt(np.maximum(np.real(det), 1e-300))
    l_opt = np.conj(np.swapaxes(W, -1, -2)) / rho[..., None, None]
    if omega == 1.0:
        return l_opt, rho
    return algebra.exponential(omega * algebra.log_unitary(l_opt)), rho


def fix_coulomb(
    links: LinkField,
    tol: float = 1e-6,
    max_sweeps: int = 10000,
    omega: float = 1.7,
):
    """Relax to the discrete Coulomb gauge; returns (g, residual_history).

    Red-black sweeps with local trace maximization (overrelaxed by omega);
    terminates when coulomb_residual drops to tol.  A sweep that fails to
    decrease the residual is retried at omega = 1 before being accepted, so
    the recorded history is monotone whenever plain relaxation is.  Raises
    ConvergenceError (carrying g and the history) if max_sweeps is hit.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    spec = links.spec
    n = spec.n
    u = [uj.copy() for uj in links.u]
    g = np.zeros((n, n, n, 2, 2), dtype=complex)
    g[..., 0, 0] = 1.0
    g[..., 1, 1] = 1.0

    idx = np.indices((n, n, n)).sum(axis=0)
    colors = [idx % 2 == 0, idx % 2 == 1]

    def residual():
        return coulomb_residual(LinkField(spec=spec, u=tuple(u)))

    history = [residual()]
    if history[0] <= tol:
        return GaugeTransformField(g=g, spec=spec), history

    def sweep(u_loc, g_loc, om):
        for color in colors:
            W = np.zeros((n, n, n, 2, 2), dtype=complex)
            for j in range(3):
                lo = [slice(None)] * 3
                hi = [slice(None)] * 3
                lo[j] = slice(0, n - 1)
                hi[j] = slice(1, n)
                W[tuple(lo)] += u_loc[j]
                W[tuple(hi)] += np.conj(np.swapaxes(u_loc[j], -1, -2))
            ell = np.zeros_like(W)
            ell[..., 0, 0] = 1.0
            ell[..., 1, 1] = 1.0
            rot, rho = _local_rotation(W[color], om)
            active = rho > 1e-12
            sub = ell[color]
            sub[active] = rot[active]
            ell[color] = sub
            g_loc[color] = np.einsum("...ij,...jk->...ik", ell[color], g_loc[color])
            for j in range(3):
                lo = [slice(None)] * 3
                hi = [slice(None)] * 3
                lo[j] = slice(0, n - 1)
                hi[j] = slice(1, n)
                u_loc[j] = np.einsum("...ij,...jk->...ik", ell[tuple(lo)], u_loc[j])
                u_loc[j] = np.einsum(
                    "...ij,...kj->...ik", u_loc[j], np.conj(ell[tuple(hi)])
                )

    for _ in range(max_sweeps):
        u_try = [uj.copy() for uj in u]
        g_try = g.copy()
        try:
            sweep(u_try, g_try, omega)
            r_try = coulomb_residual(LinkField(spec=spec, u=tuple(u_try)))
            retry = r_try >= history[-1] and omega != 1.0
        except ValueError:
            # overrelaxed local rotation hit the angle-pi branch cut
            retry = True
        if retry:
            u_try = [uj.copy() for uj in u]
            g_try = g.copy()
            sweep(u_try, g_try, 1.0)
            r_try = coulomb_residual(LinkField(spec=spec, u=tuple(u_try)))
        u, g = u_try, g_try
        history.append(r_try)
        if r_try <= tol:
            return GaugeTransformField(g=g, spec=spec), history
    raise ConvergenceError(
        f"coulomb relaxation did not reach tol={tol} in {max_sweeps} sweeps",
        best=GaugeTransformField(g=g, spec=spec),
        history=history,
    )
