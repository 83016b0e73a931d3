"""Exact su(2) coefficient algebra in the antihermitian tau basis.

An algebra element X = sum_a c^a tau_a is stored as its three real
coefficients c = (c^1, c^2, c^3).  The concrete basis is

    tau_a = -(i/2) sigma_a            (sigma_a the Pauli matrices),

which realizes the structure constants

    [tau_a, tau_b] = eps_abc tau_c

exactly, so the commutator of two elements is the cross product of their
coefficient vectors.  Throughout the package |X| means the Euclidean norm
of the coefficients; any fixed norm choice only rescales constants, never
decay exponents.

All functions accept batched input: a trailing axis of length 3 for
coefficient vectors, trailing (2, 2) for matrices.
"""

from __future__ import annotations

import numpy as np

PAULI = np.array(
    [
        [[0.0, 1.0], [1.0, 0.0]],
        [[0.0, -1.0j], [1.0j, 0.0]],
        [[1.0, 0.0], [0.0, -1.0]],
    ],
    dtype=complex,
)

TAU = -0.5j * PAULI

IDENTITY2 = np.eye(2, dtype=complex)

# eps[a, b, c] = sign of the permutation (a, b, c) of (0, 1, 2)
EPS = np.zeros((3, 3, 3))
EPS[0, 1, 2] = EPS[1, 2, 0] = EPS[2, 0, 1] = 1.0
EPS[0, 2, 1] = EPS[2, 1, 0] = EPS[1, 0, 2] = -1.0

# Rodrigues formula switches to a truncated series below this coefficient norm;
# the 3-term series keeps the relative error under 1e-12 there.
SMALL_ANGLE = 1e-6


def levi_civita(a: int, b: int, c: int) -> int:
    """Alternating symbol for 1-based indices in {1, 2, 3}.

    Returns the sign of the permutation (a, b, c), or 0 on a repeated index.
    """
    for idx in (a, b, c):
        if idx not in (1, 2, 3):
            raise ValueError(f"levi_civita index out of range: {idx}")
    return int(EPS[a - 1, b - 1, c - 1])


def coeff_norm(c):
    """Euclidean norm of the coefficient vector(s); |X| in the text above."""
    c = np.asarray(c, dtype=float)
    return np.sqrt(np.sum(c * c, axis=-1))


def commutator(x, y):
    """Coefficients of [X, Y]: the cross product of the coefficient vectors.

    z^c = sum_{a,b} eps_abc x^a y^b; bilinear and antisymmetric.
    """
    return np.cross(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def to_matrix(c):
    """The 2x2 matrix sum_a c^a tau_a (traceless, skew-Hermitian)."""
    return np.einsum("...a,aij->...ij", np.asarray(c, dtype=float), TAU)


def from_matrix(m):
    """Invert to_matrix: coefficients c^a = Re[i tr(sigma_a M)].

    Only valid for (numerically) traceless skew-Hermitian input; any
    Hermitian or trace component is silently projected out.
    """
    m = np.asarray(m, dtype=complex)
    return np.real(1j * np.einsum("aij,...ji->...a", PAULI, m))


def exponential(c):
    """Group exponential exp(sum_a c^a tau_a) via the su(2) Rodrigues formula.

    exp(X) = cos(|c|/2) Id + (sin(|c|/2)/(|c|/2)) X, with the |c| -> 0 limit
    handled by a short series.  The result is unitary with determinant one.
    """
    c = np.asarray(c, dtype=float)
    theta = 0.5 * coeff_norm(c)
    beta = np.empty_like(theta)
    small = theta < 0.5 * SMALL_ANGLE
    ts = theta[small]
    beta[small] = 1.0 - ts * ts / 6.0 + ts ** 4 / 120.0
    tl = theta[~small]
    beta[~small] = np.sin(tl) / tl
    out = np.cos(theta)[..., None, None] * IDENTITY2
    out = out + beta[..., None, None] * to_matrix(c)
    return out


def log_unitary(u):
    """Coefficients c with exponential(c) == u, for u in SU(2).

    Uses c = 2 theta n where u = cos(theta) Id - i sin(theta) (n . sigma).
    Ill-conditioned only at theta = pi (rotation axis undetermined), which
    is rejected.
    """
    u = np.asarray(u, dtype=complex)
    t = np.clip(np.real(np.trace(u, axis1=-2, axis2=-1)) / 2.0, -1.0, 1.0)
    s = sin_projection(u) / 2.0  # sin(theta) * n
    sn = np.sqrt(np.sum(s * s, axis=-1))
    theta = np.arctan2(sn, t)
    bad = (sn < 1e-12) & (t < 0.0)
    if np.any(bad):
        raise ValueError("log_unitary: rotation angle at pi, axis undetermined")
    factor = np.empty_like(theta)
    small = sn < 1e-7
    factor[small] = 2.0 * (1.0 + sn[small] ** 2 / 6.0)
    factor[~small] = 2.0 * theta[~small] / sn[~small]
    return factor[..., None] * s


def sin_projection(u):
    """Coefficients of the traceless skew-Hermitian part of u.

    For u = exp(X) this equals (sin(theta)/theta) * coeffs(X) with
    theta = |coeffs(X)|/2, i.e. it agrees with log_unitary to O(theta^2).
    """
    u = np.asarray(u, dtype=complex)
    anti = 0.5 * (u - np.conj(np.swapaxes(u, -1, -2)))
    return from_matrix(anti)


def unitarity_residual(u):
    """max |u^H u - Id| entrywise, plus |det u - 1|; diagnostic for SU(2)-ness."""
    u = np.asarray(u, dtype=complex)
    uhu = np.einsum("...ji,...jk->...ik", np.conj(u), u)
    r1 = np.max(np.abs(uhu - IDENTITY2))
    det = u[..., 0, 0] * u[..., 1, 1] - u[..., 0, 1] * u[..., 1, 0]
    r2 = np.max(np.abs(det - 1.0))
    return max(float(r1), float(r2))


def contraction_identity_check(x) -> float:
    """Max-abs residual of the double eps-contraction identity.

    Checks, by exhaustive summation over all index tuples,

        sum_{c,d,m,n} eps_bcd eps_cim eps_djn x^m x^n  ==  x^b eps_ijn x^n

    over all (b, i, j).  The plus sign on the right-hand side is the one the
    exhaustive sum actually produces (a delta-contraction gives
    eps_bcd eps_cim = delta_bm delta_di - delta_bi delta_dm, whose second
    term dies against the symmetric x^m x^n).  The hedgehog curvature closed
    form in the curvature module relies on this sign; this check exists so
    the identity is verified rather than assumed.
    """
    x = np.asarray(x, dtype=float)
    lhs = np.einsum("bcd,cim,djn,m,n->bij", EPS, EPS, EPS, x, x)
    rhs = np.einsum("b,ijn,n->bij", x, EPS, x)
    return float(np.max(np.abs(lhs - rhs)))
