"""Independent oracles the tests check the library against.

Everything here is deliberately written along a different computational
path from the package: explicit index loops instead of einsum, Taylor
series with scaling-and-squaring instead of the closed-form exponential,
Cartesian Riemann sums and 1D Simpson instead of the spherical adaptive
engine.
"""

import itertools

import numpy as np

PAULI_ORACLE = [
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]

_PERM_SIGN = {
    (0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1,
    (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1,
}


def eps_oracle(a, b, c):
    """Levi-Civita symbol for 0-based indices, via the permutation table."""
    return _PERM_SIGN.get((a, b, c), 0)


def su2_matrix_oracle(coeffs):
    """sum_a c^a * (-(i/2) sigma_a), assembled entry by entry."""
    c1, c2, c3 = (float(v) for v in coeffs)
    return -0.5j * np.array(
        [[c3, c1 - 1j * c2], [c1 + 1j * c2, -c3]], dtype=complex
    )


def coeffs_from_matrix_oracle(m):
    """Entrywise inversion of su2_matrix_oracle (independent of trace tricks)."""
    c1 = 1j * (m[0, 1] + m[1, 0])
    c2 = m[1, 0] - m[0, 1]
    c3 = 2j * m[0, 0]
    return np.array([c1.real, c2.real, c3.real])


def commutator_oracle(x, y):
    """[X, Y] through explicit 2x2 matrices, coefficients read back out."""
    mx, my = su2_matrix_oracle(x), su2_matrix_oracle(y)
    return coeffs_from_matrix_oracle(mx @ my - my @ mx)


def expm_oracle(m, terms=30):
    """Matrix exponential by scaling-and-squaring on the Taylor series."""
    m = np.asarray(m, dtype=complex)
    norm = np.max(np.abs(m))
    squarings = max(0, int(np.ceil(np.log2(max(norm, 1e-30)))) + 4)
    a = m / (2 ** squarings)
    out = np.eye(m.shape[0], dtype=complex)
    term = np.eye(m.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def brute_contraction_residual(x, sign=+1.0):
    """max |sum eps_bcd eps_cim eps_djn x^m x^n - sign * x^b eps_ijn x^n|."""
    x = np.asarray(x, dtype=float)
    worst = 0.0
    for b, i, j in itertools.product(range(3), repeat=3):
        total = 0.0
        for c, d, m, n in itertools.product(range(3), repeat=4):
            total += (
                eps_oracle(b, c, d) * eps_oracle(c, i, m) * eps_oracle(d, j, n)
                * x[m] * x[n]
            )
        rhs = sign * x[b] * sum(eps_oracle(i, j, n) * x[n] for n in range(3))
        worst = max(worst, abs(total - rhs))
    return worst


def simpson(y, x):
    n = len(x) - 1
    if n % 2 == 1:
        raise ValueError("even interval count required")
    h = x[1] - x[0]
    return h / 3.0 * (y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-1:2]))


def smoothstep_oracle(t):
    t = np.clip(t, 0.0, 1.0)
    return 6 * t ** 5 - 15 * t ** 4 + 10 * t ** 3


def tail_model_norm(coeff, power, R, n=40001):
    """|| (1 - chi_R) C r^-power ||_L3 by 1D radial quadrature.

    Numeric Simpson on [R, 2R] where the cutoff varies, closed form beyond.
    """
    r = np.linspace(R, 2.0 * R, n)
    w = 1.0 - smoothstep_oracle((2.0 * R - r) / R)
    integrand = (w * coeff * r ** (-power)) ** 3 * r * r * 4.0 * np.pi
    inner = simpson(integrand, r)
    s = 3.0 * power - 2.0  # exponent of the pure integrand beyond 2R
    outer = 4.0 * np.pi * coeff ** 3 * (2.0 * R) ** (1.0 - s) / (s - 1.0)
    return (inner + outer) ** (1.0 / 3.0)


def riemann_ball_integral(f, R, n=256, chunk=8):
    """Midpoint Cartesian Riemann sum of f over the ball |x| <= R."""
    edges = np.linspace(-R, R, n + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    cell = (2.0 * R / n) ** 3
    total = 0.0
    for z0 in range(0, n, chunk):
        zs = mids[z0 : z0 + chunk]
        X, Y, Z = np.meshgrid(mids, mids, zs, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)
        inside = np.sum(pts * pts, axis=-1) <= R * R
        if np.any(inside):
            total += float(np.sum(f(pts[inside]))) * cell
    return total


def fit_loglog_slope(x, y):
    coef = np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)
    return float(coef[0])
