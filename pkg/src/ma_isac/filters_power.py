"""Closed-form receive-filter and user-power updates.

Both blocks maximize the margin of the reformulated rate constraint at
fixed everything-else, and both decompose per user: the filter block is an
unconstrained convex quadratic solved by one Hermitian system per user,
the power block a 1-D quadratic in sqrt(q) clamped to the power box.
"""
import numpy as np

from . import linalg


def update_filters(gamma, omega, w_mat, q, h, alpha, a_r, a_t, sigma2,
                   u_prev) -> np.ndarray:
    """u_k = D_k^{-1} d_k with
    D_k = |omega_k|^2 (sum_i q_i h_i h_i^H + leak + sigma2 I)
    d_k = sqrt(1+gamma_k) conj(omega_k) sqrt(q_k) h_k.

    A user with omega_k = 0 has a degenerate (all-zero) subproblem; its
    filter is left unchanged.
    """
    k_users, n_r = h.shape
    base = (h.T * q) @ h.conj()                       # sum_i q_i h_i h_i^H
    g = a_t.conj() @ w_mat
    base = base + abs(alpha) ** 2 * float(np.sum(np.abs(g) ** 2)) * \
        np.outer(a_r, a_r.conj())
    base = base + sigma2 * np.eye(n_r)
    base = 0.5 * (base + base.conj().T)
    u_new = np.array(u_prev, dtype=complex, copy=True)
    for k in range(k_users):
        if omega[k] == 0:
            continue
        quad = abs(omega[k]) ** 2 * base
        lin = np.sqrt(1.0 + gamma[k]) * np.conj(omega[k]) * np.sqrt(q[k]) * h[k]
        u_new[k] = linalg.solve_hermitian(quad, lin)
    return u_new


def power_coefficients(gamma, omega, u, h):
    """(a5, a6): quadratic and linear coefficients of the per-user margin
    objective a5_k * q_k - a6_k * sqrt(q_k)."""
    cross = u.conj() @ h.T                      # [j, i] = u_j^H h_i
    w2 = np.abs(omega) ** 2
    a5 = w2 @ (np.abs(cross) ** 2)              # indexed by the channel i
    own = np.diagonal(cross)
    a6 = 2.0 * np.sqrt(1.0 + gamma) * (np.conj(omega) * own).real
    return a5, a6


def optimal_power(a5: float, a6: float, p_max: float) -> float:
    """Minimizer of a5*q - a6*sqrt(q) over [0, p_max].

    In p = sqrt(q) the objective is a parabola whose vertex a6/(2*a5) is
    clamped to [0, sqrt(p_max)].  The a5 = 0 corner (objective linear in
    p) falls back to full power when transmitting helps, else zero.
    """
    if a5 <= 0.0:
        return p_max if a6 > 0 else 0.0
    p = min(max(a6 / (2.0 * a5), 0.0), np.sqrt(p_max))
    return p * p


def update_powers(gamma, omega, u, h, p_user) -> np.ndarray:
    a5, a6 = power_coefficients(gamma, omega, u, h)
    return np.array([optimal_power(a5[k], a6[k], p_user[k])
                     for k in range(len(p_user))])
