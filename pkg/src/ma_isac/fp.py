"""Fractional-programming machinery for the sum-rate constraint.

Two auxiliary variables per user make the rate expression block-concave:
gamma (an SINR surrogate, Lagrangian-dual step) and omega (quadratic
transform).  The reformulated rate

    R2 = sum_k [ log(1+gamma_k) - gamma_k
                 + 2 sqrt(1+gamma_k) sqrt(q_k) Re{conj(omega_k) u_k^H h_k}
                 - |omega_k|^2 * (total received power at filter k) ]

lower-bounds the true sum rate for every (gamma, omega) and is tight after
the closed-form updates below.  The 2*omega*sqrt(.) cross term is printed
without an explicit real part in some treatments; it is implemented as
2*Re{conj(omega) ...} so R2 is always real.
"""
from dataclasses import dataclass

import numpy as np


@dataclass
class FpState:
    gamma: np.ndarray   # (K,) nonnegative SINR surrogates
    omega: np.ndarray   # (K,) complex quadratic-transform auxiliaries


def leakage_power(u_k: np.ndarray, w_mat: np.ndarray, alpha: complex,
                  a_r: np.ndarray, a_t: np.ndarray) -> float:
    """Sensing-probe power leaking into filter u_k:
    || u_k^H alpha a_r a_t^H W ||^2."""
    row = alpha * np.vdot(u_k, a_r) * (a_t.conj() @ w_mat)
    return float(np.sum(np.abs(row) ** 2))


def received_powers(k: int, u: np.ndarray, q: np.ndarray, h: np.ndarray,
                    w_mat: np.ndarray, alpha: complex, a_r: np.ndarray,
                    a_t: np.ndarray, sigma2: float):
    """Per-source powers seen by filter k: (desired, other-user, leak, noise)."""
    u_k = u[k]
    gains = np.abs(h.conj() @ u_k) ** 2          # |u_k^H h_i|^2 for all i
    desired = q[k] * gains[k]
    interference = float(np.sum(q * gains) - desired)
    leak = leakage_power(u_k, w_mat, alpha, a_r, a_t)
    noise = sigma2 * float(np.sum(np.abs(u_k) ** 2))
    return desired, interference, leak, noise


def sinr(k: int, w_mat: np.ndarray, u: np.ndarray, q: np.ndarray,
         h: np.ndarray, alpha: complex, a_r: np.ndarray, a_t: np.ndarray,
         sigma2: float) -> float:
    """Post-filter SINR of user k."""
    desired, interference, leak, noise = received_powers(
        k, u, q, h, w_mat, alpha, a_r, a_t, sigma2)
    denom = interference + leak + noise
    if denom <= 0:
        raise ValueError("degenerate filter: zero interference-plus-noise power")
    return desired / denom


def sum_rate(w_mat, u, q, h, alpha, a_r, a_t, sigma2) -> float:
    """True sum rate in nats."""
    k_users = h.shape[0]
    return float(sum(np.log1p(sinr(k, w_mat, u, q, h, alpha, a_r, a_t, sigma2))
                     for k in range(k_users)))


def update_gamma(k, w_mat, u, q, h, alpha, a_r, a_t, sigma2) -> float:
    """Optimal gamma_k is the current SINR (same expression)."""
    return sinr(k, w_mat, u, q, h, alpha, a_r, a_t, sigma2)


def update_omega(k, w_mat, u, q, h, alpha, a_r, a_t, sigma2,
                 gamma_k: float) -> complex:
    """omega_k = sqrt(1+gamma_k) sqrt(q_k) u_k^H h_k / (total power at k)."""
    desired, interference, leak, noise = received_powers(
        k, u, q, h, w_mat, alpha, a_r, a_t, sigma2)
    denom = desired + interference + leak + noise
    if denom <= 0:
        raise ValueError("degenerate filter: zero total received power")
    return np.sqrt(1.0 + gamma_k) * np.sqrt(q[k]) * np.vdot(u[k], h[k]) / denom


def update_auxiliaries(w_mat, u, q, h, alpha, a_r, a_t, sigma2) -> FpState:
    """Fresh (gamma, omega) at the current primal point; R2 becomes tight."""
    k_users = h.shape[0]
    gamma = np.zeros(k_users)
    omega = np.zeros(k_users, dtype=complex)
    for k in range(k_users):
        gamma[k] = update_gamma(k, w_mat, u, q, h, alpha, a_r, a_t, sigma2)
        omega[k] = update_omega(k, w_mat, u, q, h, alpha, a_r, a_t, sigma2,
                                gamma[k])
    return FpState(gamma, omega)


def r2_value(gamma, omega, w_mat, u, q, h, alpha, a_r, a_t, sigma2) -> float:
    """The reformulated rate R2 at an arbitrary (gamma, omega)."""
    total = 0.0
    for k in range(h.shape[0]):
        desired, interference, leak, noise = received_powers(
            k, u, q, h, w_mat, alpha, a_r, a_t, sigma2)
        full = desired + interference + leak + noise
        cross = 2.0 * np.sqrt(1.0 + gamma[k]) * np.sqrt(q[k]) * \
            (np.conj(omega[k]) * np.vdot(u[k], h[k])).real
        total += np.log1p(gamma[k]) - gamma[k] + cross - abs(omega[k]) ** 2 * full
    return float(total)
