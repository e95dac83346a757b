"""Fisher information and Cramer-Rao bound for the target angle.

The echo model is Y = alpha * a_r(theta0) a_t(theta0)^H W S + N over L
probing slots.  Everything the bound needs reduces to three transmit-side
trace kernels (ktt, kta, kaa): with Wt = W W^H,

    F_theta_theta ~ tr(ktt Wt),   F_theta_alpha ~ tr(kta Wt),
    F_alpha_alpha ~ tr(kaa Wt),

where the receive-side geometry enters the kernels only through sums of
the element positions d_r and their squares.
"""
from dataclasses import dataclass

import numpy as np

from .channel import steering, transmit_positions

# tr(kaa Wt) below this relative level means the probe is orthogonal to the
# target direction; the ratio term's limit is taken as zero.
DEGENERATE_RTOL = 1e-14


def coefficient_matrices(d_r: np.ndarray, a_t: np.ndarray, a_t_dot: np.ndarray,
                         theta0: float, wavelength: float,
                         beta_r: complex = 1.0 + 0.0j):
    """Transmit-side trace kernels (ktt, kta, kaa) for the FIM blocks.

    Built from the receive-steering inner products, which collapse to
    moments of the positions: with c = 2*pi/lambda * cos(theta0) and
    br2 = |beta_r|^2,

        ktt = br2 * [ c^2*sum(d^2) a a^H - j*c*sum(d) a adot^H
                      + j*c*sum(d) adot a^H + n_r adot adot^H ]
        kta = br2 * [ -j*c*sum(d) a a^H + n_r adot a^H ]
        kaa = br2 * n_r * a a^H
    """
    d_r = np.asarray(d_r, dtype=float)
    n_r = d_r.size
    c = (2 * np.pi / wavelength) * np.cos(theta0)
    s1 = np.sum((c * d_r) ** 2)
    s2 = c * np.sum(d_r)
    br2 = abs(beta_r) ** 2
    a_outer = np.outer(a_t, a_t.conj())
    ad_outer = np.outer(a_t_dot, a_t_dot.conj())
    a_ad = np.outer(a_t, a_t_dot.conj())
    ad_a = np.outer(a_t_dot, a_t.conj())
    ktt = br2 * (s1 * a_outer - 1j * s2 * a_ad + 1j * s2 * ad_a + n_r * ad_outer)
    kta = br2 * (-1j * s2 * a_outer + n_r * ad_a)
    kaa = br2 * n_r * a_outer
    return ktt, kta, kaa


def fim(w_mat: np.ndarray, ktt: np.ndarray, kta: np.ndarray, kaa: np.ndarray,
        alpha: complex, sigma2: float, l_slots: int) -> np.ndarray:
    """3x3 real FIM over (theta0, Re alpha, Im alpha)."""
    wt = w_mat @ w_mat.conj().T
    t1 = np.trace(ktt @ wt).real
    t2 = np.trace(kta @ wt)
    t3 = np.trace(kaa @ wt).real
    scale = 2.0 * l_slots / sigma2
    f = np.zeros((3, 3))
    f[0, 0] = scale * abs(alpha) ** 2 * t1
    cross = scale * np.array([(np.conj(alpha) * t2).real,
                              (np.conj(alpha) * t2 * 1j).real])
    f[0, 1:] = cross
    f[1:, 0] = cross
    f[1, 1] = f[2, 2] = scale * t3
    return f


def crb_theta(f: np.ndarray) -> float:
    """[F^-1]_(1,1) via the Schur complement of the alpha block.

    Returns inf when the information matrix is singular in the angle
    coordinate instead of raising.
    """
    faa = f[1:, 1:]
    det = faa[0, 0] * faa[1, 1] - faa[0, 1] * faa[1, 0]
    if det <= 0:
        return np.inf
    cross = f[0, 1:]
    schur = f[0, 0] - cross @ np.linalg.solve(faa, cross)
    if schur <= 0:
        return np.inf
    return 1.0 / schur


def objective(w_mat: np.ndarray, ktt: np.ndarray, kta: np.ndarray,
              kaa: np.ndarray) -> float:
    """The maximized surrogate tr(ktt Wt) - |tr(kta Wt)|^2 / tr(kaa Wt).

    The CRB is sigma2 / (2 L |alpha|^2 * objective), so maximizing this is
    minimizing the bound.  A degenerate tr(kaa Wt) drops the ratio term.
    """
    wt = w_mat @ w_mat.conj().T
    t1 = np.trace(ktt @ wt).real
    t2 = np.trace(kta @ wt)
    t3 = np.trace(kaa @ wt).real
    floor = DEGENERATE_RTOL * np.linalg.norm(kaa) * np.linalg.norm(w_mat) ** 2
    if t3 <= floor:
        return t1
    return t1 - abs(t2) ** 2 / t3


def crb_from_objective(obj: float, alpha: complex, sigma2: float,
                       l_slots: int) -> float:
    if obj <= 0:
        return np.inf
    return sigma2 / (2.0 * l_slots * abs(alpha) ** 2 * obj)


@dataclass
class SensingModel:
    ktt: np.ndarray
    kta: np.ndarray
    kaa: np.ndarray
    f: np.ndarray
    crb: float
    obj: float


def build_sensing_model(cfg, d_r: np.ndarray, w_mat: np.ndarray) -> SensingModel:
    """Kernels, FIM, objective and CRB at positions d_r and beamformer W."""
    a_t, a_t_dot = steering(transmit_positions(cfg), cfg.theta0, cfg.wavelength,
                            cfg.beta_t)
    ktt, kta, kaa = coefficient_matrices(d_r, a_t, a_t_dot, cfg.theta0,
                                         cfg.wavelength, cfg.beta_r)
    f = fim(w_mat, ktt, kta, kaa, cfg.alpha, cfg.sigma2, cfg.l_slots)
    obj = objective(w_mat, ktt, kta, kaa)
    crb = crb_from_objective(obj, cfg.alpha, cfg.sigma2, cfg.l_slots)
    return SensingModel(ktt, kta, kaa, f, crb, obj)
