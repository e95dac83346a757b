"""Geometric uplink channels and target steering vectors.

The receive array is a line segment with movable elements at positions d_r.
Each user reaches the BS through `paths` planar wavefronts; moving element n
only changes the phase profile of that element, never the path angles or
gains, so the per-user channel is

    h_k(d_r)^H = h0_k^H Sigma_k H_k(d_r),

with H_k(d_r)[i, n] = exp(j 2*pi/lambda * d_r[n] * sin(theta_k[i])).
"""
from dataclasses import dataclass

import numpy as np

# Sub-stream tags for the counter-based generator, so channel draws and
# solver initialization never share a stream.
_STREAM_CHANNEL = 0
_STREAM_INIT = 1


def rng_stream(seed: int, tag: int) -> np.random.Generator:
    """Deterministic, splittable stream keyed by (seed, tag)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, tag])))


@dataclass(frozen=True)
class ChannelState:
    """One frozen channel realization (positions d_r are the defaults only;
    the solver carries its own copy)."""
    theta_t: np.ndarray   # (K, paths) departure angles at the user side
    theta_r: np.ndarray   # (K, paths) arrival angles
    sigma: np.ndarray     # (K, paths) diagonal path responses
    h0: np.ndarray        # (K, paths) user-side field response (single antenna)
    d_t: np.ndarray       # (n_t,) fixed transmit positions, half-wavelength grid
    d_r: np.ndarray       # (n_r,) default receive positions

    @property
    def k_users(self) -> int:
        return self.theta_t.shape[0]

    @property
    def paths(self) -> int:
        return self.theta_t.shape[1]


def default_positions(cfg) -> np.ndarray:
    """Uniform receive grid over [0, d_max] honoring the spacing floor."""
    if cfg.n_r == 1:
        return np.zeros(1)
    step = max(cfg.d_min, cfg.d_max / (cfg.n_r - 1))
    return step * np.arange(cfg.n_r)


def transmit_positions(cfg) -> np.ndarray:
    """Fixed transmit array: half-wavelength uniform grid."""
    return 0.5 * cfg.wavelength * np.arange(cfg.n_t)


def sample_channel(cfg) -> ChannelState:
    """Draw one channel realization for cfg.rng_seed.

    Path angles are uniform on (-pi/2, pi/2); the diagonal path responses
    are complex Gaussian with per-path variance c0 * d_user^(-pathloss_exp)
    / paths.
    """
    rng = rng_stream(cfg.rng_seed, _STREAM_CHANNEL)
    k, lp = cfg.k_users, cfg.paths
    theta_t = rng.uniform(-np.pi / 2, np.pi / 2, size=(k, lp))
    theta_r = rng.uniform(-np.pi / 2, np.pi / 2, size=(k, lp))
    var = cfg.c0 * np.asarray(cfg.d_user) ** (-cfg.pathloss_exp) / lp  # (K,)
    std = np.sqrt(var / 2.0)[:, None]
    sigma = std * (rng.standard_normal((k, lp)) + 1j * rng.standard_normal((k, lp)))
    h0 = np.ones((k, lp), dtype=complex)  # single-antenna user at the reference point
    d_t = transmit_positions(cfg)
    for arr in (theta_t, theta_r, sigma, h0, d_t):
        arr.flags.writeable = False
    d_r = default_positions(cfg)
    d_r.flags.writeable = False
    return ChannelState(theta_t, theta_r, sigma, h0, d_t, d_r)


def field_response(d: float, angles: np.ndarray, wavelength: float) -> np.ndarray:
    """Unit-modulus phase profile of one element at position d."""
    return np.exp(1j * (2 * np.pi / wavelength) * d * np.sin(np.asarray(angles)))


def field_response_matrix(d_r: np.ndarray, angles: np.ndarray,
                          wavelength: float) -> np.ndarray:
    """(paths, n_r) matrix whose column n is field_response(d_r[n], angles)."""
    phase = (2 * np.pi / wavelength) * np.outer(np.sin(angles), d_r)
    return np.exp(1j * phase)


def user_channel(state: ChannelState, k: int, d_r: np.ndarray,
                 wavelength: float) -> np.ndarray:
    """Channel vector h_k (length n_r) at receive positions d_r."""
    h_mat = field_response_matrix(d_r, state.theta_t[k], wavelength)
    row = (state.h0[k].conj() * state.sigma[k]) @ h_mat   # h_k^H
    return row.conj()


def all_channels(state: ChannelState, d_r: np.ndarray,
                 wavelength: float) -> np.ndarray:
    """(K, n_r) stack of user channels at positions d_r."""
    return np.stack([user_channel(state, k, d_r, wavelength)
                     for k in range(state.k_users)])


def steering(d: np.ndarray, theta0: float, wavelength: float,
             beta: complex = 1.0 + 0.0j):
    """Steering vector toward theta0 and its angle derivative.

    a[n]     = beta * exp(j 2*pi/lambda * d[n] * sin(theta0))
    a_dot[n] = j 2*pi/lambda * d[n] * cos(theta0) * a[n]
    """
    d = np.asarray(d, dtype=float)
    a = beta * np.exp(1j * (2 * np.pi / wavelength) * d * np.sin(theta0))
    a_dot = 1j * (2 * np.pi / wavelength) * d * np.cos(theta0) * a
    return a, a_dot
