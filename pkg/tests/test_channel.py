import dataclasses

import numpy as np

from ma_isac.channel import (all_channels, field_response,
                             field_response_matrix, sample_channel, steering,
                             user_channel)
from ma_isac.config import SystemConfig


def test_sample_channel_deterministic():
    cfg = SystemConfig(rng_seed=7)
    a, b = sample_channel(cfg), sample_channel(cfg)
    assert np.array_equal(a.theta_t, b.theta_t)
    assert np.array_equal(a.theta_r, b.theta_r)
    assert np.array_equal(a.sigma, b.sigma)
    assert np.array_equal(a.d_r, b.d_r)


def test_sample_channel_seed_changes_draw():
    a = sample_channel(SystemConfig(rng_seed=1))
    b = sample_channel(SystemConfig(rng_seed=2))
    assert not np.array_equal(a.sigma, b.sigma)


def test_sample_channel_angle_range_and_positions():
    cfg = SystemConfig(rng_seed=3)
    chan = sample_channel(cfg)
    assert np.all(np.abs(chan.theta_t) < np.pi / 2)
    assert np.all(np.abs(chan.theta_r) < np.pi / 2)
    gaps = np.diff(chan.d_r)
    assert chan.d_r[0] >= 0 and chan.d_r[-1] <= cfg.d_max
    assert np.all(gaps >= cfg.d_min - 1e-12)
    assert np.allclose(chan.d_t, 0.5 * cfg.wavelength * np.arange(cfg.n_t))


def test_path_gain_variance_monte_carlo():
    # 1e5 i.i.d. path responses in one draw; empirical variance within 5%.
    k, paths = 5, 20000
    cfg = SystemConfig(rng_seed=11, k_users=k, paths=paths,
                       p_user=(0.1,) * k, d_user=(60.0,) * k)
    chan = sample_channel(cfg)
    target = cfg.c0 * 60.0 ** (-cfg.pathloss_exp) / paths
    emp = np.mean(np.abs(chan.sigma) ** 2)
    assert abs(emp - target) <= 0.05 * target


def test_field_response_trivial_cases():
    lam = 0.1
    angles = np.array([0.3, -0.7, 1.1])
    assert np.allclose(field_response(0.0, angles, lam), 1.0)
    assert np.allclose(field_response(0.37, np.zeros(4), lam), 1.0)
    val = field_response(lam / 2, np.array([np.pi / 2]), lam)
    assert np.allclose(val, -1.0, atol=1e-12)


def test_field_response_unit_modulus():
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = field_response(rng.uniform(0, 1), rng.uniform(-1.5, 1.5, 8), 0.1)
        assert np.max(np.abs(np.abs(v) - 1.0)) <= 1e-14


def test_field_response_matrix_column_structure():
    rng = np.random.default_rng(1)
    angles = rng.uniform(-1.5, 1.5, 6)
    d_r = np.sort(rng.uniform(0, 0.5, 4))
    mat = field_response_matrix(d_r, angles, 0.1)
    for n in range(4):
        assert np.allclose(mat[:, n], field_response(d_r[n], angles, 0.1))
    # moving one element only changes its own column
    d_mod = d_r.copy()
    d_mod[2] += 0.01
    mat2 = field_response_matrix(d_mod, angles, 0.1)
    assert np.allclose(mat2[:, [0, 1, 3]], mat[:, [0, 1, 3]])
    assert not np.allclose(mat2[:, 2], mat[:, 2])


def test_steering_at_broadside():
    d = np.array([0.0, 0.05, 0.1])
    lam = 0.1
    beta = 0.8 - 0.6j
    a, a_dot = steering(d, 0.0, lam, beta)
    assert np.allclose(a, beta)
    assert np.allclose(a_dot, 1j * (2 * np.pi / lam) * d * beta)


def test_steering_phase_increment_half_wavelength():
    lam = 0.1
    d = 0.5 * lam * np.arange(4)
    a, _ = steering(d, np.pi / 6, lam)
    ratios = a[1:] / a[:-1]
    assert np.allclose(ratios, np.exp(1j * np.pi / 2))


def test_steering_derivative_finite_difference():
    rng = np.random.default_rng(2)
    lam, step = 0.1, 1e-5
    for _ in range(100):
        d = np.sort(rng.uniform(0, 0.8, 5))
        theta = rng.uniform(-1.4, 1.4)
        a, a_dot = steering(d, theta, lam)
        ap, _ = steering(d, theta + step, lam)
        am, _ = steering(d, theta - step, lam)
        fd = (ap - am) / (2 * step)
        assert np.linalg.norm(fd - a_dot) <= 1e-6 * max(np.linalg.norm(a_dot), 1.0)


def test_user_channel_scalar_chain():
    cfg = SystemConfig(rng_seed=5, n_r=1, k_users=1, paths=1, p_user=(0.1,),
                       d_user=(80.0,), d_max=0.4)
    chan = sample_channel(cfg)
    h = user_channel(chan, 0, chan.d_r, cfg.wavelength)
    phase = np.exp(1j * 2 * np.pi / cfg.wavelength
                   * chan.d_r[0] * np.sin(chan.theta_t[0, 0]))
    expected = np.conj(chan.sigma[0, 0] * phase) * chan.h0[0, 0]
    assert np.allclose(h, expected)


def test_user_channel_matches_direct_sum():
    cfg = SystemConfig(rng_seed=6)
    chan = sample_channel(cfg)
    d_r = chan.d_r
    h = all_channels(chan, d_r, cfg.wavelength)
    for k in range(cfg.k_users):
        direct = np.zeros(cfg.n_r, dtype=complex)
        for n in range(cfg.n_r):
            for i in range(cfg.paths):
                phase = np.exp(1j * 2 * np.pi / cfg.wavelength
                               * d_r[n] * np.sin(chan.theta_t[k, i]))
                direct[n] += np.conj(chan.h0[k, i]) * chan.sigma[k, i] * phase
        assert np.allclose(h[k], direct.conj())


def test_channel_norm_invariant_to_common_phase():
    cfg = SystemConfig(rng_seed=8)
    chan = sample_channel(cfg)
    rot = np.exp(1j * 0.7)
    rotated = dataclasses.replace(chan, h0=chan.h0 * rot, sigma=chan.sigma * rot)
    for k in range(cfg.k_users):
        h1 = user_channel(chan, k, chan.d_r, cfg.wavelength)
        h2 = user_channel(rotated, k, chan.d_r, cfg.wavelength)
        assert abs(np.linalg.norm(h1) - np.linalg.norm(h2)) <= 1e-12
