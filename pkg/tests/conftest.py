import numpy as np
import pytest

from ma_isac import beamformer, fp, sensing, solver
from ma_isac.channel import (all_channels, sample_channel, steering,
                             transmit_positions)
from ma_isac.config import SystemConfig


class Problem:
    """One scenario frozen at its initialized point, with the derived
    quantities most tests need."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.chan = sample_channel(cfg)
        self.state = solver.initialize(cfg, self.chan)
        self.d_r = self.state.d_r
        self.h = all_channels(self.chan, self.d_r, cfg.wavelength)
        self.a_r, self.a_r_dot = steering(self.d_r, cfg.theta0, cfg.wavelength,
                                          cfg.beta_r)
        self.d_t = transmit_positions(cfg)
        self.a_t, self.a_t_dot = steering(self.d_t, cfg.theta0, cfg.wavelength,
                                          cfg.beta_t)
        self.kernels = sensing.coefficient_matrices(
            self.d_r, self.a_t, self.a_t_dot, cfg.theta0, cfg.wavelength,
            cfg.beta_r)
        self.aux = self.state.fp

    def pdd_context(self):
        ktt, kta, kaa = self.kernels
        return beamformer.build_constraint_data(
            self.aux.gamma, self.aux.omega, self.state.u, self.state.q,
            self.h, self.cfg.alpha, self.a_r, self.a_t, self.cfg.sigma2,
            self.cfg.r_t, ktt, kta, kaa, self.cfg.p_bs)

    def true_rate(self, w_mat=None, u=None, q=None, d_r=None):
        cfg = self.cfg
        d_r = self.d_r if d_r is None else d_r
        h = (self.h if d_r is self.d_r
             else all_channels(self.chan, d_r, cfg.wavelength))
        a_r, _ = steering(d_r, cfg.theta0, cfg.wavelength, cfg.beta_r)
        return fp.sum_rate(self.state.w_mat if w_mat is None else w_mat,
                           self.state.u if u is None else u,
                           self.state.q if q is None else q,
                           h, cfg.alpha, a_r, self.a_t, cfg.sigma2)


@pytest.fixture(scope="session")
def make_problem():
    cache = {}

    def build(seed=1, **cfg_kwargs):
        key = (seed, tuple(sorted(cfg_kwargs.items())))
        if key not in cache:
            cache[key] = Problem(SystemConfig(rng_seed=seed, **cfg_kwargs))
        return cache[key]

    return build


@pytest.fixture(scope="session")
def desk(make_problem):
    """Default-scale problem: 4x4, two users, ten paths."""
    return make_problem(seed=1)


@pytest.fixture(scope="session")
def tiny(make_problem):
    """Small problem for cheap structural tests."""
    return make_problem(seed=2, n_t=2, n_r=3, paths=4, d_max=0.2)


def random_unit_complex(rng, *shape):
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z / np.linalg.norm(z)
