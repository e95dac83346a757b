"""Scenario parameters.

All powers are stored in watts and all rates in nats internally; the CLI
converts from dBm / bits at the file boundary.
"""
from dataclasses import dataclass, field

import numpy as np


def dbm_to_watt(dbm: float) -> float:
    """P[W] = 10^((dBm - 30)/10); 20 dBm -> 0.1 W."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * np.log10(watt) + 30.0


def bits_to_nats(bits: float) -> float:
    return bits * np.log(2.0)


@dataclass(frozen=True)
class SystemConfig:
    """Scenario scalars for one solve.

    Defaults follow the evaluated setup: 4x4 BS array, two uplink users,
    10 paths per user, 20 dBm BS power, -80 dBm noise.  Quantities the
    source material leaves unstated (wavelength, reference path gain,
    user distances, per-user power caps) are declared here explicitly.
    """
    n_t: int = 4                    # BS transmit antennas (fixed positions)
    n_r: int = 4                    # BS receive antennas (movable)
    k_users: int = 2
    l_slots: int = 512              # coherent probing slots
    wavelength: float = 0.1         # m
    d_min: float = 0.05             # m, minimum antenna spacing
    d_max: float = 0.4              # m, receive-array segment (4 wavelengths)
    p_bs: float = 0.1               # W, BS transmit power budget
    p_user: tuple = (0.1, 0.1)      # W, per-user transmit power caps
    r_t: float = 4.0 * 0.6931471805599453   # nats, sum-rate threshold (4 bits)
    sigma2: float = 1e-11           # W, receiver noise power (-80 dBm)
    theta0: float = np.pi / 6       # rad, target direction of arrival
    alpha: complex = 1e-5 + 0.0j    # two-way echo coefficient (about -100 dB)
    beta_t: complex = 1.0 + 0.0j    # transmit LoS path coefficient
    beta_r: complex = 1.0 + 0.0j    # receive LoS path coefficient
    paths: int = 10                 # propagation paths per user
    c0: float = 1e-3                # reference path gain at 1 m
    pathloss_exp: float = 2.8
    d_user: tuple = (100.0, 100.0)  # m, BS-user distances
    rng_seed: int = 0

    def __post_init__(self):
        if self.d_min <= 0:
            raise ValueError("d_min must be positive")
        if (self.n_r - 1) * self.d_min > self.d_max:
            raise ValueError("no feasible antenna placement: (n_r-1)*d_min > d_max")
        if not (-np.pi / 2 < self.theta0 < np.pi / 2):
            raise ValueError("theta0 must lie in (-pi/2, pi/2)")
        if self.p_bs <= 0 or self.sigma2 <= 0:
            raise ValueError("powers must be positive")
        if len(self.p_user) != self.k_users or len(self.d_user) != self.k_users:
            raise ValueError("p_user and d_user must have one entry per user")
        if any(p <= 0 for p in self.p_user):
            raise ValueError("powers must be positive")

    @property
    def p_user_arr(self) -> np.ndarray:
        return np.asarray(self.p_user, dtype=float)
