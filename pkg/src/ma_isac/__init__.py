"""Movable-antenna uplink ISAC: CRB-minimizing joint design of the probing
beamformer, receive filters, user powers and receive-antenna positions."""

from .config import SystemConfig, bits_to_nats, dbm_to_watt
from .channel import ChannelState, sample_channel
from .solver import InfeasibleScenarioError, SolverState, bca_solve, initialize, \
    solve_scenario

__version__ = "0.1.0"

__all__ = [
    "SystemConfig", "ChannelState", "SolverState", "InfeasibleScenarioError",
    "sample_channel", "initialize", "bca_solve", "solve_scenario",
    "dbm_to_watt", "bits_to_nats", "__version__",
]
