"""Fluid-antenna integrated sensing, computing and semantic communication.

Channel models, performance metrics, a small barrier interior-point solver
and the alternating optimization of beams, antenna positions and semantic
extraction ratios that maximizes the worst-case semantic secrecy rate.
"""

__version__ = "0.1.0"

from .ao import AoResult, AoStart, AoTrace, run_ao
from .config import SystemConfig, dbm_to_watt, watt_to_dbm
from .errors import (BudgetExceeded, CurvatureOverflow, DomainError, EmptyTargets, Infeasible,
                     SingularCovariance, SingularDesign)
from .metrics import MetricsReport, crb, crb_normalized, evaluate, secrecy_rate, semantic_rate, sinr
from .model import (ArrayGeometry, BeamformingSolution, ChannelSet, Scenario, build_channels,
                    make_geometry, rx_steering_vector, transmit_covariance, tx_steering_vector)

__all__ = [
    "AoResult", "AoStart", "AoTrace", "ArrayGeometry", "BeamformingSolution", "BudgetExceeded",
    "ChannelSet", "CurvatureOverflow", "DomainError", "EmptyTargets", "Infeasible",
    "MetricsReport", "Scenario", "SingularCovariance", "SingularDesign", "SystemConfig",
    "build_channels", "crb", "crb_normalized", "dbm_to_watt", "evaluate", "make_geometry", "run_ao",
    "rx_steering_vector", "secrecy_rate", "semantic_rate", "sinr", "transmit_covariance",
    "tx_steering_vector", "watt_to_dbm",
]
