"""Unconditional-security key rates for B92 with a strong reference pulse."""

from .errors import InfeasibleError, InvalidRegimeError
from .observables import Observables, analytic_observables
from .params import ChannelParams, PhotonWindow, ProtocolParams, make_window
from .phase_bound import evaluate_point, find_achievable_distance, key_rate, scan_distance

__all__ = [
    "ChannelParams",
    "InfeasibleError",
    "InvalidRegimeError",
    "Observables",
    "PhotonWindow",
    "ProtocolParams",
    "analytic_observables",
    "evaluate_point",
    "find_achievable_distance",
    "key_rate",
    "make_window",
    "scan_distance",
]
