"""Snapshot generators for the delayed SIRD and laser phase-change models."""

from .am import AmParams, AmState, laser_source, melt_pool_profile, run_am, sigmoid_switch, step_am
from .grid import Boundary, Grid
from .sird import DelayBuffer, SirdParams, SirdState, check_delay_stability, run_sird, step_sird

__all__ = [
    "AmParams",
    "AmState",
    "Boundary",
    "DelayBuffer",
    "Grid",
    "SirdParams",
    "SirdState",
    "check_delay_stability",
    "laser_source",
    "melt_pool_profile",
    "run_am",
    "run_sird",
    "sigmoid_switch",
    "step_am",
    "step_sird",
]
