"""Defensive forecasting with randomized rounding, and trading strategies built on it."""
from . import adversary, arma, calibration, forecaster, kernels, rounding, trading
from .forecaster import ForecastSession, ScheduleState
from .rounding import RandomSource, RoundingGrid

__all__ = [
    "adversary",
    "arma",
    "calibration",
    "forecaster",
    "kernels",
    "rounding",
    "trading",
    "ForecastSession",
    "ScheduleState",
    "RandomSource",
    "RoundingGrid",
]
__version__ = "0.1.0"
