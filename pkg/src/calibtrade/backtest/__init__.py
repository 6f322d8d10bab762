"""Chain-method backtests on price series and the ``backtest`` command."""
from .chain import plan_chain, run_chain
from .config import ConfigError, ExperimentConfig
from .data import PriceSeries, ingest_csv, simulate_test_stock
from .experiment import run_experiment, write_outputs

__all__ = [
    "plan_chain",
    "run_chain",
    "ConfigError",
    "ExperimentConfig",
    "PriceSeries",
    "ingest_csv",
    "simulate_test_stock",
    "run_experiment",
    "write_outputs",
]
