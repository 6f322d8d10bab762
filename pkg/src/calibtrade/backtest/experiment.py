"""End-to-end experiment: load or simulate prices, run the chain, tabulate."""
from __future__ import annotations

import csv
import io
from concurrent.futures import Executor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..calibration import (
    CalibrationReport,
    ForecastAboveInfo,
    ForecastAtMostInfo,
    calibration_error,
    product_rules,
    hoeffding_bound,
    proposition1_bound,
    theorem1_bound,
)
from ..rounding import RandomSource
from ..trading import EquityCurve, defensive_run, entry_stats
from .chain import ChainTranscript, run_chain
from .config import ExperimentConfig, make_side_kernel
from .data import PriceSeries, ingest_csv, simulate_test_stock
from .plot import write_svg

__all__ = [
    "TABLE1_COLUMNS",
    "TABLE2_COLUMNS",
    "ExperimentResult",
    "load_series",
    "run_experiment",
    "write_outputs",
    "format_table",
]

TABLE1_COLUMNS = (
    "Ticker",
    "Buy&Hold Profit %",
    "UN for a rise Profit %",
    "UN for a fall Profit %",
    "ARMA for a rise Profit %",
    "ARMA for a fall Profit %",
)
TABLE2_COLUMNS = (
    "Ticker",
    "Buy&hold %",
    "UN Profit %",
    "UN Profit -0.01%",
    "ARMA Profit %",
    "ARMA Profit -0.01%",
    "UN In",
    "ARMA In",
    "UN D",
    "ARMA D",
)
SIM_STREAM = 2**32


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    series: PriceSeries
    transcript: ChainTranscript
    curves: dict = field(default_factory=dict)
    table1: dict = field(default_factory=dict)
    table2: dict | None = None
    calibration: CalibrationReport | None = None


def load_series(config: ExperimentConfig) -> PriceSeries:
    if config.data_path is not None:
        return ingest_csv(config.data_path)
    rng = RandomSource(config.seed).spawn(SIM_STREAM)
    return simulate_test_stock(config.test_n, config.test_sigma, config.test_s0, rng, ticker=config.ticker)


def _profit(curve: EquityCurve) -> float:
    return curve.profit_pct()


def _rise_fall_curves(prices: np.ndarray, entries: np.ndarray, K: float, K0: float, tag: str) -> dict:
    rise = EquityCurve(prices, np.where(entries, K, 0.0), K0, label=f"{tag} rise")
    fall = EquityCurve(prices, np.where(entries, 0.0, -K), K0, label=f"{tag} fall")
    return {f"{tag}_rise": rise, f"{tag}_fall": fall}


def _calibration(transcript: ChainTranscript, config: ExperimentConfig) -> CalibrationReport:
    """Calibration of the randomized forecasts against scaled outcomes."""
    edges = np.linspace(0.0, 1.0, 11)
    rules = [ForecastAboveInfo(), ForecastAtMostInfo()] + product_rules(edges, [[0.0, 0.5, 1.0]])
    rows = zip(transcript["p_tilde"], transcript["s_tilde"], transcript["s"])
    report = calibration_error(rules, ((p, (x,), y) for p, x, y in rows))
    cF = make_side_kernel(config).embedding_constant()
    confidence = config.confidence / len(rules)
    if config.delta is not None:
        report.bounds["bound"] = proposition1_bound(config.delta, 1, cF, report.n, confidence)
    else:
        report.bounds["bound"] = theorem1_bound(1, cF, config.epsilon, report.n) + hoeffding_bound(report.n, confidence)
    return report


def run_experiment(config: ExperimentConfig, series: PriceSeries | None = None,
                   executor: Executor | None = None) -> ExperimentResult:
    series = series if series is not None else load_series(config)
    transcript = run_chain(series, config, executor)
    prices = transcript.raw_path
    K = config.shares
    K0 = K * float(prices[0])

    curves = {"buy_hold": EquityCurve(prices, np.full(len(prices) - 1, K), K0, label="Buy&Hold")}
    curves.update(_rise_fall_curves(prices, transcript.un_entries, K, K0, "un"))
    curves.update(_rise_fall_curves(prices, transcript.arma_entries, K, K0, "arma"))

    table1 = dict(zip(TABLE1_COLUMNS, (
        series.ticker,
        _profit(curves["buy_hold"]),
        _profit(curves["un_rise"]),
        _profit(curves["un_fall"]),
        _profit(curves["arma_rise"]),
        _profit(curves["arma_fall"]),
    )))

    table2 = None
    if config.strategy == "defensive":
        for tag, entries in (("un", transcript.un_entries), ("arma", transcript.arma_entries)):
            curves[f"{tag}_defensive"] = defensive_run(prices, entries, K0, 0.0)
            curves[f"{tag}_defensive_cost"] = defensive_run(prices, entries, K0, config.cost)
        un_in, un_d = entry_stats(transcript.un_entries)
        ar_in, ar_d = entry_stats(transcript.arma_entries)
        table2 = dict(zip(TABLE2_COLUMNS, (
            series.ticker,
            _profit(curves["buy_hold"]),
            _profit(curves["un_defensive"]),
            _profit(curves["un_defensive_cost"]),
            _profit(curves["arma_defensive"]),
            _profit(curves["arma_defensive_cost"]),
            un_in, ar_in, un_d, ar_d,
        )))

    return ExperimentResult(config, series, transcript, curves, table1, table2, _calibration(transcript, config))


def _fmt(v) -> str:
    return v if isinstance(v, str) else f"{v:.2f}" if abs(v) >= 10 or v == 0 else f"{v:.3f}"


def format_table(rows: list[dict]) -> str:
    """Aligned text rendering of result rows."""
    if not rows:
        return ""
    cols = list(rows[0])
    cells = [cols] + [[_fmt(r[c]) for c in cols] for r in rows]
    widths = [max(len(row[j]) for row in cells) for j in range(len(cols))]
    lines = ["  ".join(cell.rjust(w) if j else cell.ljust(w) for j, (cell, w) in enumerate(zip(row, widths))) for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _write_rows(path: Path, columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([r[c] if isinstance(r[c], str) else repr(float(r[c])) for c in columns])
    path.write_text(buf.getvalue())


def _selected_curves(strategy: str) -> list[str]:
    if strategy == "rise":
        return ["un_rise", "arma_rise", "buy_hold"]
    if strategy == "fall":
        return ["un_fall", "arma_fall", "buy_hold"]
    if strategy == "defensive":
        return ["un_defensive", "un_defensive_cost", "arma_defensive", "arma_defensive_cost", "buy_hold"]
    return ["un_rise", "un_fall", "arma_rise", "arma_fall", "buy_hold"]


def write_outputs(result: ExperimentResult, out_dir, svg: bool = False) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    path = out / "results.csv"
    _write_rows(path, TABLE1_COLUMNS, [result.table1])
    written.append(path)
    if result.table2 is not None:
        path = out / "results_defensive.csv"
        _write_rows(path, TABLE2_COLUMNS, [result.table2])
        written.append(path)
    ticker = result.series.ticker
    first = int(result.transcript["index"][0]) - 1
    for name in _selected_curves(result.config.strategy):
        curve = result.curves[name]
        path = out / f"equity_{ticker}_{name}.csv"
        curve.to_csv(path, start_step=first)
        written.append(path)
        if svg:
            path = out / f"equity_{ticker}_{name}.svg"
            write_svg(path, curve.capital, title=f"{ticker} {name}")
            written.append(path)
    if result.calibration is not None:
        path = out / "calibration.csv"
        result.calibration.to_csv(path)
        written.append(path)
    path = out / "transcript.csv"
    result.transcript.to_csv(path)
    written.append(path)
    return written
