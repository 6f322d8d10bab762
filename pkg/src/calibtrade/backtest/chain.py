"""Chain method: overlapping fixed-length windows with a warmup prefix.

Window ``w`` covers prices ``[w * (L_max - L_shift), w * (L_max - L_shift) + L_max)``
(0-based, truncated at the end of the series).  Its first ``L_shift`` prices
only set the scale and train the forecasters; trading is live from there on.
The live regions of consecutive windows tile the series without overlap.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import Executor
from dataclasses import dataclass

import numpy as np

from ..arma import ArmaTracker
from ..rounding import RandomSource, round_value
from .config import ExperimentConfig, build_session
from .data import PriceSeries, scale_window

__all__ = ["Window", "ChainPlan", "plan_chain", "ChainTranscript", "run_window", "run_chain", "COLUMNS"]

COLUMNS = (
    "index", "window", "raw_prev", "raw", "s_prev", "s",
    "p", "p_tilde", "s_tilde", "arma_p", "arma_p_tilde", "arma_s_tilde",
)
ARMA_STREAM = 1


@dataclass(frozen=True)
class Window:
    index: int
    start: int  # first price (0-based, inclusive)
    stop: int  # one past the last price

    def live_range(self, L_shift: int) -> range:
        """0-based indices of the prices ``S_i`` reached by live steps."""
        return range(self.start + L_shift, self.stop)


@dataclass(frozen=True)
class ChainPlan:
    n: int
    L_max: int
    L_shift: int
    windows: tuple

    def live_indices(self) -> list[int]:
        return [i for w in self.windows for i in w.live_range(self.L_shift)]


def plan_chain(n: int, L_max: int, L_shift: int) -> ChainPlan:
    if not 0 < L_shift < L_max:
        raise ValueError("need 0 < L_shift < L_max")
    if n < L_shift + 2:
        raise ValueError(f"series of length {n} is too short for warmup {L_shift}")
    stride = L_max - L_shift
    windows = []
    start = 0
    while start + L_shift < n:
        windows.append(Window(len(windows), start, min(start + L_max, n)))
        start += stride
    return ChainPlan(n, L_max, L_shift, tuple(windows))


@dataclass
class ChainTranscript:
    """Live rows of all windows, in global index order."""

    columns: dict

    def __len__(self) -> int:
        return len(self.columns["index"])

    def __getitem__(self, name) -> np.ndarray:
        return self.columns[name]

    @classmethod
    def concatenate(cls, parts) -> "ChainTranscript":
        parts = list(parts)
        return cls({c: np.concatenate([p[c] for p in parts]) for c in COLUMNS})

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        cols = [self.columns[c] for c in COLUMNS]
        for row in zip(*cols):
            w.writerow([int(row[0]), int(row[1])] + [repr(float(v)) for v in row[2:]])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @property
    def raw_path(self) -> np.ndarray:
        """Raw prices ``S_{first-1}, S_first, ..., S_last``."""
        return np.concatenate([[self.columns["raw_prev"][0]], self.columns["raw"]])

    @property
    def un_entries(self) -> np.ndarray:
        return self.columns["p_tilde"] > self.columns["s_tilde"]

    @property
    def arma_entries(self) -> np.ndarray:
        return self.columns["arma_p_tilde"] > self.columns["arma_s_tilde"]


def run_window(raw: np.ndarray, window: Window, config: ExperimentConfig) -> dict:
    """Forecast one window; returns the live rows as column arrays."""
    local = np.asarray(raw[window.start : window.stop], dtype=float)
    S, _, _ = scale_window(local, config.L_shift, config.c)
    master = RandomSource(config.seed)
    session = build_session(config, master.spawn(window.index), k=1, max_rounds=len(local))
    arma_rng = master.spawn(window.index).spawn(ARMA_STREAM)
    tracker = ArmaTracker(config.arma_p, config.arma_q, refit_every=config.L_shift)
    tracker.observe(S[0])

    live = len(local) - config.L_shift
    out = {c: np.empty(max(live, 0)) for c in COLUMNS}
    for t in range(1, len(local)):
        xbar = (S[t - 1],)
        p = session.next_forecast(xbar, S[t - 1])
        p_tilde, (s_tilde,) = session.randomize_round(p, xbar)
        if t >= config.L_shift:
            grid = session.grid
            a = tracker.forecast()
            a_tilde = grid.value(round_value(grid, a, arma_rng.uniform()))
            as_tilde = grid.value(round_value(grid, S[t - 1], arma_rng.uniform()))
            j = t - config.L_shift
            row = (window.start + t, window.index, local[t - 1], local[t], S[t - 1], S[t],
                   p, p_tilde, s_tilde, a, a_tilde, as_tilde)
            for c, v in zip(COLUMNS, row):
                out[c][j] = v
        session.update(p, xbar, S[t - 1], S[t])
        tracker.observe(S[t])
    return out


def _run_window_task(args):
    raw, window, config = args
    return run_window(raw, window, config)


def run_chain(series: PriceSeries | np.ndarray, config: ExperimentConfig, executor: Executor | None = None) -> ChainTranscript:
    """Run every window (optionally through ``executor``) and merge by window order."""
    raw = series.raw if isinstance(series, PriceSeries) else np.asarray(series, dtype=float)
    if len(raw) < config.L_shift + 2:
        raise ValueError(f"series of length {len(raw)} shorter than L_shift + 2")
    plan = plan_chain(len(raw), config.L_max, config.L_shift)
    tasks = [(raw, w, config) for w in plan.windows]
    if executor is None:
        parts = [_run_window_task(t) for t in tasks]
    else:
        parts = list(executor.map(_run_window_task, tasks))
    return ChainTranscript.concatenate(parts)
