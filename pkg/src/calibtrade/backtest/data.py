"""Price series: CSV ingestion, per-window scaling, and the simulated TEST stock."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from ..rounding import RandomSource

__all__ = [
    "PriceSeries",
    "DataError",
    "ingest_csv",
    "write_csv",
    "scale_window",
    "simulate_test_stock",
    "SCALE_C",
    "TEST_FLOOR",
]

SCALE_C = 14.0
TEST_FLOOR = 1e-6
CSV_HEADER = ["ticker", "date", "time", "close"]


class DataError(ValueError):
    """Malformed or inconsistent price data."""


@dataclass
class PriceSeries:
    ticker: str
    timestamps: list
    raw: np.ndarray
    scaled: np.ndarray | None = None
    scale: float | None = None
    clamp_events: int = 0

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=float)
        if len(self.timestamps) != len(self.raw):
            raise DataError("timestamps and prices differ in length")

    def __len__(self) -> int:
        return len(self.raw)


def _parse_row(row: list[str], lineno: int):
    if len(row) != 4:
        raise DataError(f"line {lineno}: expected 4 fields, got {len(row)}")
    ticker, date, time, close = (f.strip() for f in row)
    try:
        ts = datetime.strptime(date + time.zfill(4), "%Y%m%d%H%M")
    except ValueError as exc:
        raise DataError(f"line {lineno}: bad date/time {date!r} {time!r}") from exc
    try:
        price = float(close)
    except ValueError as exc:
        raise DataError(f"line {lineno}: bad close {close!r}") from exc
    if not np.isfinite(price) or price <= 0:
        raise DataError(f"line {lineno}: close must be positive, got {close}")
    return ticker, ts, price


def ingest_csv(path) -> PriceSeries:
    """Read ``ticker,date,time,close`` rows (``YYYYMMDD``, ``HHMM``)."""
    tickers, stamps, closes = set(), [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if [h.strip().lower() for h in header] != CSV_HEADER:
            raise DataError(f"line 1: expected header {','.join(CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            ticker, ts, price = _parse_row(row, lineno)
            if stamps and ts <= stamps[-1]:
                raise DataError(f"line {lineno}: timestamp {ts} not after {stamps[-1]}")
            tickers.add(ticker)
            stamps.append(ts)
            closes.append(price)
    if not closes:
        raise DataError(f"{path}: no data rows")
    if len(tickers) != 1:
        raise DataError(f"{path}: expected a single ticker, found {sorted(tickers)}")
    return PriceSeries(tickers.pop(), stamps, np.array(closes))


def write_csv(series: PriceSeries, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for ts, price in zip(series.timestamps, series.raw):
            w.writerow([series.ticker, ts.strftime("%Y%m%d"), ts.strftime("%H%M"), repr(float(price))])


def scale_window(raw, L_shift: int, c: float = SCALE_C) -> tuple[np.ndarray, int, float]:
    """Divide by ``c`` times the warmup maximum; clamp to [0, 1].

    Returns ``(scaled, clamp_count, scale)``.
    """
    raw = np.asarray(raw, dtype=float)
    if L_shift < 1 or L_shift > len(raw):
        raise ValueError("warmup length must be between 1 and the window length")
    if c <= 0:
        raise ValueError("c must be positive")
    scale = c * float(np.max(raw[:L_shift]))
    scaled = raw / scale
    over = scaled > 1.0
    scaled[over] = 1.0
    return scaled, int(over.sum()), scale


def simulate_test_stock(n: int, sigma: float = 0.014, s0: float = 1.0, rng: RandomSource | int = 0,
                        ticker: str = "TEST") -> PriceSeries:
    """Gaussian random walk ``S_i = S_{i-1} + xi_i``, reflected at a small floor.

    The defaults give increments of about 1e-3 in scaled units
    (``sigma / (14 s0)``).
    """
    if n < 1:
        raise ValueError("n must be positive")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    rng = rng if isinstance(rng, RandomSource) else RandomSource(rng)
    xi = rng.normal(sigma, n - 1) if sigma > 0 else np.zeros(n - 1)
    prices = np.empty(n)
    prices[0] = s0
    for i in range(1, n):
        s = prices[i - 1] + xi[i - 1]
        prices[i] = s if s >= TEST_FLOOR else 2 * TEST_FLOOR - s
    start = datetime(2010, 3, 26, 10, 0)
    stamps = [start + timedelta(minutes=i) for i in range(n)]
    return PriceSeries(ticker, stamps, prices)
