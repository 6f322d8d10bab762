"""Universal randomized trading strategies, baselines, and regret bounds.

A run first produces a :class:`ForecastTranscript` (deterministic forecasts
and their randomized roundings, one row per step).  Position rules are then
applied to the transcript, so several strategies can be compared on exactly
the same random draws.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .calibration import hoeffding_bound
from .forecaster import ForecastSession
from .kernels import InducedFunction

__all__ = [
    "DecisionRule",
    "EquityCurve",
    "ForecastTranscript",
    "RiseOnly",
    "FallOnly",
    "RiseFall",
    "Scaled",
    "BuyHold",
    "Stationary",
    "DefensiveCapital",
    "m1_decision",
    "m_decision",
    "run_forecasts",
    "positions",
    "equity_curve",
    "run_strategy",
    "defensive_run",
    "sup_norm",
    "regret_bound_thm2",
    "regret_bound_thm3",
    "regret_bound_thm6",
    "entry_stats",
]

NONTRIVIAL_TOL = 1e-12


def m1_decision(p_tilde: float, s_tilde: float) -> int:
    """Rise-only decision: hold one share iff the rounded forecast exceeds the
    rounded last price."""
    return 1 if p_tilde > s_tilde else 0


def m_decision(p_tilde: float, s_tilde: float) -> int:
    return 1 if p_tilde > s_tilde else -1


@dataclass(frozen=True)
class DecisionRule:
    """Step function on [0, 1]: ``values[j]`` on ``[breakpoints[j-1], breakpoints[j])``."""

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if len(vals) != len(bps) + 1:
            raise ValueError("need exactly one more value than breakpoints")
        if list(bps) != sorted(bps):
            raise ValueError("breakpoints must be sorted")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @classmethod
    def threshold(cls, at: float, below: float, above: float) -> "DecisionRule":
        """``below`` on ``x <= at``, ``above`` on ``x > at``."""
        return cls((math.nextafter(at, 2.0),), (below, above))

    def __call__(self, x: float) -> float:
        return self.values[int(np.searchsorted(self.breakpoints, x, side="right"))]

    def values_at(self, xs) -> np.ndarray:
        idx = np.searchsorted(self.breakpoints, np.asarray(xs, dtype=float), side="right")
        return np.asarray(self.values)[idx]

    @property
    def range(self) -> tuple:
        return tuple(sorted(set(self.values)))

    @property
    def m(self) -> int:
        return len(self.range)

    def sup_norm(self) -> float:
        return max(abs(v) for v in self.values)


def sup_norm(D) -> float:
    """``||D||_inf``; induced functions are scanned on 10001 points."""
    if isinstance(D, InducedFunction):
        return D.sup_norm(10001)
    return D.sup_norm()


def _evaluate(D, xs) -> np.ndarray:
    if isinstance(D, InducedFunction):
        return D.values(xs)
    if isinstance(D, DecisionRule):
        return D.values_at(xs)
    return np.array([D(x) for x in xs], dtype=float)


# -- strategy kinds -----------------------------------------------------------


@dataclass(frozen=True)
class RiseOnly:
    shares: float = 1.0


@dataclass(frozen=True)
class FallOnly:
    """Short ``shares`` when the rounded forecast is at most the rounded price."""

    shares: float = 1.0


@dataclass(frozen=True)
class RiseFall:
    shares: float = 1.0


@dataclass(frozen=True)
class Scaled:
    l: int = 1

    def __post_init__(self):
        if self.l < 1:
            raise ValueError("l must be a positive integer")


@dataclass(frozen=True)
class BuyHold:
    shares: float = 1.0


@dataclass(frozen=True)
class Stationary:
    """Hold ``D(x_i)`` shares, optionally divided by ``||D||_inf``."""

    D: object
    normalize: bool = False


@dataclass(frozen=True)
class DefensiveCapital:
    K0: float
    cost: float = 0.0


# -- transcripts and curves ----------------------------------------------------


@dataclass
class ForecastTranscript:
    """Per-step forecaster output; row ``i`` trades from ``prices[i]`` to ``prices[i+1]``."""

    prices: np.ndarray
    signals: np.ndarray
    p: np.ndarray
    p_tilde: np.ndarray
    x_tilde: np.ndarray  # shape (n, k); column 0 is the rounded last price
    supermartingale: np.ndarray

    @property
    def n(self) -> int:
        return len(self.p)

    @property
    def s_tilde(self) -> np.ndarray:
        return self.x_tilde[:, 0]

    @property
    def entries(self) -> np.ndarray:
        return self.p_tilde > self.s_tilde

    @property
    def price_changes(self) -> np.ndarray:
        return np.diff(self.prices)


@dataclass
class EquityCurve:
    """Capital path ``K_i = K_{i-1} + C_i (S_i - S_{i-1}) - fee_i``."""

    prices: np.ndarray  # S_0..S_n
    positions: np.ndarray  # C_1..C_n
    K0: float = 0.0
    fees: np.ndarray | None = None
    label: str = ""
    capital: np.ndarray = field(init=False)

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        if len(self.prices) != len(self.positions) + 1:
            raise ValueError("need one more price than positions")
        if self.fees is None:
            self.fees = np.zeros(len(self.positions))
        steps = self.positions * np.diff(self.prices) - self.fees
        self.capital = self.K0 + np.concatenate([[0.0], np.cumsum(steps)])

    @property
    def final_capital(self) -> float:
        return float(self.capital[-1])

    @property
    def gain(self) -> float:
        return self.final_capital - self.K0

    def profit_pct(self) -> float:
        if self.K0 == 0:
            raise ZeroDivisionError("profit percentage needs nonzero initial capital")
        return (self.final_capital - self.K0) / self.K0 * 100.0

    def ledger_gap(self) -> float:
        """Largest deviation from the step identity (accumulation error only)."""
        expected = self.positions * np.diff(self.prices) - self.fees
        return float(np.max(np.abs(np.diff(self.capital) - expected), initial=0.0))

    def to_csv(self, path=None, start_step: int = 0) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "position", "price", "capital"])
        w.writerow([start_step, 0, repr(float(self.prices[0])), repr(float(self.capital[0]))])
        for i, (c, s, k) in enumerate(zip(self.positions, self.prices[1:], self.capital[1:]), start=1):
            w.writerow([start_step + i, repr(float(c)), repr(float(s)), repr(float(k))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def run_forecasts(
    prices: Sequence[float],
    session: ForecastSession,
    signals: Sequence[float] | None = None,
    with_signal_info: bool = False,
) -> ForecastTranscript:
    """Play the trading protocol's forecasting side over a scaled price path.

    Step ``i`` (1-based) uses ``xbar = S_{i-1}`` (``k=1``) or
    ``(S_{i-1}, x_i)`` when ``with_signal_info`` (``k=2``), forecasts ``S_i``,
    and rounds forecast and information vector.  ``signals[i-1]`` is the side
    signal for step ``i``; by default the last price.
    """
    S = np.asarray(prices, dtype=float)
    if S.ndim != 1 or len(S) < 2:
        raise ValueError("need at least two prices")
    if np.any((S < 0) | (S > 1)):
        raise ValueError("prices must be scaled into [0, 1]")
    n = len(S) - 1
    sig = S[:-1] if signals is None else np.asarray(signals, dtype=float)
    if len(sig) != n:
        raise ValueError("need one signal per step")
    k = 2 if with_signal_info else 1
    if session.k != k:
        raise ValueError(f"session has k={session.k}, protocol needs k={k}")
    p = np.empty(n)
    pt = np.empty(n)
    xt = np.empty((n, k))
    mart = np.empty(n)
    for i in range(n):
        xbar = (S[i], sig[i]) if with_signal_info else (S[i],)
        p[i] = session.next_forecast(xbar, sig[i])
        pt[i], xt[i] = session.randomize_round(p[i], xbar)
        session.update(p[i], xbar, sig[i], S[i + 1])
        mart[i] = session.supermartingale
    return ForecastTranscript(S, sig, p, pt, xt, mart)


def positions(kind, transcript: ForecastTranscript) -> np.ndarray:
    """Share counts ``C_i`` chosen by ``kind`` on the transcript's draws."""
    entries = transcript.entries
    if isinstance(kind, RiseOnly):
        return np.where(entries, kind.shares, 0.0)
    if isinstance(kind, FallOnly):
        return np.where(entries, 0.0, -kind.shares)
    if isinstance(kind, RiseFall):
        return np.where(entries, kind.shares, -kind.shares)
    if isinstance(kind, Scaled):
        return kind.l * np.where(entries, 1.0, -1.0)
    if isinstance(kind, BuyHold):
        return np.full(transcript.n, float(kind.shares))
    if isinstance(kind, Stationary):
        vals = _evaluate(kind.D, transcript.signals)
        if kind.normalize:
            norm = sup_norm(kind.D)
            if norm <= NONTRIVIAL_TOL:
                raise ValueError("trivial decision rule")
            vals = vals / norm
        return vals
    raise TypeError(f"no position rule for {kind!r}")


def equity_curve(kind, transcript: ForecastTranscript, K0: float = 0.0) -> EquityCurve:
    if isinstance(kind, DefensiveCapital):
        return defensive_run(transcript.prices, transcript.entries, kind.K0, kind.cost)
    return EquityCurve(transcript.prices, positions(kind, transcript), K0, label=type(kind).__name__)


def run_strategy(prices, kind, session: ForecastSession | None = None, signals=None, K0: float = 0.0):
    """Forecast over ``prices`` and trade ``kind``; returns ``(curve, transcript)``.

    ``BuyHold`` and ``Stationary`` do not need forecasts; pass ``session=None``.
    """
    S = np.asarray(prices, dtype=float)
    if np.any((S < 0) | (S > 1)):
        raise ValueError("prices must be scaled into [0, 1]")
    if session is None:
        if not isinstance(kind, (BuyHold, Stationary)):
            raise ValueError(f"{type(kind).__name__} needs a forecast session")
        n = len(S) - 1
        sig = S[:-1] if signals is None else np.asarray(signals, dtype=float)
        blank = ForecastTranscript(S, sig, np.zeros(n), np.zeros(n), np.zeros((n, 1)), np.zeros(n))
        return equity_curve(kind, blank, K0), blank
    transcript = run_forecasts(S, session, signals, with_signal_info=session.k == 2)
    return equity_curve(kind, transcript, K0), transcript


def defensive_run(prices, entries, K0: float, cost: float = 0.0) -> EquityCurve:
    """Capital-protected rise trading.

    Working capital ``L = min(K0, K_{i-1})`` buys ``L / S_{i-1}`` shares on
    entry steps.  Trading stops for good once ``L <= 0``.  A fee of
    ``cost * M_i * S_{i-1}`` is charged on each market entry (a step in the
    market that follows a step out of it).
    """
    if K0 <= 0:
        raise ValueError("K0 must be positive")
    S = np.asarray(prices, dtype=float)
    entries = np.asarray(entries, dtype=bool)
    n = len(S) - 1
    if len(entries) != n:
        raise ValueError("need one entry flag per step")
    pos = np.zeros(n)
    fees = np.zeros(n)
    capital = K0
    stopped = False
    was_in = False
    for i in range(n):
        L = min(K0, capital)
        if L <= 0:
            stopped = True
        if stopped or not entries[i] or S[i] == 0:
            was_in = False
            continue
        pos[i] = L / S[i]
        if not was_in:
            fees[i] = cost * pos[i] * S[i]
        was_in = True
        capital += pos[i] * (S[i + 1] - S[i]) - fees[i]
    return EquityCurve(S, pos, K0, fees=fees, label="Defensive")


def entry_stats(entries) -> tuple[float, float]:
    """Market-entry frequency and mean length of consecutive in-market runs."""
    e = np.asarray(entries, dtype=bool)
    if len(e) == 0:
        return 0.0, 0.0
    freq = float(e.mean())
    starts = np.flatnonzero(e & ~np.concatenate([[False], e[:-1]]))
    runs = len(starts)
    return freq, (float(e.sum()) / runs if runs else 0.0)


# -- regret bounds ---------------------------------------------------------------


def _check_norms(normInf: float):
    if not normInf > NONTRIVIAL_TOL:
        raise ValueError("competitor must be nontrivial (||D||_inf > 0)")


def regret_bound_thm2(n: int, cF: float, epsilon: float, delta: float, normF: float, normInf: float) -> float:
    """Regret of the rise-only strategy against a nonnegative RKHS competitor."""
    _check_norms(normInf)
    c = cF**2 + 1
    return (
        4 / 3 * (7 * math.e - 1) * c**0.25 * n ** (0.75 + epsilon)
        + normF / normInf * math.sqrt(c * n)
        + hoeffding_bound(n, delta)
    )


def regret_bound_thm3(n: int, cF: float, epsilon: float, delta: float, normF: float, normInf: float) -> float:
    """Regret of the rise-and-fall strategy against any RKHS competitor."""
    _check_norms(normInf)
    c = cF**2 + 1
    return (
        8 / 3 * (5 * math.e - 2) * c**0.25 * n ** (0.75 + epsilon)
        + normF / normInf * math.sqrt(c * n)
        + 2 * hoeffding_bound(n, delta)
    )


def regret_bound_thm6(n: int, m: int, epsilon: float, delta: float) -> float:
    """Regret against a decision rule with ``m`` distinct values applied to the
    rounded signal."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    return (
        5 * (m + 1) * math.e * n ** (0.8 + epsilon)
        + (m + 1) * (math.e - 1) * 4 / 3 * n ** (0.75 + epsilon)
        + (m + 1) * math.sqrt(n / 2 * math.log(2 * m / delta))
    )
