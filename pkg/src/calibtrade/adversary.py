"""A price path on which a binary decision rule beats any i.i.d. randomized strategy.

The market is told ``x = P{M > 0}`` for the strategy's next bet and moves the
price by ``2^-(i+1)`` against the more likely direction.  The rule
``D(x) = -1 if x > 1/2 else +1`` always trades with the move, collecting
``1/2 - 2^-(n+1)`` in ``n`` steps, while the strategy's expected gain stays at
most ``1/4``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .rounding import RandomSource

__all__ = [
    "adversarial_prices",
    "adversary_rule",
    "IIDStrategy",
    "OutperformanceReport",
    "verify_outperformance",
]


def adversarial_prices(signals: Sequence[float]) -> np.ndarray:
    """``S_0 = 1/2``; ``S_i = S_{i-1} -/+ 2^-(i+1)`` for ``x_i >`` / ``<= 1/2``."""
    x = np.asarray(signals, dtype=float)
    steps = 0.5 ** (np.arange(1, len(x) + 1) + 1)
    moves = np.where(x > 0.5, -steps, steps)
    return np.concatenate([[0.5], 0.5 + np.cumsum(moves)])


def adversary_rule(x: float) -> int:
    return -1 if x > 0.5 else 1


@dataclass(frozen=True)
class IIDStrategy:
    """Bets ``values[j]`` with probability ``probs[j]`` independently each step."""

    values: tuple = (1.0, -1.0)
    probs: tuple = (0.5, 0.5)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        q = np.asarray(self.probs, dtype=float)
        if v.shape != q.shape or v.ndim != 1 or len(v) == 0:
            raise ValueError("values and probs must be matching 1-d sequences")
        if np.any(np.abs(v) > 1.0):
            raise ValueError("bets must satisfy |M| <= 1")
        if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be a probability vector")
        object.__setattr__(self, "values", tuple(v))
        object.__setattr__(self, "probs", tuple(q))

    @classmethod
    def uniform_sign(cls) -> "IIDStrategy":
        return cls((1.0, -1.0), (0.5, 0.5))

    @classmethod
    def idle(cls) -> "IIDStrategy":
        return cls((0.0,), (1.0,))

    @property
    def p_positive(self) -> float:
        return float(sum(q for v, q in zip(self.values, self.probs) if v > 0))

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def draw(self, rng: RandomSource, size) -> np.ndarray:
        cum = np.cumsum(self.probs)
        u = rng.generator.random(size)
        idx = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
        return np.asarray(self.values)[idx]


@dataclass
class OutperformanceReport:
    n: int
    runs: int
    signal: float
    rule_gain: float
    strategy_gains: np.ndarray  # one per run
    expected_gain: float  # exact E(sum M_i dS_i)

    @property
    def mean_gain(self) -> float:
        return float(self.strategy_gains.mean())

    @property
    def gain_stderr(self) -> float:
        if self.runs < 2:
            return 0.0
        return float(self.strategy_gains.std(ddof=1) / np.sqrt(self.runs))

    @property
    def statistic(self) -> float:
        """Run-averaged ``(1/n)(gain_M - gain_D / 2)``."""
        return (self.mean_gain - 0.5 * self.rule_gain) / self.n

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "runs", "signal", "rule_gain", "mean_strategy_gain", "stderr", "expected_gain", "statistic"])
        w.writerow([self.n, self.runs, self.signal, repr(self.rule_gain), repr(self.mean_gain),
                    repr(self.gain_stderr), repr(self.expected_gain), repr(self.statistic)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def verify_outperformance(strategy: IIDStrategy, n: int, runs: int, rng: RandomSource | int = 0) -> OutperformanceReport:
    """Monte Carlo comparison of ``strategy`` with the adversary's rule on the
    adversarial path built from the strategy's declared ``P{M > 0}``."""
    if n < 0 or runs < 1:
        raise ValueError("need n >= 0 and runs >= 1")
    rng = rng if isinstance(rng, RandomSource) else RandomSource(rng)
    x = strategy.p_positive
    signals = np.full(n, x)
    dS = np.diff(adversarial_prices(signals))
    rule = np.array([adversary_rule(v) for v in signals], dtype=float)
    rule_gain = float(np.dot(rule, dS))
    bets = strategy.draw(rng, (runs, n))
    gains = bets @ dS
    return OutperformanceReport(n, runs, x, rule_gain, gains, strategy.mean * float(dS.sum()))
