"""Calibration scores over checking rules, and the matching theoretical bounds."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .kernels import InducedFunction

__all__ = [
    "CheckingRule",
    "IntervalProduct",
    "ForecastAboveInfo",
    "ForecastAtMostInfo",
    "DecisionRegion",
    "CalibrationReport",
    "calibration_error",
    "theorem1_bound",
    "hoeffding_bound",
    "proposition1_bound",
    "rkhs_residual",
    "product_rules",
]


class CheckingRule:
    """Indicator of a region of ``(p, xbar)`` space."""

    name: str = "rule"
    k: int | None = None  # information dimension, None if any

    def __call__(self, p: float, xbar: Sequence[float]) -> bool:
        raise NotImplementedError

    def mask(self, p: np.ndarray, X: np.ndarray) -> np.ndarray:
        return np.array([self(pi, xi) for pi, xi in zip(p, X)], dtype=bool)


def _in_interval(v, lo: float, hi: float):
    # half-open, except that an interval ending at 1 includes 1
    if hi >= 1.0:
        return (v >= lo) & (v <= hi)
    return (v >= lo) & (v < hi)


@dataclass(frozen=True)
class IntervalProduct(CheckingRule):
    intervals: tuple
    name: str = ""

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        if not ivs:
            raise ValueError("need at least the forecast interval")
        for a, b in ivs:
            if not 0.0 <= a <= b <= 1.0:
                raise ValueError(f"interval [{a}, {b}] not inside [0, 1]")
        object.__setattr__(self, "intervals", ivs)
        if not self.name:
            object.__setattr__(self, "name", "x".join(f"[{a:g},{b:g}]" for a, b in ivs))

    @property
    def k(self) -> int:  # type: ignore[override]
        return len(self.intervals) - 1

    def __call__(self, p, xbar) -> bool:
        return bool(self.mask(np.array([p]), np.atleast_2d(np.asarray(xbar, dtype=float)))[0])

    def mask(self, p, X):
        p = np.asarray(p, dtype=float)
        X = np.asarray(X, dtype=float).reshape(len(p), -1)
        out = _in_interval(p, *self.intervals[0])
        for axis, (a, b) in enumerate(self.intervals[1:]):
            out &= _in_interval(X[:, axis], a, b)
        return out


@dataclass(frozen=True)
class ForecastAboveInfo(CheckingRule):
    """``p > xbar[0]``: the rounds on which the rise strategy enters."""

    name: str = "p>x"

    def __call__(self, p, xbar) -> bool:
        return bool(p > np.atleast_1d(xbar)[0])

    def mask(self, p, X):
        return np.asarray(p) > np.asarray(X, dtype=float).reshape(len(p), -1)[:, 0]


@dataclass(frozen=True)
class ForecastAtMostInfo(CheckingRule):
    name: str = "p<=x"

    def __call__(self, p, xbar) -> bool:
        return bool(p <= np.atleast_1d(xbar)[0])

    def mask(self, p, X):
        return np.asarray(p) <= np.asarray(X, dtype=float).reshape(len(p), -1)[:, 0]


@dataclass(frozen=True)
class DecisionRegion(CheckingRule):
    """Rounds where a decision rule applied to the signal coordinate takes ``values[j]``."""

    rule: Callable[[float], float] = None
    value: float = 0.0
    axis: int = -1
    name: str = ""

    def __post_init__(self):
        if self.rule is None:
            raise ValueError("DecisionRegion needs a rule")
        if not self.name:
            object.__setattr__(self, "name", f"D=={self.value:g}")

    def __call__(self, p, xbar) -> bool:
        return self.rule(float(np.atleast_1d(xbar)[self.axis])) == self.value


@dataclass
class CalibrationReport:
    names: list[str]
    cumulative: np.ndarray
    n: int
    bounds: dict[str, float] = field(default_factory=dict)

    @property
    def normalized(self) -> np.ndarray:
        return self.cumulative / self.n

    def worst(self) -> float:
        return float(np.max(np.abs(self.cumulative)))

    def rows(self):
        bound = self.bounds.get("bound", float("nan"))
        for name, c in zip(self.names, self.cumulative):
            yield {"rule": name, "cumulative": float(c), "normalized": float(c) / self.n, "bound": bound}

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["rule", "cumulative", "normalized", "bound"], lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in row.items()})
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def calibration_error(rules: Sequence[CheckingRule], transcript: Iterable) -> CalibrationReport:
    """Cumulative ``sum_i I_S(p_i, x_i)(y_i - p_i)`` per rule.

    ``transcript`` holds ``(p, xbar, y)`` triples, normally the randomized
    forecasts and information vectors.
    """
    rows = list(transcript)
    if not rows:
        raise ValueError("empty transcript")
    p = np.array([r[0] for r in rows], dtype=float)
    X = np.array([np.atleast_1d(r[1]) for r in rows], dtype=float)
    y = np.array([r[2] for r in rows], dtype=float)
    resid = y - p
    cum = np.empty(len(rules))
    for j, rule in enumerate(rules):
        if rule.k is not None and rule.k != X.shape[1]:
            raise ValueError(f"rule {rule.name} expects k={rule.k}, transcript has k={X.shape[1]}")
        cum[j] = math.fsum(resid[rule.mask(p, X)])
    return CalibrationReport([r.name for r in rules], cum, len(rows))


def product_rules(p_edges: Sequence[float], x_edges: Sequence[Sequence[float]] = ()) -> list[IntervalProduct]:
    """All products of consecutive-edge intervals, forecast axis first."""
    axes = [list(zip(p_edges[:-1], p_edges[1:]))]
    axes += [list(zip(e[:-1], e[1:])) for e in x_edges]
    rules = [()]
    for cells in axes:
        rules = [r + (c,) for r in rules for c in cells]
    return [IntervalProduct(r) for r in rules]


def theorem1_bound(k: int, cF: float, epsilon: float, n: int) -> float:
    """Deterministic part of the high-probability calibration bound under the
    doubling schedule."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return (
        4 * math.e
        * ((k + 1) / 2) ** (2 / (k + 3))
        * (cF**2 + 1) ** (1 / (k + 3))
        * n ** (1 - 1 / (k + 3) + epsilon)
    )


def hoeffding_bound(n: int, delta: float) -> float:
    """``sqrt(n/2 * ln(2/delta))``: deviation of a sum of ``n`` martingale
    differences bounded by 1, at confidence ``1 - delta``."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if n < 0:
        raise ValueError("n must be nonnegative")
    return math.sqrt(n / 2 * math.log(2 / delta))


def proposition1_bound(delta_grid: float, k: int, cF: float, n: int, delta: float) -> float:
    """Fixed-resolution calibration bound ``Dn + sqrt((cF^2+1) n / D^(k+1)) + hoeffding``."""
    return (
        delta_grid * n
        + math.sqrt((cF**2 + 1) * n / delta_grid ** (k + 1))
        + hoeffding_bound(n, delta)
    )


def rkhs_residual(D: InducedFunction, transcript: Iterable) -> float:
    """``|sum_i D(x_i)(y_i - p_i)|`` over ``(signal, p, y)`` triples."""
    rows = list(transcript)
    if not rows:
        return 0.0
    arr = np.asarray(rows, dtype=float)
    vals = D.values(arr[:, 0])
    return abs(math.fsum(vals * (arr[:, 2] - arr[:, 1])))
