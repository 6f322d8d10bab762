"""ARMA(p, q) baseline forecaster fitted by two-stage least squares.

Stage one fits a long autoregression to estimate the innovations; stage two
regresses the series on its own lags and the lagged innovation estimates
(Hannan-Rissanen).  Forecasts are one-step conditional means clamped to
[0, 1] so they plug into the same trading rules as the calibrated forecaster.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

__all__ = ["ArmaModel", "ArmaFitError", "fit", "forecast_next", "innovations", "ArmaTracker"]


class ArmaFitError(ValueError):
    pass


@dataclass(frozen=True)
class ArmaModel:
    ar: tuple = ()
    ma: tuple = ()
    intercept: float = 0.0
    sigma2: float = float("nan")
    fitted: bool = True

    def __post_init__(self):
        object.__setattr__(self, "ar", tuple(float(a) for a in self.ar))
        object.__setattr__(self, "ma", tuple(float(m) for m in self.ma))

    @property
    def p(self) -> int:
        return len(self.ar)

    @property
    def q(self) -> int:
        return len(self.ma)


def _lagged(y: np.ndarray, lags: int, start: int) -> np.ndarray:
    """Columns ``y[t-1], ..., y[t-lags]`` for ``t = start..len(y)-1``."""
    return np.column_stack([y[start - j : len(y) - j] for j in range(1, lags + 1)]) if lags else np.empty((len(y) - start, 0))


def _lstsq(design: np.ndarray, target: np.ndarray) -> np.ndarray:
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    return coef


def innovations(model: ArmaModel, y) -> np.ndarray:
    """One-step prediction errors of ``model`` over ``y``, pre-sample values zero."""
    y = np.asarray(y, dtype=float)
    e = np.zeros(len(y))
    for t in range(len(y)):
        pred = model.intercept
        for j, a in enumerate(model.ar, start=1):
            if t - j >= 0:
                pred += a * y[t - j]
        for j, b in enumerate(model.ma, start=1):
            if t - j >= 0:
                pred += b * e[t - j]
        e[t] = y[t] - pred
    return e


def fit(series, p: int = 2, q: int = 1) -> ArmaModel:
    y = np.asarray(series, dtype=float)
    if p < 0 or q < 0 or p + q < 1:
        raise ValueError("need p, q >= 0 and p + q >= 1")
    if len(y) < 10 * (p + q + 1):
        raise ArmaFitError(f"series of length {len(y)} too short for ARMA({p},{q})")
    if np.ptp(y) <= 1e-12 * max(1.0, np.abs(y).max()):
        raise ArmaFitError("constant series")

    if q == 0:
        resid_lags = np.empty((len(y), 0))
        start = p
    else:
        m = min(max(p, q) + 10, len(y) // 4)
        X = np.column_stack([np.ones(len(y) - m), _lagged(y, m, m)])
        long_coef = _lstsq(X, y[m:])
        e_hat = np.zeros(len(y))
        e_hat[m:] = y[m:] - X @ long_coef
        resid_lags = e_hat
        start = m + q
    design = [np.ones(len(y) - start), _lagged(y, p, start)]
    if q:
        design.append(_lagged(resid_lags, q, start))
    X = np.column_stack(design)
    coef = _lstsq(X, y[start:])
    if not np.all(np.isfinite(coef)):
        raise ArmaFitError("degenerate design")
    model = ArmaModel(ar=tuple(coef[1 : 1 + p]), ma=tuple(coef[1 + p :]), intercept=float(coef[0]))
    e = innovations(model, y)[start:]
    return ArmaModel(model.ar, model.ma, model.intercept, float(np.mean(e**2)), True)


def forecast_next(model: ArmaModel, history) -> float:
    if not model.fitted:
        raise ArmaFitError("model has not been fitted")
    y = np.asarray(history, dtype=float)
    e = innovations(model, y) if model.q else np.zeros(len(y))
    n = len(y)
    pred = model.intercept
    for j, a in enumerate(model.ar, start=1):
        if n - j >= 0:
            pred += a * y[n - j]
    for j, b in enumerate(model.ma, start=1):
        if n - j >= 0:
            pred += b * e[n - j]
    return float(min(1.0, max(0.0, pred)))


class ArmaTracker:
    """Online one-step forecaster with periodic refits.

    Refits on all observations every ``refit_every`` observations; between
    refits the innovations are filtered forward in O(p + q) per step.
    """

    def __init__(self, p: int = 2, q: int = 1, refit_every: int = 2000):
        self.p, self.q, self.refit_every = p, q, refit_every
        self.model: ArmaModel | None = None
        self._y: list[float] = []
        self._recent_y: deque = deque(maxlen=max(p, 1))
        self._recent_e: deque = deque(maxlen=max(q, 1))
        self._since_fit = 0

    def _one_step(self) -> float:
        m = self.model
        pred = m.intercept
        for a, v in zip(m.ar, reversed(self._recent_y)):
            pred += a * v
        for b, v in zip(m.ma, reversed(self._recent_e)):
            pred += b * v
        return pred

    def refit(self):
        try:
            self.model = fit(self._y, self.p, self.q)
        except ArmaFitError:
            if self.model is None:
                # random-walk fallback until the data support a fit
                self.model = ArmaModel(ar=(1.0,) + (0.0,) * (self.p - 1), ma=(0.0,) * self.q)
        e = innovations(self.model, self._y)
        self._recent_y = deque(self._y[-max(self.p, 1):], maxlen=max(self.p, 1))
        self._recent_e = deque(e[-max(self.q, 1):].tolist(), maxlen=max(self.q, 1))
        self._since_fit = 0

    def observe(self, y: float):
        y = float(y)
        e = y - self._one_step() if self.model is not None else 0.0
        self._y.append(y)
        self._recent_y.append(y)
        self._recent_e.append(e)
        self._since_fit += 1
        if self.model is not None and self._since_fit >= self.refit_every:
            self.refit()

    def forecast(self) -> float:
        if self.model is None:
            self.refit()
        return float(min(1.0, max(0.0, self._one_step())))
