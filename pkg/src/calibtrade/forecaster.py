"""Defensive forecasting with randomized rounding.

Each round the forecaster picks ``p`` as a root of

    U_n(p) = sum_{i<n} [K((p, xbar_n), (p_i, xbar_i)) + R(x_n, x_i)] (y_i - p_i)

so that ``M_n = M_{n-1} + U_n(p_n)(y_n - p_n)`` never increases.  ``K`` is the
rounding kernel over the forecast and information vector (or a smooth
substitute), ``R`` a kernel over the scalar side signal.  The forecast and
information vector are then randomly rounded to the current grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .kernels import CosineHalfPi, DiscretizedRounding, Kernel, Zero
from .rounding import RandomSource, RoundingGrid, round_value

__all__ = [
    "Record",
    "ScheduleState",
    "ForecastSession",
    "schedule_delta",
    "find_forecast",
    "SCAN_CELLS",
]

SCAN_CELLS = 64
ROOT_TOL = 1e-9
WIDTH_TOL = 1e-12
ZERO_TOL = 1e-12
MAX_DENSE_CELLS = 20_000_000


class Record(NamedTuple):
    p: float
    xbar: tuple
    signal: float
    y: float


def _reciprocal_floor(delta: float) -> float:
    """Largest ``1/K`` (integer ``K >= 2``) not exceeding ``delta``."""
    if delta >= 1.0:
        return 0.5
    K = max(2, math.ceil(1.0 / delta - 1e-9))
    return 1.0 / K


@dataclass
class ScheduleState:
    """Grid resolution schedule.

    ``FixedDelta`` keeps one grid.  ``DoublingTrick`` starts at stage 0
    (``n_0 = 1``) and moves to stage ``s >= 1`` at round ``n_s = (s + M)^M``
    with ``M = ceil(1 / epsilon)``; each stage uses the resolution that
    balances the discretization and kernel terms of the calibration bound.
    """

    mode: str = "fixed"
    delta: float | None = 0.1
    epsilon: float | None = None
    k: int = 1
    cF: float = 0.0
    s: int = 0
    M: int = field(init=False, default=0)

    def __post_init__(self):
        if self.mode == "fixed":
            if self.delta is None:
                raise ValueError("fixed schedule needs delta")
            RoundingGrid(self.delta)
        elif self.mode == "doubling":
            if self.epsilon is None or not 0.0 < self.epsilon < 1.0:
                raise ValueError("doubling schedule needs epsilon in (0, 1)")
            self.M = math.ceil(1.0 / self.epsilon - 1e-12)
        else:
            raise ValueError(f"unknown schedule mode {self.mode!r}")

    @classmethod
    def fixed(cls, delta: float) -> "ScheduleState":
        return cls(mode="fixed", delta=delta)

    @classmethod
    def doubling(cls, epsilon: float, k: int = 1, cF: float = 0.0) -> "ScheduleState":
        return cls(mode="doubling", delta=None, epsilon=epsilon, k=k, cF=cF)

    def stage_start(self, s: int) -> int:
        if self.mode == "fixed":
            return 1
        return 1 if s == 0 else (s + self.M) ** self.M

    @property
    def n_s(self) -> int:
        return self.stage_start(self.s)

    @property
    def n_next(self) -> int | None:
        if self.mode == "fixed":
            return None
        return self.stage_start(self.s + 1)

    @property
    def delta_s(self) -> float:
        return schedule_delta(self, self.k, self.cF)

    def grid(self) -> RoundingGrid:
        return RoundingGrid(self.delta_s)

    def advance_to(self, round_index: int) -> bool:
        """Move to the stage containing 1-based ``round_index``; return whether
        the stage changed."""
        changed = False
        while self.n_next is not None and round_index >= self.n_next:
            self.s += 1
            changed = True
        return changed


def schedule_delta(schedule: ScheduleState, k: int, cF: float) -> float:
    """Resolution of the current stage, floored to a reciprocal of an integer."""
    if schedule.mode == "fixed":
        return RoundingGrid(schedule.delta).delta
    raw = ((k + 1) / 2) ** (2 / (k + 3)) * (cF**2 + 1) ** (1 / (k + 3)) * schedule.n_s ** (-1 / (k + 3))
    return _reciprocal_floor(raw)


def find_forecast(u: Callable[[np.ndarray], np.ndarray], fallback: float = 0.5) -> float:
    """Root of ``u`` on [0, 1] in the defensive-forecasting sense.

    ``u`` is vectorized; if it has an ``at`` attribute, that scalar version is
    used for the bisection steps.  Returns 1 when ``u`` is positive on the
    scan, 0 when negative, otherwise the root inside the first sign-change
    cell (scanning left to right) located by bisection.
    """
    at = getattr(u, "at", None) or (lambda q: float(u(np.array([q]))[0]))
    scan = np.linspace(0.0, 1.0, SCAN_CELLS + 1)
    vals = np.asarray(u(scan), dtype=float)
    if np.all(np.abs(vals) < ZERO_TOL):
        return fallback
    if np.all(vals > 0):
        return 1.0
    if np.all(vals < 0):
        return 0.0
    for j in range(SCAN_CELLS + 1):
        if abs(vals[j]) <= ROOT_TOL:
            return float(scan[j])
        if j < SCAN_CELLS and vals[j] * vals[j + 1] < 0:
            break
    else:  # pragma: no cover - a mixed-sign scan always has a bracket
        return fallback
    lo, hi, f_lo = float(scan[j]), float(scan[j + 1]), float(vals[j])
    mid = 0.5 * (lo + hi)
    while hi - lo > WIDTH_TOL:
        mid = 0.5 * (lo + hi)
        f_mid = at(mid)
        if abs(f_mid) <= ROOT_TOL:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return mid


class _Buffer:
    """Append-only float array with amortized growth."""

    def __init__(self, width: int | None = None, capacity: int = 256):
        shape = (capacity,) if width is None else (capacity, width)
        self._data = np.empty(shape)
        self.n = 0

    def append(self, value):
        if self.n == len(self._data):
            grown = np.empty((2 * len(self._data),) + self._data.shape[1:])
            grown[: self.n] = self._data[: self.n]
            self._data = grown
        self._data[self.n] = value
        self.n += 1

    @property
    def view(self) -> np.ndarray:
        return self._data[: self.n]


class ForecastSession:
    """State of one defensive forecasting run.

    Parameters
    ----------
    k : dimension of the information vector ``xbar``.
    rounding_part : kernel over ``(p, xbar)``.  ``None`` means the rounding
        kernel on the schedule's current grid.  A one-dimensional kernel is
        applied to the forecast coordinate only.
    side_part : kernel ``R`` over the scalar signal.
    schedule : resolution schedule used for randomization (and for the
        rounding kernel when ``rounding_part`` is ``None``).
    rng : random source for the rounding draws.
    max_rounds : optional cap on the session length.
    """

    def __init__(
        self,
        k: int = 1,
        rounding_part: Kernel | None = None,
        side_part: Kernel | None = None,
        schedule: ScheduleState | None = None,
        rng: RandomSource | int | None = 0,
        max_rounds: int | None = 5000,
    ):
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.side_part = side_part if side_part is not None else Zero()
        if self.side_part.dim != 1:
            raise ValueError("side kernel must act on scalar signals")
        if rounding_part is not None and rounding_part.dim not in (1, k + 1):
            raise ValueError(f"rounding kernel must have dimension 1 or {k + 1}")
        self.rounding_part = rounding_part
        self.schedule = schedule if schedule is not None else ScheduleState.fixed(0.1)
        if self.schedule.mode == "doubling":
            self.schedule.k = k
        self.rng = rng if isinstance(rng, RandomSource) else RandomSource(0 if rng is None else rng)
        self.max_rounds = max_rounds

        self.supermartingale = 1.0
        self.last_increment = 0.0
        self._p = _Buffer()
        self._x = _Buffer(k)
        self._sig = _Buffer()
        self._y = _Buffer()
        self._grid = self.schedule.grid()
        self._mu: np.ndarray | None = None
        self._cos_acc = np.zeros(2)
        self._rebuild_accumulators()

    # -- history -----------------------------------------------------------
    def __len__(self) -> int:
        return self._p.n

    @property
    def history(self) -> list[Record]:
        return [
            Record(float(p), tuple(map(float, x)), float(s), float(y))
            for p, x, s, y in zip(self._p.view, self._x.view, self._sig.view, self._y.view)
        ]

    @property
    def grid(self) -> RoundingGrid:
        return self._grid

    @property
    def residuals(self) -> np.ndarray:
        return self._y.view - self._p.view

    @property
    def weighted_residual(self) -> np.ndarray | None:
        """Running ``sum_i W(p_i, xbar_i)(y_i - p_i)`` over ``V^{k+1}`` (rounding kernel only)."""
        return None if self._mu is None else self._mu.copy()

    # -- kernel bookkeeping ------------------------------------------------
    def _uses_grid_kernel(self) -> bool:
        return self.rounding_part is None

    def _rebuild_accumulators(self):
        r = self.residuals
        if self._uses_grid_kernel():
            cells = (self._grid.K + 1) ** (self.k + 1)
            if cells > MAX_DENSE_CELLS:
                raise ValueError(f"grid 1/{self._grid.K} in dimension {self.k + 1} is too fine")
            self._mu = np.zeros((self._grid.K + 1,) * (self.k + 1))
            if len(r):
                pts = np.column_stack([self._p.view, self._x.view])
                self._scatter(pts, r)
        elif isinstance(self.rounding_part, CosineHalfPi) and self.rounding_part.dim == 1:
            ang = 0.5 * np.pi * self._p.view
            self._cos_acc = np.array([np.dot(np.cos(ang), r), np.dot(np.sin(ang), r)])

    def _scatter(self, pts: np.ndarray, r: np.ndarray):
        """Add ``W(pts[j]) * r[j]`` into the dense accumulator."""
        idx, hi = self._grid.bracket_array(pts)
        d = pts.shape[1]
        for corner in range(2**d):
            bits = [(corner >> a) & 1 for a in range(d)]
            w = np.ones(len(r))
            key = []
            for a, b in enumerate(bits):
                w = w * (hi[:, a] if b else 1.0 - hi[:, a])
                key.append(np.minimum(idx[:, a] + b, self._grid.K))
            np.add.at(self._mu, tuple(key), w * r)

    def _check_inputs(self, xbar, signal) -> tuple[np.ndarray, float]:
        x = np.atleast_1d(np.asarray(xbar, dtype=float))
        if x.shape != (self.k,):
            raise ValueError(f"information vector must have length {self.k}")
        if np.any((x < 0) | (x > 1)):
            raise ValueError("information vector outside [0, 1]")
        signal = float(signal)
        if not 0.0 <= signal <= 1.0:
            raise ValueError("signal outside [0, 1]")
        return x, signal

    def _side_term(self, signal: float) -> float:
        if len(self) == 0 or isinstance(self.side_part, Zero):
            return 0.0
        vals = self.side_part.eval_against(np.array([signal]), self._sig.view[:, None])
        return float(np.dot(vals, self.residuals))

    def u_function(self, xbar, signal) -> Callable[[np.ndarray], np.ndarray]:
        """``U_n`` as a vectorized function of ``p`` for this round's inputs."""
        x, signal = self._check_inputs(xbar, signal)
        side = self._side_term(signal)
        n = len(self)
        if n == 0:
            return lambda p: np.zeros_like(np.asarray(p, dtype=float))

        if self._uses_grid_kernel():
            line = self._mu
            # contract information axes from the last one down
            for a in range(self.k - 1, -1, -1):
                i, h = self._grid.bracket(float(x[a]))
                sl_lo = [slice(None)] * line.ndim
                sl_lo[a + 1] = i
                sl_hi = list(sl_lo)
                sl_hi[a + 1] = min(i + 1, self._grid.K)
                line = (1.0 - h) * line[tuple(sl_lo)] + (h * line[tuple(sl_hi)] if h else 0.0)
            grid = self._grid
            K = grid.K

            def u(p):
                i, h = grid.bracket_array(p)
                return (1.0 - h) * line[i] + h * line[np.minimum(i + 1, K)] + side

            def at(q: float) -> float:
                x = q * K
                i = min(int(x), K - 1)
                h = x - i
                return float((1.0 - h) * line[i] + h * line[i + 1] + side)

            u.at = at
            return u

        kern = self.rounding_part
        if isinstance(kern, CosineHalfPi) and kern.dim == 1:
            a, b = self._cos_acc

            def u(p):
                ang = 0.5 * np.pi * np.asarray(p, dtype=float)
                return np.cos(ang) * a + np.sin(ang) * b + side

            return u

        r = self.residuals
        if kern.dim == 1:
            hist = self._p.view[:, None]
        else:
            hist = np.column_stack([self._p.view, self._x.view])

        def u(p):
            p = np.atleast_1d(np.asarray(p, dtype=float))
            out = np.empty(len(p))
            for j, pj in enumerate(p):
                q = np.array([pj]) if kern.dim == 1 else np.concatenate([[pj], x])
                out[j] = np.dot(kern.eval_against(q, hist), r)
            return out + side

        return u

    # -- protocol ----------------------------------------------------------
    def u_value(self, p: float, xbar, signal: float) -> float:
        if not 0.0 <= p <= 1.0:
            raise ValueError("p outside [0, 1]")
        return float(self.u_function(xbar, signal)(np.array([p]))[0])

    def next_forecast(self, xbar, signal: float = 0.0) -> float:
        if len(self) == 0:
            self._check_inputs(xbar, signal)
            return 0.5
        fallback = float(self._p.view[-1])
        return find_forecast(self.u_function(xbar, signal), fallback=fallback)

    def randomize_round(self, p: float, xbar) -> tuple[float, tuple[float, ...]]:
        """Round the forecast, then each information coordinate, on the current grid."""
        x = np.atleast_1d(np.asarray(xbar, dtype=float))
        g = self._grid
        p_idx = round_value(g, float(p), self.rng.uniform())
        x_idx = [round_value(g, float(v), self.rng.uniform()) for v in x]
        return g.value(p_idx), tuple(g.value(i) for i in x_idx)

    def update(self, p: float, xbar, signal: float, y: float) -> "ForecastSession":
        y = float(y)
        if not 0.0 <= y <= 1.0:
            raise ValueError(f"outcome {y!r} outside [0, 1]")
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"forecast {p!r} outside [0, 1]")
        if self.max_rounds is not None and len(self) >= self.max_rounds:
            raise RuntimeError(f"session is capped at {self.max_rounds} rounds")
        x, signal = self._check_inputs(xbar, signal)
        u_p = self.u_value(p, x, signal)
        self.last_increment = u_p * (y - p)
        self.supermartingale += self.last_increment

        self._p.append(p)
        self._x.append(x)
        self._sig.append(signal)
        self._y.append(y)
        r = y - p
        if self._uses_grid_kernel():
            self._scatter(np.concatenate([[p], x])[None, :], np.array([r]))
        elif isinstance(self.rounding_part, CosineHalfPi) and self.rounding_part.dim == 1:
            ang = 0.5 * np.pi * p
            self._cos_acc += r * np.array([math.cos(ang), math.sin(ang)])

        if self.schedule.advance_to(len(self) + 1):
            self._grid = self.schedule.grid()
            self._rebuild_accumulators()
        return self

    def step(self, xbar, signal: float, y: float):
        """One full round: forecast, randomize, observe ``y``, update.

        Returns ``(p, p_tilde, x_tilde)``.
        """
        p = self.next_forecast(xbar, signal)
        p_tilde, x_tilde = self.randomize_round(p, xbar)
        self.update(p, xbar, signal, y)
        return p, p_tilde, x_tilde
