"""Randomized rounding on a uniform partition of [0, 1].

A real number ``p`` is replaced by one of the two grid points bracketing it,
with probabilities chosen so that the expected grid point equals ``p``.
Vectors are rounded coordinate by coordinate, which gives a product
distribution over the grid ``V^k``.  The dot product of two such weight
vectors is the (positive semidefinite) rounding kernel.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "RoundingGrid",
    "WeightVector",
    "RandomSource",
    "weights",
    "product_weights",
    "sample",
    "rounding_kernel",
]

_RECIPROCAL_TOL = 1e-12


class RoundingGrid:
    """Points ``v_i = i / K`` for ``i = 0..K`` with resolution ``delta = 1 / K``."""

    __slots__ = ("K", "delta", "points")

    def __init__(self, delta: float):
        if not 0.0 < delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {delta!r}")
        K = int(round(1.0 / delta))
        if K < 1 or abs(delta * K - 1.0) > _RECIPROCAL_TOL:
            raise ValueError(f"delta={delta!r} is not the reciprocal of an integer")
        self.K = K
        self.delta = 1.0 / K
        self.points = np.arange(K + 1) / K

    @classmethod
    def from_count(cls, K: int) -> "RoundingGrid":
        if K < 1:
            raise ValueError("K must be a positive integer")
        return cls(1.0 / K)

    def __repr__(self) -> str:
        return f"RoundingGrid(delta=1/{self.K})"

    def __eq__(self, other) -> bool:
        return isinstance(other, RoundingGrid) and other.K == self.K

    def __hash__(self) -> int:
        return hash(("RoundingGrid", self.K))

    def value(self, index: int) -> float:
        return index / self.K

    def bracket(self, p: float) -> tuple[int, float]:
        """Return ``(i, w_hi)``: ``p`` lies in ``[v_i, v_{i+1}]`` and rounds up
        to ``v_{i+1}`` with probability ``w_hi``.

        On a grid point the weight is entirely on that point (``w_hi == 0``),
        and ``p == 1`` is bracketed by the last cell.
        """
        if not 0.0 <= p <= 1.0 or math.isnan(p):
            raise ValueError(f"value {p!r} outside [0, 1]")
        x = p * self.K
        i = int(math.floor(x))
        if i >= self.K:
            return self.K - 1, 1.0
        return i, x - i

    def bracket_array(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized :meth:`bracket`."""
        p = np.asarray(p, dtype=float)
        if np.any((p < 0.0) | (p > 1.0)) or np.any(np.isnan(p)):
            raise ValueError("values outside [0, 1]")
        x = p * self.K
        i = np.minimum(np.floor(x).astype(np.int64), self.K - 1)
        return i, x - i


@dataclass(frozen=True)
class WeightVector:
    """Sparse probability vector over ``V^k``, keyed by integer index tuples."""

    entries: dict[tuple[int, ...], float]
    dimension: int

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if not self.entries:
            raise ValueError("empty weight vector")
        for key, w in self.entries.items():
            if len(key) != self.dimension:
                raise ValueError(f"key {key} does not have dimension {self.dimension}")
            if not -1e-15 <= w <= 1.0 + 1e-15:
                raise ValueError(f"weight {w} outside [0, 1]")
        total = math.fsum(self.entries.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total}, expected 1")

    def __getitem__(self, key) -> float:
        if isinstance(key, int):
            key = (key,)
        return self.entries.get(tuple(key), 0.0)

    def __len__(self) -> int:
        return len(self.entries)

    def items(self):
        return self.entries.items()

    def values_at(self, grid: RoundingGrid) -> dict[tuple[float, ...], float]:
        """Same weights keyed by the grid values rather than indices."""
        return {tuple(grid.value(i) for i in key): w for key, w in self.entries.items()}

    def expectation(self, grid: RoundingGrid) -> np.ndarray:
        mean = np.zeros(self.dimension)
        for key, w in self.entries.items():
            mean += w * np.asarray(key, dtype=float) / grid.K
        return mean

    def marginal(self, axis: int) -> dict[int, float]:
        out: dict[int, float] = {}
        for key, w in self.entries.items():
            out[key[axis]] = out.get(key[axis], 0.0) + w
        return out

    def dot(self, other: "WeightVector") -> float:
        if other.dimension != self.dimension:
            raise ValueError("dimension mismatch")
        small, large = sorted((self.entries, other.entries), key=len)
        return math.fsum(w * large.get(key, 0.0) for key, w in small.items())


def _coordinate_weights(grid: RoundingGrid, p: float) -> list[tuple[int, float]]:
    i, w_hi = grid.bracket(p)
    if w_hi == 0.0:
        return [(i, 1.0)]
    if w_hi == 1.0:
        return [(i + 1, 1.0)]
    return [(i, 1.0 - w_hi), (i + 1, w_hi)]


def weights(grid: RoundingGrid, p: float) -> WeightVector:
    """Two-point rounding weights of ``p``; their mean is ``p``."""
    return WeightVector({(i,): w for i, w in _coordinate_weights(grid, p)}, 1)


def product_weights(grid: RoundingGrid, xbar: Sequence[float]) -> WeightVector:
    """Product of per-coordinate rounding weights over ``V^k``."""
    xbar = list(np.atleast_1d(np.asarray(xbar, dtype=float)))
    if not xbar:
        raise ValueError("empty information vector")
    per_coord = [_coordinate_weights(grid, float(x)) for x in xbar]
    entries = {}
    for combo in itertools.product(*per_coord):
        key = tuple(i for i, _ in combo)
        entries[key] = math.prod(w for _, w in combo)
    return WeightVector(entries, len(xbar))


def rounding_kernel(grid: RoundingGrid, a, b) -> float:
    """Dot product of the product rounding weights of ``a`` and ``b``."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    # the kernel factorizes over coordinates
    value = 1.0
    for x, y in zip(a, b):
        wx = dict(_coordinate_weights(grid, float(x)))
        wy = dict(_coordinate_weights(grid, float(y)))
        value *= sum(w * wy.get(i, 0.0) for i, w in wx.items())
        if value == 0.0:
            break
    return value


@dataclass
class RandomSource:
    """Seedable PCG64 stream.

    Streams derived with :meth:`spawn` are independent of the parent and of
    each other, and depend only on ``(seed, stream)``.
    """

    seed: int
    stream: tuple[int, ...] = ()
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.seed = int(self.seed)
        self.stream = tuple(int(s) for s in self.stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def spawn(self, index: int) -> "RandomSource":
        return RandomSource(self.seed, self.stream + (int(index),))

    def uniform(self) -> float:
        return float(self._gen.random())

    def uniforms(self, size: int) -> np.ndarray:
        return self._gen.random(size)

    def normal(self, scale: float = 1.0, size=None):
        return self._gen.normal(0.0, scale, size)

    def choice_sign(self, p_positive: float, size: int) -> np.ndarray:
        """Draw ``+1`` with probability ``p_positive`` and ``-1`` otherwise."""
        return np.where(self._gen.random(size) < p_positive, 1.0, -1.0)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen


def round_value(grid: RoundingGrid, p: float, u: float) -> int:
    """Round ``p`` to a grid index using the uniform draw ``u``."""
    i, w_hi = grid.bracket(p)
    # lower point first, matching sample()
    return i if u < 1.0 - w_hi else i + 1


def sample(grid: RoundingGrid, w: WeightVector, rng: RandomSource) -> tuple[float, ...]:
    """Draw a grid-point tuple from ``w``.

    Coordinates are drawn in index order from their conditional
    distributions, one uniform per coordinate.
    """
    candidates: Iterable = list(w.items())
    chosen: list[int] = []
    for axis in range(w.dimension):
        cond: dict[int, float] = {}
        for key, weight in candidates:
            cond[key[axis]] = cond.get(key[axis], 0.0) + weight
        total = math.fsum(cond.values())
        u = rng.uniform() * total
        acc = 0.0
        ordered = sorted(cond.items())
        pick = ordered[-1][0]
        for idx, weight in ordered:
            acc += weight
            if u < acc:
                pick = idx
                break
        chosen.append(pick)
        candidates = [(k, wt) for k, wt in candidates if k[axis] == pick]
    return tuple(grid.value(i) for i in chosen)
