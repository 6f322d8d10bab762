"""Kernels on ``[0, 1]^d`` and functions induced by them.

Every kernel is an immutable object with a scalar ``eval`` and a vectorized
``eval_rows`` (one point against many).  ``ExpSmooth`` is the only
non-symmetric member; it is usable inside the forecaster but is rejected by
:func:`gram` and :func:`induced_norm`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rounding import RoundingGrid

__all__ = [
    "Kernel",
    "Sobolev",
    "Gaussian",
    "CosineHalfPi",
    "ExpSmooth",
    "DiscretizedRounding",
    "Zero",
    "Sum",
    "InducedFunction",
    "NumericalError",
    "eval_kernel",
    "embedding_constant",
    "gram",
    "induced_norm",
    "SOBOLEV_EMBEDDING",
]

SOBOLEV_EMBEDDING = math.sqrt(1.0 / math.tanh(1.0))


class NumericalError(ArithmeticError):
    """A quantity that should be nonnegative came out clearly negative."""


def _as_points(x, dim: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.shape[-1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {arr.shape}")
    return arr


class Kernel:
    dim: int = 1
    symmetric: bool = True

    def eval(self, x, y) -> float:
        x = _as_points(x, self.dim)
        y = _as_points(y, self.dim)
        if x.ndim != 1 or y.ndim != 1:
            raise ValueError("eval takes single points")
        return float(self.eval_rows(x[None, :], y)[0])

    def eval_rows(self, X: np.ndarray, y) -> np.ndarray:
        """``K(X[i], y)`` for every row of ``X`` (shape ``(n, dim)``)."""
        raise NotImplementedError

    def eval_against(self, x, Y: np.ndarray) -> np.ndarray:
        """``K(x, Y[j])`` for every row of ``Y``; differs from
        :meth:`eval_rows` only for non-symmetric kernels."""
        return self.eval_rows(Y, x)

    def embedding_constant(self) -> float:
        raise NotImplementedError

    def __add__(self, other: "Kernel") -> "Sum":
        return Sum((self, other))


@dataclass(frozen=True)
class Sobolev(Kernel):
    """Reproducing kernel of H^1([0, 1]); a tensor product for ``dim > 1``."""

    dim: int = 1

    def eval_rows(self, X, y):
        X = _as_points(X, self.dim).reshape(-1, self.dim)
        y = _as_points(y, self.dim)
        lo = np.minimum(X, y)
        hi = np.maximum(X, y)
        vals = np.cosh(lo) * np.cosh(1.0 - hi) / math.sinh(1.0)
        return np.prod(vals, axis=1)

    def embedding_constant(self) -> float:
        return SOBOLEV_EMBEDDING ** self.dim


@dataclass(frozen=True)
class Gaussian(Kernel):
    """``exp(-|x - y|^2 / sigma^2)``."""

    sigma: float = 0.1
    dim: int = 1

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def eval_rows(self, X, y):
        X = _as_points(X, self.dim).reshape(-1, self.dim)
        y = _as_points(y, self.dim)
        d2 = np.sum((X - y) ** 2, axis=1)
        return np.exp(-d2 / self.sigma**2)

    def embedding_constant(self) -> float:
        return 1.0


@dataclass(frozen=True)
class CosineHalfPi(Kernel):
    """``cos(pi (t - t') / 2)`` on [0, 1]."""

    dim: int = 1

    def eval_rows(self, X, y):
        X = _as_points(X, self.dim).reshape(-1, self.dim)
        y = _as_points(y, self.dim)
        return np.prod(np.cos(0.5 * np.pi * (X - y)), axis=1)

    def embedding_constant(self) -> float:
        return 1.0


@dataclass(frozen=True)
class ExpSmooth(Kernel):
    """``exp(c (p - p') + c2 * sum(x - x'))`` over ``(p, x)``.

    Not symmetric, so not a reproducing kernel; only meant as a smooth
    stand-in inside the forecaster.
    """

    c: float = 1.0
    c2: float = 1.0
    dim: int = 2
    symmetric: bool = field(default=False, init=False)

    def __post_init__(self):
        if not (self.c > 0 and self.c2 > 0):
            raise ValueError("c and c2 must be positive")
        if self.dim < 1:
            raise ValueError("dim must be positive")

    def eval_rows(self, X, y):
        X = _as_points(X, self.dim).reshape(-1, self.dim)
        y = _as_points(y, self.dim)
        expo = self.c * (X[:, 0] - y[0])
        if self.dim > 1:
            expo = expo + self.c2 * np.sum(X[:, 1:] - y[1:], axis=1)
        return np.exp(expo)

    def eval_against(self, x, Y):
        # the exponent is antisymmetric
        return 1.0 / self.eval_rows(Y, x)

    def embedding_constant(self) -> float:
        raise ValueError("ExpSmooth is not a reproducing kernel")


@dataclass(frozen=True)
class DiscretizedRounding(Kernel):
    """Dot product of product rounding weights on ``grid``."""

    grid: RoundingGrid = field(default_factory=lambda: RoundingGrid(0.1))
    dim: int = 1

    def eval_rows(self, X, y):
        X = _as_points(X, self.dim).reshape(-1, self.dim)
        y = _as_points(y, self.dim)
        out = np.ones(X.shape[0])
        for axis in range(self.dim):
            ia, ha = self.grid.bracket_array(X[:, axis])
            ib, hb = self.grid.bracket(float(y[axis]))
            same = (1 - ha) * (1 - hb) + ha * hb
            a_above = (1 - ha) * hb  # a's lower point is b's upper point
            a_below = ha * (1 - hb)
            out *= np.where(ia == ib, same, 0.0) + np.where(ia == ib + 1, a_above, 0.0) + np.where(
                ia + 1 == ib, a_below, 0.0
            )
        return out

    def embedding_constant(self) -> float:
        return 1.0


@dataclass(frozen=True)
class Zero(Kernel):
    dim: int = 1

    def eval_rows(self, X, y):
        X = _as_points(X, self.dim).reshape(-1, self.dim)
        _as_points(y, self.dim)
        return np.zeros(X.shape[0])

    def embedding_constant(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Sum(Kernel):
    members: tuple = ()

    def __post_init__(self):
        if not self.members:
            raise ValueError("Sum needs at least one member")
        dims = {m.dim for m in self.members}
        if len(dims) != 1:
            raise ValueError(f"Sum members disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "members", tuple(self.members))

    @property
    def dim(self) -> int:  # type: ignore[override]
        return self.members[0].dim

    @property
    def symmetric(self) -> bool:  # type: ignore[override]
        return all(m.symmetric for m in self.members)

    def eval_rows(self, X, y):
        return sum(m.eval_rows(X, y) for m in self.members)

    def eval_against(self, x, Y):
        return sum(m.eval_against(x, Y) for m in self.members)

    def embedding_constant(self) -> float:
        return math.sqrt(sum(m.embedding_constant() ** 2 for m in self.members))


def eval_kernel(kernel: Kernel, x, y) -> float:
    return kernel.eval(x, y)


def embedding_constant(kernel: Kernel) -> float:
    """``sup_x sqrt(K(x, x))``, in closed form per kernel family."""
    return kernel.embedding_constant()


def gram(kernel: Kernel, points) -> np.ndarray:
    if not kernel.symmetric:
        raise ValueError("Gram matrix requested for a non-symmetric kernel")
    P = np.asarray(points, dtype=float).reshape(-1, kernel.dim)
    if P.shape[0] == 0:
        raise ValueError("no points")
    G = np.empty((P.shape[0], P.shape[0]))
    for j, y in enumerate(P):
        G[:, j] = kernel.eval_rows(P, y)
    return 0.5 * (G + G.T)


@dataclass(frozen=True)
class InducedFunction:
    """``f(x) = sum_j alpha_j K(center_j, x)``."""

    kernel: Kernel
    centers: tuple
    coefficients: tuple

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float).reshape(-1, self.kernel.dim)
        coefs = np.asarray(self.coefficients, dtype=float).ravel()
        if len(centers) == 0 or len(centers) != len(coefs):
            raise ValueError("centers and coefficients must be nonempty and of equal length")
        object.__setattr__(self, "centers", tuple(map(tuple, centers)))
        object.__setattr__(self, "coefficients", tuple(coefs))

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.centers, dtype=float)

    def __call__(self, x) -> float:
        return float(np.dot(self.kernel.eval_rows(self.center_array, x), self.coefficients))

    def values(self, xs) -> np.ndarray:
        """Vectorized evaluation at the rows of ``xs``."""
        xs = np.asarray(xs, dtype=float).reshape(-1, self.kernel.dim)
        alpha = np.asarray(self.coefficients)
        out = np.zeros(len(xs))
        for c, a in zip(self.center_array, alpha):
            out += a * self.kernel.eval_rows(xs, c)
        return out

    def sup_norm(self, resolution: int = 10001) -> float:
        """``max |f|`` over a uniform scan of [0, 1] (one-dimensional inputs only)."""
        if self.kernel.dim != 1:
            raise ValueError("sup_norm scan is only implemented for dim 1")
        return float(np.max(np.abs(self.values(np.linspace(0.0, 1.0, resolution)))))

    def norm(self) -> float:
        return induced_norm(self)


def induced_norm(f: InducedFunction) -> float:
    """RKHS norm ``sqrt(alpha^T G alpha)``."""
    alpha = np.asarray(f.coefficients)
    if not np.any(alpha):
        return 0.0
    q = float(alpha @ gram(f.kernel, f.center_array) @ alpha)
    if q < -1e-8:
        raise NumericalError(f"negative quadratic form {q}")
    return math.sqrt(max(q, 0.0))
