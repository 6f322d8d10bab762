"""Experiment configuration and the kernel/session factory it drives."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

from ..forecaster import ForecastSession, ScheduleState
from ..kernels import CosineHalfPi, ExpSmooth, Gaussian, Kernel, Sobolev, Zero
from ..rounding import RandomSource

__all__ = ["ExperimentConfig", "ConfigError", "make_kernel", "make_side_kernel", "build_session", "KERNELS", "STRATEGIES"]

KERNELS = ("discretized", "sobolev", "gaussian", "cosine", "expsmooth")
SIDE_KERNELS = ("sobolev", "gaussian", "cosine", "zero")
STRATEGIES = ("rise", "fall", "both", "defensive")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    ticker: str = "TEST"
    data_path: str | None = None
    test_n: int | None = None
    test_sigma: float = 0.014
    test_s0: float = 1.0
    kernel: str = "discretized"
    side_kernel: str = "sobolev"
    gaussian_sigma: float = 0.1
    exp_c: float = 1.0
    exp_c2: float = 1.0
    delta: float | None = 0.01
    epsilon: float | None = None
    strategy: str = "both"
    shares: float = 5.0
    cost: float = 0.0001
    confidence: float = 0.05
    seed: int = 0
    L_max: int = 5000
    L_shift: int = 2000
    c: float = 14.0
    arma_p: int = 2
    arma_q: int = 1

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ConfigError(f"kernel must be one of {KERNELS}")
        if self.side_kernel not in SIDE_KERNELS:
            raise ConfigError(f"side kernel must be one of {SIDE_KERNELS}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}")
        if (self.delta is None) == (self.epsilon is None):
            raise ConfigError("give exactly one of delta (fixed grid) or epsilon (doubling schedule)")
        if self.delta is not None:
            try:
                ScheduleState.fixed(self.delta)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must lie in (0, 1)")
        if not 0 < self.L_shift < self.L_max:
            raise ConfigError("need 0 < L_shift < L_max")
        if self.shares <= 0 or self.c <= 0 or self.gaussian_sigma <= 0:
            raise ConfigError("shares, c and gaussian_sigma must be positive")
        if self.exp_c <= 0 or self.exp_c2 <= 0:
            raise ConfigError("exp_c and exp_c2 must be positive")
        if self.cost < 0:
            raise ConfigError("cost must be nonnegative")
        if not 0 < self.confidence < 1:
            raise ConfigError("confidence delta must lie in (0, 1)")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.data_path is None and self.test_n is None:
            raise ConfigError("need either a data path or TEST parameters")
        if self.test_n is not None and self.test_n < 2:
            raise ConfigError("TEST series needs n >= 2")

    @classmethod
    def from_json(cls, path, **overrides) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**raw)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def make_kernel(config: ExperimentConfig, k: int = 1) -> Kernel | None:
    """Kernel over ``(p, xbar)`` used inside ``U_n``; ``None`` selects the rounding kernel."""
    name = config.kernel
    if name == "discretized":
        return None
    if name == "cosine":
        return CosineHalfPi(dim=1)
    if name == "sobolev":
        return Sobolev(dim=k + 1)
    if name == "gaussian":
        return Gaussian(sigma=config.gaussian_sigma, dim=k + 1)
    return ExpSmooth(c=config.exp_c, c2=config.exp_c2, dim=k + 1)


def make_side_kernel(config: ExperimentConfig) -> Kernel:
    return {
        "sobolev": lambda: Sobolev(),
        "gaussian": lambda: Gaussian(sigma=config.gaussian_sigma),
        "cosine": lambda: CosineHalfPi(),
        "zero": lambda: Zero(),
    }[config.side_kernel]()


def build_session(config: ExperimentConfig, rng: RandomSource, k: int = 1, max_rounds: int | None = None) -> ForecastSession:
    side = make_side_kernel(config)
    if config.delta is not None:
        schedule = ScheduleState.fixed(config.delta)
    else:
        schedule = ScheduleState.doubling(config.epsilon, k=k, cF=side.embedding_constant())
    return ForecastSession(
        k=k,
        rounding_part=make_kernel(config, k),
        side_part=side,
        schedule=schedule,
        rng=rng,
        max_rounds=max_rounds if max_rounds is not None else config.L_max,
    )
