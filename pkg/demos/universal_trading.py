"""
Trading on calibrated forecasts
===============================

The rise/fall strategy buys one share when the rounded forecast exceeds the
rounded last price and sells one otherwise.  We compare it with stationary
competitors that hold ``D(S)`` shares, where ``D`` is a smooth function of
the last price.
"""

import numpy as np

from calibtrade.forecaster import ForecastSession, ScheduleState
from calibtrade.kernels import SOBOLEV_EMBEDDING, InducedFunction, Sobolev
from calibtrade.rounding import RandomSource
from calibtrade.trading import RiseFall, Stationary, regret_bound_thm3, run_strategy

# a mean-reverting price path in [0, 1]
rng = RandomSource(4).generator
n = 3000
S = np.empty(n + 1)
S[0] = 0.5
for i in range(1, n + 1):
    S[i] = np.clip(S[i - 1] + 0.2 * (0.5 - S[i - 1]) + rng.normal(0, 0.02), 0, 1)

session = ForecastSession(k=1, side_part=Sobolev(), rng=1, max_rounds=None,
                          schedule=ScheduleState.doubling(0.25, cF=SOBOLEV_EMBEDDING))
curve, transcript = run_strategy(S, RiseFall(1.0), session)
print(f"rise/fall gain over {n} steps: {curve.gain:+.3f}")
print(f"in the market long on {transcript.entries.mean():.1%} of steps")

# competitors: one kernel bump each, normalized to |D| <= 1
for center in (0.25, 0.5, 0.75):
    D = InducedFunction(Sobolev(), (center,), (1.0,))
    comp, _ = run_strategy(S, Stationary(D, normalize=True))
    bound = regret_bound_thm3(n, SOBOLEV_EMBEDDING, 0.25, 0.1, D.norm(), D.sup_norm())
    print(f"D centered at {center}: gain {comp.gain:+.3f}, regret allowance {bound:.0f}")

# the allowance is loose at this horizon; what matters is that it grows slower than n
for m in (10**4, 10**6, 10**8):
    print(f"n = {m:>9}: allowance / n = {regret_bound_thm3(m, SOBOLEV_EMBEDDING, 0.05, 0.1, 1.0, 1.0) / m:.3f}")
