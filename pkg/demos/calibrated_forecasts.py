"""
Calibrated forecasts against an adversary
=========================================

The outcome is always the opposite of what the forecast suggests:
``y = 1`` when ``p < 1/2`` and ``y = 0`` otherwise.  A deterministic
forecaster is hopeless here.  The randomized forecaster stays calibrated on
every interval rule anyway.
"""

import numpy as np

from calibtrade.calibration import calibration_error, product_rules, proposition1_bound
from calibtrade.forecaster import ForecastSession, ScheduleState
from calibtrade.kernels import SOBOLEV_EMBEDDING, Sobolev

# a fixed grid of step 0.05 and a Sobolev kernel on the side signal
session = ForecastSession(k=1, side_part=Sobolev(), schedule=ScheduleState.fixed(0.05), rng=0, max_rounds=None)

n = 4000
prev = 0.5
rows = []
for _ in range(n):
    p = session.next_forecast((prev,), prev)
    p_tilde, x_tilde = session.randomize_round(p, (prev,))
    y = 1.0 if p < 0.5 else 0.0
    session.update(p, (prev,), prev, y)
    rows.append((p_tilde, x_tilde, y))
    prev = y

print(f"supermartingale after {n} rounds: {session.supermartingale:.4f} (started at 1)")

# score the randomized forecasts on 10 forecast bins x 2 halves of the last outcome
rules = product_rules(np.linspace(0, 1, 11), [[0.0, 0.5, 1.0]])
report = calibration_error(rules, rows)
bound = proposition1_bound(0.05, 1, SOBOLEV_EMBEDDING, n, 0.05 / len(rules))
for row in report.rows():
    if row["cumulative"] != 0:
        print(f"{row['rule']:>30}  {row['cumulative']:+9.2f}")
print(f"worst |error| {report.worst():.1f} against the bound {bound:.1f}")

# the forecast mean over all rounds sits near the outcome mean
p_tilde = np.array([r[0] for r in rows])
y = np.array([r[2] for r in rows])
print(f"mean forecast {p_tilde.mean():.3f}, mean outcome {y.mean():.3f}")
