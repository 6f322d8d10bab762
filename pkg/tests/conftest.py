import time

import numpy as np
import pytest

from calibtrade.forecaster import ForecastSession, ScheduleState
from calibtrade.kernels import Sobolev
from calibtrade.rounding import RandomSource


def walk_outcomes(n, seed, step=0.05, start=0.5):
    """Bounded random walk in [0, 1] used as an outcome sequence."""
    rng = RandomSource(seed).spawn(99)
    y = np.empty(n)
    x = start
    for i in range(n):
        x = float(np.clip(x + rng.normal(step), 0.0, 1.0))
        y[i] = x
    return y


def play(session, outcomes, start=0.5):
    """Feed a walk through a k=1 session with xbar = signal = previous outcome."""
    rows = []
    prev = start
    for y in outcomes:
        p = session.next_forecast((prev,), prev)
        pt, xt = session.randomize_round(p, (prev,))
        session.update(p, (prev,), prev, y)
        rows.append((prev, p, pt, xt[0], y, session.supermartingale))
        prev = y
    return np.array(rows)


class TimedRuns(list):
    elapsed = 0.0


@pytest.fixture(scope="session")
def sobolev_runs():
    """Three 2000-round runs: rounding kernel at 0.1 plus a Sobolev side kernel."""
    t0 = time.perf_counter()
    runs = TimedRuns()
    for seed in range(3):
        session = ForecastSession(k=1, side_part=Sobolev(), schedule=ScheduleState.fixed(0.1), rng=RandomSource(seed))
        mus = {}
        outcomes = walk_outcomes(2000, seed)
        prev = 0.5
        rows = []
        for n, y in enumerate(outcomes, start=1):
            p = session.next_forecast((prev,), prev)
            pt, xt = session.randomize_round(p, (prev,))
            session.update(p, (prev,), prev, y)
            rows.append((prev, p, pt, xt[0], y, session.supermartingale))
            if n in (500, 2000):
                mus[n] = session.weighted_residual.copy()
            prev = y
        runs.append((session, np.array(rows), mus))
    runs.elapsed = time.perf_counter() - t0
    return runs


# -- acceptance summary: one line per criterion ------------------------------

_CRITERIA = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[props["criterion"]] = (report.outcome, props.get("detail", ""), report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: int(k.split()[0])):
        outcome, detail, dt = _CRITERIA[key]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {key} ({dt:.1f}s) {detail}")
