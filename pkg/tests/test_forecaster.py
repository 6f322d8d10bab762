import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calibtrade.forecaster import ForecastSession, ScheduleState, find_forecast, schedule_delta
from calibtrade.kernels import CosineHalfPi, Gaussian, Sobolev, Zero, eval_kernel
from calibtrade.rounding import RandomSource, RoundingGrid, rounding_kernel

from conftest import play, walk_outcomes


def cosine_session(**kw):
    return ForecastSession(k=1, rounding_part=CosineHalfPi(dim=1), side_part=Zero(), **kw)


def test_empty_history():
    s = cosine_session()
    assert s.u_value(0.3, (0.2,), 0.2) == 0.0
    assert s.next_forecast((0.2,), 0.2) == 0.5


def test_single_record_cosine():
    s = cosine_session()
    s.update(0.5, (0.5,), 0.5, 1.0)
    for p in (0.0, 0.5, 0.9):
        assert s.u_value(p, (0.5,), 0.5) == pytest.approx(0.5 * math.cos(math.pi * (p - 0.5) / 2))
    assert s.u_value(0.5, (0.5,), 0.5) == pytest.approx(0.5)
    assert s.next_forecast((0.5,), 0.5) == 1.0


def test_single_record_cosine_mirror():
    s = cosine_session()
    s.update(0.5, (0.5,), 0.5, 0.0)
    assert s.next_forecast((0.5,), 0.5) == 0.0


def test_zero_residual_gives_zero_u_and_keeps_forecast():
    s = cosine_session()
    s.update(0.5, (0.5,), 0.5, 0.5)
    assert all(s.u_value(p, (0.5,), 0.5) == 0.0 for p in np.linspace(0, 1, 11))
    assert s.next_forecast((0.5,), 0.5) == 0.5


def test_update_with_y_equal_p_keeps_supermartingale():
    s = ForecastSession(side_part=Sobolev())
    s.update(0.5, (0.4,), 0.4, 1.0)
    before = s.supermartingale
    s.update(0.3, (0.2,), 0.2, 0.3)
    assert s.supermartingale == before


def test_grid_u_matches_explicit_sum():
    # the tensor contraction must agree with the literal kernel sum
    g = RoundingGrid(0.1)
    s = ForecastSession(k=1, side_part=Sobolev(), schedule=ScheduleState.fixed(0.1), rng=3)
    play(s, walk_outcomes(60, 3))
    hist = s.history
    x, sig = (0.37,), 0.37
    for p in (0.0, 0.13, 0.5, 0.88, 1.0):
        expected = math.fsum(
            (rounding_kernel(g, (p,) + x, (r.p,) + r.xbar) + eval_kernel(Sobolev(), sig, r.signal)) * (r.y - r.p)
            for r in hist)
        assert s.u_value(p, x, sig) == pytest.approx(expected, abs=1e-9)


def test_generic_kernel_u_matches_explicit_sum():
    k = Gaussian(0.2, dim=2)
    s = ForecastSession(k=1, rounding_part=k, side_part=Zero(), rng=4)
    play(s, walk_outcomes(30, 4))
    x = (0.6,)
    for p in (0.1, 0.7):
        expected = sum(eval_kernel(k, (p,) + x, (r.p,) + r.xbar) * (r.y - r.p) for r in s.history)
        assert s.u_value(p, x, 0.6) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("kernel", [None, CosineHalfPi(dim=1), Sobolev(dim=2)], ids=["grid", "cosine", "sobolev"])
def test_supermartingale_non_increasing(kernel):
    s = ForecastSession(k=1, rounding_part=kernel, side_part=Sobolev(), rng=0)
    rows = play(s, walk_outcomes(400, 0))
    m = np.concatenate([[1.0], rows[:, 5]])
    assert np.all(np.diff(m) <= 1e-7)


def test_cosine_2000_rounds_non_increasing():
    s = cosine_session(max_rounds=None)
    rows = play(s, walk_outcomes(2000, 11))
    assert np.all(np.diff(np.concatenate([[1.0], rows[:, 5]])) <= 1e-7)


def test_randomize_round():
    s = ForecastSession(schedule=ScheduleState.fixed(0.25), rng=8)
    assert all(s.randomize_round(0.5, (0.0,)) == (0.5, (0.0,)) for _ in range(100))
    draws = np.array([s.randomize_round(0.3, (0.3,))[0] for _ in range(100_000)])
    assert 0.79 <= np.mean(draws == 0.25) <= 0.81


def test_schedule_delta_examples():
    sch = ScheduleState.doubling(0.25, k=1, cF=1.0)
    sch.s = 1
    assert sch.n_s == 625
    raw = 2 ** 0.25 * 625 ** -0.25
    assert raw == pytest.approx(0.2378, abs=1e-4)
    assert schedule_delta(sch, 1, 1.0) == pytest.approx(0.2)
    assert schedule_delta(ScheduleState.fixed(0.05), 1, 1.0) == 0.05
    first = ScheduleState.doubling(0.25, k=2, cF=0.0)
    assert (3 / 2) ** 0.4 == pytest.approx(1.176, abs=1e-3)
    assert schedule_delta(first, 2, 0.0) == 0.5


def test_stage_advances_at_625():
    s = ForecastSession(k=1, side_part=Zero(), schedule=ScheduleState.doubling(0.25, cF=0.0), rng=0, max_rounds=None)
    ys = walk_outcomes(700, 2)
    prev = 0.5
    stages = []
    for y in ys:
        s.step((prev,), prev, y)
        stages.append(s.schedule.s)
        prev = y
    # after round n the session is positioned for round n + 1
    assert s.schedule.stage_start(1) == 625
    assert stages[622] == 0 and stages[623] == 1 and stages[-1] == 1
    assert s.grid.K == 5


def test_stage_change_rebuilds_accumulator():
    s = ForecastSession(k=1, side_part=Zero(), schedule=ScheduleState.doubling(0.5, cF=0.0), rng=1, max_rounds=None)
    play(s, walk_outcomes(20, 1))
    fresh = ForecastSession(k=1, side_part=Zero(), schedule=ScheduleState.fixed(s.grid.delta), rng=1)
    for r in s.history:
        fresh.update(r.p, r.xbar, r.signal, r.y)
    assert np.allclose(s.weighted_residual, fresh.weighted_residual, atol=1e-12)


def test_input_validation():
    s = ForecastSession(max_rounds=1)
    with pytest.raises(ValueError):
        s.update(0.5, (0.5,), 0.5, 1.5)
    with pytest.raises(ValueError):
        s.next_forecast((0.5, 0.5), 0.5)
    with pytest.raises(ValueError):
        s.next_forecast((1.2,), 0.5)
    s.update(0.5, (0.5,), 0.5, 1.0)
    with pytest.raises(RuntimeError):
        s.update(0.5, (0.5,), 0.5, 1.0)
    with pytest.raises(ValueError):
        ForecastSession(k=1, rounding_part=Sobolev(dim=3))


def test_find_forecast_cases():
    assert find_forecast(lambda p: np.ones_like(p)) == 1.0
    assert find_forecast(lambda p: -np.ones_like(p)) == 0.0
    assert find_forecast(lambda p: np.zeros_like(p), fallback=0.3) == 0.3
    root = find_forecast(lambda p: 0.3 - np.asarray(p))
    assert abs(root - 0.3) <= 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(-5, 5).filter(lambda a: abs(a) > 1e-3))
def test_find_forecast_returns_a_root_or_endpoint(r, slope):
    u = lambda p: slope * (r - np.asarray(p, dtype=float))
    p = find_forecast(u)
    assert abs(u(np.array([p]))[0]) <= 1e-9 or abs(p - r) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=60), st.integers(0, 2**32))
def test_increments_non_positive_for_any_outcomes(ys, seed):
    s = ForecastSession(k=1, side_part=Sobolev(), schedule=ScheduleState.fixed(0.2), rng=RandomSource(seed))
    prev = 0.5
    for y in ys:
        s.step((prev,), prev, y)
        assert s.last_increment <= 1e-7
        prev = y
