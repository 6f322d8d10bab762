import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calibtrade.forecaster import ForecastSession, ScheduleState
from calibtrade.kernels import InducedFunction, Sobolev
from calibtrade.trading import (
    BuyHold,
    DecisionRule,
    DefensiveCapital,
    EquityCurve,
    FallOnly,
    RiseFall,
    RiseOnly,
    Scaled,
    Stationary,
    defensive_run,
    entry_stats,
    m1_decision,
    m_decision,
    regret_bound_thm2,
    regret_bound_thm3,
    regret_bound_thm6,
    run_forecasts,
    run_strategy,
    sup_norm,
)


def test_decisions():
    assert m1_decision(0.6, 0.5) == 1
    assert m1_decision(0.5, 0.5) == 0
    assert m1_decision(0.0, 1.0) == 0
    assert m_decision(0.6, 0.5) == 1
    assert m_decision(0.5, 0.5) == -1
    assert m_decision(0.49999, 0.5) == -1


def test_buy_hold_gain():
    curve, _ = run_strategy([0.5, 0.55], BuyHold(5))
    assert curve.gain == pytest.approx(0.25)


@pytest.mark.parametrize("kind", [RiseOnly(5), FallOnly(5), RiseFall(5), Scaled(2.0), BuyHold(5)])
def test_constant_prices_keep_capital(kind):
    session = ForecastSession(rng=0)
    curve, _ = run_strategy([0.4] * 30, kind, session if not isinstance(kind, BuyHold) else None, K0=2.0)
    assert np.all(curve.capital == 2.0)


def test_rise_minus_fall_is_buy_hold():
    prices = 0.5 + 0.1 * np.sin(np.linspace(0, 6, 80))
    t = run_forecasts(prices, ForecastSession(rng=1))
    from calibtrade.trading import equity_curve
    rise, fall, bh = (equity_curve(k, t) for k in (RiseOnly(5), FallOnly(5), BuyHold(5)))
    assert rise.gain - fall.gain == pytest.approx(bh.gain, abs=1e-12)


def test_defensive_examples():
    c = defensive_run([0.5, 0.55], [True], 2.5)
    assert c.positions[0] == pytest.approx(5.0)
    assert c.final_capital == pytest.approx(2.75)
    c = defensive_run([0.5, 0.55], [True], 2.5, cost=0.0001)
    assert c.final_capital == pytest.approx(2.74975, abs=1e-12)
    c = defensive_run([0.4] * 10, [True] * 9, 2.0)
    assert np.all(c.capital == 2.0)


def test_defensive_fee_only_on_entry():
    c = defensive_run([0.5, 0.5, 0.5, 0.5, 0.5], [True, True, False, True], 1.0, cost=0.01)
    assert np.count_nonzero(c.fees) == 2


def test_defensive_stops_when_capital_exhausted():
    c = defensive_run([1.0, 0.0, 0.5, 1.0], [True, True, True], 1.0)
    assert c.final_capital == 0.0
    assert np.all(c.positions[1:] == 0)


def test_entry_stats():
    assert entry_stats([True, True, False, True, False, False]) == (0.5, 1.5)
    assert entry_stats([False, False]) == (0.0, 0.0)
    assert entry_stats([]) == (0.0, 0.0)


def test_equity_curve_ledger(tmp_path):
    c = EquityCurve([1.0, 1.1, 1.05], [2.0, -1.0], K0=10.0)
    assert c.capital.tolist() == pytest.approx([10.0, 10.2, 10.25])
    assert c.profit_pct() == pytest.approx(2.5)
    assert c.ledger_gap() <= 1e-12
    text = c.to_csv(tmp_path / "e.csv")
    assert text.splitlines()[0] == "step,position,price,capital"
    with pytest.raises(ValueError):
        EquityCurve([1.0], [1.0])


def test_decision_rule():
    D = DecisionRule.threshold(0.5, 1.0, -1.0)
    assert D(0.5) == 1.0 and D(0.500001) == -1.0
    assert D.m == 2 and D.sup_norm() == 1.0
    assert sup_norm(D) == 1.0
    with pytest.raises(ValueError):
        DecisionRule((0.5,), (1.0,))


def test_stationary_uses_signals():
    D = DecisionRule.threshold(0.5, 1.0, 0.0)
    curve, _ = run_strategy([0.4, 0.6, 0.7], Stationary(D, normalize=False))
    # position 1 at S=0.4, then 0 at S=0.6
    assert curve.gain == pytest.approx(0.2)


def test_stationary_trivial_rule_rejected():
    D = InducedFunction(Sobolev(), (0.5,), (0.0,))
    with pytest.raises(ValueError):
        run_strategy([0.4, 0.6], Stationary(D, normalize=True))


def test_prices_must_be_scaled():
    with pytest.raises(ValueError):
        run_strategy([0.5, 1.5], RiseOnly(5), ForecastSession())


def test_regret_bound_values():
    thm2 = regret_bound_thm2(1, 0.0, 0.0, 1 - 1e-15, 1.0, 1.0)
    # ln(2/delta) tends to ln 2, not 0, as delta -> 1
    assert thm2 == pytest.approx(4 / 3 * (7 * math.e - 1) + 1 + math.sqrt(math.log(2) / 2), abs=1e-6)
    assert 4 / 3 * (7 * math.e - 1) == pytest.approx(24.04, abs=0.01)
    first = lambda n: regret_bound_thm2(n, 0.0, 0.0, 0.5, 0.0, 1.0) - math.sqrt(n / 2 * math.log(4))
    assert first(16) == pytest.approx(8 * first(1))
    n, c = 5000, 2.0
    expected = 4 / 3 * (7 * math.e - 1) * c ** 0.25 * n ** 0.8 + math.sqrt(c * n) + math.sqrt(n / 2 * math.log(20))
    assert regret_bound_thm2(n, 1.0, 0.05, 0.1, 1.0, 1.0) == pytest.approx(expected, rel=1e-12)
    expected3 = 8 / 3 * (5 * math.e - 2) * c ** 0.25 * n ** 0.8 + math.sqrt(c * n) + 2 * math.sqrt(n / 2 * math.log(20))
    assert regret_bound_thm3(n, 1.0, 0.05, 0.1, 1.0, 1.0) == pytest.approx(expected3, rel=1e-12)
    with pytest.raises(ValueError):
        regret_bound_thm3(n, 1.0, 0.05, 0.1, 1.0, 0.0)


def test_regret_bound_thm6_values():
    assert regret_bound_thm6(1, 1, 0.0, 1.0) == pytest.approx(
        10 * math.e + 2 * (math.e - 1) * 4 / 3 + 2 * math.sqrt(math.log(2) / 2))
    base = regret_bound_thm6(100, 1, 0.0, 1.0)
    nxt = regret_bound_thm6(100, 2, 0.0, 1.0)
    first = lambda m: 5 * (m + 1) * math.e * 100 ** 0.8
    assert first(2) / first(1) == pytest.approx(3 / 2)
    assert nxt > base
    n, m = 10 ** 5, 2
    expected = 15 * math.e * n ** 0.85 + 3 * (math.e - 1) * 4 / 3 * n ** 0.8 + 3 * math.sqrt(n / 2 * math.log(40))
    assert regret_bound_thm6(n, m, 0.05, 0.1) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=40), st.integers(0, 2**16),
       st.floats(0.0, 0.01))
def test_defensive_cost_never_helps(prices, seed, rate):
    entries = np.random.default_rng(seed).random(len(prices) - 1) < 0.5
    free = defensive_run(prices, entries, 1.0, 0.0)
    paid = defensive_run(prices, entries, 1.0, rate)
    assert paid.final_capital <= free.final_capital + 1e-12
    assert paid.ledger_gap() <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=40), st.integers(0, 2**16))
def test_rise_fall_identity(prices, seed):
    entries = np.random.default_rng(seed).random(len(prices) - 1) < 0.5
    rise = EquityCurve(prices, np.where(entries, 5.0, 0.0))
    fall = EquityCurve(prices, np.where(entries, 0.0, -5.0))
    both = EquityCurve(prices, np.where(entries, 5.0, -5.0))
    assert both.gain == pytest.approx(rise.gain + fall.gain, abs=1e-9)
