import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calibtrade.adversary import IIDStrategy, adversarial_prices, adversary_rule, verify_outperformance


def test_prices_examples():
    assert adversarial_prices([0.7, 0.3]).tolist() == [0.5, 0.25, 0.375]
    assert adversarial_prices([]).tolist() == [0.5]
    up = adversarial_prices([0.2] * 50)
    assert np.all(np.diff(up) > 0) and up[-1] < 1.0
    assert np.all(adversarial_prices([0.2] * 200) <= 1.0)
    assert adversarial_prices([0.2] * 200)[-1] == pytest.approx(1.0)


def test_rule():
    assert adversary_rule(0.7) == -1
    assert adversary_rule(0.5) == 1


def test_rule_gain_small_n():
    assert verify_outperformance(IIDStrategy.uniform_sign(), 2, 1, 0).rule_gain == 0.375


def test_idle_strategy():
    rep = verify_outperformance(IIDStrategy.idle(), 20, 10, 0)
    assert rep.mean_gain == 0.0
    assert rep.statistic <= 0


def test_bets_bounded():
    with pytest.raises(ValueError):
        IIDStrategy((2.0, -1.0), (0.5, 0.5))
    with pytest.raises(ValueError):
        IIDStrategy((1.0, -1.0), (0.7, 0.5))


def test_report_csv():
    text = verify_outperformance(IIDStrategy.uniform_sign(), 10, 5, 1).to_csv()
    assert text.startswith("n,runs,signal,rule_gain")


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 60), st.floats(0.0, 1.0))
def test_rule_gain_exact(n, q):
    strat = IIDStrategy((1.0, -1.0), (q, 1 - q))
    rep = verify_outperformance(strat, n, 1, 0)
    assert rep.rule_gain == 0.5 - 2.0 ** -(n + 1)
    assert rep.expected_gain <= 0.25 + 1e-12
