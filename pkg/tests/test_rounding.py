import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calibtrade.rounding import (
    RandomSource,
    RoundingGrid,
    WeightVector,
    product_weights,
    round_value,
    rounding_kernel,
    sample,
    weights,
)

unit = st.floats(0.0, 1.0, allow_nan=False)
counts = st.integers(2, 200)


def test_grid_requires_reciprocal():
    assert RoundingGrid(0.25).K == 4
    assert RoundingGrid(0.1).K == 10
    with pytest.raises(ValueError):
        RoundingGrid(0.3)
    with pytest.raises(ValueError):
        RoundingGrid(0.0)


def test_weights_between_points():
    w = weights(RoundingGrid(0.25), 0.3)
    assert w.values_at(RoundingGrid(0.25)) == pytest.approx({(0.25,): 0.8, (0.5,): 0.2}, abs=1e-12)


def test_weights_on_grid_point_and_boundaries():
    g = RoundingGrid(0.25)
    assert weights(g, 0.5).values_at(g) == {(0.5,): 1.0}
    assert weights(g, 0.0).values_at(g) == {(0.0,): 1.0}
    assert weights(g, 1.0).values_at(g) == {(1.0,): 1.0}


def test_product_weights():
    g = RoundingGrid(0.25)
    w = product_weights(g, (0.3, 0.3))
    assert w.values_at(g)[(0.25, 0.25)] == pytest.approx(0.64, abs=1e-12)
    h = RoundingGrid(0.5)
    assert product_weights(h, (0.5, 1.0)).values_at(h) == {(0.5, 1.0): 1.0}
    assert product_weights(g, (0.3,)).values_at(g) == weights(g, 0.3).values_at(g)
    with pytest.raises(ValueError):
        product_weights(g, ())


def test_weight_vector_validates():
    with pytest.raises(ValueError):
        WeightVector({(0,): 0.5, (1,): 0.4}, 1)
    with pytest.raises(ValueError):
        WeightVector({(0,): 1.5, (1,): -0.5}, 1)


def test_rounding_kernel_values():
    g = RoundingGrid(0.25)
    assert rounding_kernel(g, (0.5,), (0.5,)) == pytest.approx(1.0)
    assert rounding_kernel(g, (0.3,), (0.3,)) == pytest.approx(0.68, abs=1e-12)
    assert rounding_kernel(g, (0.0,), (1.0,)) == 0.0
    with pytest.raises(ValueError):
        rounding_kernel(g, (0.1,), (0.1, 0.2))


def test_sample_degenerate():
    g = RoundingGrid(0.25)
    for seed in range(5):
        assert sample(g, weights(g, 0.5), RandomSource(seed)) == (0.5,)


def test_sample_frequency_matches_weights():
    g = RoundingGrid(0.25)
    rng = RandomSource(1)
    w = weights(g, 0.3)
    draws = np.array([sample(g, w, rng)[0] for _ in range(100_000)])
    assert 0.79 <= np.mean(draws == 0.25) <= 0.81


def test_sample_joint_frequencies():
    g = RoundingGrid(0.25)
    rng = RandomSource(2)
    w = product_weights(g, (0.3, 0.7))
    n = 100_000
    draws = [sample(g, w, rng) for _ in range(n)]
    exact = w.values_at(g)
    for point, prob in exact.items():
        freq = sum(d == point for d in draws) / n
        assert abs(freq - prob) <= 3 * np.sqrt(prob * (1 - prob) / n) + 1e-12


def test_random_source_streams_reproducible():
    a = RandomSource(7).spawn(3).uniforms(5)
    b = RandomSource(7).spawn(3).uniforms(5)
    c = RandomSource(7).spawn(4).uniforms(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@settings(max_examples=200, deadline=None)
@given(unit, counts)
def test_expectation_is_unbiased(p, K):
    g = RoundingGrid.from_count(K)
    w = weights(g, p)
    assert abs(w.expectation(g)[0] - p) <= 1e-12
    assert len(w) <= 2


@settings(max_examples=100, deadline=None)
@given(st.lists(unit, min_size=1, max_size=3), counts)
def test_product_weights_are_distribution_with_unbiased_marginals(xbar, K):
    g = RoundingGrid.from_count(K)
    w = product_weights(g, xbar)
    assert abs(sum(v for _, v in w.items()) - 1.0) <= 1e-12
    assert np.allclose(w.expectation(g), xbar, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(unit, unit, counts)
def test_rounding_kernel_is_dot_product(a, b, K):
    g = RoundingGrid.from_count(K)
    k = rounding_kernel(g, (a,), (b,))
    assert k == pytest.approx(weights(g, a).dot(weights(g, b)), abs=1e-12)
    assert 0.0 <= k <= 1.0
    assert k == pytest.approx(rounding_kernel(g, (b,), (a,)), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(unit, counts, st.floats(0.0, 1.0, exclude_max=True))
def test_round_value_lands_on_bracket(p, K, u):
    g = RoundingGrid.from_count(K)
    idx = round_value(g, p, u)
    assert abs(g.value(idx) - p) <= g.delta + 1e-12
