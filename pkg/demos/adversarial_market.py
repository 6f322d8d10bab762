"""
A market that beats every i.i.d. strategy
=========================================

If the market knows ``P{M > 0}`` for a strategy that bets independently
each step, it moves the price against the likelier bet.  A simple rule of
the announced probability then collects almost 1/2, while the strategy
expects nothing.
"""

from calibtrade.adversary import IIDStrategy, adversarial_prices, verify_outperformance

print("prices after signals 0.7, 0.3:", adversarial_prices([0.7, 0.3]).tolist())

for q in (0.5, 0.7, 0.2):
    strategy = IIDStrategy((1.0, -1.0), (q, 1 - q))
    rep = verify_outperformance(strategy, n=50, runs=1000, rng=0)
    print(f"P(+1) = {q}: rule gain {rep.rule_gain:.6f}, strategy mean {rep.mean_gain:+.4f} "
          f"+/- {rep.gain_stderr:.4f}, exact expectation {rep.expected_gain:+.4f}")
