"""
Chain backtest on a simulated stock
===================================

The chain method cuts a long series into overlapping windows.  Each window
spends its first ``L_shift`` prices on scaling and training, then trades.
Here the windows run in a process pool; the merged transcript is the same
as a sequential run.
"""

from concurrent.futures import ProcessPoolExecutor

from calibtrade.backtest import ExperimentConfig, run_experiment, write_outputs
from calibtrade.backtest.chain import run_chain
from calibtrade.backtest.experiment import format_table, load_series

config = ExperimentConfig(test_n=12000, test_sigma=0.014, L_max=5000, L_shift=2000,
                          delta=0.01, strategy="defensive", seed=7)

if __name__ == "__main__":
    series = load_series(config)
    with ProcessPoolExecutor(2) as pool:
        result = run_experiment(config, series, executor=pool)
    print(format_table([result.table1]))
    print()
    print(format_table([result.table2]))

    sequential = run_chain(series, config)
    print("\nsequential transcript identical:", sequential.to_csv() == result.transcript.to_csv())

    for path in write_outputs(result, "chain_backtest_out", svg=True):
        print("wrote", path)
