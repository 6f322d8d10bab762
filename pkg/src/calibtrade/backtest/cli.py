"""``backtest`` command line: run, calibrate, adversary."""
from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..adversary import IIDStrategy, verify_outperformance
from ..calibration import calibration_error, product_rules, proposition1_bound
from ..rounding import RandomSource
from .config import KERNELS, SIDE_KERNELS, STRATEGIES, ConfigError, ExperimentConfig, build_session, make_side_kernel
from .data import DataError
from .experiment import TABLE2_COLUMNS, format_table, run_experiment, write_outputs


def _parse_test(items: list[str]) -> dict:
    """``n=20000 sigma=0.014 s0=1`` into config fields."""
    keys = {"n": ("test_n", int), "sigma": ("test_sigma", float), "s0": ("test_s0", float)}
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or name not in keys:
            raise ConfigError(f"bad --test item {item!r}; expected n=<N>, sigma=<s> or s0=<s>")
        field, cast = keys[name]
        try:
            out[field] = cast(value)
        except ValueError as exc:
            raise ConfigError(f"bad --test value {item!r}") from exc
    if "test_n" not in out:
        raise ConfigError("--test needs n=<N>")
    return out


def _config_from_args(args) -> ExperimentConfig:
    fields = {}
    if args.test is not None:
        fields.update(_parse_test(args.test))
    if args.data is not None:
        fields["data_path"] = args.data
    for name, attr in (("strategy", "strategy"), ("kernel", "kernel"), ("side_kernel", "side_kernel"),
                       ("shares", "shares"), ("cost", "cost"), ("seed", "seed"), ("L_max", "lmax"),
                       ("L_shift", "lshift"), ("confidence", "confidence"), ("ticker", "ticker")):
        value = getattr(args, attr)
        if value is not None:
            fields[name] = value
    if args.epsilon is not None:
        fields["epsilon"] = args.epsilon
        fields["delta"] = None
    elif args.delta is not None:
        fields["delta"] = args.delta
    if args.config is not None:
        return ExperimentConfig.from_json(args.config, **fields)
    return ExperimentConfig(**fields)


def cmd_run(args) -> int:
    config = _config_from_args(args)
    t0 = time.perf_counter()
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            result = run_experiment(config, executor=pool)
    else:
        result = run_experiment(config)
    written = write_outputs(result, args.out, svg=args.plot)
    print(format_table([result.table1]))
    if result.table2 is not None:
        print()
        print(format_table([{c: result.table2[c] for c in TABLE2_COLUMNS}]))
    print(f"\n{len(result.transcript)} live steps in {time.perf_counter() - t0:.1f}s; wrote {len(written)} files to {args.out}")
    return 0


def cmd_calibrate(args) -> int:
    """Forecast ``n`` outcomes and score all interval rules against the fixed-grid bound."""
    config = ExperimentConfig(test_n=2, delta=args.delta, side_kernel=args.side_kernel, kernel="discretized")
    rng = RandomSource(args.seed)
    session = build_session(config, rng.spawn(0), k=1, max_rounds=None)
    walk = rng.spawn(1)
    x = 0.5
    rows = []
    for _ in range(args.n):
        xbar = (x,)
        p = session.next_forecast(xbar, x)
        pt, xt = session.randomize_round(p, xbar)
        if args.outcomes == "adversarial":
            y = 1.0 if p < 0.5 else 0.0
        else:
            y = float(np.clip(x + walk.normal(args.sigma), 0.0, 1.0))
        session.update(p, xbar, x, y)
        rows.append((pt, xt, y))
        x = y
    edges = np.linspace(0.0, 1.0, args.cells + 1)
    rules = product_rules(edges, [[0.0, 0.5, 1.0]])
    report = calibration_error(rules, rows)
    cF = make_side_kernel(config).embedding_constant()
    report.bounds["bound"] = proposition1_bound(args.delta, 1, cF, report.n, args.confidence / len(rules))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.to_csv(out / "calibration.csv")
    bound = report.bounds["bound"]
    print(f"n={report.n} worst |cumulative| = {report.worst():.2f}  bound = {bound:.2f}  "
          f"{'within' if report.worst() <= bound else 'EXCEEDS'} bound")
    return 0


def cmd_adversary(args) -> int:
    strategy = IIDStrategy((1.0, -1.0), (args.p_up, 1.0 - args.p_up))
    report = verify_outperformance(strategy, args.n, args.runs, RandomSource(args.seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.to_csv(out / "adversary.csv")
    print(f"rule gain {report.rule_gain:.15f}  mean strategy gain {report.mean_gain:+.4f} "
          f"(+/- {report.gain_stderr:.4f})  statistic {report.statistic:+.5f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="backtest", description="Calibrated-forecast trading backtests.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="chain backtest on a CSV file or a simulated TEST stock")
    src = run.add_mutually_exclusive_group()
    src.add_argument("--data", help="CSV with header ticker,date,time,close")
    src.add_argument("--test", nargs="+", metavar="KEY=VALUE", help="simulate: n=<N> [sigma=<s>] [s0=<s>]")
    run.add_argument("--config", help="JSON experiment config; flags override it")
    run.add_argument("--strategy", choices=STRATEGIES)
    run.add_argument("--kernel", choices=KERNELS)
    run.add_argument("--side-kernel", dest="side_kernel", choices=SIDE_KERNELS)
    res = run.add_mutually_exclusive_group()
    res.add_argument("--delta", type=float, help="fixed grid resolution 1/K")
    res.add_argument("--epsilon", type=float, help="doubling schedule exponent slack")
    run.add_argument("--shares", type=float)
    run.add_argument("--cost", type=float, help="transaction rate per market entry")
    run.add_argument("--confidence", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--lmax", type=int)
    run.add_argument("--lshift", type=int)
    run.add_argument("--ticker")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for the windows")
    run.add_argument("--plot", action="store_true", help="also write SVG equity charts")
    run.add_argument("--out", default="out")
    run.set_defaults(func=cmd_run)

    cal = sub.add_parser("calibrate", help="calibration scores of the forecaster on synthetic outcomes")
    cal.add_argument("--n", type=int, default=2000)
    cal.add_argument("--delta", type=float, default=0.05)
    cal.add_argument("--outcomes", choices=("adversarial", "walk"), default="adversarial")
    cal.add_argument("--sigma", type=float, default=0.05, help="step size of the walk outcomes")
    cal.add_argument("--side-kernel", dest="side_kernel", choices=SIDE_KERNELS, default="sobolev")
    cal.add_argument("--cells", type=int, default=10)
    cal.add_argument("--confidence", type=float, default=0.05)
    cal.add_argument("--seed", type=int, default=0)
    cal.add_argument("--out", default="out")
    cal.set_defaults(func=cmd_calibrate)

    adv = sub.add_parser("adversary", help="adversarial path against an i.i.d. randomized strategy")
    adv.add_argument("--n", type=int, default=50)
    adv.add_argument("--runs", type=int, default=1000)
    adv.add_argument("--p-up", dest="p_up", type=float, default=0.5)
    adv.add_argument("--seed", type=int, default=0)
    adv.add_argument("--out", default="out")
    adv.set_defaults(func=cmd_adversary)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataError, ValueError, OSError) as exc:
        print(f"backtest: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
