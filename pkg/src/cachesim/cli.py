"""Command line entry point: ``cachesim run`` and ``cachesim table1``."""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .experiments import load_scenario, run_scenario, table1_estimate
from .model import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _snr_list(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty SNR list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cachesim", description="Coded caching delivery simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run a scenario and write a CSV report")
    run.add_argument("--scenario", required=True, help="built-in name or JSON config path")
    run.add_argument("--seed", type=int, required=True)
    run.add_argument("--trials", type=int, required=True)
    run.add_argument("--out", required=True, help="CSV output path")
    run.add_argument("--log-base", choices=("2", "e"), default=None)
    run.add_argument("--snr", type=_snr_list, default=None, help="comma separated SNR values in dB")
    run.add_argument("--workers", type=int, default=1, help="worker processes (output is unchanged)")
    t1 = sub.add_parser("table1", help="single-antenna multicast rate versus group size")
    t1.add_argument("--trials", type=int, default=20000)
    t1.add_argument("--seed", type=int, default=0)
    t1.add_argument("--sizes", default="2,3,4")
    t1.add_argument("--semantics", choices=("random", "all_subsets_mean"), default="random")
    t1.add_argument("--p-max", type=float, default=0.1)
    return p


def _cmd_run(args) -> int:
    config = load_scenario(args.scenario).replace(
        seed=args.seed, trials=args.trials, log_base=args.log_base, snr_db=args.snr)
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    reports = run_scenario(config, args.out, workers=args.workers)
    print(f"wrote {len(reports)} rows to {args.out}")
    return EXIT_OK


def _cmd_table1(args) -> int:
    try:
        sizes = [int(x) for x in args.sizes.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad --sizes {args.sizes!r}") from exc
    res = table1_estimate(args.trials, sizes, np.random.default_rng(args.seed), p_max=args.p_max,
                          semantics=args.semantics)
    print("s,R_s_bits,R_s_nats")
    for s in sizes:
        print(f"{s},{res.rates['2'][s]:.4f},{res.rates['e'][s]:.4f}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return {"run": _cmd_run, "table1": _cmd_table1}[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001  (any failure past validation is a runtime error)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
