"""Command-line front end: single runs, parameter sweeps, trace verification."""

from __future__ import annotations

import argparse
import json
from pathlib import Path
from typing import Optional, Sequence

from .config import CSR, PSR, SCHEMES, RunConfig, load_config
from .driver import result_from_trace, run_sweep, verify_robustness


def _numeric(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML config file; defaults are the reference setup")
    parser.add_argument("--seed", type=int, nargs="+", metavar="SEED",
                        help="seed list overriding the config")
    parser.add_argument("--out", help="output directory for the CSV and trace files")
    parser.add_argument("--scenario", choices=(PSR, CSR))
    parser.add_argument("--scheme", choices=SCHEMES)


def _configure(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.scenario:
        changes["scenario"] = args.scenario
    if args.scheme:
        changes["scheme"] = args.scheme
    if args.seed:
        changes["seeds"] = tuple(args.seed)
    if args.out:
        changes["out_dir"] = args.out
    return config.replace(**changes) if changes else config


def _report(results, csv_path, all_ok) -> int:
    for r in results:
        point = f" {r.sweep_name}={r.sweep_value}" if r.sweep_name else ""
        verified = (r.verification or {}).get("passed")
        print(f"{r.scenario}/{r.scheme} seed={r.seed}{point}: rate={r.rate:.4f} bps/Hz "
              f"ao_iters={r.ao_iters} feasible={r.feasible} verified={verified}")
    print(f"wrote {csv_path}")
    if not all_ok:
        print("some runs failed or failed verification; see the CSV / failures.json")
    return 0 if all_ok else 1


def _cmd_run(args: argparse.Namespace) -> int:
    # a run is a single configuration point, so any sweep axis in the file
    # is cleared rather than silently iterated
    config = _configure(args).replace(sweep_name="", sweep_values=())
    return _report(*run_sweep(config))


def _cmd_sweep(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = _configure(args)
    if args.axis or args.values:
        if not (args.axis and args.values):
            parser.error("sweep overrides need both --axis and --values")
        config = config.replace(
            sweep_name=args.axis,
            sweep_values=tuple(_numeric(v) for v in args.values.split(",")),
        )
    if not config.sweep_name:
        parser.error("no sweep axis: pass --axis/--values or set sweep_name in the config")
    return _report(*run_sweep(config))


def _cmd_verify(args: argparse.Namespace) -> int:
    all_ok = True
    for path in args.trace:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        report = verify_robustness(result_from_trace(payload), n_samples=args.samples)
        print(f"{path}: bound={report['bound']:.6f} min_sampled_rate={report['min_sampled_rate']:.6f} "
              f"gap={report['bound_gap']:.3e} qos_violations={report['qos_violations']} "
              f"passed={report['passed']}")
        all_ok &= report["passed"]
    return 0 if all_ok else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="masr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="optimize one configuration, one run per seed")
    _add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="run a one-axis parameter sweep")
    _add_common(p_sweep)
    p_sweep.add_argument("--axis", help="config field to sweep, overriding the config file")
    p_sweep.add_argument("--values", help="comma-separated values for the sweep axis")

    p_verify = sub.add_parser("verify", help="re-check saved convergence traces by sampling")
    p_verify.add_argument("trace", nargs="+", help="trace JSON file(s) written by run or sweep")
    p_verify.add_argument("--samples", type=int, default=1000,
                          help="number of sampled perturbations per trace")

    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "sweep":
        return _cmd_sweep(args, p_sweep)
    return _cmd_verify(args)


if __name__ == "__main__":
    raise SystemExit(main())
