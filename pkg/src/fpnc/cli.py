"""Command-line front end.

    fpnc sweep --scenario cfg --out results.csv [--plot] [overrides...]
    fpnc single-trial --snr 10 --offset 8 [--noiseless] [--dump-diagnostics f]
    fpnc selftest

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .experiments import SchemeId, SweepConfig, run_fpnc_trial, run_sweep
from .params import OfdmParams
from .report import render_figures, write_csv
from .scenario import ConfigError, build_config, load_scenario


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # config errors exit 1, not argparse's 2
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_override_args(p: argparse.ArgumentParser, sweep_axes: bool = True) -> None:
    p.add_argument("--scenario", help="scenario config file (INI, [scenario] section)")
    p.add_argument("--seed", type=int, help="master seed")
    if sweep_axes:
        p.add_argument("--snr", help="comma-separated SNR points in dB")
        p.add_argument("--offset", help="comma-separated arrival offsets in samples")
        p.add_argument("--trials", type=int, help="trials per sweep cell")
        p.add_argument("--schemes", help="comma-separated subset of fpnc,snc,ts")
    p.add_argument("--payload-bytes", type=int, dest="payload_bytes")
    p.add_argument("--coded", dest="coded", action="store_true", default=None)
    p.add_argument("--uncoded", dest="coded", action="store_false", default=None)
    p.add_argument("--channel", dest="channel_mode", choices=["flat", "fixed", "two_tap_random"])
    p.add_argument("--cfo-a", type=float, dest="cfo_a")
    p.add_argument("--cfo-b", type=float, dest="cfo_b")
    p.add_argument("--cfo-strategy", dest="cfo_strategy", choices=["mean", "a_only", "b_only"])
    p.add_argument("--cfo-estimator", dest="cfo_estimator", choices=["median", "mean"])
    p.add_argument("--mapping", dest="mapping_rule", choices=["logmax", "exact"])
    p.add_argument("--allow-cp-violation", dest="allow_cp_violation",
                   action="store_true", default=None)
    p.add_argument("--genie-sync", dest="genie_sync", action="store_true", default=None)


def _overrides_from(args: argparse.Namespace) -> dict:
    def parse_list(text, conv):
        return tuple(conv(t.strip()) for t in text.split(",") if t.strip())

    over = {
        "seed": args.seed,
        "trials": getattr(args, "trials", None),
        "payload_bytes": args.payload_bytes,
        "coded": args.coded,
        "channel_mode": args.channel_mode,
        "cfo_a": args.cfo_a,
        "cfo_b": args.cfo_b,
        "cfo_strategy": args.cfo_strategy,
        "cfo_estimator": args.cfo_estimator,
        "mapping_rule": args.mapping_rule,
        "allow_cp_violation": args.allow_cp_violation,
        "genie_sync": args.genie_sync,
    }
    try:
        snr = getattr(args, "snr", None)
        if isinstance(snr, str):
            over["snr_db"] = parse_list(snr, float)
        offset = getattr(args, "offset", None)
        if isinstance(offset, str):
            over["offsets"] = parse_list(offset, int)
        schemes = getattr(args, "schemes", None)
        if schemes is not None:
            over["schemes"] = tuple(SchemeId(s) for s in parse_list(schemes, str))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return over


def _load_merged(args: argparse.Namespace, extra: dict | None = None) -> SweepConfig:
    scenario_values = load_scenario(args.scenario) if args.scenario else {}
    overrides = _overrides_from(args)
    if extra:
        overrides.update(extra)
    return build_config(scenario_values, overrides)


def cmd_sweep(args: argparse.Namespace) -> int:
    jobs = args.jobs if args.jobs is not None else int(os.environ.get("FPNC_JOBS", "1"))
    cfg = _load_merged(args, {"jobs": max(1, jobs)})
    rows = run_sweep(cfg)
    write_csv(rows, args.out)
    print(f"wrote {args.out} ({len(rows)} rows)")
    if args.plot:
        from pathlib import Path

        out = Path(args.out)
        for path in render_figures(rows, out.parent, out.stem):
            print(f"wrote {path}")
    return 0


def cmd_single_trial(args: argparse.Namespace) -> int:
    extra = {"snr_db": (args.snr,), "offsets": (args.offset,), "trials": 1}
    if args.noiseless:
        extra["noiseless"] = True
    cfg = _load_merged(args, extra)
    record, diag = run_fpnc_trial(
        cfg, OfdmParams(), args.snr, args.offset, 0, collect_diagnostics=True
    )
    print(f"XOR frame errors: {record.xor_bit_errors}")
    if diag is not None:
        print(f"detected offset: {diag.detected_offset} "
              f"(peaks at {list(diag.peak_indices)})")
        print(f"cfo estimates: phi_a={diag.phi_hat_a:.6g} phi_b={diag.phi_hat_b:.6g} "
              f"compensated={diag.phi_tilde:.6g}")
    else:
        print("sync failed; frame lost")
    if args.dump_diagnostics:
        rec = diag.as_record() if diag is not None else {"sync_failed": True}
        rec.update({"snr_db": args.snr, "offset": args.offset,
                    "xor_bit_errors": record.xor_bit_errors})
        with open(args.dump_diagnostics, "a") as fh:
            fh.write(json.dumps(rec) + "\n")
    return 0


def cmd_selftest(args: argparse.Namespace) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest(verbose=True) else 2


def main(argv: list[str] | None = None) -> int:
    parser = _Parser(prog="fpnc", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a Monte Carlo SNR sweep")
    _add_override_args(p_sweep)
    p_sweep.add_argument("--out", default="sweep.csv", help="output CSV path")
    p_sweep.add_argument("--plot", action="store_true",
                         help="render BER/FER/throughput figures next to the CSV")
    p_sweep.add_argument("--jobs", type=int, default=None,
                         help="parallel workers (default: env FPNC_JOBS or 1)")

    p_one = sub.add_parser("single-trial", help="run one exchange and print the outcome")
    _add_override_args(p_one, sweep_axes=False)
    p_one.add_argument("--snr", type=float, default=20.0)
    p_one.add_argument("--offset", type=int, default=0)
    p_one.add_argument("--noiseless", action="store_true")
    p_one.add_argument("--dump-diagnostics", dest="dump_diagnostics",
                       help="append a JSON line of receiver internals to this file")

    sub.add_parser("selftest", help="run the built-in signal-path checks")

    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "single-trial":
            return cmd_single_trial(args)
        return cmd_selftest(args)
    except ConfigError as exc:
        print(f"fpnc: config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"fpnc: runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
