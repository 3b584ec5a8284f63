"""Command line front end.

Verbs: ``run <preset>``, ``verify``, ``calibrate {M|C}``, ``export-gamma``.
Exit codes: 0 success, 2 configuration error, 3 verification failure,
4 blow-up in a preset that requires completion, 5 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import PRESET_NAMES, parse_config
from .errors import ConfigurationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_BLOWUP = 4
EXIT_IO = 5

# presets for which blow-up / non-convergence is a reportable outcome,
# not a failure of the experiment
PARTIAL_OK = {"inviscid_local", "picard_inviscid"}


def _output_dir(args, preset: str) -> Path:
    if args.out_dir:
        return Path(args.out_dir)
    root = Path(os.environ.get("SQGBOX_OUTPUT_ROOT", "runs"))
    return root / preset


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqgbox",
        description="Spectral solver and verification harness for bounded-domain "
                    "surface quasi-geostrophic flow")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment preset")
    p_run.add_argument("preset", choices=[p for p in PRESET_NAMES])
    p_run.add_argument("--config", help="JSON config file")
    p_run.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VAL", help="override a config key")
    p_run.add_argument("--out-dir", help="output directory (default: "
                       "$SQGBOX_OUTPUT_ROOT/<preset>)")

    p_verify = sub.add_parser("verify", help="run the verification battery")
    p_verify.add_argument("--suite", action="append", default=None,
                          metavar="NAME", help="run only the named check(s)")
    p_verify.add_argument("--report", help="also write reports to this JSONL file")

    p_cal = sub.add_parser("calibrate", help="re-derive an empirical constant")
    p_cal.add_argument("constant", choices=["M", "C"])
    p_cal.add_argument("--config", help="JSON config file")
    p_cal.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VAL")

    p_gamma = sub.add_parser("export-gamma", help="write the interaction tensor cache")
    p_gamma.add_argument("--out", required=True, help="output file")
    p_gamma.add_argument("--config", help="JSON config file")
    p_gamma.add_argument("--set", dest="overrides", action="append", default=[],
                         metavar="KEY=VAL")
    return parser


def _cmd_run(args) -> int:
    from .experiments import run_experiment

    cfg, _preset = parse_config(args.config, args.overrides, preset=args.preset)
    out_dir = _output_dir(args, args.preset)
    try:
        manifest = run_experiment(args.preset, cfg, out_dir, config_path=args.config)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps(manifest.to_dict(), indent=2))
    kind = manifest.outcome.get("kind")
    if kind == "completed":
        if args.preset == "verify_suite" and manifest.metadata.get("n_failed", 0):
            return EXIT_VERIFY
        return EXIT_OK
    if args.preset in PARTIAL_OK:
        return EXIT_OK
    return EXIT_BLOWUP if kind == "blow_up" else EXIT_VERIFY


def _cmd_verify(args) -> int:
    from .experiments import verify_suite
    from .io import write_reports_jsonl

    reports = verify_suite(args.suite)
    for report in reports:
        print(report.to_json())
    if args.report:
        try:
            write_reports_jsonl(reports, args.report)
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return EXIT_IO
    failed = [r for r in reports if not r.passed]
    if failed:
        print(f"{len(failed)} of {len(reports)} checks failed", file=sys.stderr)
        return EXIT_VERIFY
    if not reports:
        print("warning: empty suite selection, no checks run", file=sys.stderr)
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    from .calibration import calibrate_local_M, calibrate_smallness_C

    cfg, _ = parse_config(args.config, args.overrides)
    kwargs = dict(J=cfg.J, alpha=cfg.alpha, kappa=cfg.kappa, T=cfg.T, dt=cfg.dt)
    result = (calibrate_smallness_C(**kwargs) if args.constant == "C"
              else calibrate_local_M(**kwargs))
    print(json.dumps(result, indent=2))
    return EXIT_OK


def _cmd_export_gamma(args) -> int:
    from .dynamics import gamma_tensor
    from .experiments import basis_for
    from .io import write_gamma

    cfg, _ = parse_config(args.config, args.overrides)
    basis = basis_for(cfg)
    gamma = gamma_tensor(basis)
    try:
        write_gamma(args.out, gamma)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote interaction tensor for J={cfg.J} to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "calibrate":
            return _cmd_calibrate(args)
        if args.command == "export-gamma":
            return _cmd_export_gamma(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    parser.error(f"unknown command {args.command!r}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
