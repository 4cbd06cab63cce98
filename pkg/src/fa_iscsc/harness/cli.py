"""Command-line entry point.

Exit status is 0 on success, 2 when the configuration is infeasible and 1
on any other error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from ..config import SystemConfig
from ..errors import Infeasible, SingularDesign
from .experiments import BASELINES, INFEASIBLE, PRESETS, ExperimentSpec, run_crb_sweep, \
    run_region_sweep, run_single, validate_crb
from .io import FORMATS, emit_results, rows_to_csv, rows_to_json

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


def load_config(path) -> SystemConfig:
    """Read a JSON config: SystemConfig field names, powers in dBm, angles in degrees."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    return SystemConfig.from_dict(data)


def _values(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad value list {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1; status 2 is reserved for infeasibility."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True, help="JSON configuration file")
    common.add_argument("--format", choices=FORMATS, default="csv", help="result format")
    common.add_argument("--out", help="output directory (default: print to stdout)")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(
        prog="fa-iscsc",
        description="Fluid-antenna sensing, computing and semantic communication optimizer.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", parents=[common], help="one alternating optimization per trial")
    run.add_argument("--trials", type=int, default=1)

    sweep = sub.add_parser("sweep", parents=[common], help="region or CRB sweep")
    sweep.add_argument("--kind", choices=("region", "crb"), required=True)
    sweep.add_argument("--values", type=_values, required=True,
                       help="comma-separated increasing values (m^2 or normalized CRB)")
    sweep.add_argument("--trials", type=int, default=1)
    sweep.add_argument("--baselines", default=",".join(BASELINES),
                       help="region sweep baselines")
    sweep.add_argument("--presets", default=",".join(PRESETS), help="CRB sweep presets")

    val = sub.add_parser("validate-crb", parents=[common],
                         help="Monte Carlo check of the CRB")
    val.add_argument("--trials", type=int, required=True)
    return parser


def _emit(rows, args, cfg, seed, **extra) -> None:
    if args.out:
        files = emit_results(rows, args.format, args.out, config=cfg, seed=seed, **extra)
        for path in files.values():
            print(path)
    else:
        sys.stdout.write(rows_to_csv(rows) if args.format == "csv" else rows_to_json(rows) + "\n")


def _run(args) -> int:
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    cfg = cfg.replace(seed=seed)

    if args.command == "validate-crb":
        spec = ExperimentSpec("crb-validate", trials=args.trials, seed=seed, config=cfg)
        stats = validate_crb(spec)
        record = {"mse": stats.mse, "crb": stats.crb, "ratio": stats.ratio,
                  "trials": stats.trials, "frames": stats.frames}
        if args.format == "json":
            text = json.dumps(record, indent=1) + "\n"
        else:
            text = "mse,crb,ratio,trials,frames\n" + ",".join(str(record[k]) for k in record) + "\n"
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            path = out / f"crb_validation.{args.format}"
            path.write_text(text)
            print(path)
        else:
            sys.stdout.write(text)
        return EXIT_OK

    if args.command == "run":
        spec = ExperimentSpec("single-run", trials=args.trials, seed=seed, config=cfg)
        rows = run_single(spec)
    elif args.kind == "region":
        spec = ExperimentSpec("region-sweep", args.values, tuple(args.baselines.split(",")),
                              args.trials, args.out, seed, cfg)
        rows = run_region_sweep(spec)
    else:
        spec = ExperimentSpec("crb-sweep", args.values, trials=args.trials, out_dir=args.out,
                              seed=seed, config=cfg, presets=tuple(args.presets.split(",")))
        rows = run_crb_sweep(spec)
    _emit(rows, args, cfg, seed, kind=spec.kind, values=list(spec.values), trials=spec.trials)
    if all(r.status == INFEASIBLE for r in rows):
        print("infeasible: no run admits a point meeting the CRB and power constraints",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, SingularDesign, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
