"""Command-line entry point.

Errors exit nonzero with a machine-parsable JSON line on stderr:
``{"error": "<CODE>", "message": "..."}``. The only environment variable
honored is ``NAVSMOOTH_LOG`` (log level name).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .errors import ArgumentError, DomainError, FormatError, NavError, NumericalError, ProviderError
from .pipeline import MODES, RunConfig, run_pipeline

_EXIT_CODES = {
    ArgumentError: 2,
    DomainError: 2,
    FormatError: 3,
    NumericalError: 4,
    ProviderError: 5,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="navsmooth",
        description="Post-processing INS/GNSS filtering, smoothing and learned fusion.",
    )
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--mode", choices=MODES, help="pipeline mode (overrides config)")
    parser.add_argument("--seed", type=int, help="simulation seed (overrides config)")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--provider",
                        help="correction provider: zero, oracle or file:<path>")
    return parser


def _load_config(args) -> RunConfig:
    raw: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ArgumentError(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise FormatError(f"config is not valid JSON: {exc}")
    if args.mode:
        raw["mode"] = args.mode
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out:
        raw["out_dir"] = args.out
    if args.provider:
        raw["provider"] = args.provider
    if "mode" not in raw:
        raise ArgumentError("no mode given (use --mode or the config file)")
    try:
        return RunConfig.from_dict(raw)
    except TypeError as exc:
        raise ArgumentError(f"bad configuration: {exc}")


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("NAVSMOOTH_LOG", "WARNING").upper())
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        result = run_pipeline(cfg)
    except NavError as exc:
        code = next((c for t, c in _EXIT_CODES.items() if isinstance(exc, t)), 1)
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return code
    except Exception as exc:   # noqa: BLE001 - surface anything as a coded failure
        print(json.dumps({"error": "UNEXPECTED", "message": f"{type(exc).__name__}: {exc}"}),
              file=sys.stderr)
        return 1

    if cfg.mode == "motivation-study":
        for name, summary in result["configs"].items():
            for est, vals in summary["estimators"].items():
                print(f"{name} {est}: horizontal_rmse={vals['horizontal_rmse']:.3f} m "
                      f"mean={vals['horizontal_mean_error']:.3f} m")
    elif cfg.mode != "simulate":
        for est, vals in result["summary"]["estimators"].items():
            print(f"{est}: horizontal_rmse={vals['horizontal_rmse']:.3f} m")
    return 0


if __name__ == "__main__":
    sys.exit(main())
