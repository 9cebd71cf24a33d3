"""Command line: train on an exported fusion trace, export correction records."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import torch

from .config import ModelConfig
from .data import load_fusion_trace, load_truth
from .export import export_records
from .model import build_model, parameter_count
from .train import train


def _config_from_json(path) -> ModelConfig:
    if path is None:
        return ModelConfig()
    with open(path) as fh:
        return ModelConfig(**json.load(fh))


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("BLENDS_TRAINER_LOG", "INFO").upper())
    parser = argparse.ArgumentParser(prog="blends-trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit the correction network")
    p_train.add_argument("--trace", required=True, help="fusion-trace CSV")
    p_train.add_argument("--truth", required=True, help="truth CSV")
    p_train.add_argument("--epochs", type=int, default=50)
    p_train.add_argument("--model-out", required=True)
    p_train.add_argument("--log-out", default=None, help="per-term loss CSV")
    p_train.add_argument("--config", default=None, help="JSON ModelConfig overrides")

    p_export = sub.add_parser("export", help="emit correction records")
    p_export.add_argument("--model", required=True)
    p_export.add_argument("--trace", required=True)
    p_export.add_argument("--out", required=True)
    p_export.add_argument("--config", default=None)
    p_export.add_argument("--zero-init", action="store_true",
                          help="ignore --model weights; export from a fresh network")

    args = parser.parse_args(argv)
    cfg = _config_from_json(args.config)

    try:
        if args.command == "train":
            trace = load_fusion_trace(args.trace)
            truth = load_truth(args.truth)
            model, history = train(trace, truth, cfg, epochs=args.epochs,
                                   log_path=args.log_out)
            torch.save({"state_dict": model.state_dict(),
                        "epochs": history["epochs"]}, args.model_out)
            print(f"trained {parameter_count(model)} parameters for "
                  f"{history['epochs']} epochs; final eval loss "
                  f"{history['eval_total'][-1]:.6g}")
        else:
            trace = load_fusion_trace(args.trace)
            model = build_model(cfg).double()
            frozen_epoch = 0
            if not args.zero_init:
                payload = torch.load(args.model, weights_only=True)
                model.load_state_dict(payload["state_dict"])
                frozen_epoch = int(payload.get("epochs", 0))
            export_records(model, trace, cfg, args.out, frozen_epoch=frozen_epoch)
            print(f"wrote {len(trace)} records to {args.out}")
    except Exception as exc:   # noqa: BLE001
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
