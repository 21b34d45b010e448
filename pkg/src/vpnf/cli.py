"""Command-line entry points for the full experiment pipeline.

Subcommands: ``simulate`` (rooms to FOAD dataset files), ``split``
(train/validation/evaluation indices), ``train`` (one model to a
checkpoint + log CSV), ``evaluate`` (checkpoint to a report CSV row),
``report`` (aggregate report rows across rooms), ``defaults`` (print every
default as JSON).

Relative output paths are resolved against ``$VPNF_OUTPUT_ROOT`` when that
variable is set.  ``train`` accepts a JSON config file; explicit flags win
over file values, which win over defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .checkpoint import load_model, save_model
from .errors import VpnfError
from .metrics import Report, evaluate
from .roomsim import FoaDataset, GridSpec, build_dataset, sample_room
from .training import (
    MODEL_PRESETS,
    Split,
    TrainConfig,
    make_model,
    make_split,
    train,
    write_train_log,
)

OUTPUT_ROOT_ENV = "VPNF_OUTPUT_ROOT"

_SIM_DEFAULTS = {"fs": 8000.0, "duration": 0.1, "grid_spacing": 0.05}
_SPLIT_DEFAULTS = {"n_validation": 50}


def _resolve(path: str) -> Path:
    root = os.environ.get(OUTPUT_ROOT_ENV)
    p = Path(path)
    if root and not p.is_absolute():
        return Path(root) / p
    return p


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    with open(_resolve(path), encoding="utf-8") as fh:
        blob = json.load(fh)
    if not isinstance(blob, dict):
        raise VpnfError(f"{path}: config must be a JSON object")
    return blob


def _merged(defaults: dict, config_file: dict, cli_values: dict) -> dict:
    """defaults < config file < explicit CLI flags."""
    out = dict(defaults)
    for key, value in config_file.items():
        if key not in defaults:
            raise VpnfError(f"unknown config key {key!r}")
        out[key] = value
    for key, value in cli_values.items():
        if value is not None:
            out[key] = value
    return out


# -- subcommands ---------------------------------------------------------------


def cmd_simulate(args) -> int:
    config = _merged(_SIM_DEFAULTS, _load_config_file(args.config), {
        "fs": args.fs, "duration": args.duration, "grid_spacing": args.grid_spacing,
    })
    out_dir = _resolve(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = GridSpec(spacing=float(config["grid_spacing"]))
    manifest = {"fs": config["fs"], "duration": config["duration"],
                "grid_spacing": config["grid_spacing"], "rooms": []}
    for i in range(args.rooms):
        seed = args.seed + i
        room = sample_room(seed)
        dataset = build_dataset(room, grid=grid, fs=float(config["fs"]),
                                duration=float(config["duration"]))
        name = f"room_{seed}.foad"
        dataset.save(out_dir / name)
        manifest["rooms"].append({"seed": seed, "file": name})
        print(f"room seed {seed}: {dataset.n_positions} positions x "
              f"{dataset.n_samples} samples -> {out_dir / name}")
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
    return 0


def cmd_split(args) -> int:
    dataset = FoaDataset.load(_resolve(args.dataset))
    n_val = args.n_validation if args.n_validation is not None else _SPLIT_DEFAULTS["n_validation"]
    split = make_split(dataset, args.mode, n_train=args.n_train,
                       seed=args.seed, n_val=n_val)
    out = _resolve(args.out)
    split.save(out)
    print(f"{args.mode} split: {len(split.train_idx)} train / {len(split.val_idx)} "
          f"validation / {len(split.eval_idx)} evaluation -> {out}")
    return 0


def _train_config_from_args(args) -> TrainConfig:
    file_cfg = _load_config_file(args.config)
    file_cfg.pop("model", None)
    defaults = {f.name: getattr(TrainConfig, f.name) for f in fields(TrainConfig)
                if f.name not in ("head", "penalty")}
    cli_values = {name: getattr(args, name) for name in defaults}
    merged = _merged(defaults, file_cfg, cli_values)
    return TrainConfig.for_model(args.model, **merged)


def cmd_train(args) -> int:
    dataset = FoaDataset.load(_resolve(args.dataset))
    split = Split.load(_resolve(args.split))
    config = _train_config_from_args(args)
    model = make_model(dataset, config)
    log_path = _resolve(args.log) if args.log else None
    result = train(model, dataset, split, config, log_path=log_path)
    best = result.best_model()
    out = _resolve(args.out)
    save_model(best, out)
    best_val = min(rec.val_nmse_w_db for rec in result.history)
    print(f"{args.model}: {config.iterations} iterations, best validation "
          f"W-NMSE {best_val:.2f} dB -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(_resolve(args.checkpoint))
    dataset = FoaDataset.load(_resolve(args.dataset))
    split = Split.load(_resolve(args.split))
    name = args.model_name or Path(args.checkpoint).stem
    report = evaluate(model, dataset, split, model_name=name)
    report.seed = dataset.room.seed if dataset.room else 0
    out = _resolve(args.out)
    exists = out.exists()
    with open(out, "a", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=Report.ROW_FIELDS)
        if not exists:
            writer.writeheader()
        writer.writerow(report.to_row())
    print(f"{name}: NMSE W {report.nmse_w_db:.2f} dB, XYZ {report.nmse_xyz_db:.2f} dB, "
          f"PCC W {report.pcc_w:.3f}, XYZ {report.pcc_xyz:.3f} -> {out}")
    return 0


def _read_reports(paths) -> list[dict]:
    rows = []
    for path in paths:
        with open(_resolve(path), encoding="utf-8", newline="") as fh:
            rows.extend(csv.DictReader(fh))
    if not rows:
        raise VpnfError("no report rows found")
    return rows


def cmd_report(args) -> int:
    rows = _read_reports(args.reports)
    metrics_cols = ("nmse_w_db", "nmse_xyz_db", "pcc_w", "pcc_xyz")
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["model"], row["mode"], int(row["n_train"])), []).append(row)

    long_rows = []
    for (model, mode, n_train), members in sorted(groups.items()):
        for col in metrics_cols:
            value = float(np.mean([float(m[col]) for m in members]))
            long_rows.append({"model": model, "mode": mode, "n_train": n_train,
                              "metric": col, "value": value, "n_rooms": len(members)})
    out = _resolve(args.out)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=("model", "mode", "n_train", "metric", "value", "n_rooms"))
        writer.writeheader()
        writer.writerows(long_rows)

    header = f"{'model':<12}{'mode':<10}{'D':>6}" + "".join(
        f"{c:>14}" for c in metrics_cols) + f"{'rooms':>7}"
    print(header)
    print("-" * len(header))
    for (model, mode, n_train), members in sorted(groups.items()):
        means = [float(np.mean([float(m[c]) for m in members])) for c in metrics_cols]
        print(f"{model:<12}{mode:<10}{n_train:>6}"
              + "".join(f"{v:>14.3f}" for v in means) + f"{len(members):>7}")
    print(f"aggregate table -> {out}")
    return 0


def cmd_defaults(args) -> int:
    blob = {
        "models": {name: {"head": head, "penalty": penalty}
                   for name, (head, penalty) in sorted(MODEL_PRESETS.items())},
        "train": asdict(TrainConfig()),
        "simulate": dict(_SIM_DEFAULTS),
        "split": dict(_SPLIT_DEFAULTS),
        "output_root_env": OUTPUT_ROOT_ENV,
    }
    print(json.dumps(blob, indent=2, sort_keys=True))
    return 0


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vpnf",
        description="Simulate, train, and evaluate FOA room-impulse-response field models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render FOA RIR datasets for random rooms")
    p.add_argument("--rooms", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="seed of the first room")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--fs", type=float, default=None)
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--grid-spacing", type=float, default=None)
    p.add_argument("--config", default=None, help="JSON file with simulate settings")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("split", help="draw train/validation/evaluation indices")
    p.add_argument("--dataset", required=True)
    p.add_argument("--mode", choices=("volume", "surface"), required=True)
    p.add_argument("--n-train", type=int, required=True)
    p.add_argument("--n-validation", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train one model and write a checkpoint")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--model", choices=sorted(MODEL_PRESETS), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log", default=None, help="training log CSV")
    p.add_argument("--config", default=None, help="JSON file with training settings")
    for f in fields(TrainConfig):
        if f.name in ("head", "penalty"):
            continue
        flag = "--" + f.name.replace("_", "-")
        kind = float if f.type == "float" else int
        p.add_argument(flag, type=kind, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on the evaluation split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--out", required=True, help="report CSV (appended)")
    p.add_argument("--model-name", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="aggregate report CSVs over rooms")
    p.add_argument("reports", nargs="+", help="report CSV files")
    p.add_argument("--out", required=True, help="long-format aggregate CSV")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("defaults", help="print all defaults as JSON")
    p.set_defaults(func=cmd_defaults)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (VpnfError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
