"""
``macp`` command line.

    macp --out runs/desk --config experiments/configs/desk.json gen-data
    macp --out runs/desk pretrain --data runs/desk/pretrain
    macp --out runs/desk finetune --variant macp --pretrained runs/desk/pretrained.ckpt \\
        --data runs/desk/train --test runs/desk/test
    macp --out runs/desk eval --mode no_fusion --checkpoint runs/desk/pretrained.ckpt --data runs/desk/test
    macp --out runs/desk sweep --kind compression --pretrained runs/desk/pretrained.ckpt \\
        --data runs/desk/train --test runs/desk/test
    macp --out runs/desk diag-shift --data runs/desk/test

Exit codes: 0 success, 2 config error, 3 I/O error, 4 numeric divergence,
5 missing artifact, 1 anything else raised by the library.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from macp.config.loader import (load_config, require, save_resolved_config, sensor_config,
                                voxel_config, world_config)
from macp.errors import (CheckpointError, ConfigError, FormatError, MACPError, MissingArtifactError,
                         NonFiniteError)
from macp.evaluation.pipelines import PipelineMode
from macp.evaluation.report import DetectionEvaluator, evaluate
from macp.peft.variants import Variant
from macp.protocol import (eval_options, finetune_variant, pretrain_model, sweep_cavs, sweep_compression,
                           sweep_fusion, sweep_robustness)
from macp.scenarios.dataset import DatasetKind, load_dataset, load_manifest, make_dataset, save_dataset
from macp.scenarios.diagnostics import histogram_modes, signed_range_histogram
from macp.training.artifacts import load_model

logger = logging.getLogger("macp")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DIVERGED = 4
EXIT_MISSING = 5


def banner(title: str) -> None:
    print("\n" + "=" * 70)
    print(title)
    print("=" * 70)


def _existing(path: Optional[str], what: str, absent=ConfigError) -> Path:
    if path is None:
        raise absent(f"--{what} is required")
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"{what} not found: {path}")
    return path


def cmd_gen_data(args, cfg) -> None:
    out = Path(args.out)
    workers = args.workers if args.workers is not None else int(require(cfg, "dataset.workers", int))
    sensor = sensor_config(cfg)
    voxel = voxel_config(cfg)
    splits = require(cfg, "dataset.splits", dict)
    names = args.splits or list(splits)
    banner(f"Generating {len(names)} split(s) into {out}")
    for name in names:
        if name not in splits:
            raise ConfigError(f"missing config field 'dataset.splits.{name}'")
        split = splits[name]
        seed = cfg["seed"] + int(split.get("seed_offset", 0))
        wcfg = world_config(cfg, name)
        frames = make_dataset(split["kind"], split["n_frames"], seed, wcfg, sensor, voxel, workers=workers)
        save_dataset(frames, out / name, seed, wcfg, sensor)
        print(f"  {name:<10} {split['kind']:<12} {len(frames):>5} frames  seed {seed}")


def cmd_pretrain(args, cfg) -> None:
    data = _existing(args.data, "data")
    frames = load_dataset(data)
    out = Path(args.out)
    banner(f"Pretraining on {len(frames)} frames from {data}")
    trainer = pretrain_model(cfg, frames, cfg["seed"], epochs=args.epochs, lr=args.lr)
    checkpoint = Path(args.checkpoint) if args.checkpoint else out / "pretrained.ckpt"
    trainer.save_checkpoint(checkpoint)
    trainer.save_history(out / "pretrain_loss.csv")
    history = trainer.history
    print(f"  loss {history[0]['loss']:.5f} -> {history[-1]['loss']:.5f} over {len(history)} epochs")
    print(f"  checkpoint: {checkpoint}")


def cmd_finetune(args, cfg) -> None:
    variant = Variant.parse(args.variant or require(cfg, "finetune.variant", str))
    base, _ = load_model(_existing(args.pretrained, "pretrained"))
    train = load_dataset(_existing(args.data, "data"))
    if args.test is None:
        logger.warning("no --test split given, evaluating on the training frames")
    test = load_dataset(_existing(args.test, "test")) if args.test else train
    out = Path(args.out)
    banner(f"Fine-tuning variant '{variant.value}' on {len(train)} cooperative frames")
    trainer = finetune_variant(cfg, base.named_params(), train, cfg["seed"], variant,
                               factor=args.factor, fusion=args.fusion, epochs=args.epochs)
    stem = f"finetune_{variant.value}"
    checkpoint = Path(args.checkpoint) if args.checkpoint else out / f"{stem}.ckpt"
    trainer.save_checkpoint(checkpoint)
    trainer.save_history(out / f"{stem}_loss.csv")
    report = evaluate(test, trainer.model, PipelineMode.MACP, eval_options(cfg), name=variant.value)
    report.save_to_json(out / f"{stem}_report.json")
    report.save_to_csv(out / f"{stem}_report.csv")
    print(report)


def cmd_eval(args, cfg) -> None:
    mode = PipelineMode.parse(args.mode)
    model, _ = load_model(_existing(args.checkpoint, "checkpoint"))
    frames = load_dataset(_existing(args.data, "data"))
    if mode is not PipelineMode.NO_FUSION and load_manifest(args.data)["kind"] != DatasetKind.COOPERATIVE.value:
        raise ConfigError(f"mode {mode.value} needs a cooperative dataset")
    fov_mask = tuple(args.mask) if args.mask else None
    evaluator = DetectionEvaluator(frames, eval_options(cfg, args.max_agents, fov_mask))
    report = evaluator.evaluate(model, mode, name=args.name)
    out = Path(args.out)
    stem = f"eval_{report.name}"
    if args.save_detections:
        paths = evaluator.save_detections(out / f"{stem}_detections")
        logger.info("wrote detections for %d frames", len(paths))
    report.save_to_json(out / f"{stem}.json")
    report.save_to_csv(out / f"{stem}.csv")
    print(report)


def cmd_sweep(args, cfg) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg["seed"]
    test = load_dataset(_existing(args.test, "test"))
    banner(f"Sweep: {args.kind}")
    if args.kind in ("compression", "fusion"):
        base, _ = load_model(_existing(args.pretrained, "pretrained", MissingArtifactError))
        train = load_dataset(_existing(args.data, "data", MissingArtifactError))
        if args.kind == "compression":
            df = sweep_compression(cfg, base.named_params(), train, test, seed)
        else:
            df = sweep_fusion(cfg, base.named_params(), train, test, seed)
    elif args.kind == "cavs":
        model, _ = load_model(_existing(args.checkpoint, "checkpoint", MissingArtifactError))
        df = sweep_cavs(cfg, model, test)
    else:
        single, _ = load_model(_existing(args.pretrained, "pretrained", MissingArtifactError))
        coop, _ = load_model(_existing(args.checkpoint, "checkpoint", MissingArtifactError))
        per_position, df = sweep_robustness(cfg, single, coop, test)
        per_position.to_csv(out / "sweep_robustness_positions.csv", index=False)
    path = out / f"sweep_{args.kind}.csv"
    df.to_csv(path, index=False)
    print(df.to_string(index=False))
    print(f"\nSaved to {path}")


def cmd_diag_shift(args, cfg) -> None:
    data = _existing(args.data, "data")
    if load_manifest(data)["kind"] != DatasetKind.COOPERATIVE.value:
        raise ConfigError(f"diag-shift needs a cooperative dataset, {data} is single-agent")
    frames = load_dataset(data)
    bins = args.bins or int(require(cfg, "diagnostics.bins", int))
    max_range = float(require(cfg, "diagnostics.max_range", float))
    df = signed_range_histogram(frames, bins=bins, max_range=max_range)
    path = Path(args.out) / "signed_range_histogram.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False)
    banner("Signed-range distribution by role")
    for role in ("ego", "surrounding"):
        part = df[df["role"] == role]
        if part.empty or part["count"].sum() == 0:
            continue
        peak = part.loc[part["count"].idxmax()]
        print(f"  {role:<12} points {int(part['count'].sum()):>9}  peak bin "
              f"[{peak['bin_left']:.1f}, {peak['bin_right']:.1f})  modes {histogram_modes(df, role)}")
    print(f"\nSaved to {path}")


COMMANDS = {
    "gen-data": cmd_gen_data,
    "pretrain": cmd_pretrain,
    "finetune": cmd_finetune,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "diag-shift": cmd_diag_shift,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="macp", description="Multi-agent cooperative perception experiments")
    parser.add_argument("--config", type=str, default=None, help="JSON config merged over the defaults")
    parser.add_argument("--seed", type=int, default=None, help="Override the config seed")
    parser.add_argument("--out", type=str, default="runs/default", help="Output directory")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="Generate the synthetic datasets")
    p.add_argument("--splits", nargs="+", default=None, help="Only these splits")
    p.add_argument("--workers", type=int, default=None, help="Frame generation processes")

    p = sub.add_parser("pretrain", help="Train the single-agent model")
    p.add_argument("--data", type=str, required=True, help="Single-agent dataset directory")
    p.add_argument("--checkpoint", type=str, default=None, help="Checkpoint path")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)

    p = sub.add_parser("finetune", help="Fine-tune a PEFT variant on cooperative data")
    p.add_argument("--variant", type=str, default=None, choices=[v.value for v in Variant])
    p.add_argument("--pretrained", type=str, required=True, help="Pretrained checkpoint")
    p.add_argument("--data", type=str, required=True, help="Cooperative training dataset")
    p.add_argument("--test", type=str, default=None, help="Cooperative test dataset")
    p.add_argument("--factor", type=int, default=None, help="Channel compression factor")
    p.add_argument("--fusion", type=str, default=None, help="Fusion method")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--checkpoint", type=str, default=None, help="Output checkpoint path")

    p = sub.add_parser("eval", help="Evaluate one pipeline on a dataset")
    p.add_argument("--mode", type=str, default="macp", choices=[m.value for m in PipelineMode])
    p.add_argument("--checkpoint", type=str, required=True)
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--max-agents", type=int, default=None)
    p.add_argument("--mask", type=float, nargs=3, default=None, metavar=("CX", "CY", "HALF"),
                   help="Remove ego points in this square (ego frame, meters)")
    p.add_argument("--name", type=str, default=None, help="Report name")
    p.add_argument("--save-detections", action="store_true",
                   help="Also write per-frame detections as JSON lines")

    p = sub.add_parser("sweep", help="Run a parameter sweep")
    p.add_argument("--kind", type=str, required=True, choices=["compression", "cavs", "fusion", "robustness"])
    p.add_argument("--pretrained", type=str, default=None, help="Pretrained checkpoint")
    p.add_argument("--checkpoint", type=str, default=None, help="Fine-tuned cooperative checkpoint")
    p.add_argument("--data", type=str, default=None, help="Cooperative training dataset")
    p.add_argument("--test", type=str, required=True, help="Cooperative test dataset")

    p = sub.add_parser("diag-shift", help="Signed-range histograms per agent role")
    p.add_argument("--data", type=str, required=True, help="Cooperative dataset directory")
    p.add_argument("--bins", type=int, default=None)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse ``argv``, run the command and return its exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, {"seed": args.seed} if args.seed is not None else None)
        save_resolved_config(cfg, args.out)
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return EXIT_CONFIG
    except MissingArtifactError as exc:
        logger.error("missing artifact: %s", exc)
        return EXIT_MISSING
    except NonFiniteError as exc:
        logger.error("numeric divergence: %s", exc)
        return EXIT_DIVERGED
    except (FormatError, CheckpointError, OSError) as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO
    except MACPError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_ERROR
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
