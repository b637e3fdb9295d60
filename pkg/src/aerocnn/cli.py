"""
aerocnn command line: synth, voxelize, augment-preview, train, predict, evaluate.

Every command reads the run config (-c), lets flags override it, and exits 1
after logging the error if anything fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import shutil
import sys
from pathlib import Path

import numpy as np
import pandas as pd
from tqdm import tqdm

from .augment import OPS, apply_op
from .evaluation import DRAG_COUNT, EmptyEvaluationError, EvalPair, baseline_refs, evaluate, render_report
from .geometry import DomainSpec, center_in_domain, load_mesh, parse_bounds, parse_dims
from .surrogate import (
    DimensionMismatchError,
    SurrogateModel,
    checkpoint_domain,
    fit_model,
    load_checkpoint,
    load_training_samples,
    save_checkpoint,
)
from .synthfleet import FleetSpec, generate_fleet, group_spread, load_fleet_spec
from .utilities.config import RunConfig, load_run_config
from .utilities.logger import setup_logging
from .utilities.manifest import Manifest, ManifestError, read_manifest, write_manifest
from .utilities.timing import PhaseTimer
from .voxelizer import SdfGrid, generate_sdf, read_vsdf, write_vsdf

logger = logging.getLogger("aerocnn")

MESH_SUFFIXES = (".stl", ".obj")


def _config(args, **overrides) -> RunConfig:
    dims = parse_dims(args.dims) if getattr(args, "dims", None) else None
    domain = parse_bounds(args.domain) if getattr(args, "domain", None) else None
    cfg = load_run_config(args.config, seed=args.seed, dims=dims, domain=domain, **overrides)
    level = logging.DEBUG if args.debug else cfg.logging.level
    remote = cfg.logging.endpoint if (args.logging or cfg.logging.remote) else None
    setup_logging(cfg.logging.file, level, remote)
    return cfg


def voxelize_mesh(path, domain: DomainSpec, workers=None, fix_degenerate=False, timer: PhaseTimer | None = None) -> SdfGrid:
    timer = timer or PhaseTimer()
    with timer.phase("load"):
        mesh = load_mesh(path, fix_degenerate=fix_degenerate)
    with timer.phase("preprocess"):
        grid = generate_sdf(center_in_domain(mesh, domain), domain, workers=workers)
    return grid


def _load_grid(path, model: SurrogateModel, workers, fix_degenerate, timer: PhaseTimer) -> SdfGrid:
    path = Path(path)
    if path.suffix.lower() in MESH_SUFFIXES:
        domain = checkpoint_domain(model)
        if domain is None:
            raise ManifestError(f"checkpoint has no voxelization domain; voxelize {path} first")
        return voxelize_mesh(path, domain, workers, fix_degenerate, timer)
    with timer.phase("load"):
        return read_vsdf(path)


def cmd_synth(args) -> int:
    cfg = _config(args)
    spec = load_fleet_spec(args.spec) if args.spec else FleetSpec()
    updates = {}
    if args.seed is not None or not args.spec:
        updates["seed"] = cfg.seed
    if args.label_noise is not None:
        updates["label_noise"] = args.label_noise
    spec = dataclasses.replace(spec, **updates)

    timer = PhaseTimer()
    with timer.phase("generate"):
        fleet = generate_fleet(spec, args.out, progress=True)
    spread = group_spread(fleet.records)
    logger.info("c_d spread: within groups %.5f, between groups %.5f", spread.within, spread.between)
    logger.info("Fleet summary\n%s", fleet.summary().to_string(index=False))
    timer.report("synth timing")
    return 0


def cmd_voxelize(args) -> int:
    cfg = _config(args)
    workers = args.workers if args.workers is not None else cfg.workers
    timer = PhaseTimer()

    if args.manifest:
        if not args.out_dir:
            raise ManifestError("--manifest needs --out-dir")
        manifest = read_manifest(args.manifest)
        out_dir = Path(args.out_dir)
        updates = {}
        for r in tqdm(manifest.records, desc="voxelize"):
            mesh_path = manifest.resolve(r.mesh_path)
            if mesh_path is None:
                raise ManifestError(f"sample {r.sample_id!r} has no mesh_path")
            grid = voxelize_mesh(mesh_path, cfg.domain, workers, args.fix_degenerate, timer)
            with timer.phase("write"):
                target = write_vsdf(grid, out_dir / "sdf" / f"{r.sample_id}.vsdf")
            updates[r.sample_id] = {"sdf_path": str(target.absolute()), "mesh_path": str(mesh_path.absolute())}
        write_manifest(manifest.replace(updates), out_dir / "manifest.jsonl")
    else:
        if not args.inp or not args.out:
            raise ManifestError("voxelize needs --in and --out, or --manifest and --out-dir")
        grid = voxelize_mesh(args.inp, cfg.domain, workers, args.fix_degenerate, timer)
        with timer.phase("write"):
            write_vsdf(grid, args.out)
        logger.info("Wrote %s (%s cells)", args.out, "x".join(map(str, grid.dims)))
    timer.report("voxelize timing")
    return 0


def cmd_augment_preview(args) -> int:
    cfg = _config(args)
    grid = read_vsdf(args.inp)
    out = apply_op(grid, args.op, cfg.seed, policy=cfg.policy)
    write_vsdf(out, args.out)
    logger.info("Wrote %s augmented by %s (seed %d)", args.out, args.op, cfg.seed)
    return 0


def _grid_domain(cfg: RunConfig, grid: SdfGrid) -> DomainSpec:
    """The configured domain when the grids were voxelized on it, else the one they describe."""
    if cfg.domain.dims == grid.dims and np.allclose(cfg.domain.origin, grid.origin) and np.allclose(cfg.domain.spacing, grid.spacing):
        return cfg.domain
    return grid.domain()


def cmd_train(args) -> int:
    cfg = _config(args, epochs=args.epochs, output=args.out)
    out_dir = Path(cfg.output)
    timer = PhaseTimer()

    with timer.phase("load"):
        manifest = read_manifest(args.manifest)
        manifest.validate(require_train_cd=True)
        samples = load_training_samples(manifest, "train")
    if not samples:
        raise ManifestError(f"{args.manifest}: no train samples")
    dims = samples[0].grid.dims
    if args.dims and tuple(parse_dims(args.dims)) != tuple(dims):
        raise DimensionMismatchError(f"--dims {args.dims} does not match the training grids {'x'.join(map(str, dims))}")
    model_cfg = dataclasses.replace(cfg.model, input_dims=dims)

    out_dir.mkdir(parents=True, exist_ok=True)
    if args.config:
        shutil.copy(args.config, out_dir / "config.yaml")
    with timer.phase("train"):
        result = fit_model(samples, model_cfg, cfg.train, out_dir)
    with timer.phase("save"):
        save_checkpoint(result.model, out_dir / "model.ckpt", domain=_grid_domain(cfg, samples[0].grid))
        result.save_loss_curve(out_dir / "loss_curve.csv")
    timer.save(out_dir / "timing.csv")
    timer.report("train timing")
    logger.info("Final training loss %.5f", result.final_loss)
    return 0


def _prediction_rows(manifest: Manifest, model: SurrogateModel, split, workers, fix_degenerate, timer) -> pd.DataFrame:
    rows = []
    for r in manifest.records:
        if split != "all" and r.split != split:
            continue
        path = manifest.resolve(r.sdf_path) or manifest.resolve(r.mesh_path)
        if path is None:
            raise ManifestError(f"sample {r.sample_id!r} has neither sdf_path nor mesh_path")
        grid = _load_grid(path, model, workers, fix_degenerate, timer)
        with timer.phase("predict"):
            cd = model.predict(grid)
        rows.append({"sample_id": r.sample_id, "project": r.project, "baseline_group": r.baseline_group, "split": r.split, "cd_pred": cd})
    return pd.DataFrame(rows, columns=["sample_id", "project", "baseline_group", "split", "cd_pred"])


def cmd_predict(args) -> int:
    cfg = _config(args)
    workers = args.workers if args.workers is not None else cfg.workers
    timer = PhaseTimer()
    with timer.phase("load"):
        model = load_checkpoint(args.checkpoint)

    if args.manifest:
        manifest = read_manifest(args.manifest)
        frame = _prediction_rows(manifest, model, args.split, workers, args.fix_degenerate, timer)
        out_dir = Path(args.out or cfg.output)
        out_dir.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out_dir / "predictions.csv", index=False)
        timer.save(out_dir / "timing.csv")
        logger.info("Wrote %d predictions to %s", len(frame), out_dir / "predictions.csv")
    else:
        if not args.inp:
            raise ManifestError("predict needs --in or --manifest")
        grid = _load_grid(args.inp, model, workers, args.fix_degenerate, timer)
        with timer.phase("predict"):
            cd = model.predict(grid)
        print(f"{cd:.6f}")
    timer.report("predict timing")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    manifest = read_manifest(args.manifest)
    manifest.validate(require_train_cd=False)
    test = [r for r in manifest.split("test") if r.cd is not None]
    if not test:
        raise EmptyEvaluationError(f"{args.manifest}: no labelled test samples")

    if args.predictions:
        frame = pd.read_csv(args.predictions, dtype={"sample_id": str}, float_precision="round_trip")
        predicted = dict(zip(frame["sample_id"], frame["cd_pred"]))
    elif args.checkpoint:
        model = load_checkpoint(args.checkpoint)
        subset = Manifest(test, manifest.root)
        frame = _prediction_rows(subset, model, "test", cfg.workers, False, PhaseTimer())
        predicted = dict(zip(frame["sample_id"], frame["cd_pred"]))
    else:
        raise ManifestError("evaluate needs --checkpoint or --predictions")

    missing = [r.sample_id for r in test if r.sample_id not in predicted]
    if missing:
        raise ManifestError(f"no prediction for {len(missing)} test sample(s), first {missing[0]!r}")
    pairs = [EvalPair(r.sample_id, r.project, r.baseline_group, r.cd, predicted[r.sample_id]) for r in test]
    report = evaluate(
        pairs,
        baseline_refs(manifest.records),
        min_abs_delta=args.min_abs_delta * DRAG_COUNT,
        unit=args.unit,
    )
    render_report(report, args.out or cfg.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", type=str, default=None, help="Path to the run config (.yaml)")
    common.add_argument("--seed", type=int, default=None, help="Seed for all randomness (default: config, else 0)")
    common.add_argument("-d", "--debug", action="store_true", help="Debug logging")
    common.add_argument("-l", "--logging", action="store_true", help="Ship logs to the remote log server")

    parser = argparse.ArgumentParser(prog="aerocnn", description="SDF-based 3D-CNN drag surrogate")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="Generate the synthetic vehicle fleet")
    p.add_argument("--spec", type=str, default=None, help="Fleet spec (.yaml)")
    p.add_argument("--out", type=str, required=True, help="Output directory")
    p.add_argument("--label-noise", type=float, nargs="?", const=0.5, default=None, help="Label noise sigma in drag counts (0.5 if given without a value)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("voxelize", parents=[common], help="Mesh -> VSDF, single file or a manifest")
    p.add_argument("--in", dest="inp", type=str, default=None, help="Input mesh (.stl/.obj)")
    p.add_argument("--out", type=str, default=None, help="Output .vsdf")
    p.add_argument("--manifest", type=str, default=None, help="Voxelize every mesh of a manifest")
    p.add_argument("--out-dir", type=str, default=None, help="Output directory for batch mode")
    p.add_argument("--dims", type=str, default=None, help="Grid cells, e.g. 128x32x32")
    p.add_argument("--domain", type=str, default=None, help="x0,y0,z0,x1,y1,z1 in meters")
    p.add_argument("--workers", type=int, default=None, help="Voxelization threads")
    p.add_argument("--fix-degenerate", action="store_true", help="Drop degenerate triangles instead of failing")
    p.set_defaults(func=cmd_voxelize)

    p = sub.add_parser("augment-preview", parents=[common], help="Apply one augmentation to a VSDF")
    p.add_argument("--in", dest="inp", type=str, required=True)
    p.add_argument("--op", type=str, required=True, choices=OPS)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_augment_preview)

    p = sub.add_parser("train", parents=[common], help="Train the surrogate on a manifest's train split")
    p.add_argument("--manifest", type=str, required=True)
    p.add_argument("--out", type=str, default=None, help="Output directory (default: config output)")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--dims", type=str, default=None, help="Expected grid dims; must match the VSDFs")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="Predict c_d for a mesh, a VSDF or a manifest")
    p.add_argument("--checkpoint", type=str, required=True)
    p.add_argument("--in", dest="inp", type=str, default=None, help="Mesh or VSDF")
    p.add_argument("--manifest", type=str, default=None)
    p.add_argument("--split", type=str, default="all", choices=("train", "test", "all"))
    p.add_argument("--out", type=str, default=None, help="Output directory for predictions.csv")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--fix-degenerate", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", parents=[common], help="Metrics and plot data on the test split")
    p.add_argument("--manifest", type=str, required=True)
    p.add_argument("--checkpoint", type=str, default=None)
    p.add_argument("--predictions", type=str, default=None, help="predictions.csv from predict")
    p.add_argument("--out", type=str, default=None, help="Report directory")
    p.add_argument("--unit", type=str, default="counts", choices=("counts", "raw"))
    p.add_argument("--min-abs-delta", type=float, default=2.0, help="DPA threshold on |delta c_d| in drag counts")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(None, logging.DEBUG if args.debug else logging.INFO)
    try:
        return args.func(args)
    except Exception as e:
        logger.exception("Failed: %s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
