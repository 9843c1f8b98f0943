"""Command line front end.

Subcommands: trace, optimize, proprio {generate|train|eval}, serve.
Outputs are computed fully in memory and written at the end, so a failed
run never leaves partial files behind.  FINGERTRACE_LOG sets verbosity.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, reference_scene_path
from .config import ConfigError, config_from_file, config_with_design, emit_config
from .designopt import (
    DesignObjective,
    design_vector_from_scene,
    optimize,
    scene_with_design,
    score_components,
)
from .imaging import augment
from .metrics import compute_metrics, hit_table
from .proprio import BackboneModel, generate_dataset, load_dataset
from .regressor import (
    TrainConfig,
    evaluate_regressor,
    load_model,
    model_bytes,
    train_regressor,
)
from .report import history_figure, loss_figure, metrics_figure, scatter_figure
from .scene import SkinHit, trace_all
from .svgdraw import scene_drawing

log = logging.getLogger("fingertrace")

DEFAULT_OPT_PIXELS = 96


def _write_outputs(outputs: dict[Path, bytes]):
    """All-or-nothing file emission."""
    written: list[Path] = []
    try:
        for path, data in outputs.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "wb") as fh:
                fh.write(data)
            written.append(path)
    except OSError:
        for p in written:
            try:
                p.unlink()
            except OSError:
                pass
        raise


def _csv_bytes(header: list[str], rows: list[list]) -> bytes:
    lines = [",".join(header)]
    for row in rows:
        # repr(float(..)) gives shortest-round-trip text even for numpy scalars
        lines.append(",".join(repr(float(c)) if isinstance(c, float) else str(c)
                              for c in row))
    return ("\n".join(lines) + "\n").encode("ascii")


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("ascii")


def _load_config(path_arg: str):
    path = Path(path_arg) if path_arg else Path(str(reference_scene_path()))
    return config_from_file(path)


def _trace_payload(cfg):
    """Everything cmd_trace emits, shared verbatim by the HTTP service."""
    scene = cfg.build()
    traces = trace_all(scene)
    metrics = compute_metrics(traces, scene.skin)
    rows = hit_table(traces, scene.skin)
    table = _csv_bytes(["pixel_index", "arc_position_mm", "imaging_angle_deg", "px_per_mm"],
                       [list(r) for r in rows])
    n_hits = sum(1 for t in traces if isinstance(t.terminal, SkinHit))
    summary = {
        "coverage": metrics.coverage,
        "min_imaging_angle_deg": metrics.min_imaging_angle,
        "pixel_count": scene.camera.pixel_count,
        "skin_hit_fraction": n_hits / len(traces),
        "skin_arc_length_mm": scene.skin.arc_length(),
    }
    return scene, traces, metrics, table, summary


def cmd_trace(args) -> int:
    cfg = _load_config(args.config)
    scene, traces, metrics, table, summary = _trace_payload(cfg)
    prefix = Path(args.out)
    _write_outputs({
        prefix.with_name(prefix.name + "_drawing.svg"):
            scene_drawing(scene, traces).encode("ascii"),
        prefix.with_name(prefix.name + "_metrics.csv"): table,
        prefix.with_name(prefix.name + "_summary.json"): _json_bytes(summary),
        prefix.with_name(prefix.name + "_profiles.png"): metrics_figure(metrics),
    })
    print(f"coverage {summary['coverage']:.4f}  "
          f"min imaging angle {summary['min_imaging_angle_deg']:.2f} deg  "
          f"skin hits {summary['skin_hit_fraction']:.4f}")
    return 0


def cmd_optimize(args) -> int:
    cfg = _load_config(args.config)
    eval_cfg = dataclasses.replace(cfg, pixel_count=args.pixels)
    base_scene = eval_cfg.build()
    objective = DesignObjective(max_length=cfg.envelope_length,
                                max_width=cfg.envelope_width)
    initial = design_vector_from_scene(base_scene)
    dim = len(initial.free_indices)
    if args.budget < dim + 1:
        raise ValueError(f"budget must be at least dim+1 = {dim + 1}")
    initial_parts = score_components(initial, base_scene, objective)
    best, history = optimize(initial, base_scene, objective, args.budget, seed=args.seed)
    best_parts = score_components(best, base_scene, objective)
    best_cfg = config_with_design(cfg, scene_with_design(base_scene, best))

    prefix = Path(args.out)
    rows = [[h.evaluation, h.score, h.coverage, h.min_angle_deg] for h in history]
    _write_outputs({
        prefix.with_name(prefix.name + "_history.csv"):
            _csv_bytes(["evaluation", "score", "coverage", "min_angle_deg"], rows),
        prefix.with_name(prefix.name + "_best_scene.json"):
            emit_config(best_cfg).encode("ascii"),
        prefix.with_name(prefix.name + "_history.png"): history_figure(history),
    })
    print(f"initial score {initial_parts.score:.4f}  final score {best_parts.score:.4f}")
    return 0


def cmd_proprio_generate(args) -> int:
    model = BackboneModel()
    samples = generate_dataset(args.out, args.count, args.noise, args.seed, model)
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


def cmd_proprio_train(args) -> int:
    images, targets = load_dataset(args.dataset)
    if args.augment:
        images = np.stack([augment(img, args.seed + 7919 * i)
                           for i, img in enumerate(images)])
    cfg = TrainConfig(epochs=args.epochs, seed=args.seed)
    model, history = train_regressor(images, targets, cfg)
    prefix = Path(args.out)
    _write_outputs({
        prefix.with_name(prefix.name + "_model.bin"): model_bytes(model),
        prefix.with_name(prefix.name + "_loss.csv"):
            _csv_bytes(["epoch", "mse"], [[i, v] for i, v in enumerate(history)]),
        prefix.with_name(prefix.name + "_loss.png"): loss_figure(history),
    })
    print(f"trained {cfg.epochs} epochs  final loss {history[-1]:.6f}")
    return 0


def cmd_proprio_eval(args) -> int:
    images, targets = load_dataset(args.dataset)
    model = load_model(args.model)
    rmse_b, rmse_t, preds = evaluate_regressor(model, images, targets)
    prefix = Path(args.out)
    rows = [[i, float(t[0]), float(t[1]), float(p[0]), float(p[1])]
            for i, (t, p) in enumerate(zip(targets, preds))]
    _write_outputs({
        prefix.with_name(prefix.name + "_rmse.json"): _json_bytes({
            "bending_rmse_Nmm": rmse_b,
            "twisting_rmse_Nmm": rmse_t,
            "n_samples": len(targets),
        }),
        prefix.with_name(prefix.name + "_predictions.csv"):
            _csv_bytes(["sample", "true_bending_Nmm", "true_twisting_Nmm",
                        "pred_bending_Nmm", "pred_twisting_Nmm"], rows),
        prefix.with_name(prefix.name + "_scatter.png"): scatter_figure(targets, preds),
    })
    print(f"bending RMSE {rmse_b:.3f} N*mm  twisting RMSE {rmse_t:.3f} N*mm")
    return 0


def cmd_serve(args) -> int:
    from .service import run_server
    cfg = _load_config(args.config)
    run_server(cfg, args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fingertrace",
                                     description="Catadioptric tactile finger design toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", help="trace the pixel fan and report design metrics")
    p.add_argument("--config", default="", help="scene config (default: bundled reference)")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("optimize", help="improve mirror/skin control points")
    p.add_argument("--config", default="")
    p.add_argument("--out", required=True)
    p.add_argument("--budget", type=int, default=2000, help="evaluation budget")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pixels", type=int, default=DEFAULT_OPT_PIXELS,
                   help="pixel count used during optimization scoring")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("proprio", help="synthetic torque pipeline")
    psub = p.add_subparsers(dest="proprio_command", required=True)

    g = psub.add_parser("generate", help="write a synthetic LED dataset")
    g.add_argument("--out", required=True, help="dataset directory")
    g.add_argument("--count", type=int, default=2000)
    g.add_argument("--noise", type=float, default=0.0, help="pixel noise sigma")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_proprio_generate)

    t = psub.add_parser("train", help="fit the torque regressor")
    t.add_argument("--dataset", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    t.add_argument("--seed", type=int, default=TrainConfig.seed)
    t.add_argument("--augment", action="store_true",
                   help="apply seeded scale/shift augmentation before training")
    t.set_defaults(func=cmd_proprio_train)

    e = psub.add_parser("eval", help="evaluate a trained regressor")
    e.add_argument("--dataset", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_proprio_eval)

    p = sub.add_parser("serve", help="run the JSON-over-HTTP design service")
    p.add_argument("--config", default="")
    p.add_argument("--port", type=int, default=8040)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("FINGERTRACE_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
