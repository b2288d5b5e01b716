"""Command-line interface.

Subcommands: ``gen-data``, ``train-stage1``, ``train-stage2``, ``eval``,
``mix-preview``, ``gradcurves``.  Training commands read a line-oriented
``key = value`` config file; every TrainConfig field is also exposed as a
``--field-name`` flag that overrides the file.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from segadapt.config import TrainConfig, make_config
from segadapt.data import generate_domain, scene_spec
from segadapt.gradcurves import KINDS, REFERENCE_FOCAL_MIN, curve, emit_csv, find_global_min
from segadapt.metrics import evaluate_miou
from segadapt.mixing import build_category_db, long_tail_paste, make_mix_mask, mix, pseudo_labels
from segadapt.model import load_model, save_model
from segadapt.netpbm import write_pgm, write_ppm
from segadapt.threshold import ThresholdState
from segadapt.train import (
    build_datasets,
    pretrain_source,
    train_stage1,
    train_stage2,
    write_iou_csv,
    write_metrics_csv,
    write_thresholds_csv,
)


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None,
                        help="key = value config file")
    group = parser.add_argument_group("config overrides")
    for field in dataclasses.fields(TrainConfig):
        group.add_argument(f"--{field.name.replace('_', '-')}", dest=field.name,
                           default=None, metavar="V",
                           help=f"override {field.name} (default {field.default})")


def _config_from(args: argparse.Namespace) -> TrainConfig:
    overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(TrainConfig)
                 if getattr(args, f.name, None) is not None}
    return make_config(args.config, overrides)


def _cmd_gen_data(args) -> int:
    cfg = _config_from(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = scene_spec(cfg)
    domains = ("source", "target") if args.domain == "both" else (args.domain,)
    for domain in domains:
        count = args.count or (cfg.source_scenes if domain == "source" else cfg.target_scenes)
        stream = 0 if domain == "source" else 1
        scenes = generate_domain(spec, domain, count, (cfg.seed, stream))
        for i, (image, labels) in enumerate(scenes):
            write_ppm(out / f"{domain}_{i:04d}.ppm", image)
            write_pgm(out / f"{domain}_{i:04d}_labels.pgm", labels)
        print(f"wrote {count} {domain} scenes to {out}")
    return 0


def _cmd_train_stage1(args) -> int:
    cfg = _config_from(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    source, target, _ = build_datasets(cfg)
    baseline = pretrain_source(cfg, source)
    _, base_miou = evaluate_miou(baseline, target, cfg.num_classes)
    model, log = train_stage1(cfg, datasets=(source, target), init_model=baseline)
    iou, miou = evaluate_miou(model, target, cfg.num_classes)
    save_model(out / "source_model.npz", baseline)
    save_model(out / "stage1_model.npz", model)
    write_metrics_csv(out / "stage1_metrics.csv", log.metrics)
    write_thresholds_csv(out / "stage1_thresholds.csv", log.thresholds)
    write_iou_csv(out / "stage1_ious.csv", iou, miou)
    print(f"source-only target mIoU: {base_miou:.4f}")
    print(f"stage-one  target mIoU: {miou:.4f}")
    print(f"artifacts in {out}")
    return 0


def _cmd_train_stage2(args) -> int:
    cfg = _config_from(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stage1_model = load_model(args.stage1_model)
    source_model = load_model(args.source_model) if args.source_model else None
    source, target, _ = build_datasets(cfg)
    model, log = train_stage2(cfg, stage1_model, datasets=(source, target),
                              source_model=source_model)
    iou, miou = evaluate_miou(model, target, cfg.num_classes)
    save_model(out / "stage2_model.npz", model)
    write_metrics_csv(out / "stage2_metrics.csv", log.metrics)
    write_thresholds_csv(out / "stage2_thresholds.csv", log.thresholds)
    write_iou_csv(out / "stage2_ious.csv", iou, miou)
    print(f"stage-two target mIoU: {miou:.4f}")
    print(f"artifacts in {out}")
    return 0


def _cmd_eval(args) -> int:
    cfg = _config_from(args)
    model = load_model(args.model)
    source, target, _ = build_datasets(cfg)
    dataset = target if args.domain == "target" else source
    iou, miou = evaluate_miou(model, dataset, cfg.num_classes)
    for c, value in enumerate(iou):
        print(f"class {c}: IoU {'n/a' if np.isnan(value) else f'{value:.4f}'}")
    print(f"mIoU: {miou:.4f}")
    if args.out:
        write_iou_csv(args.out, iou, miou)
        print(f"wrote {args.out}")
    return 0


def _cmd_mix_preview(args) -> int:
    cfg = _config_from(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    source, target, _ = build_datasets(cfg)
    rng = np.random.default_rng(cfg.seed if args.preview_seed is None else args.preview_seed)
    db = build_category_db(source, cfg.num_classes)
    alpha = ThresholdState.initial(cfg.num_classes, t0=cfg.threshold_t0).alpha
    s_img, s_lab = source[int(rng.integers(len(source)))]
    t_img, t_lab = target[int(rng.integers(len(target)))]
    pasted_img, pasted_lab = long_tail_paste(s_img, s_lab, db, alpha, rng, cfg.paste_count)
    if args.model:
        labels_t = pseudo_labels(t_img, load_model(args.model))
    else:
        labels_t = t_lab  # preview without a trained model: use generated labels
    result = mix(pasted_img, pasted_lab, t_img, labels_t,
                 make_mix_mask(pasted_lab, rng))
    write_ppm(out / "mix_image.ppm", result.image)
    write_pgm(out / "mix_labels.pgm", result.labels)
    write_pgm(out / "mix_weights.pgm", result.weights)
    print(f"wrote mix_image.ppm, mix_labels.pgm, mix_weights.pgm to {out}")
    return 0


def _cmd_gradcurves(args) -> int:
    kinds = KINDS if args.kind == "all" else (args.kind,)
    curves = [curve(kind, p_hat=args.p_hat, gamma=args.gamma, grid=args.grid)
              for kind in kinds]
    emit_csv(curves, args.out)
    for curve_obj in curves:
        p_star = find_global_min(curve_obj)
        note = ""
        if curve_obj.kind == "focal":
            note = f" (reference value {REFERENCE_FOCAL_MIN})"
        print(f"{curve_obj.kind}: global minimum at p = {p_star:.4f}{note}")
    print(f"wrote {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segadapt",
        description="Two-stage entropy-based domain adaptation on a synthetic task")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write generated scenes as PPM/PGM files")
    _add_config_arguments(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--domain", choices=("source", "target", "both"), default="both")
    p.add_argument("--count", type=int, default=None, help="scenes per domain")
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("train-stage1", help="pretrain on source, then stage-one adaptation")
    _add_config_arguments(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_train_stage1)

    p = sub.add_parser("train-stage2", help="stage-two adaptation with mixed samples")
    _add_config_arguments(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--stage1-model", required=True, help="stage-one model .npz")
    p.add_argument("--source-model", default=None,
                   help="source-pretrained model .npz (re-pretrained when omitted)")
    p.set_defaults(func=_cmd_train_stage2)

    p = sub.add_parser("eval", help="per-class IoU and mIoU of a saved model")
    _add_config_arguments(p)
    p.add_argument("--model", required=True, help="model .npz")
    p.add_argument("--domain", choices=("source", "target"), default="target")
    p.add_argument("--out", default=None, help="optional IoU CSV path")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("mix-preview", help="write one mixed sample as PPM/PGM")
    _add_config_arguments(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--model", default=None, help="pseudo-labeling model .npz")
    p.add_argument("--preview-seed", type=int, default=None)
    p.set_defaults(func=_cmd_mix_preview)

    p = sub.add_parser("gradcurves", help="loss/gradient curves for the binary case")
    p.add_argument("--kind", choices=KINDS + ("all",), default="all")
    p.add_argument("--p-hat", dest="p_hat", type=float, default=0.6)
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--grid", type=int, default=1999)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_gradcurves)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
