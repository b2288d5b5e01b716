"""Two-stage adaptation training on the synthetic two-domain task.

Stage one optimizes source cross entropy plus the threshold-adaptive
unsupervised focal loss on perturbed target pairs, updating the per-class
threshold state once per target batch.  Stage two restarts from the
source-pretrained weights, keeps the stage-one model frozen as pseudo-labeler,
and adds the weighted cross entropy on cross-domain mixed samples.

All randomness is drawn from named substreams of the config seed, so a full
run is reproducible bit for bit, including the CSV logs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from segadapt.autodiff import take_cols
from segadapt.config import TrainConfig
from segadapt.data import (
    flip_permutation,
    generate_domain,
    perturb,
    pixel_features,
    scene_spec,
)
from segadapt.losses import LossConfig, StageLosses, stage1_loss, stage2_loss, supervised_ce_loss
from segadapt.metrics import evaluate_miou
from segadapt.mixing import build_category_db, long_tail_paste, make_mix_mask, mix, pseudo_labels
from segadapt.model import PixelModel
from segadapt.threshold import ThresholdState, adaptive_mask, confidence_and_argmax, update

__all__ = [
    "TrainingDiverged",
    "TrainLog",
    "build_datasets",
    "pretrain_source",
    "train_stage1",
    "train_stage2",
    "run_pipeline",
    "write_metrics_csv",
    "write_thresholds_csv",
    "write_iou_csv",
]

# named rng substreams of the config seed
_STREAM_SOURCE_DATA = 0
_STREAM_TARGET_DATA = 1
_STREAM_MODEL_INIT = 2
_STREAM_PRETRAIN = 3
_STREAM_STAGE1 = 4
_STREAM_STAGE1_PERTURB = 5
_STREAM_STAGE2 = 6
_STREAM_STAGE2_PERTURB = 7
_STREAM_PASTE = 8
_STREAM_MIX = 9
_STREAM_BATCH = 10


class TrainingDiverged(RuntimeError):
    """Raised when a training step produces a non-finite loss."""


@dataclass
class TrainLog:
    """Per-step loss components, threshold trajectory, periodic evaluations."""

    metrics: list = field(default_factory=list)     # (step, l_s, l_u, l_m, total)
    thresholds: list = field(default_factory=list)  # (step, class_id, alpha)
    evals: list = field(default_factory=list)       # (step, target_miou)


def _rng(cfg: TrainConfig, stream: int) -> np.random.Generator:
    return np.random.default_rng((cfg.seed, stream))


def _loss_config(cfg: TrainConfig) -> LossConfig:
    return LossConfig(gamma=cfg.gamma, lambda_u=cfg.lambda_u,
                      lambda_m=cfg.lambda_m, epsilon=cfg.epsilon)


def _threshold_state(cfg: TrainConfig) -> ThresholdState:
    return ThresholdState.initial(cfg.num_classes, a=cfg.threshold_a,
                                  b=cfg.threshold_b, d=cfg.threshold_d,
                                  t0=cfg.threshold_t0)


def build_datasets(cfg: TrainConfig):
    """Source and target scene lists plus the SceneSpec that generated them."""
    spec = scene_spec(cfg)
    source = generate_domain(spec, "source", cfg.source_scenes, (cfg.seed, _STREAM_SOURCE_DATA))
    target = generate_domain(spec, "target", cfg.target_scenes, (cfg.seed, _STREAM_TARGET_DATA))
    return source, target, spec


def _sgd_step(model: PixelModel, lr: float) -> None:
    for p in model.params:
        p.data = p.data - lr * p.grad
        p.zero_grad()


def _check_finite(parts: StageLosses, step: int, stage: str) -> float:
    total = parts.total.item()
    if not np.isfinite(total):
        detail = {"l_s": parts.l_s.item(), "l_u": parts.l_u.item(),
                  "l_m": parts.l_m.item() if parts.l_m is not None else None}
        raise TrainingDiverged(f"non-finite {stage} loss at step {step}: {detail}")
    return total


def pretrain_source(cfg: TrainConfig, source=None) -> PixelModel:
    """Supervised training on the source domain only."""
    if source is None:
        source, _, _ = build_datasets(cfg)
    model = PixelModel(cfg.num_classes, cfg.hidden_units, rng=_rng(cfg, _STREAM_MODEL_INIT))
    feats = [pixel_features(img) for img, _ in source]
    flat_labels = [labels.ravel() for _, labels in source]
    rng = _rng(cfg, _STREAM_PRETRAIN)
    for step in range(cfg.pretrain_steps):
        i = int(rng.integers(len(source)))
        loss = supervised_ce_loss(model.prob_map(feats[i]), flat_labels[i], cfg.epsilon)
        if not np.isfinite(loss.item()):
            raise TrainingDiverged(f"non-finite pretraining loss at step {step}")
        loss.backward()
        _sgd_step(model, cfg.learning_rate)
    return model


def _target_branches(model, feats_t, image_t, rng_perturb, cfg):
    """Aligned weak-branch and perturbed-branch prob maps plus the loss mask."""
    p_t = model.prob_map(feats_t)
    x_star, flipped = perturb(image_t, rng_perturb, noise=cfg.perturb_noise,
                              brightness=cfg.perturb_brightness,
                              contrast=cfg.perturb_contrast, flip_prob=cfg.flip_prob)
    p_star = model.prob_map(pixel_features(x_star))
    if flipped:
        p_hat = take_cols(p_t, flip_permutation(cfg.height, cfg.width))
    else:
        p_hat = p_t
    return p_hat, p_star


def _subsample(cfg, rng_batch, n):
    if cfg.batch_pixels <= 0 or cfg.batch_pixels >= n:
        return None
    return rng_batch.permutation(n)[:cfg.batch_pixels]


def train_stage1(cfg: TrainConfig, datasets=None, init_model: PixelModel | None = None):
    """Stage-one adaptation; returns the trained model and its log."""
    if datasets is None:
        source, target, _ = build_datasets(cfg)
    else:
        source, target = datasets
    model = (init_model or pretrain_source(cfg, source)).clone()
    return _adaptation_loop(cfg, model, source, target, stage="stage1",
                            steps=cfg.stage1_steps, pseudo_model=None)


def train_stage2(cfg: TrainConfig, stage1_model: PixelModel, datasets=None,
                 source_model: PixelModel | None = None):
    """Stage-two adaptation with mixed samples; returns model and log.

    The optimized model restarts from the source-pretrained weights while the
    frozen stage-one model produces the pseudo labels.
    """
    if datasets is None:
        source, target, _ = build_datasets(cfg)
    else:
        source, target = datasets
    model = (source_model or pretrain_source(cfg, source)).clone()
    return _adaptation_loop(cfg, model, source, target, stage="stage2",
                            steps=cfg.stage2_steps, pseudo_model=stage1_model)


def _adaptation_loop(cfg, model, source, target, stage, steps, pseudo_model):
    stage_two = pseudo_model is not None
    loss_cfg = _loss_config(cfg)
    state = _threshold_state(cfg)
    log = TrainLog()

    feats_s = [pixel_features(img) for img, _ in source]
    labels_s = [labels.ravel() for _, labels in source]
    feats_t = [pixel_features(img) for img, _ in target]

    rng_pick = _rng(cfg, _STREAM_STAGE2 if stage_two else _STREAM_STAGE1)
    rng_perturb = _rng(cfg, _STREAM_STAGE2_PERTURB if stage_two else _STREAM_STAGE1_PERTURB)
    rng_batch = _rng(cfg, _STREAM_BATCH)
    if stage_two:
        rng_paste = _rng(cfg, _STREAM_PASTE)
        rng_mix = _rng(cfg, _STREAM_MIX)
        db = build_category_db(source, cfg.num_classes)
        pseudo_cache: dict[int, np.ndarray] = {}

    n_pixels = cfg.height * cfg.width
    for step in range(steps):
        s_idx = int(rng_pick.integers(len(source)))
        t_idx = int(rng_pick.integers(len(target)))

        p_s = model.prob_map(feats_s[s_idx])
        y_s = labels_s[s_idx]
        p_hat, p_star = _target_branches(model, feats_t[t_idx], target[t_idx][0],
                                         rng_perturb, cfg)

        confidence, arg_labels = confidence_and_argmax(p_hat.data)
        update(state, confidence, arg_labels)
        mask = adaptive_mask(confidence, arg_labels, state.alpha)

        cols = _subsample(cfg, rng_batch, n_pixels)
        if cols is not None:
            p_s, y_s = take_cols(p_s, cols), y_s[cols]
            p_hat, p_star, mask = take_cols(p_hat, cols), take_cols(p_star, cols), mask[cols]

        if stage_two:
            d_idx = int(rng_pick.integers(len(source)))
            m_idx = int(rng_pick.integers(len(target)))
            pasted_img, pasted_lab = long_tail_paste(
                source[d_idx][0], source[d_idx][1], db, state.alpha,
                rng_paste, cfg.paste_count)
            if m_idx not in pseudo_cache:
                pseudo_cache[m_idx] = pseudo_labels(target[m_idx][0], pseudo_model)
            mixed = mix(pasted_img, pasted_lab, target[m_idx][0],
                        pseudo_cache[m_idx], make_mix_mask(pasted_lab, rng_mix))
            p_m = model.prob_map(pixel_features(mixed.image))
            parts = stage2_loss(p_s, y_s, p_hat, p_star, mask, p_m,
                                mixed.labels.ravel(), mixed.weights.ravel(), loss_cfg)
        else:
            parts = stage1_loss(p_s, y_s, p_hat, p_star, mask, loss_cfg)

        total = _check_finite(parts, step, stage)
        parts.total.backward()
        _sgd_step(model, cfg.stage2_lr if stage_two else cfg.stage1_lr)

        l_m = parts.l_m.item() if parts.l_m is not None else 0.0
        log.metrics.append((step, parts.l_s.item(), parts.l_u.item(), l_m, total))
        for c in range(cfg.num_classes):
            log.thresholds.append((step, c, state.alpha[c]))
        if cfg.eval_every > 0 and (step + 1) % cfg.eval_every == 0:
            _, miou = evaluate_miou(model, target, cfg.num_classes)
            log.evals.append((step, miou))

    return model, log


# ----------------------------------------------------------------- CSV output


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def write_metrics_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("step,L_s,L_u,L_m,total\n")
        for step, l_s, l_u, l_m, total in rows:
            fh.write(f"{step},{_fmt(l_s)},{_fmt(l_u)},{_fmt(l_m)},{_fmt(total)}\n")


def write_thresholds_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("step,class_id,alpha\n")
        for step, class_id, alpha in rows:
            fh.write(f"{step},{class_id},{_fmt(alpha)}\n")


def write_iou_csv(path, iou: np.ndarray, miou: float) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("class_id,iou\n")
        for c, value in enumerate(iou):
            fh.write(f"{c},{'nan' if np.isnan(value) else _fmt(value)}\n")
        fh.write(f"mean,{_fmt(miou)}\n")


def run_pipeline(cfg: TrainConfig, out_dir=None) -> dict:
    """Source-only baseline, stage one, stage two, with full evaluation.

    Returns a summary dict; when ``out_dir`` is given, writes the metrics,
    threshold, and IoU CSVs there (deterministic bytes under a fixed seed).
    """
    source, target, spec_obj = build_datasets(cfg)
    datasets = (source, target)

    baseline = pretrain_source(cfg, source)
    base_iou, base_miou = evaluate_miou(baseline, target, cfg.num_classes)
    base_src_iou, base_src_miou = evaluate_miou(baseline, source, cfg.num_classes)

    stage1_model, log1 = train_stage1(cfg, datasets=datasets, init_model=baseline)
    s1_iou, s1_miou = evaluate_miou(stage1_model, target, cfg.num_classes)
    s1_src_iou, s1_src_miou = evaluate_miou(stage1_model, source, cfg.num_classes)

    stage2_model, log2 = train_stage2(cfg, stage1_model, datasets=datasets,
                                      source_model=baseline)
    s2_iou, s2_miou = evaluate_miou(stage2_model, target, cfg.num_classes)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(out / "stage1_metrics.csv", log1.metrics)
        write_thresholds_csv(out / "stage1_thresholds.csv", log1.thresholds)
        write_iou_csv(out / "stage1_ious.csv", s1_iou, s1_miou)
        write_metrics_csv(out / "stage2_metrics.csv", log2.metrics)
        write_thresholds_csv(out / "stage2_thresholds.csv", log2.thresholds)
        write_iou_csv(out / "stage2_ious.csv", s2_iou, s2_miou)
        write_iou_csv(out / "baseline_ious.csv", base_iou, base_miou)

    return {
        "baseline_model": baseline,
        "stage1_model": stage1_model,
        "stage2_model": stage2_model,
        "stage1_log": log1,
        "stage2_log": log2,
        "baseline_target_miou": base_miou,
        "baseline_target_iou": base_iou,
        "baseline_source_miou": base_src_miou,
        "stage1_target_miou": s1_miou,
        "stage1_target_iou": s1_iou,
        "stage1_source_miou": s1_src_miou,
        "stage2_target_miou": s2_miou,
        "stage2_target_iou": s2_iou,
    }
