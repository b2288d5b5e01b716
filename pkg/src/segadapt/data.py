"""Synthetic two-domain segmentation scenes, per-pixel features, perturbation.

Scenes are built on a cell grid: each cell independently hosts at most one
axis-aligned rectangle of a foreground class, so per-class pixel fractions
have a closed form.  Source and target share geometry statistics and differ
only photometrically (channel offset, brightness scale, extra noise).  One
foreground class is deliberately rare and colored close to another class,
which makes it the hard, low-confidence class of the task.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter

from segadapt.config import TrainConfig

__all__ = [
    "SceneSpec",
    "scene_spec",
    "generate_scene",
    "generate_domain",
    "expected_class_fraction",
    "pixel_features",
    "NUM_FEATURES",
    "perturb",
    "flip_permutation",
]

# base colors: background gray, three well-separated hues, and a distinctive
# rare class whose difficulty comes from scarcity rather than confusability
_BASE_COLORS = np.array([
    [0.30, 0.30, 0.30],
    [0.75, 0.30, 0.25],
    [0.25, 0.70, 0.30],
    [0.25, 0.35, 0.75],
    [0.70, 0.22, 0.70],
])

# additive direction of the hue offset (scaled by shift_hue); hits the green
# channel hardest, which the common classes depend on, while largely sparing
# the rare class's red/blue signature
_HUE_DIRECTION = np.array([0.9, -1.0, 0.25])

NUM_FEATURES = 9  # color (3) + local 3x3 mean (3) + local 3x3 variance (3)


@dataclass
class SceneSpec:
    num_classes: int = 5
    height: int = 64
    width: int = 64
    cell: int = 16
    fill_prob: float = 0.65
    class_weights: np.ndarray = field(default_factory=lambda: np.array([]))
    size_ranges: tuple = ()
    colors: np.ndarray = field(default_factory=lambda: _BASE_COLORS.copy())
    color_noise: float = 0.055
    shift_hue: float = 0.1
    shift_brightness: float = 0.82
    shift_noise: float = 0.01


def scene_spec(cfg: TrainConfig) -> SceneSpec:
    """Derive the scene recipe from a flat training config."""
    c = cfg.num_classes
    weights = np.ones(c)
    weights[0] = 0.0  # background never placed explicitly
    if 0 <= cfg.rare_class < c:
        weights[cfg.rare_class] = cfg.rare_weight
    weights = weights / weights.sum()
    colors = _BASE_COLORS[np.arange(c) % len(_BASE_COLORS)].copy()
    lo = max(4, cfg.cell // 3)
    hi = cfg.cell - 2
    rare_hi = max(lo + 1, cfg.cell // 2)  # rare shapes are also small
    size_ranges = tuple(
        (lo, rare_hi) if cls == cfg.rare_class else (lo, hi) for cls in range(c))
    return SceneSpec(
        num_classes=c, height=cfg.height, width=cfg.width, cell=cfg.cell,
        fill_prob=cfg.fill_prob, class_weights=weights, size_ranges=size_ranges,
        colors=colors, color_noise=cfg.color_noise, shift_hue=cfg.shift_hue,
        shift_brightness=cfg.shift_brightness, shift_noise=cfg.shift_noise,
    )


def expected_class_fraction(spec: SceneSpec) -> np.ndarray:
    """Closed-form expected pixel fraction per class.

    Cells are disjoint, each is filled with probability ``fill_prob`` by one
    class c with probability ``class_weights[c]`` carrying a rectangle whose
    integer sides are uniform on ``size_ranges[c]``.
    """
    cells = (spec.height // spec.cell) * (spec.width // spec.cell)
    total = spec.height * spec.width
    frac = np.zeros(spec.num_classes)
    for c in range(spec.num_classes):
        lo, hi = spec.size_ranges[c]
        mean_side = (lo + hi) / 2.0
        frac[c] = cells * spec.fill_prob * spec.class_weights[c] * mean_side ** 2 / total
    frac[0] = 1.0 - frac[1:].sum()
    return frac


def generate_scene(spec: SceneSpec, domain: str, rng: np.random.Generator):
    """One procedurally generated scene: image (3, H, W) and exact labels."""
    if domain not in ("source", "target"):
        raise ValueError(f"domain must be 'source' or 'target', got {domain!r}")
    labels = np.zeros((spec.height, spec.width), dtype=np.int64)
    classes = np.arange(spec.num_classes)
    for top in range(0, spec.height - spec.cell + 1, spec.cell):
        for left in range(0, spec.width - spec.cell + 1, spec.cell):
            if rng.random() >= spec.fill_prob:
                continue
            c = int(rng.choice(classes, p=spec.class_weights))
            lo, hi = spec.size_ranges[c]
            rh = int(rng.integers(lo, hi + 1))
            rw = int(rng.integers(lo, hi + 1))
            dy = int(rng.integers(0, spec.cell - rh + 1))
            dx = int(rng.integers(0, spec.cell - rw + 1))
            labels[top + dy:top + dy + rh, left + dx:left + dx + rw] = c

    image = spec.colors[labels].transpose(2, 0, 1).astype(np.float64)
    image = image + rng.normal(0.0, spec.color_noise, size=image.shape)
    if domain == "target":
        image = image * spec.shift_brightness
        image = image + (spec.shift_hue * _HUE_DIRECTION)[:, None, None]
        if spec.shift_noise > 0.0:
            image = image + rng.normal(0.0, spec.shift_noise, size=image.shape)
    return np.clip(image, 0.0, 1.0), labels


def generate_domain(spec: SceneSpec, domain: str, n: int, seed) -> list:
    """Deterministic list of ``n`` scenes for one domain."""
    rng = np.random.default_rng(seed)
    return [generate_scene(spec, domain, rng) for _ in range(n)]


def pixel_features(image: np.ndarray) -> np.ndarray:
    """Per-pixel feature rows (N, 9): color plus local 3x3 mean and variance."""
    image = np.asarray(image, dtype=np.float64)
    mean = uniform_filter(image, size=(1, 3, 3), mode="nearest")
    mean_sq = uniform_filter(image * image, size=(1, 3, 3), mode="nearest")
    var = np.maximum(mean_sq - mean * mean, 0.0)
    feats = np.concatenate([image, mean, var], axis=0)
    return feats.reshape(feats.shape[0], -1).T.copy()


def perturb(image: np.ndarray, rng: np.random.Generator, noise: float = 0.04,
            brightness: float = 0.06, contrast: float = 0.08,
            flip_prob: float = 0.5):
    """Photometric jitter plus optional horizontal flip.

    Returns the perturbed image and whether it was flipped; a flipped
    prediction is realigned with :func:`flip_permutation`.  Zero magnitudes
    and ``flip_prob=0`` reproduce the input exactly.
    """
    out = np.asarray(image, dtype=np.float64)
    scale = 1.0 + rng.uniform(-contrast, contrast) if contrast > 0.0 else 1.0
    offset = rng.uniform(-brightness, brightness) if brightness > 0.0 else 0.0
    out = (out - 0.5) * scale + 0.5 + offset
    if noise > 0.0:
        out = out + rng.normal(0.0, noise, size=out.shape)
    flipped = bool(rng.random() < flip_prob) if flip_prob > 0.0 else False
    if flipped:
        out = out[:, :, ::-1]
    return np.clip(out, 0.0, 1.0), flipped


def flip_permutation(height: int, width: int) -> np.ndarray:
    """Flat pixel indices that horizontally flip a row-major (H, W) plane."""
    return np.arange(height * width).reshape(height, width)[:, ::-1].ravel()
