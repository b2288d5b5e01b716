"""Binary gradient-landscape analysis of the entropy-family losses.

For a two-class pixel with learnable distribution ``(p, 1-p)`` and, where
applicable, a fixed estimate ``(p_hat, 1-p_hat)``, this module evaluates each
loss on a grid over ``p`` and differentiates it through the autodiff engine.
It exposes where each loss drives predictions (boundary versus interior
minima) and how gradient magnitude is distributed between easy pixels
(``p`` near 1) and hard ones (``p`` near 0.5).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from segadapt.autodiff import Tensor, concat
from segadapt.losses import (
    maximum_square_loss,
    shannon_entropy_loss,
    unsupervised_focal_loss,
)

__all__ = [
    "KINDS",
    "REFERENCE_FOCAL_MIN",
    "CurveSample",
    "Curve",
    "curve",
    "find_global_min",
    "emit_csv",
]

KINDS = ("shannon", "maxsquare", "focal")

# reported mid-range location of the focal minimum, printed for comparison
# next to the computed value, never asserted
REFERENCE_FOCAL_MIN = 0.67

GRID_POINTS = 1999
GRID_LO = 0.0005
GRID_HI = 0.9995

_FULL_MASK = np.array([True])


@dataclass
class CurveSample:
    p: float
    loss: float
    grad: float


@dataclass
class Curve:
    kind: str
    p_hat: float
    gamma: float
    samples: list


def _evaluate(kind: str, p_value: float, p_hat: float, gamma: float):
    """Loss and d(loss)/dp at one grid point, via the real loss functions."""
    leaf = Tensor(np.array([[p_value]]), requires_grad=True)
    dist = concat([leaf, 1.0 - leaf], axis=0)  # learnable (p, 1-p), shape (2, 1)
    if kind == "shannon":
        loss = shannon_entropy_loss(dist, _FULL_MASK)
    elif kind == "maxsquare":
        loss = maximum_square_loss(dist, _FULL_MASK)
    elif kind == "focal":
        estimate = Tensor(np.array([[p_hat], [1.0 - p_hat]]))
        loss = unsupervised_focal_loss(estimate, dist, _FULL_MASK, gamma)
    else:
        raise ValueError(f"unknown loss kind: {kind!r}")
    loss.backward()
    return loss.item(), float(leaf.grad[0, 0])


def curve(kind: str, p_hat: float = 0.6, gamma: float = 2.0,
          grid: int = GRID_POINTS, lo: float = GRID_LO, hi: float = GRID_HI) -> Curve:
    """Sample one loss over a grid of learnable probabilities."""
    if kind not in KINDS:
        raise ValueError(f"unknown loss kind: {kind!r} (choose from {KINDS})")
    if grid < 3:
        raise ValueError("grid needs at least 3 points")
    if not 0.0 < p_hat < 1.0:
        raise ValueError("p_hat must lie strictly inside (0, 1)")
    samples = []
    for p in np.linspace(lo, hi, grid):
        loss, grad = _evaluate(kind, float(p), p_hat, gamma)
        samples.append(CurveSample(p=float(p), loss=loss, grad=grad))
    return Curve(kind=kind, p_hat=p_hat, gamma=gamma, samples=samples)


def find_global_min(curve_obj: Curve, tol: float = 1e-4) -> float:
    """Grid argmin refined by golden-section search between its neighbors."""
    if not curve_obj.samples:
        raise ValueError("curve is empty")
    ps = [s.p for s in curve_obj.samples]
    losses = [s.loss for s in curve_obj.samples]
    i = int(np.argmin(losses))
    lo = ps[max(i - 1, 0)]
    hi = ps[min(i + 1, len(ps) - 1)]

    def value(p):
        return _evaluate(curve_obj.kind, p, curve_obj.p_hat, curve_obj.gamma)[0]

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = value(c), value(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = value(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = value(d)
    return float((a + b) / 2.0)


def emit_csv(curves, path) -> None:
    """Write curves as ``loss_kind,p,loss,grad`` rows, 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("loss_kind,p,loss,grad\n")
        for curve_obj in curves:
            for s in curve_obj.samples:
                fh.write(f"{curve_obj.kind},{s.p:.17g},{s.loss:.17g},{s.grad:.17g}\n")
