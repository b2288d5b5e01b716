#!/usr/bin/env python3
"""Tour of the autodiff core: building graphs, backward, stop-gradient.

Everything downstream (losses, training, gradient curves) rests on this
engine, so this script also cross-checks one gradient against central
finite differences.
"""

import numpy as np

from segadapt import Tensor

# --- elementwise graph with a scalar reduction ------------------------------

x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
y = Tensor([0.5, 0.25, 0.125], requires_grad=True)
loss = ((x * y + 1.0) ** 2).sum()
loss.backward()
print("loss           :", loss.item())
print("d loss / d x   :", x.grad)
print("d loss / d y   :", y.grad)

# --- shared subexpressions accumulate ---------------------------------------

a = Tensor([3.0], requires_grad=True)
(a + a).sum().backward()
print("\nd(a + a)/da    :", a.grad, "(two paths, one visit each)")

# --- stop-gradient -----------------------------------------------------------

p = Tensor([0.7, 0.3], requires_grad=True)
q = Tensor([0.2, 0.8], requires_grad=True)
(p.detach() * q).sum().backward()
print("\nafter s = sum(detach(p) * q):")
print("  p.grad =", p.grad, " (blocked by detach)")
print("  q.grad =", q.grad, " (receives p's values)")

# --- softmax + masked mean, checked against finite differences ---------------

rng = np.random.default_rng(0)
z0 = rng.normal(size=(4, 6))
mask = rng.random(6) < 0.5


def objective(values):
    z = Tensor(values, requires_grad=True)
    probs = z.softmax(axis=0)
    entropy = -(probs * probs.clamp(1e-8, 1.0).log()).sum(axis=0)
    return z, entropy.masked_mean(mask)


leaf, out = objective(z0)
out.backward()

eps = 1e-5
fd = np.zeros_like(z0)
for i in range(z0.size):
    hi, lo = z0.copy(), z0.copy()
    hi.flat[i] += eps
    lo.flat[i] -= eps
    fd.flat[i] = (objective(hi)[1].item() - objective(lo)[1].item()) / (2 * eps)

err = np.linalg.norm(leaf.grad - fd) / np.linalg.norm(fd)
print(f"\nmasked-entropy gradient vs central differences: rel err = {err:.2e}")
