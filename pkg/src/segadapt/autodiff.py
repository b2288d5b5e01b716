"""Minimal reverse-mode automatic differentiation over dense float64 arrays.

The engine is deliberately small: dense row-major storage, double precision,
elementwise arithmetic with scalar broadcasting, a handful of nonlinearities,
2-D matrix ops, softmax, masked reductions, and stop-gradient.  That is enough
to express every objective in this package and to train a small per-pixel
classifier, while keeping the backward pass easy to audit.

Graphs are built implicitly: each operation records its parents and one
vector-Jacobian-product closure per parent.  ``Tensor.backward`` walks the
graph once in reverse topological order, so shared subexpressions accumulate
gradient contributions correctly.  A backward pass owns its graph; independent
graphs may be evaluated concurrently, a single graph is single-threaded.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "ShapeMismatchError",
    "tensor",
    "concat",
    "bias_add",
    "take_cols",
]

_SCALARS = (int, float, np.integer, np.floating)


class ShapeMismatchError(ValueError):
    """Operands have incompatible shapes for the requested operation."""


def _as_array(values) -> np.ndarray:
    return np.asarray(values, dtype=np.float64)


class Tensor:
    """Dense float64 array with optional gradient tracking.

    ``data`` is treated as immutable once the tensor participates in a graph;
    only ``grad`` is written by backward passes (and ``data`` by an optimizer,
    between graph evaluations).  Gradients accumulate across repeated backward
    calls until ``zero_grad`` resets them.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjps")

    def __init__(self, values, requires_grad: bool = False):
        self.data = _as_array(values)
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if self.requires_grad else None
        self._parents: tuple[Tensor, ...] = ()
        self._vjps: tuple = ()

    # ---------------------------------------------------------------- basics

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() requires a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def detach(self) -> "Tensor":
        """Same values, no gradient flow to this tensor's ancestors."""
        return Tensor(self.data)

    # -------------------------------------------------------------- backward

    def backward(self) -> None:
        """Populate ``grad`` of every reachable requires_grad tensor.

        Only scalar roots are supported.  Each graph node is visited exactly
        once; flows through shared subexpressions are summed before being
        pushed further down, so DAGs are handled correctly.
        """
        if self.data.size != 1:
            raise ValueError(f"backward() requires a scalar loss, got shape {self.shape}")
        if not self.requires_grad:
            return

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))

        flows: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = flows.pop(id(node), None)
            if g is None:
                continue
            node.grad = g if node.grad is None else node.grad + g
            for parent, vjp in zip(node._parents, node._vjps):
                if not parent.requires_grad:
                    continue
                contribution = vjp(g)
                key = id(parent)
                if key in flows:
                    flows[key] = flows[key] + contribution
                else:
                    flows[key] = contribution

    # ----------------------------------------------------------- elementwise

    def __add__(self, other):
        a, b = self, _ensure_tensor(other)
        _check_elementwise(a, b)
        return _make(a.data + b.data, (a, b),
                     (lambda g: _fit(g, a.shape), lambda g: _fit(g, b.shape)))

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self, _ensure_tensor(other)
        _check_elementwise(a, b)
        return _make(a.data - b.data, (a, b),
                     (lambda g: _fit(g, a.shape), lambda g: _fit(-g, b.shape)))

    def __rsub__(self, other):
        return _ensure_tensor(other).__sub__(self)

    def __mul__(self, other):
        a, b = self, _ensure_tensor(other)
        _check_elementwise(a, b)
        return _make(a.data * b.data, (a, b),
                     (lambda g: _fit(g * b.data, a.shape), lambda g: _fit(g * a.data, b.shape)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        a, b = self, _ensure_tensor(other)
        _check_elementwise(a, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = a.data / b.data
            return _make(out, (a, b),
                         (lambda g: _fit(g / b.data, a.shape),
                          lambda g: _fit(-g * a.data / (b.data * b.data), b.shape)))

    def __rtruediv__(self, other):
        return _ensure_tensor(other).__truediv__(self)

    def __neg__(self):
        return _make(-self.data, (self,), (lambda g: -g,))

    def __pow__(self, exponent):
        if not isinstance(exponent, _SCALARS):
            raise TypeError("only scalar exponents are supported")
        gamma = float(exponent)
        if gamma == 0.0:
            # x**0 == 1 with zero derivative everywhere.
            return Tensor(np.ones_like(self.data))
        a = self
        with np.errstate(divide="ignore", invalid="ignore"):
            out = a.data ** gamma

            def vjp(g):
                with np.errstate(divide="ignore", invalid="ignore"):
                    return g * gamma * a.data ** (gamma - 1.0)

            return _make(out, (a,), (vjp,))

    # --------------------------------------------------------- nonlinearity

    def log(self):
        a = self
        with np.errstate(divide="ignore", invalid="ignore"):
            return _make(np.log(a.data), (a,), (lambda g: g / a.data,))

    def exp(self):
        a = self
        out = np.exp(a.data)
        return _make(out, (a,), (lambda g: g * out,))

    def tanh(self):
        a = self
        out = np.tanh(a.data)
        return _make(out, (a,), (lambda g: g * (1.0 - out * out),))

    def clamp(self, lo: float, hi: float):
        a = self
        out = np.clip(a.data, lo, hi)
        inside = (a.data > lo) & (a.data < hi)
        return _make(out, (a,), (lambda g: g * inside,))

    # ---------------------------------------------------------- linear maps

    def __matmul__(self, other):
        a, b = self, _ensure_tensor(other)
        if a.data.ndim != 2 or b.data.ndim != 2:
            raise ShapeMismatchError(
                f"matmul requires 2-D operands, got {a.shape} and {b.shape}")
        if a.shape[1] != b.shape[0]:
            raise ShapeMismatchError(
                f"matmul inner extents disagree: {a.shape} vs {b.shape}")
        return _make(a.data @ b.data, (a, b),
                     (lambda g: g @ b.data.T, lambda g: a.data.T @ g))

    def transpose(self):
        if self.data.ndim != 2:
            raise ShapeMismatchError(f"transpose requires a 2-D tensor, got {self.shape}")
        return _make(self.data.T.copy(), (self,), (lambda g: g.T,))

    # ------------------------------------------------------------ reductions

    def sum(self, axis: int | None = None):
        a = self
        if axis is None:
            return _make(np.array(a.data.sum()), (a,),
                         (lambda g: np.broadcast_to(g, a.shape).copy(),))
        out = a.data.sum(axis=axis)
        return _make(out, (a,),
                     (lambda g: np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),))

    def masked_mean(self, mask):
        """Mean over entries selected by a boolean mask of the same shape.

        An empty mask yields a constant 0 with zero gradient, so a step in
        which no pixel clears its threshold contributes nothing.
        """
        a = self
        sel = np.asarray(mask, dtype=bool)
        if sel.shape != a.shape:
            raise ShapeMismatchError(
                f"mask shape {sel.shape} does not match tensor shape {a.shape}")
        count = int(sel.sum())
        if count == 0:
            return Tensor(0.0)
        value = a.data[sel].mean()
        return _make(np.array(value), (a,), (lambda g: g * sel / count,))

    def softmax(self, axis: int):
        a = self
        shifted = a.data - a.data.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        out = e / e.sum(axis=axis, keepdims=True)

        def vjp(g):
            return out * (g - (g * out).sum(axis=axis, keepdims=True))

        return _make(out, (a,), (vjp,))


# ----------------------------------------------------------------- free ops


def tensor(values, requires_grad: bool = False) -> Tensor:
    return Tensor(values, requires_grad=requires_grad)


def concat(tensors, axis: int = 0) -> Tensor:
    """Concatenate tensors along an axis; backward slices the gradient."""
    parts = [_ensure_tensor(t) for t in tensors]
    if not parts:
        raise ValueError("concat requires at least one tensor")
    out = np.concatenate([p.data for p in parts], axis=axis)
    offsets = np.cumsum([0] + [p.data.shape[axis] for p in parts])

    def make_vjp(i):
        lo, hi = offsets[i], offsets[i + 1]
        index = [slice(None)] * out.ndim
        index[axis] = slice(lo, hi)
        index = tuple(index)
        return lambda g: g[index]

    return _make(out, tuple(parts), tuple(make_vjp(i) for i in range(len(parts))))


def bias_add(x: Tensor, b: Tensor) -> Tensor:
    """Add a length-N bias row vector to every row of an M-by-N tensor."""
    x, b = _ensure_tensor(x), _ensure_tensor(b)
    if x.data.ndim != 2 or b.data.ndim != 1 or x.shape[1] != b.shape[0]:
        raise ShapeMismatchError(
            f"bias_add expects (M, N) and (N,), got {x.shape} and {b.shape}")
    return _make(x.data + b.data[None, :], (x, b),
                 (lambda g: g, lambda g: g.sum(axis=0)))


def take_cols(x: Tensor, index) -> Tensor:
    """Gather columns of a 2-D tensor; backward scatter-adds them back."""
    x = _ensure_tensor(x)
    idx = np.asarray(index, dtype=np.intp)
    if x.data.ndim != 2:
        raise ShapeMismatchError(f"take_cols requires a 2-D tensor, got {x.shape}")
    out = x.data[:, idx]

    def vjp(g):
        acc = np.zeros_like(x.data)
        np.add.at(acc, (slice(None), idx), g)
        return acc

    return _make(out, (x,), (vjp,))


# ------------------------------------------------------------------ helpers


def _ensure_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    if isinstance(x, _SCALARS) or isinstance(x, np.ndarray):
        return Tensor(x)
    raise TypeError(f"cannot use {type(x).__name__} as a tensor operand")


def _check_elementwise(a: Tensor, b: Tensor) -> None:
    if a.data.shape == b.data.shape:
        return
    if a.data.size == 1 or b.data.size == 1:
        return
    raise ShapeMismatchError(
        f"elementwise operands have incompatible shapes {a.data.shape} and {b.data.shape}")


def _fit(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a gradient onto a (possibly scalar-broadcast) operand shape."""
    g = np.asarray(g)
    if g.shape == shape:
        return g
    return np.asarray(g.sum()).reshape(shape)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], vjps: tuple) -> Tensor:
    out = Tensor(data)
    tracked = tuple(p.requires_grad for p in parents)
    if any(tracked):
        out.requires_grad = True
        out.grad = np.zeros_like(out.data)
        out._parents = parents
        out._vjps = vjps
    return out
