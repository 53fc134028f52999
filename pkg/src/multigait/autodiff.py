"""A small reverse-mode autodiff engine over float64 numpy arrays.

Every vector-Jacobian product is itself written with :class:`Tensor` ops, so
calling :func:`grad` with ``create_graph=True`` records the backward pass and
the result can be differentiated again.  The discriminator's gradient penalty
relies on this.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


@contextlib.contextmanager
def enable_grad(flag: bool = True):
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = flag
    try:
        yield
    finally:
        _grad_enabled = prev


def is_grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp", "name", "__weakref__")

    __array_ufunc__ = None  # make ndarray <op> Tensor defer to Tensor

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._vjp: Callable | None = None
        self.name = name

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._vjp is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __pow__(self, exponent: float):
        return power(self, exponent)

    def __getitem__(self, idx):
        return getitem(self, idx)

    @property
    def T(self):
        return transpose(self)

    def sum(self, axis=None, keepdims: bool = False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into ``leaf.grad`` for every reachable leaf."""
        if self.size != 1:
            raise ValueError(f"backward() needs a scalar, got shape {self.shape}")
        leaves = [n for n in _topo_order(self) if n.is_leaf and n.requires_grad]
        grads = grad(self, leaves, allow_unused=True)
        for leaf, g in zip(leaves, grads):
            if leaf.grad is None:
                leaf.grad = np.zeros_like(leaf.data)
            leaf.grad = leaf.grad + g.data


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: Sequence[Tensor], vjp: Callable) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def _topo_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def grad(
    output: Tensor,
    inputs: Sequence[Tensor],
    grad_output: Tensor | np.ndarray | None = None,
    create_graph: bool = False,
    allow_unused: bool = False,
) -> list[Tensor]:
    """Gradients of ``output`` with respect to each of ``inputs``.

    Without ``grad_output`` the output must be a scalar.  With ``create_graph``
    the returned tensors are part of a differentiable graph.
    """
    if grad_output is None:
        if output.size != 1:
            raise ValueError(f"grad() of a non-scalar output {output.shape} needs grad_output")
        seed = Tensor(np.ones_like(output.data))
    else:
        seed = as_tensor(grad_output)
    if not output.requires_grad:
        if allow_unused:
            return [Tensor(np.zeros_like(x.data)) for x in inputs]
        raise ValueError("output does not depend on any tensor that requires grad")

    order = _topo_order(output)
    wanted = {id(x) for x in inputs}
    grads: dict[int, Tensor] = {id(output): seed}
    found: dict[int, Tensor] = {}
    with enable_grad(create_graph):
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if id(node) in wanted:
                found[id(node)] = g
            if node._vjp is None:
                continue
            parent_grads = node._vjp(g)
            for p, pg in zip(node._parents, parent_grads):
                if pg is None or not p.requires_grad:
                    continue
                prev = grads.get(id(p))
                grads[id(p)] = pg if prev is None else prev + pg

    result = []
    for x in inputs:
        g = found.get(id(x))
        if g is None:
            if not allow_unused:
                raise ValueError("an input was not part of the graph (detached input)")
            g = Tensor(np.zeros_like(x.data))
        elif not create_graph:
            g = Tensor(g.data)
        result.append(g)
    return result


# broadcasting helpers ------------------------------------------------------

def _sum_to_shape(x: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if x.shape == shape:
        return x
    lead = x.ndim - len(shape)
    axes = tuple(range(lead)) + tuple(
        i + lead for i, s in enumerate(shape) if s == 1 and x.shape[i + lead] != 1
    )
    out = x.sum(axis=axes, keepdims=True)
    return out.reshape(shape)


def sum_to(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    if x.shape == tuple(shape):
        return x
    src = x.shape
    return _make(_sum_to_shape(x.data, tuple(shape)), (x,), lambda g: (broadcast_to(g, src),))


def broadcast_to(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    if x.shape == tuple(shape):
        return x
    src = x.shape
    return _make(np.broadcast_to(x.data, shape).copy(), (x,), lambda g: (sum_to(g, src),))


# elementwise ----------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data + b.data, (a, b), lambda g: (sum_to(g, a.shape), sum_to(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data - b.data, (a, b), lambda g: (sum_to(g, a.shape), sum_to(-g, b.shape)))


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _make(-a.data, (a,), lambda g: (-g,))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        a.data * b.data,
        (a, b),
        lambda g: (
            sum_to(g * b, a.shape) if a.requires_grad else None,
            sum_to(g * a, b.shape) if b.requires_grad else None,
        ),
    )


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        a.data / b.data,
        (a, b),
        lambda g: (
            sum_to(g / b, a.shape) if a.requires_grad else None,
            sum_to(-g * a / (b * b), b.shape) if b.requires_grad else None,
        ),
    )


def power(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    if exponent == 2:
        return square(a)
    return _make(a.data**exponent, (a,), lambda g: (g * exponent * power(a, exponent - 1),))


def square(a) -> Tensor:
    a = as_tensor(a)
    return _make(a.data * a.data, (a,), lambda g: (g * a * 2.0,))


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    out = _make(np.sqrt(a.data), (a,), lambda g: (g * 0.5 / out,))
    return out


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = _make(np.exp(a.data), (a,), lambda g: (g * out,))
    return out


def log(a) -> Tensor:
    a = as_tensor(a)
    return _make(np.log(a.data), (a,), lambda g: (g / a,))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = _make(np.tanh(a.data), (a,), lambda g: (g * (1.0 - out * out),))
    return out


def elu(a) -> Tensor:
    # d/dx elu = 1 for x > 0, exp(x) = elu(x) + 1 otherwise, i.e. 1 + min(elu(x), 0)
    a = as_tensor(a)
    x = a.data
    data = np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))
    out = _make(data, (a,), lambda g: (g * (1.0 + clamp(out, hi=0.0)),))
    return out


def clamp(a, lo: float | None = None, hi: float | None = None) -> Tensor:
    a = as_tensor(a)
    data = np.clip(a.data, lo, hi)
    mask = np.ones_like(a.data)
    if lo is not None:
        mask = mask * (a.data >= lo)
    if hi is not None:
        mask = mask * (a.data <= hi)
    return _make(data, (a,), lambda g: (g * mask,))


def minimum(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    pick_a = (a.data <= b.data).astype(np.float64)
    return _make(
        np.minimum(a.data, b.data),
        (a, b),
        lambda g: (sum_to(g * pick_a, a.shape), sum_to(g * (1.0 - pick_a), b.shape)),
    )


def maximum(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    pick_a = (a.data >= b.data).astype(np.float64)
    return _make(
        np.maximum(a.data, b.data),
        (a, b),
        lambda g: (sum_to(g * pick_a, a.shape), sum_to(g * (1.0 - pick_a), b.shape)),
    )


def where(cond, a, b) -> Tensor:
    cond = np.asarray(cond, dtype=bool)
    a, b = as_tensor(a), as_tensor(b)
    m = cond.astype(np.float64)
    return _make(
        np.where(cond, a.data, b.data),
        (a, b),
        lambda g: (sum_to(g * m, a.shape), sum_to(g * (1.0 - m), b.shape)),
    )


# reductions and shape ops ---------------------------------------------------

def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    src = a.shape

    def vjp(g):
        if axis is not None and not keepdims:
            axes = (axis,) if isinstance(axis, int) else tuple(axis)
            axes = tuple(ax % len(src) for ax in axes)
            shape = [1 if i in axes else s for i, s in enumerate(src)]
            g = reshape(g, tuple(shape))
        elif axis is None and not keepdims:
            g = reshape(g, (1,) * len(src))
        return (broadcast_to(g, src),)

    return _make(np.asarray(a.data.sum(axis=axis, keepdims=keepdims)), (a,), vjp)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        n = a.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        n = int(np.prod([a.shape[ax] for ax in axes]))
    return tsum(a, axis, keepdims) * (1.0 / n)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    src = a.shape
    return _make(a.data.reshape(shape), (a,), lambda g: (reshape(g, src),))


def transpose(a) -> Tensor:
    a = as_tensor(a)
    return _make(a.data.T, (a,), lambda g: (transpose(g),))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("matmul supports 2-D operands only")
    return _make(
        a.data @ b.data,
        (a, b),
        lambda g: (
            matmul(g, transpose(b)) if a.requires_grad else None,
            matmul(transpose(a), g) if b.requires_grad else None,
        ),
    )


def getitem(a, idx) -> Tensor:
    a = as_tensor(a)
    src = a.shape
    return _make(a.data[idx], (a,), lambda g: (scatter(g, idx, src),))


def scatter(g, idx, shape) -> Tensor:
    """Place ``g`` at ``idx`` inside zeros of ``shape`` (adjoint of indexing)."""
    g = as_tensor(g)
    data = np.zeros(shape)
    if _is_basic_index(idx):
        data[idx] += g.data
    else:
        np.add.at(data, idx, g.data)
    return _make(data, (g,), lambda gg: (getitem(gg, idx),))


def _is_basic_index(idx) -> bool:
    items = idx if isinstance(idx, tuple) else (idx,)
    return all(isinstance(i, (int, slice, type(None), type(Ellipsis))) for i in items)


def concat(tensors: Iterable, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    ax = axis % tensors[0].ndim
    sizes = [t.shape[ax] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def vjp(g):
        out = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            sl = [slice(None)] * g.ndim
            sl[ax] = slice(int(lo), int(hi))
            out.append(getitem(g, tuple(sl)))
        return tuple(out)

    return _make(np.concatenate([t.data for t in tensors], axis=ax), tensors, vjp)


def norm(a, axis=-1, eps: float = 0.0) -> Tensor:
    """Euclidean norm along ``axis``; ``eps`` is added under the square root."""
    sq = tsum(square(a), axis=axis)
    if eps:
        sq = sq + eps
    return sqrt(sq)
