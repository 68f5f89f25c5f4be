"""Minimal reverse-mode automatic differentiation over float64 numpy arrays.

Define-by-run tape: every op returns a Tensor holding its value, its
parents and a closure that maps the output cotangent to per-parent
cotangents. `backward` walks the tape in reverse topological order and
accumulates gradients into tensors created with requires_grad=True.

Scatter/gather use np.add.at, which applies updates sequentially, so all
reductions happen in fixed index order and repeated runs are bitwise
identical.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "parents", "vjp")

    def __init__(self, data, requires_grad=False, parents=(), vjp=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self.parents = parents
        self.vjp = vjp

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"


def _toposort(root: Tensor) -> list[Tensor]:
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
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(root: Tensor, seed: np.ndarray) -> None:
    """Accumulate d(root . seed)/d(leaf) into each requiring leaf's .grad."""
    seed = np.asarray(seed, dtype=np.float64)
    if seed.shape != root.data.shape:
        raise ShapeMismatch(f"seed shape {seed.shape} != output shape {root.data.shape}")
    grads: dict[int, np.ndarray] = {id(root): seed}
    for node in reversed(_toposort(root)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.requires_grad:
            node.grad = g if node.grad is None else node.grad + g
        if node.vjp is None:
            continue
        for parent, pg in zip(node.parents, node.vjp(g)):
            if pg is None:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg


# --- primitives ---------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    out = a.data @ b.data
    return Tensor(out, parents=(a, b), vjp=lambda g: (g @ b.data.T, a.data.T @ g))


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeMismatch(f"add: {a.data.shape} vs {b.data.shape}")
    return Tensor(a.data + b.data, parents=(a, b), vjp=lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeMismatch(f"sub: {a.data.shape} vs {b.data.shape}")
    return Tensor(a.data - b.data, parents=(a, b), vjp=lambda g: (g, -g))


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """x (N, d) + row vector b (d,)."""
    if x.data.shape[1] != b.data.shape[0]:
        raise ShapeMismatch(f"add_bias: {x.data.shape} vs {b.data.shape}")
    return Tensor(x.data + b.data, parents=(x, b), vjp=lambda g: (g, g.sum(axis=0)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeMismatch(f"mul: {a.data.shape} vs {b.data.shape}")
    return Tensor(a.data * b.data, parents=(a, b), vjp=lambda g: (g * b.data, g * a.data))


def scale(x: Tensor, c: float) -> Tensor:
    return Tensor(x.data * c, parents=(x,), vjp=lambda g: (g * c,))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return Tensor(x.data * mask, parents=(x,), vjp=lambda g: (g * mask,))


def sigmoid(x: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-x.data))
    return Tensor(s, parents=(x,), vjp=lambda g: (g * s * (1.0 - s),))


def exp(x: Tensor) -> Tensor:
    e = np.exp(x.data)
    return Tensor(e, parents=(x,), vjp=lambda g: (g * e,))


def divide(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeMismatch(f"divide: {a.data.shape} vs {b.data.shape}")
    out = a.data / b.data
    return Tensor(
        out, parents=(a, b), vjp=lambda g: (g / b.data, -g * a.data / (b.data * b.data))
    )


def rowsum(x: Tensor) -> Tensor:
    """(N, d) -> (N,) sum over columns."""
    d = x.data.shape[1]
    return Tensor(
        x.data.sum(axis=1), parents=(x,), vjp=lambda g: (np.repeat(g[:, None], d, axis=1),)
    )


def mul_col(v: Tensor, m: Tensor) -> Tensor:
    """v (E,) broadcast-multiplied over the rows of m (E, d)."""
    if v.data.shape[0] != m.data.shape[0]:
        raise ShapeMismatch(f"mul_col: {v.data.shape} vs {m.data.shape}")
    out = v.data[:, None] * m.data
    return Tensor(
        out,
        parents=(v, m),
        vjp=lambda g: ((g * m.data).sum(axis=1), v.data[:, None] * g),
    )


def concat_cols(tensors: list[Tensor]) -> Tensor:
    datas = [t.data for t in tensors]
    offsets = np.cumsum([0] + [d.shape[1] for d in datas])

    def vjp(g):
        return tuple(g[:, offsets[i]:offsets[i + 1]] for i in range(len(datas)))

    return Tensor(np.concatenate(datas, axis=1), parents=tuple(tensors), vjp=vjp)


def gather_rows(x: Tensor, index: np.ndarray, plan=None) -> Tensor:
    """out[e] = x[index[e]]; the adjoint scatter-adds back into x.

    A SegmentPlan over `index` makes the adjoint a presorted reduceat.
    """
    n = x.data.shape[0]

    def vjp(g):
        if plan is not None:
            return (plan.segment_sum(g),)
        gx = np.zeros((n,) + g.shape[1:], dtype=np.float64)
        np.add.at(gx, index, g)
        return (gx,)

    return Tensor(x.data[index], parents=(x,), vjp=vjp)


def scatter_sum(x: Tensor, index: np.ndarray, n: int, plan=None) -> Tensor:
    """out[i] = sum of x rows with index == i; rows absent from index stay 0."""
    if plan is not None:
        out = plan.segment_sum(x.data)
    else:
        out = np.zeros((n,) + x.data.shape[1:], dtype=np.float64)
        np.add.at(out, index, x.data)
    return Tensor(out, parents=(x,), vjp=lambda g: (g[index],))


def spmm(matrix, x: Tensor) -> Tensor:
    """Constant sparse matrix (CsrMatrix) times dense tensor."""
    out = matrix.matvec(x.data)
    return Tensor(out, parents=(x,), vjp=lambda g: (matrix.transpose().matvec(g),))


def constant(data) -> Tensor:
    return Tensor(data)


def parameter(data) -> Tensor:
    return Tensor(data, requires_grad=True)
