"""The four graph layer types, expressed over the autodiff primitives.

Every layer is a pure function of (node features, adjacency, weights) and
permutation-equivariant. Hidden layers use ReLU where the layer form calls
for an activation; the residual layer types (gated, attention) define
their own nonlinearity and are used as written.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import InsufficientNodes, ShapeMismatch
from . import autodiff as ad
from .autodiff import Tensor
from .sparse import CsrAdjacency, CsrMatrix


def _check_dims(name: str, h: Tensor, *mats: Tensor):
    d = h.data.shape[1]
    for m in mats:
        if m.data.shape[0] != d:
            raise ShapeMismatch(f"{name}: features have dim {d}, weight is {m.data.shape}")


def identity(x: Tensor) -> Tensor:
    return x


def sage_layer(
    h: Tensor,
    adj: CsrAdjacency,
    w_self: Tensor,
    w_neigh: Tensor,
    bias: Tensor,
    act=ad.relu,
) -> Tensor:
    """act(h W_self + mean_neighbors(h) W_neigh + b).

    Full neighborhoods (no sampling); an empty neighborhood contributes the
    zero vector.
    """
    _check_dims("sage_layer", h, w_self, w_neigh)
    own = ad.matmul(h, w_self)
    agg = ad.matmul(ad.spmm(adj.mean_matrix(), h), w_neigh)
    return act(ad.add_bias(ad.add(own, agg), bias))


def cheb_layer(
    h: Tensor,
    laplacian: CsrMatrix,
    thetas: list[Tensor],
    act=ad.relu,
) -> Tensor:
    """sum_k T_k(L~) h Theta_k with T_0 = I, T_1 = L~, T_k = 2 L~ T_{k-1} - T_{k-2}."""
    _check_dims("cheb_layer", h, *thetas)
    t_prev = h
    out = ad.matmul(t_prev, thetas[0])
    if len(thetas) > 1:
        t_curr = ad.spmm(laplacian, h)
        out = ad.add(out, ad.matmul(t_curr, thetas[1]))
        for theta in thetas[2:]:
            t_next = ad.sub(ad.scale(ad.spmm(laplacian, t_curr), 2.0), t_prev)
            out = ad.add(out, ad.matmul(t_next, theta))
            t_prev, t_curr = t_curr, t_next
    return act(out)


def resgated_layer(
    h: Tensor,
    adj: CsrAdjacency,
    w1: Tensor,
    w2: Tensor,
    w3: Tensor,
    w4: Tensor,
    act=ad.relu,
) -> Tensor:
    """h + act(h W1 + sum_u eta(v,u) * (h_u W2)), eta = sigmoid(h_v W3 + h_u W4).

    Gates are elementwise per edge; the residual requires square weights.
    """
    d = h.data.shape[1]
    for name, w in (("W1", w1), ("W2", w2), ("W3", w3), ("W4", w4)):
        if w.data.shape != (d, d):
            raise ShapeMismatch(f"resgated_layer: {name} is {w.data.shape}, expected ({d}, {d})")
    dst, src = adj.edge_lists()
    dst_plan, src_plan = adj.edge_plans()
    gate_dst = ad.gather_rows(ad.matmul(h, w3), dst, plan=dst_plan)
    gate_src = ad.gather_rows(ad.matmul(h, w4), src, plan=src_plan)
    eta = ad.sigmoid(ad.add(gate_dst, gate_src))
    messages = ad.mul(eta, ad.gather_rows(ad.matmul(h, w2), src, plan=src_plan))
    agg = ad.scatter_sum(messages, dst, adj.n, plan=dst_plan)
    return ad.add(h, act(ad.add(ad.matmul(h, w1), agg)))


def _segment_softmax(logits: Tensor, segment_ids: np.ndarray, n_segments: int,
                     plan=None) -> Tensor:
    """Softmax over edge logits grouped by destination node.

    The per-segment max is treated as a constant shift; softmax is
    shift-invariant so the gradient stays exact.
    """
    shift = np.full(n_segments, -np.inf)
    np.maximum.at(shift, segment_ids, logits.data)
    shifted = ad.add(logits, ad.constant(-shift[segment_ids]))
    exp = ad.exp(shifted)
    denom = ad.scatter_sum(exp, segment_ids, n_segments, plan=plan)
    return ad.divide(exp, ad.gather_rows(denom, segment_ids, plan=plan))


def transformer_layer(
    h: Tensor,
    adj: CsrAdjacency,
    w_q: list[Tensor],
    w_k: list[Tensor],
    w_v: list[Tensor],
    w_out: Tensor,
) -> Tensor:
    """h + concat_heads(attention over N(v) inclusive of v) W_O.

    Per head: alpha_vu = softmax_u((q_v . k_u) / sqrt(d_head)) restricted to
    the neighborhood plus the node itself; attention rows sum to 1.
    """
    d = h.data.shape[1]
    heads = len(w_q)
    d_head = w_q[0].data.shape[1]
    if heads * d_head != d or w_out.data.shape != (d, d):
        raise ShapeMismatch(
            f"transformer_layer: {heads} heads x {d_head} != dim {d} or W_O {w_out.data.shape}"
        )
    dst, src = adj.attention_edges()
    dst_plan, src_plan = adj.attention_plans()
    inv_sqrt = 1.0 / math.sqrt(d_head)
    head_outputs = []
    for wq, wk, wv in zip(w_q, w_k, w_v):
        _check_dims("transformer_layer", h, wq, wk, wv)
        q = ad.gather_rows(ad.matmul(h, wq), dst, plan=dst_plan)
        k = ad.gather_rows(ad.matmul(h, wk), src, plan=src_plan)
        v = ad.gather_rows(ad.matmul(h, wv), src, plan=src_plan)
        logits = ad.scale(ad.rowsum(ad.mul(q, k)), inv_sqrt)
        alpha = _segment_softmax(logits, dst, adj.n, plan=dst_plan)
        head_outputs.append(ad.scatter_sum(ad.mul_col(alpha, v), dst, adj.n, plan=dst_plan))
    attended = head_outputs[0] if heads == 1 else ad.concat_cols(head_outputs)
    return ad.add(h, ad.matmul(attended, w_out))


def laplacian_pe(adj: CsrAdjacency, k: int) -> np.ndarray:
    """Eigenvectors of the normalized Laplacian for the k smallest
    nontrivial eigenvalues (the trivial lambda=0 direction is skipped).

    Each column's sign is fixed so its first nonzero entry is positive.
    """
    if k >= adj.n:
        raise InsufficientNodes(f"pe_dim {k} requires more than {adj.n} nodes")

    def build():
        dense = adj.normalized_laplacian().to_dense()
        _, vectors = np.linalg.eigh(dense)
        pe = vectors[:, 1:k + 1].copy()
        for j in range(pe.shape[1]):
            nonzero = np.nonzero(np.abs(pe[:, j]) > 1e-12)[0]
            if nonzero.size and pe[nonzero[0], j] < 0:
                pe[:, j] = -pe[:, j]
        return pe

    return adj._cached(("pe", k), build)
