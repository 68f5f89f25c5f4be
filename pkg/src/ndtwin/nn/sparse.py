"""Compressed-sparse-row adjacency and the spectral operators built on it.

The adjacency stores the directed arc set of the knowledge graph (symmetric
as a set, no self-loops). Derived forms: row-mean weighting for
mean-aggregation message passing, the symmetric normalized Laplacian
L = I - D^(-1/2) A D^(-1/2), and its Chebyshev rescaling.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch


class SegmentPlan:
    """Precomputed layout for repeated deterministic scatter-adds.

    Entries are stably presorted by target row once; each segment is then
    summed with np.add.reduceat in fixed index order, so results are
    bitwise reproducible and far cheaper than unbuffered np.add.at.
    """

    def __init__(self, index: np.ndarray, n: int):
        index = np.asarray(index, dtype=np.int64)
        self.n = int(n)
        self.index = index
        self.order = np.argsort(index, kind="stable")
        sorted_index = index[self.order]
        self.rows, self.starts = np.unique(sorted_index, return_index=True)

    def segment_sum(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n,) + values.shape[1:], dtype=np.float64)
        if self.index.shape[0]:
            out[self.rows] = np.add.reduceat(values[self.order], self.starts, axis=0)
        return out


class CsrMatrix:
    """Square sparse matrix in CSR form with explicit per-entry weights."""

    def __init__(self, n: int, row_offsets: np.ndarray, col_indices: np.ndarray,
                 weights: np.ndarray):
        self.n = int(n)
        self.row_offsets = np.asarray(row_offsets, dtype=np.int64)
        self.col_indices = np.asarray(col_indices, dtype=np.int64)
        self.weights = np.asarray(weights, dtype=np.float64)
        lengths = np.diff(self.row_offsets)
        # COO row ids for to_dense; reduceat layout for matvec
        self.row_ids = np.repeat(np.arange(self.n, dtype=np.int64), lengths)
        self.nonempty_rows = np.nonzero(lengths)[0]
        self.segment_starts = self.row_offsets[self.nonempty_rows]
        self._transpose: CsrMatrix | None = None

    @property
    def nnz(self) -> int:
        return self.col_indices.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Dense product for x of shape (n, d) or (n,)."""
        if x.shape[0] != self.n:
            raise ShapeMismatch(f"matrix is {self.n}x{self.n}, operand has {x.shape[0]} rows")
        out = np.zeros_like(x, dtype=np.float64)
        if self.nnz == 0:
            return out
        if x.ndim == 1:
            contrib = self.weights * x[self.col_indices]
        else:
            contrib = self.weights[:, None] * x[self.col_indices]
        out[self.nonempty_rows] = np.add.reduceat(contrib, self.segment_starts, axis=0)
        return out

    def transpose(self) -> CsrMatrix:
        if self._transpose is None:
            self._transpose = from_coo(
                self.n, self.col_indices, self.row_ids, self.weights
            )
            self._transpose._transpose = self
        return self._transpose

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n, self.n), dtype=np.float64)
        np.add.at(dense, (self.row_ids, self.col_indices), self.weights)
        return dense


def from_coo(n: int, rows: np.ndarray, cols: np.ndarray, weights: np.ndarray) -> CsrMatrix:
    """Build CSR from coordinate triples, sorting by (row, col)."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    order = np.lexsort((cols, rows))
    rows, cols, weights = rows[order], cols[order], weights[order]
    row_offsets = np.zeros(n + 1, dtype=np.int64)
    np.add.at(row_offsets, rows + 1, 1)
    np.cumsum(row_offsets, out=row_offsets)
    return CsrMatrix(n, row_offsets, cols, weights)


class CsrAdjacency:
    """Graph adjacency plus the derived operator/edge-list views.

    Derived structures are built lazily and cached; the adjacency itself is
    immutable after construction.
    """

    def __init__(self, n: int, arcs: np.ndarray):
        arcs = np.asarray(arcs, dtype=np.int64).reshape(-1, 2)
        if arcs.size and (arcs.min() < 0 or arcs.max() >= n):
            raise ShapeMismatch(f"arc endpoint out of range for {n} nodes")
        order = np.lexsort((arcs[:, 1], arcs[:, 0])) if arcs.size else np.array([], dtype=np.int64)
        self.n = int(n)
        self.src = arcs[order, 0] if arcs.size else np.array([], dtype=np.int64)
        self.dst = arcs[order, 1] if arcs.size else np.array([], dtype=np.int64)
        self.out_degree = np.zeros(n, dtype=np.int64)
        np.add.at(self.out_degree, self.src, 1)
        self._cache: dict = {}

    @property
    def n_arcs(self) -> int:
        return self.src.shape[0]

    def _cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def mean_matrix(self) -> CsrMatrix:
        """Row i holds 1/deg(i) per out-neighbor; empty rows aggregate to 0."""
        def build():
            deg = self.out_degree[self.src].astype(np.float64)
            return from_coo(self.n, self.src, self.dst, 1.0 / deg)
        return self._cached("mean", build)

    def normalized_laplacian(self) -> CsrMatrix:
        """L = I - D^(-1/2) A D^(-1/2); isolated nodes get a bare diagonal 1."""
        def build():
            d = self.out_degree.astype(np.float64)
            inv_sqrt = np.zeros_like(d)
            nz = d > 0
            inv_sqrt[nz] = 1.0 / np.sqrt(d[nz])
            off_w = -inv_sqrt[self.src] * inv_sqrt[self.dst]
            diag = np.arange(self.n, dtype=np.int64)
            rows = np.concatenate([diag, self.src])
            cols = np.concatenate([diag, self.dst])
            weights = np.concatenate([np.ones(self.n), off_w])
            return from_coo(self.n, rows, cols, weights)
        return self._cached("laplacian", build)

    def rescaled_laplacian(self, lambda_max: float = 2.0) -> CsrMatrix:
        """(2/lambda_max) L - I for the Chebyshev recurrence.

        With the default lambda_max = 2 this is exactly L - I, i.e. the
        negated normalized adjacency with zero rows for isolated nodes.
        """
        def build():
            d = self.out_degree.astype(np.float64)
            inv_sqrt = np.zeros_like(d)
            nz = d > 0
            inv_sqrt[nz] = 1.0 / np.sqrt(d[nz])
            c = 2.0 / lambda_max
            off_w = -c * inv_sqrt[self.src] * inv_sqrt[self.dst]
            diag_val = c - 1.0
            if diag_val == 0.0:
                return from_coo(self.n, self.src, self.dst, off_w)
            diag = np.arange(self.n, dtype=np.int64)
            rows = np.concatenate([diag, self.src])
            cols = np.concatenate([diag, self.dst])
            weights = np.concatenate([np.full(self.n, diag_val), off_w])
            return from_coo(self.n, rows, cols, weights)
        return self._cached(("rescaled", float(lambda_max)), build)

    def exact_lambda_max(self) -> float:
        """Largest eigenvalue of the normalized Laplacian (dense solve)."""
        def build():
            return float(np.linalg.eigvalsh(self.normalized_laplacian().to_dense())[-1])
        return self._cached("lambda_max", build)

    def edge_lists(self) -> tuple[np.ndarray, np.ndarray]:
        """(dst, src) per directed arc: dst aggregates messages from src."""
        return self.src, self.dst  # arcs are symmetric; (src->dst) == (dst gathers src)

    def edge_plans(self) -> tuple[SegmentPlan, SegmentPlan]:
        """Scatter plans over (dst, src) of edge_lists."""
        return self._cached(
            "edge_plans",
            lambda: (SegmentPlan(self.src, self.n), SegmentPlan(self.dst, self.n)),
        )

    def attention_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Arc list plus one self-loop per node, sorted by destination."""
        def build():
            dst = np.concatenate([self.src, np.arange(self.n, dtype=np.int64)])
            src = np.concatenate([self.dst, np.arange(self.n, dtype=np.int64)])
            order = np.lexsort((src, dst))
            return dst[order], src[order]
        return self._cached("attention", build)

    def attention_plans(self) -> tuple[SegmentPlan, SegmentPlan]:
        """Scatter plans over (dst, src) of attention_edges."""
        def build():
            dst, src = self.attention_edges()
            return SegmentPlan(dst, self.n), SegmentPlan(src, self.n)
        return self._cached("attention_plans", build)


def adjacency_from_kb(kb) -> CsrAdjacency:
    return CsrAdjacency(kb.n_nodes, kb.arc_array())
