import numpy as np
import pytest

from ndtwin.errors import ShapeMismatch
from ndtwin.nn.sparse import CsrAdjacency, from_coo

from conftest import random_symmetric_adjacency


class TestCsrMatrix:
    def test_matvec_matches_dense(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 12))
            nnz = int(rng.integers(1, n * n))
            rows = rng.integers(0, n, nnz)
            cols = rng.integers(0, n, nnz)
            weights = rng.normal(size=nnz)
            m = from_coo(n, rows, cols, weights)
            x = rng.normal(size=(n, 3))
            np.testing.assert_allclose(m.matvec(x), m.to_dense() @ x, rtol=1e-12)

    def test_transpose(self, rng):
        m = from_coo(5, rng.integers(0, 5, 8), rng.integers(0, 5, 8), rng.normal(size=8))
        np.testing.assert_allclose(m.transpose().to_dense(), m.to_dense().T)

    def test_wrong_operand_rows(self):
        m = from_coo(3, [0], [1], [1.0])
        with pytest.raises(ShapeMismatch):
            m.matvec(np.ones((4, 2)))


class TestAdjacency:
    def test_mean_matrix_rows(self):
        adj = CsrAdjacency(4, np.array([[0, 1], [1, 0], [0, 2], [2, 0]]))
        dense = adj.mean_matrix().to_dense()
        np.testing.assert_allclose(dense[0], [0.0, 0.5, 0.5, 0.0])
        np.testing.assert_allclose(dense[1], [1.0, 0.0, 0.0, 0.0])
        np.testing.assert_allclose(dense[3], 0.0)  # isolated: aggregates to zero

    def test_out_of_range_arc(self):
        with pytest.raises(ShapeMismatch):
            CsrAdjacency(2, np.array([[0, 5]]))

    def test_laplacian_two_node_edge(self):
        adj = CsrAdjacency(2, np.array([[0, 1], [1, 0]]))
        np.testing.assert_allclose(
            adj.normalized_laplacian().to_dense(), [[1.0, -1.0], [-1.0, 1.0]]
        )

    def test_laplacian_edgeless_is_identity(self):
        adj = CsrAdjacency(3, np.zeros((0, 2)))
        np.testing.assert_allclose(adj.normalized_laplacian().to_dense(), np.eye(3))

    def test_isolated_node_row(self):
        adj = CsrAdjacency(3, np.array([[0, 1], [1, 0]]))
        dense = adj.normalized_laplacian().to_dense()
        np.testing.assert_allclose(dense[2], [0.0, 0.0, 1.0])

    def test_eigenvalues_in_unit_band(self, rng):
        # spectrum of the normalized Laplacian lies in [0, 2]
        for _ in range(10):
            n = int(rng.integers(3, 13))
            adj = random_symmetric_adjacency(n, rng)
            eigenvalues = np.linalg.eigvalsh(adj.normalized_laplacian().to_dense())
            assert eigenvalues.min() >= -1e-10
            assert eigenvalues.max() <= 2.0 + 1e-10

    def test_rescaled_laplacian_default(self):
        adj = CsrAdjacency(2, np.array([[0, 1], [1, 0]]))
        np.testing.assert_allclose(
            adj.rescaled_laplacian(2.0).to_dense(), [[0.0, -1.0], [-1.0, 0.0]]
        )

    def test_rescaled_laplacian_exact(self, rng):
        adj = random_symmetric_adjacency(6, rng)
        lam = adj.exact_lambda_max()
        dense = adj.rescaled_laplacian(lam).to_dense()
        expected = (2.0 / lam) * adj.normalized_laplacian().to_dense() - np.eye(6)
        np.testing.assert_allclose(dense, expected, atol=1e-12)

    def test_attention_edges_include_self_loops(self):
        adj = CsrAdjacency(3, np.array([[0, 1], [1, 0]]))
        dst, src = adj.attention_edges()
        pairs = set(zip(dst.tolist(), src.tolist()))
        assert pairs == {(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)}
