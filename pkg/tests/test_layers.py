import numpy as np
import pytest

from ndtwin.errors import InsufficientNodes, ShapeMismatch
from ndtwin.nn import autodiff as ad
from ndtwin.nn.layers import (
    _segment_softmax,
    cheb_layer,
    identity,
    laplacian_pe,
    resgated_layer,
    sage_layer,
    transformer_layer,
)
from ndtwin.nn.sparse import CsrAdjacency

from conftest import random_symmetric_adjacency

TWO_NODE = CsrAdjacency(2, np.array([[0, 1], [1, 0]]))


def permuted_adjacency(adj: CsrAdjacency, perm: np.ndarray) -> CsrAdjacency:
    arcs = np.stack([perm[adj.src], perm[adj.dst]], axis=1)
    return CsrAdjacency(adj.n, arcs)


class TestSage:
    def test_hand_example(self):
        out = sage_layer(
            ad.constant([[1.0], [3.0]]), TWO_NODE,
            ad.constant([[1.0]]), ad.constant([[1.0]]), ad.constant([0.0]),
            act=identity,
        )
        np.testing.assert_allclose(out.data, [[4.0], [4.0]])

    def test_isolated_node_ignores_neighbors(self, rng):
        adj = CsrAdjacency(3, np.array([[0, 1], [1, 0]]))
        h = rng.normal(size=(3, 4))
        w_self = rng.normal(size=(4, 2))
        w_neigh = rng.normal(size=(4, 2))
        b = rng.normal(size=2)
        out = sage_layer(
            ad.constant(h), adj, ad.constant(w_self), ad.constant(w_neigh),
            ad.constant(b), act=identity,
        )
        np.testing.assert_allclose(out.data[2], h[2] @ w_self + b)

    def test_zero_neighbor_weight_is_affine(self, rng):
        adj = random_symmetric_adjacency(6, rng)
        h = rng.normal(size=(6, 3))
        w_self = rng.normal(size=(3, 2))
        b = rng.normal(size=2)
        out = sage_layer(
            ad.constant(h), adj, ad.constant(w_self),
            ad.constant(np.zeros((3, 2))), ad.constant(b), act=identity,
        )
        np.testing.assert_allclose(out.data, h @ w_self + b)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeMismatch):
            sage_layer(
                ad.constant(rng.normal(size=(2, 3))), TWO_NODE,
                ad.constant(rng.normal(size=(4, 2))),
                ad.constant(rng.normal(size=(4, 2))),
                ad.constant(np.zeros(2)),
            )


class TestCheb:
    def test_order_one_is_graph_independent(self, rng):
        h = rng.normal(size=(6, 3))
        theta = rng.normal(size=(3, 2))
        adj_a = random_symmetric_adjacency(6, rng)
        adj_b = random_symmetric_adjacency(6, rng)
        out_a = cheb_layer(ad.constant(h), adj_a.rescaled_laplacian(), [ad.constant(theta)],
                           act=identity)
        out_b = cheb_layer(ad.constant(h), adj_b.rescaled_laplacian(), [ad.constant(theta)],
                           act=identity)
        np.testing.assert_allclose(out_a.data, h @ theta)
        np.testing.assert_allclose(out_a.data, out_b.data)

    def test_hand_example_k2(self):
        out = cheb_layer(
            ad.constant([[1.0], [0.0]]), TWO_NODE.rescaled_laplacian(),
            [ad.constant([[1.0]]), ad.constant([[1.0]])], act=identity,
        )
        np.testing.assert_allclose(out.data, [[1.0], [-1.0]])

    def test_recurrence_matches_dense_polynomials(self, rng):
        # T_k evaluated by the layer == dense Chebyshev polynomial of L~
        for _ in range(5):
            n = int(rng.integers(3, 11))
            adj = random_symmetric_adjacency(n, rng)
            lap = adj.rescaled_laplacian()
            dense = lap.to_dense()
            h = rng.normal(size=(n, 2))
            order = 4
            thetas = [rng.normal(size=(2, 3)) for _ in range(order)]
            out = cheb_layer(
                ad.constant(h), lap, [ad.constant(t) for t in thetas], act=identity
            )
            t_mats = [np.eye(n), dense]
            for _ in range(2, order):
                t_mats.append(2.0 * dense @ t_mats[-1] - t_mats[-2])
            expected = sum(t_mats[k] @ h @ thetas[k] for k in range(order))
            np.testing.assert_allclose(out.data, expected, atol=1e-10)


class TestResGated:
    def test_zero_weights_residual_identity(self, rng):
        adj = random_symmetric_adjacency(5, rng)
        h = rng.normal(size=(5, 3))
        zeros = lambda: ad.constant(np.zeros((3, 3)))
        out = resgated_layer(ad.constant(h), adj, zeros(), zeros(), zeros(), zeros())
        np.testing.assert_allclose(out.data, h)

    def test_hand_example(self):
        out = resgated_layer(
            ad.constant([[2.0], [4.0]]), TWO_NODE,
            ad.constant([[0.0]]), ad.constant([[1.0]]),
            ad.constant([[0.0]]), ad.constant([[0.0]]),
        )
        np.testing.assert_allclose(out.data, [[4.0], [5.0]])

    def test_gates_strictly_inside_unit_interval(self, rng):
        adj = random_symmetric_adjacency(6, rng)
        h = ad.constant(rng.normal(size=(6, 4)))
        w3 = ad.constant(rng.normal(size=(4, 4)))
        w4 = ad.constant(rng.normal(size=(4, 4)))
        dst, src = adj.edge_lists()
        eta = ad.sigmoid(
            ad.add(
                ad.gather_rows(ad.matmul(h, w3), dst),
                ad.gather_rows(ad.matmul(h, w4), src),
            )
        )
        assert np.all(eta.data > 0.0)
        assert np.all(eta.data < 1.0)

    def test_rectangular_weights_rejected(self, rng):
        adj = random_symmetric_adjacency(4, rng)
        h = ad.constant(rng.normal(size=(4, 3)))
        bad = ad.constant(rng.normal(size=(3, 2)))
        good = lambda: ad.constant(rng.normal(size=(3, 3)))
        with pytest.raises(ShapeMismatch):
            resgated_layer(h, adj, good(), good(), good(), bad)


def _random_heads(rng, d, heads):
    d_head = d // heads
    make = lambda: [ad.constant(rng.normal(size=(d, d_head))) for _ in range(heads)]
    return make(), make(), make(), ad.constant(rng.normal(size=(d, d)))


class TestTransformer:
    def test_attention_rows_sum_to_one(self, rng):
        for _ in range(10):
            n = int(rng.integers(3, 12))
            adj = random_symmetric_adjacency(n, rng)
            dst, _ = adj.attention_edges()
            logits = ad.constant(rng.normal(scale=4.0, size=dst.shape[0]))
            alpha = _segment_softmax(logits, dst, n)
            sums = np.zeros(n)
            np.add.at(sums, dst, alpha.data)
            np.testing.assert_allclose(sums, 1.0, atol=1e-12)

    def test_isolated_node_attends_to_itself(self, rng):
        adj = CsrAdjacency(3, np.array([[0, 1], [1, 0]]))
        d, heads = 4, 2
        h = rng.normal(size=(3, d))
        w_q, w_k, w_v, w_out = _random_heads(rng, d, heads)
        out = transformer_layer(ad.constant(h), adj, w_q, w_k, w_v, w_out)
        # single-element softmax == 1: output is h + concat(v_self) W_O
        v_self = np.concatenate([h[2] @ w.data for w in w_v])
        np.testing.assert_allclose(out.data[2], h[2] + v_self @ w_out.data, atol=1e-12)

    def test_equal_keys_give_neighborhood_mean(self, rng):
        n, d, heads = 5, 4, 1
        adj = random_symmetric_adjacency(n, rng)
        h = rng.normal(size=(n, d))
        w_q = [ad.constant(rng.normal(size=(d, d)))]
        w_k = [ad.constant(np.zeros((d, d)))]  # all logits equal -> uniform attention
        w_v = [ad.constant(rng.normal(size=(d, d)))]
        w_out = ad.constant(np.eye(d))
        out = transformer_layer(ad.constant(h), adj, w_q, w_k, w_v, w_out)
        values = h @ w_v[0].data
        dst, src = adj.attention_edges()
        for v in range(n):
            neighborhood = src[dst == v]
            np.testing.assert_allclose(
                out.data[v], h[v] + values[neighborhood].mean(axis=0), atol=1e-12
            )

    def test_head_split_validated(self, rng):
        adj = random_symmetric_adjacency(4, rng)
        h = ad.constant(rng.normal(size=(4, 6)))
        w_q, w_k, w_v, _ = _random_heads(rng, 6, 2)
        bad_out = ad.constant(rng.normal(size=(6, 5)))
        with pytest.raises(ShapeMismatch):
            transformer_layer(h, adj, w_q, w_k, w_v, bad_out)


class TestLaplacianPe:
    def test_two_node_edge(self):
        pe = laplacian_pe(TWO_NODE, 1)
        np.testing.assert_allclose(pe, [[1 / np.sqrt(2)], [-1 / np.sqrt(2)]], atol=1e-12)

    def test_columns_orthonormal(self, rng):
        adj = random_symmetric_adjacency(10, rng)
        pe = laplacian_pe(adj, 4)
        np.testing.assert_allclose(pe.T @ pe, np.eye(4), atol=1e-8)

    def test_trivial_eigenvector_excluded(self, rng):
        # connected graph: lambda_0 = 0 with a constant-direction eigenvector
        arcs = [(i, i + 1) for i in range(5)] + [(i + 1, i) for i in range(5)]
        adj = CsrAdjacency(6, np.array(arcs))
        dense = adj.normalized_laplacian().to_dense()
        eigenvalues, vectors = np.linalg.eigh(dense)
        assert eigenvalues[0] == pytest.approx(0.0, abs=1e-10)
        constant_direction = vectors[:, 0] / np.linalg.norm(vectors[:, 0])
        pe = laplacian_pe(adj, 3)
        overlaps = np.abs(pe.T @ constant_direction)
        assert np.all(overlaps < 1e-8)

    def test_sign_convention(self, rng):
        adj = random_symmetric_adjacency(8, rng)
        pe = laplacian_pe(adj, 3)
        for j in range(3):
            nonzero = pe[np.abs(pe[:, j]) > 1e-12, j]
            assert nonzero[0] > 0

    def test_too_few_nodes(self):
        with pytest.raises(InsufficientNodes):
            laplacian_pe(TWO_NODE, 2)


class TestEquivariance:
    """Permuting nodes and adjacency together permutes each layer's output."""

    def _check(self, fn, n, d, rng):
        adj = random_symmetric_adjacency(n, rng)
        h = rng.normal(size=(n, d))
        perm = rng.permutation(n)
        adj_p = permuted_adjacency(adj, perm)
        h_p = np.empty_like(h)
        h_p[perm] = h
        out = fn(h, adj)
        out_p = fn(h_p, adj_p)
        np.testing.assert_allclose(out_p[perm], out, atol=1e-10)

    def test_sage(self, rng):
        d = 4
        w_self = ad.constant(rng.normal(size=(d, d)))
        w_neigh = ad.constant(rng.normal(size=(d, d)))
        b = ad.constant(rng.normal(size=d))
        self._check(
            lambda h, adj: sage_layer(ad.constant(h), adj, w_self, w_neigh, b).data,
            8, d, rng,
        )

    def test_cheb(self, rng):
        d = 4
        thetas = [ad.constant(rng.normal(size=(d, d))) for _ in range(3)]
        self._check(
            lambda h, adj: cheb_layer(ad.constant(h), adj.rescaled_laplacian(), thetas).data,
            8, d, rng,
        )

    def test_resgated(self, rng):
        d = 4
        ws = [ad.constant(rng.normal(size=(d, d))) for _ in range(4)]
        self._check(
            lambda h, adj: resgated_layer(ad.constant(h), adj, *ws).data,
            8, d, rng,
        )

    def test_transformer(self, rng):
        d, heads = 6, 2
        w_q, w_k, w_v, w_out = _random_heads(rng, d, heads)
        self._check(
            lambda h, adj: transformer_layer(ad.constant(h), adj, w_q, w_k, w_v, w_out).data,
            8, d, rng,
        )
