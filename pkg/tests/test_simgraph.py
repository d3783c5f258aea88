import math

import numpy as np
import pytest

from coldstart_al.dataset import ClusterAssignment, EmbeddedDataset
from coldstart_al.simgraph import (
    SimilarityGraph,
    SimilaritySpec,
    build_similarity,
    dump_graph,
    load_graph,
    local_sigmas,
    pairwise_distances,
    rescale_distances,
)
from oracles import brute_knn


def dataset_from(vectors):
    vectors = np.asarray(vectors, dtype=float)
    return EmbeddedDataset(ids=[f"e{i}" for i in range(len(vectors))], vectors=vectors)


class TestDistances:
    def test_pythagoras(self):
        ds = dataset_from([[0.0, 0.0], [3.0, 4.0]])
        d = pairwise_distances(ds)
        assert d[0, 1] == pytest.approx(5.0, abs=1e-12)

    def test_identical_points(self):
        ds = dataset_from([[1.0, 2.0], [1.0, 2.0]])
        assert pairwise_distances(ds)[0, 1] == 0.0

    def test_matches_double_loop(self, rng):
        x = rng.standard_normal((10, 3))
        d = pairwise_distances(dataset_from(x))
        for i in range(10):
            for j in range(10):
                expected = math.sqrt(sum((x[i, k] - x[j, k]) ** 2 for k in range(3)))
                assert d[i, j] == pytest.approx(expected, abs=1e-12)
        np.testing.assert_allclose(d, d.T, atol=1e-12)
        assert (np.diag(d) == 0.0).all()


class TestRescale:
    def test_one_dim_identity(self, rng):
        d = np.abs(rng.standard_normal((5, 5)))
        np.testing.assert_array_equal(rescale_distances(d, 1), d)

    def test_divides_by_sqrt_dims(self):
        d = np.array([[0.0, 10.0], [10.0, 0.0]])
        np.testing.assert_allclose(rescale_distances(d, 4), [[0.0, 5.0], [5.0, 0.0]])

    def test_subspace_tables_become_comparable(self, rng):
        # standardized data in very different dimensionalities
        wide = dataset_from(rng.standard_normal((120, 200)))
        narrow = dataset_from(rng.standard_normal((120, 4)))
        d_wide = rescale_distances(pairwise_distances(wide), 200)
        d_narrow = rescale_distances(pairwise_distances(narrow), 4)
        m_wide = (d_wide**2).sum() / (120 * 119)
        m_narrow = (d_narrow**2).sum() / (120 * 119)
        assert m_wide / m_narrow < 2.0
        assert m_narrow / m_wide < 2.0


class TestClusterVariant:
    def test_same_cluster_edges_only(self):
        clusters = ClusterAssignment(np.array([1, 1, 2]))
        g = build_similarity(None, clusters, SimilaritySpec(variant="C"))
        dense = g.weights.toarray()
        expected = np.zeros((3, 3))
        expected[0, 1] = expected[1, 0] = 1.0
        np.testing.assert_array_equal(dense, expected)

    def test_requires_clusters(self, tiny_dataset):
        with pytest.raises(ValueError):
            build_similarity(tiny_dataset, None, SimilaritySpec(variant="C"))


class TestNNVariant:
    def test_collinear_kappa_one(self):
        ds = dataset_from([[0.0], [1.0], [3.0]])
        g = build_similarity(ds, None, SimilaritySpec(variant="NN", knn_k=1))
        dense = g.weights.toarray()
        expected = np.zeros((3, 3))
        expected[0, 1] = 1.0  # nearest to 0 is 1
        expected[1, 0] = 1.0  # nearest to 1 is 0 (distance tie broken low)
        expected[2, 1] = 1.0  # nearest to 3 is 1
        np.testing.assert_array_equal(dense, expected)

    def test_out_degree_exactly_k(self, rng):
        ds = dataset_from(rng.standard_normal((30, 4)))
        for k in (1, 5, 29):
            g = build_similarity(ds, None, SimilaritySpec(variant="NN", knn_k=k))
            out_degrees = np.diff(g.weights.indptr)
            assert (out_degrees == k).all()

    def test_kappa_too_large_rejected(self, rng):
        ds = dataset_from(rng.standard_normal((10, 2)))
        with pytest.raises(ValueError):
            build_similarity(ds, None, SimilaritySpec(variant="NN", knn_k=10))

    def test_matches_exhaustive_sort(self, rng):
        x = rng.standard_normal((50, 3))
        ds = dataset_from(x)
        d = pairwise_distances(ds)
        for k in (1, 4, 12):
            g = build_similarity(ds, None, SimilaritySpec(variant="NN", knn_k=k))
            expected = brute_knn(d, k)
            for i in range(50):
                row = g.weights.indices[g.weights.indptr[i] : g.weights.indptr[i + 1]]
                assert sorted(row.tolist()) == sorted(expected[i])

    def test_tie_break_by_smaller_index(self):
        # three corners of an equilateral-ish shape: 1 and 2 equidistant from 0
        ds = dataset_from([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]])
        g = build_similarity(ds, None, SimilaritySpec(variant="NN", knn_k=1))
        row0 = g.weights.indices[g.weights.indptr[0] : g.weights.indptr[1]]
        assert row0.tolist() == [1]


class TestRBFVariant:
    def test_sigma_is_requested_quantile(self, rng):
        x = rng.standard_normal((40, 3))
        ds = dataset_from(x)
        d = pairwise_distances(ds)
        sig = local_sigmas(d, 0.02)
        for i in range(40):
            others = np.delete(d[i], i)
            assert sig[i] == pytest.approx(np.quantile(others, 0.02), rel=1e-12)

    def test_symmetric(self, rng):
        ds = dataset_from(rng.standard_normal((25, 3)))
        g = build_similarity(ds, None, SimilaritySpec(variant="RBF"))
        diff = (g.weights - g.weights.T).tocoo()
        assert np.abs(diff.data).max(initial=0.0) < 1e-12

    def test_weights_in_unit_interval(self, rng):
        ds = dataset_from(rng.standard_normal((25, 3)))
        g = build_similarity(ds, None, SimilaritySpec(variant="RBF"))
        assert g.weights.data.min() >= 0.0
        assert g.weights.data.max() <= 1.0

    def test_zero_distance_pair_weight_one(self):
        ds = dataset_from([[0.0, 0.0], [0.0, 0.0], [3.0, 0.0], [4.0, 0.0]])
        with pytest.warns(UserWarning):
            g = build_similarity(ds, None, SimilaritySpec(variant="RBF", sigma_quantile=0.02))
        assert g.weights[0, 1] == pytest.approx(1.0)

    def test_monotone_in_distance_for_fixed_sigma(self):
        # equispaced quantiles make all sigmas equal; weights must then be
        # non-increasing in distance
        ds = dataset_from([[float(i)] for i in range(6)])
        g = build_similarity(ds, None, SimilaritySpec(variant="RBF", sigma_quantile=0.5))
        d = pairwise_distances(ds)
        w = g.weights.toarray()
        for i in range(6):
            order = np.argsort(d[i])
            weights_sorted = w[i, order[1:]]
            assert (np.diff(weights_sorted) <= 1e-12).all()


class TestGraphContainer:
    def test_no_self_edges_stored(self):
        from scipy import sparse

        w = sparse.csr_matrix(np.array([[0.5, 0.2], [0.1, 0.9]]))
        g = SimilarityGraph(w, "RBF")
        assert g.weights.diagonal().sum() == 0.0
        assert g.nnz == 2

    def test_weight_range_enforced(self):
        from scipy import sparse

        w = sparse.csr_matrix(np.array([[0.0, 1.5], [0.0, 0.0]]))
        with pytest.raises(ValueError):
            SimilarityGraph(w, "NN")

    def test_dump_load_roundtrip(self, tmp_path, rng):
        ds = dataset_from(rng.standard_normal((12, 2)))
        g = build_similarity(ds, None, SimilaritySpec(variant="NN", knn_k=3))
        path = tmp_path / "graph.txt"
        dump_graph(g, path)
        loaded = load_graph(path)
        assert loaded.variant == "NN"
        assert loaded.n == g.n
        assert (loaded.weights != g.weights).nnz == 0
