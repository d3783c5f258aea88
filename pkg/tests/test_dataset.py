import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coldstart_al.dataset import (
    ClusterAssignment,
    EmbeddedDataset,
    ParseError,
    PartialLabels,
    SyntheticSpec,
    generate_synthetic,
    kmeans_clusters,
    load_clusters,
    load_dataset,
    load_labels,
    save_clusters,
    save_dataset,
    save_labels,
)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadDataset:
    def test_three_row_csv(self, tmp_path):
        p = write(tmp_path / "d.csv", "id,x0,x1\na,0.0,1.0\nb,2.0,3.0\nc,4.0,5.0\n")
        ds = load_dataset(p)
        assert ds.n == 3 and ds.dims == 2
        assert ds.ids == ["a", "b", "c"]
        np.testing.assert_array_equal(ds.vectors[1], [2.0, 3.0])

    def test_dimension_mismatch_names_row(self, tmp_path):
        p = write(tmp_path / "d.csv", "id,x0,x1\na,0.0,1.0\nb,2.0,3.0,4.0\nc,4.0,5.0\n")
        with pytest.raises(ParseError, match="row 2"):
            load_dataset(p)

    def test_non_finite_rejected(self, tmp_path):
        p = write(tmp_path / "d.csv", "id,x0,x1\na,0.0,1.0\nb,nan,3.0\n")
        with pytest.raises(ParseError):
            load_dataset(p)

    def test_duplicate_ids_rejected(self, tmp_path):
        p = write(tmp_path / "d.csv", "id,x0\na,0.0\na,1.0\n")
        with pytest.raises(ValueError):
            load_dataset(p)

    def test_jsonl(self, tmp_path):
        p = write(
            tmp_path / "d.jsonl",
            '{"id": "a", "vector": [0.0, 1.0]}\n{"id": "b", "vector": [2.0, 3.0]}\n',
        )
        ds = load_dataset(p, format="jsonl")
        assert ds.n == 2 and ds.dims == 2

    def test_corpus_scale_shape(self, tmp_path):
        # 10000 elements x 200 dims, the scale the pipeline is sized for
        rng = np.random.default_rng(0)
        vectors = rng.standard_normal((10000, 200))
        ds = EmbeddedDataset(ids=[f"t{i}" for i in range(10000)], vectors=vectors)
        path = tmp_path / "big.csv"
        save_dataset(ds, path)
        loaded = load_dataset(path)
        assert loaded.n == 10000 and loaded.dims == 200
        np.testing.assert_array_equal(loaded.vectors, ds.vectors)


class TestLoadLabels:
    def test_empty_file_is_cold_start(self, tmp_path, tiny_dataset):
        p = write(tmp_path / "l.csv", "id,label\n")
        labels = load_labels(p, tiny_dataset, num_classes=3)
        assert labels.num_labeled == 0
        assert labels.n == tiny_dataset.n

    def test_partial_mapping(self, tmp_path, tiny_dataset):
        p = write(tmp_path / "l.csv", "id,label\na,1\nb,3\n")
        labels = load_labels(p, tiny_dataset, num_classes=3)
        np.testing.assert_array_equal(labels.labels, [1, 3, 0, 0])

    def test_label_out_of_range(self, tmp_path, tiny_dataset):
        p = write(tmp_path / "l.csv", "id,label\na,4\n")
        with pytest.raises(ParseError):
            load_labels(p, tiny_dataset, num_classes=3)

    def test_unknown_id(self, tmp_path, tiny_dataset):
        p = write(tmp_path / "l.csv", "id,label\nzz,1\n")
        with pytest.raises(ParseError):
            load_labels(p, tiny_dataset, num_classes=3)


class TestLoadClusters:
    def test_dense_assignment(self, tmp_path, tiny_dataset):
        p = write(tmp_path / "c.csv", "id,cluster\na,1\nb,1\nc,2\nd,2\n")
        cl = load_clusters(p, tiny_dataset)
        assert cl.num_clusters == 2
        np.testing.assert_array_equal(cl.members[1], [0, 1])
        np.testing.assert_array_equal(cl.members[2], [2, 3])

    def test_remap_records_originals(self, tmp_path, tiny_dataset):
        p = write(tmp_path / "c.csv", "id,cluster\na,3\nb,3\nc,7\nd,7\n")
        cl = load_clusters(p, tiny_dataset)
        assert cl.num_clusters == 2
        assert cl.original_ids == {1: "3", 2: "7"}

    def test_missing_element_rejected(self, tmp_path, tiny_dataset):
        p = write(tmp_path / "c.csv", "id,cluster\na,1\nb,1\nc,2\n")
        with pytest.raises(ParseError):
            load_clusters(p, tiny_dataset)

    def test_empty_file_rejected(self, tmp_path, tiny_dataset):
        p = write(tmp_path / "c.csv", "id,cluster\n")
        with pytest.raises(ParseError):
            load_clusters(p, tiny_dataset)

    def test_densification_bijection(self, tmp_path, tiny_dataset):
        p = write(tmp_path / "c.csv", "id,cluster\na,9\nb,2\nc,9\nd,5\n")
        cl = load_clusters(p, tiny_dataset)
        # bijection between dense 1..K and the original ids
        assert sorted(cl.original_ids) == [1, 2, 3]
        assert sorted(cl.original_ids.values()) == ["2", "5", "9"]


class TestSynthetic:
    def spec(self, **kw):
        base = dict(
            n_total=2000,
            dims=2,
            num_classes=2,
            class_centers=[[0.0, 0.0], [4.0, 4.0]],
            class_spread=[1.0, 0.5],
            seed=7,
            minority_fraction=0.05,
        )
        base.update(kw)
        return SyntheticSpec(**base)

    def test_minority_count(self):
        _, truth = generate_synthetic(self.spec())
        assert int((truth.labels == 2).sum()) == 100
        assert truth.is_fully_labeled()

    def test_deterministic(self):
        d1, t1 = generate_synthetic(self.spec())
        d2, t2 = generate_synthetic(self.spec())
        np.testing.assert_array_equal(d1.vectors, d2.vectors)
        np.testing.assert_array_equal(t1.labels, t2.labels)
        assert d1.ids == d2.ids

    def test_three_class_skew(self):
        spec = SyntheticSpec(
            n_total=2000,
            dims=2,
            num_classes=3,
            class_centers=[[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]],
            class_spread=[1.0, 0.5, 0.5],
            seed=3,
            class_fractions=[0.94, 0.05, 0.01],
        )
        _, truth = generate_synthetic(spec)
        counts = [int((truth.labels == c).sum()) for c in (1, 2, 3)]
        assert counts == [1880, 100, 20]

    def test_minority_subconcepts(self):
        spec = self.spec(class_centers=[[0.0, 0.0], [[4.0, 4.0], [-4.0, -4.0]]])
        data, truth = generate_synthetic(spec)
        minority = data.vectors[truth.labels == 2]
        # both sub-blobs populated
        assert (minority.sum(axis=1) > 0).sum() == 50
        assert (minority.sum(axis=1) < 0).sum() == 50

    def test_zero_spread_rejected(self):
        with pytest.raises(ValueError):
            self.spec(class_spread=[1.0, 0.0])

    def test_identical_centers_warned(self):
        with pytest.warns(UserWarning):
            generate_synthetic(self.spec(class_centers=[[0.0, 0.0], [0.0, 0.0]]))

    @given(seed=st.integers(0, 10_000), frac=st.floats(0.01, 0.4))
    @settings(max_examples=25, deadline=None)
    def test_counts_match_rounded_fractions(self, seed, frac):
        spec = SyntheticSpec(
            n_total=200,
            dims=2,
            num_classes=2,
            class_centers=[[0.0, 0.0], [3.0, 3.0]],
            class_spread=[1.0, 1.0],
            seed=seed,
            minority_fraction=frac,
        )
        _, truth = generate_synthetic(spec)
        assert int((truth.labels == 2).sum()) == round(frac * 200)


class TestRoundTrips:
    def test_dataset_roundtrip(self, tmp_path, tiny_dataset):
        for fmt in ("csv", "jsonl"):
            path = tmp_path / f"d.{fmt}"
            save_dataset(tiny_dataset, path, format=fmt)
            loaded = load_dataset(path, format=fmt)
            assert loaded.ids == tiny_dataset.ids
            np.testing.assert_array_equal(loaded.vectors, tiny_dataset.vectors)

    def test_labels_roundtrip(self, tmp_path, tiny_dataset):
        labels = PartialLabels(np.array([0, 2, 1, 0]), num_classes=2)
        path = tmp_path / "l.csv"
        save_labels(labels, tiny_dataset, path)
        loaded = load_labels(path, tiny_dataset, num_classes=2)
        np.testing.assert_array_equal(loaded.labels, labels.labels)

    def test_clusters_roundtrip(self, tmp_path, tiny_dataset):
        clusters = ClusterAssignment(np.array([1, 2, 2, 1]))
        path = tmp_path / "c.csv"
        save_clusters(clusters, tiny_dataset, path)
        loaded = load_clusters(path, tiny_dataset)
        np.testing.assert_array_equal(loaded.assignment, clusters.assignment)


class TestKMeans:
    def blobs(self):
        spec = SyntheticSpec(
            n_total=200,
            dims=2,
            num_classes=2,
            class_centers=[[0.0, 0.0], [10.0, 10.0]],
            class_spread=[0.5, 0.5],
            seed=11,
            minority_fraction=0.5,
        )
        return generate_synthetic(spec)

    def test_recovers_separated_blobs(self):
        data, truth = self.blobs()
        cl = kmeans_clusters(data, k=2, seed=4)
        # agreement with the generator's partition up to relabeling
        first = cl.assignment[truth.labels == 1]
        second = cl.assignment[truth.labels == 2]
        assert len(set(first.tolist())) == 1
        assert len(set(second.tolist())) == 1
        assert first[0] != second[0]

    def test_k_equals_n(self, tiny_dataset):
        cl = kmeans_clusters(tiny_dataset, k=tiny_dataset.n, seed=1)
        assert cl.num_clusters == tiny_dataset.n
        assert all(len(m) == 1 for m in cl.members.values())

    def test_deterministic(self):
        data, _ = self.blobs()
        a = kmeans_clusters(data, k=5, seed=9)
        b = kmeans_clusters(data, k=5, seed=9)
        np.testing.assert_array_equal(a.assignment, b.assignment)

    def test_k_too_large_rejected(self, tiny_dataset):
        with pytest.raises(ValueError):
            kmeans_clusters(tiny_dataset, k=5, seed=0)

    def test_every_cluster_nonempty(self):
        data, _ = self.blobs()
        cl = kmeans_clusters(data, k=17, seed=2)
        assert cl.num_clusters == 17
        assert all(len(m) >= 1 for m in cl.members.values())


class TestInvariants:
    def test_dataset_needs_two_elements(self):
        with pytest.raises(ValueError):
            EmbeddedDataset(ids=["a"], vectors=np.zeros((1, 2)))

    def test_labels_range_enforced(self):
        with pytest.raises(ValueError):
            PartialLabels(np.array([0, 4]), num_classes=3)
        with pytest.raises(ValueError):
            PartialLabels(np.array([-1, 1]), num_classes=3)

    def test_cluster_ids_must_be_dense(self):
        with pytest.raises(ValueError):
            ClusterAssignment(np.array([1, 3, 3]))

    def test_partial_labels_helpers(self):
        labels = PartialLabels(np.array([0, 2, 1, 0]), num_classes=2)
        np.testing.assert_array_equal(labels.labeled_mask, [False, True, True, False])
        assert labels.num_labeled == 2
        updated = labels.with_answers([(0, 1)])
        assert updated.num_labeled == 3
        assert labels.num_labeled == 2  # original untouched
