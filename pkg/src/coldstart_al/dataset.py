"""Datasets, partial labels, and cluster assignments.

Conventions used across the package:

- element indices are 0-based positions into the dataset row order,
- element ids are opaque strings carried for file I/O,
- class labels live in ``{1..C}`` with ``0`` reserved for "unlabeled",
- cluster ids live in ``{1..K}`` and are always dense (every id occurs).

File formats are deliberately minimal and diff-friendly: CSV with a header
row (``id,<coords...>`` / ``id,label`` / ``id,cluster``) or JSON lines with
``{"id": ..., "vector": [...]}`` for vectors.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ParseError(ValueError):
    """Malformed input file; ``row`` is the 1-based data row when known."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


@dataclass
class EmbeddedDataset:
    """N embedded elements: unique string ids plus an (N, D) float matrix."""

    ids: list[str]
    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be a 2-d array")
        if len(self.ids) != self.vectors.shape[0]:
            raise ValueError("ids and vectors disagree on element count")
        if self.n < 2:
            raise ValueError("dataset needs at least 2 elements")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("element ids must be unique")
        if not np.isfinite(self.vectors).all():
            bad = int(np.argwhere(~np.isfinite(self.vectors).all(axis=1))[0, 0])
            raise ValueError(f"non-finite coordinate in element {self.ids[bad]!r}")

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dims(self) -> int:
        return self.vectors.shape[1]

    def index_of(self, element_id: str) -> int:
        try:
            return self._id_index[element_id]
        except AttributeError:
            self._id_index = {e: i for i, e in enumerate(self.ids)}
            return self._id_index[element_id]


@dataclass
class PartialLabels:
    """Length-N label vector in {0..C}; 0 means unlabeled."""

    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1:
            raise ValueError("labels must be a 1-d vector")
        if self.num_classes < 2:
            raise ValueError("need at least 2 classes")
        if self.labels.min(initial=0) < 0 or self.labels.max(initial=0) > self.num_classes:
            raise ValueError(f"labels must lie in 0..{self.num_classes}")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def labeled_mask(self) -> np.ndarray:
        return self.labels > 0

    @property
    def labeled_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labels > 0)

    @property
    def num_labeled(self) -> int:
        return int(np.count_nonzero(self.labels))

    def is_fully_labeled(self) -> bool:
        return bool((self.labels > 0).all())

    def with_answers(self, answers) -> "PartialLabels":
        """New labels with (index, label) pairs applied."""
        out = self.labels.copy()
        for idx, lab in answers:
            out[idx] = lab
        return PartialLabels(out, self.num_classes)


@dataclass
class ClusterAssignment:
    """Dense per-element cluster ids 1..K plus derived member index sets."""

    assignment: np.ndarray
    num_clusters: int = 0
    members: dict[int, np.ndarray] = field(default_factory=dict)
    original_ids: dict[int, str] | None = None

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        if self.assignment.ndim != 1 or len(self.assignment) == 0:
            raise ValueError("assignment must be a non-empty 1-d vector")
        present = np.unique(self.assignment)
        k = len(present)
        if present[0] != 1 or present[-1] != k:
            raise ValueError("cluster ids must densely cover 1..K")
        if self.num_clusters and self.num_clusters != k:
            raise ValueError(f"num_clusters={self.num_clusters} but assignment has {k}")
        self.num_clusters = k
        self.members = {
            int(c): np.flatnonzero(self.assignment == c) for c in range(1, k + 1)
        }

    @property
    def n(self) -> int:
        return len(self.assignment)


@dataclass
class SyntheticSpec:
    """Recipe for an imbalanced Gaussian-blob dataset with known labels.

    ``class_centers[c]`` is either one center or a list of sub-blob centers
    (a minority class split into several subconcepts). Class sizes come from
    ``class_fractions`` when given, otherwise from the two-class shorthand
    ``minority_fraction`` (class 1 majority, class 2 minority).
    """

    n_total: int
    dims: int
    num_classes: int
    class_centers: list
    class_spread: list
    seed: int
    minority_fraction: float | None = None
    class_fractions: list | None = None
    shuffle: bool = True

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("need at least 2 classes")
        if len(self.class_centers) != self.num_classes:
            raise ValueError("one (list of) center(s) per class required")
        if np.isscalar(self.class_spread):
            self.class_spread = [float(self.class_spread)] * self.num_classes
        if len(self.class_spread) != self.num_classes:
            raise ValueError("one spread per class required")
        if any(s <= 0 for s in self.class_spread):
            raise ValueError("class spreads must be positive")
        if self.class_fractions is None:
            if self.minority_fraction is None:
                raise ValueError("give minority_fraction or class_fractions")
            if self.num_classes != 2:
                raise ValueError("minority_fraction shorthand needs exactly 2 classes")
            if not 0.0 < self.minority_fraction < 1.0:
                raise ValueError("minority_fraction must lie in (0, 1)")
            self.class_fractions = [1.0 - self.minority_fraction, self.minority_fraction]
        if len(self.class_fractions) != self.num_classes:
            raise ValueError("one fraction per class required")
        if abs(sum(self.class_fractions) - 1.0) > 1e-9:
            raise ValueError("class fractions must sum to 1")

    def class_counts(self) -> list[int]:
        """Rounded per-class counts, drift absorbed by the largest class."""
        counts = [round(f * self.n_total) for f in self.class_fractions]
        counts[int(np.argmax(self.class_fractions))] += self.n_total - sum(counts)
        if min(counts) < 1:
            raise ValueError("every class needs at least one element")
        return counts

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        return cls(
            n_total=int(d["n_total"]),
            dims=int(d["dims"]),
            num_classes=int(d["num_classes"]),
            class_centers=d["class_centers"],
            class_spread=d["class_spread"],
            seed=int(d["seed"]),
            minority_fraction=d.get("minority_fraction"),
            class_fractions=d.get("class_fractions"),
            shuffle=bool(d.get("shuffle", True)),
        )


def _sub_centers(entry, dims: int) -> np.ndarray:
    arr = np.asarray(entry, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dims:
        raise ValueError(f"centers must have {dims} coordinates")
    return arr


def generate_synthetic(spec: SyntheticSpec) -> tuple[EmbeddedDataset, PartialLabels]:
    """Deterministic isotropic-blob sampler; returns data plus full ground truth."""
    rng = np.random.default_rng(spec.seed)
    counts = spec.class_counts()

    centers = [_sub_centers(spec.class_centers[c], spec.dims) for c in range(spec.num_classes)]
    flat = [tuple(np.round(b, 12)) for cs in centers for b in cs]
    if len(set(flat)) != len(flat):
        warnings.warn("identical blob centers across classes: classes will overlap fully")

    rows, labels = [], []
    for c in range(spec.num_classes):
        blobs = centers[c]
        count, n_blobs = counts[c], len(blobs)
        per = [count // n_blobs + (1 if b < count % n_blobs else 0) for b in range(n_blobs)]
        for b, nb in enumerate(per):
            rows.append(blobs[b] + spec.class_spread[c] * rng.standard_normal((nb, spec.dims)))
            labels.append(np.full(nb, c + 1, dtype=np.int64))
    vectors = np.concatenate(rows)
    truth = np.concatenate(labels)

    if spec.shuffle:
        # index order must not correlate with class: deterministic tie-breaks
        # downstream would otherwise scan classes in generation order
        perm = rng.permutation(spec.n_total)
        vectors, truth = vectors[perm], truth[perm]
    ids = [f"e{i:05d}" for i in range(spec.n_total)]
    return (
        EmbeddedDataset(ids=ids, vectors=vectors),
        PartialLabels(labels=truth, num_classes=spec.num_classes),
    )


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def load_dataset(path: str | Path, format: str = "csv") -> EmbeddedDataset:
    """Read an embedded dataset; every row must carry the same dimensionality."""
    path = Path(path)
    if format not in ("csv", "jsonl"):
        raise ValueError(f"unknown format {format!r}")
    ids: list[str] = []
    rows: list[list[float]] = []
    dims = None
    with open(path, newline="", encoding="utf-8") as fh:
        if format == "csv":
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[0] != "id":
                raise ParseError("expected CSV header starting with 'id'")
            for rownum, rec in enumerate(reader, start=1):
                if not rec:
                    continue
                ids.append(rec[0])
                coords = rec[1:]
                if dims is None:
                    dims = len(coords)
                elif len(coords) != dims:
                    raise ParseError(
                        f"element {rec[0]!r} has {len(coords)} coordinates, expected {dims}",
                        row=rownum,
                    )
                try:
                    rows.append([float(x) for x in coords])
                except ValueError:
                    raise ParseError(f"non-numeric coordinate in element {rec[0]!r}", row=rownum)
        else:
            for rownum, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    ids.append(str(obj["id"]))
                    coords = [float(x) for x in obj["vector"]]
                except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                    raise ParseError("expected {'id': ..., 'vector': [...]}", row=rownum)
                if dims is None:
                    dims = len(coords)
                elif len(coords) != dims:
                    raise ParseError(
                        f"element {obj['id']!r} has {len(coords)} coordinates, expected {dims}",
                        row=rownum,
                    )
                rows.append(coords)
    if not rows:
        raise ParseError(f"no data rows in {path}")
    vectors = np.asarray(rows, dtype=np.float64)
    if not np.isfinite(vectors).all():
        bad = int(np.argwhere(~np.isfinite(vectors).all(axis=1))[0, 0])
        raise ParseError(f"non-finite coordinate in element {ids[bad]!r}", row=bad + 1)
    return EmbeddedDataset(ids=ids, vectors=vectors)


def save_dataset(dataset: EmbeddedDataset, path: str | Path, format: str = "csv") -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if format == "csv":
            writer = csv.writer(fh)
            writer.writerow(["id"] + [f"x{d}" for d in range(dataset.dims)])
            for i, eid in enumerate(dataset.ids):
                writer.writerow([eid] + [repr(float(v)) for v in dataset.vectors[i]])
        elif format == "jsonl":
            for i, eid in enumerate(dataset.ids):
                fh.write(
                    json.dumps({"id": eid, "vector": [float(v) for v in dataset.vectors[i]]})
                    + "\n"
                )
        else:
            raise ValueError(f"unknown format {format!r}")


def load_labels(path: str | Path, dataset: EmbeddedDataset, num_classes: int) -> PartialLabels:
    """Read ``id,label`` rows; elements missing from the file stay unlabeled."""
    labels = np.zeros(dataset.n, dtype=np.int64)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is not None and header[:2] != ["id", "label"]:
            raise ParseError("expected CSV header 'id,label'")
        for rownum, rec in enumerate(reader, start=1):
            if not rec:
                continue
            eid, raw = rec[0], rec[1]
            try:
                idx = dataset.index_of(eid)
            except KeyError:
                raise ParseError(f"unknown element id {eid!r}", row=rownum)
            try:
                lab = int(raw)
            except ValueError:
                raise ParseError(f"non-integer label {raw!r}", row=rownum)
            if not 0 <= lab <= num_classes:
                raise ParseError(f"label {lab} outside 0..{num_classes}", row=rownum)
            labels[idx] = lab
    return PartialLabels(labels=labels, num_classes=num_classes)


def save_labels(labels: PartialLabels, dataset: EmbeddedDataset, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"])
        for i, eid in enumerate(dataset.ids):
            writer.writerow([eid, int(labels.labels[i])])


def load_clusters(path: str | Path, dataset: EmbeddedDataset) -> ClusterAssignment:
    """Read ``id,cluster`` rows covering every element exactly once.

    Cluster ids are remapped onto a dense 1..K range (ascending original id);
    the original ids are kept in ``original_ids``.
    """
    raw = np.full(dataset.n, -1, dtype=np.int64)
    seen = np.zeros(dataset.n, dtype=bool)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is not None and header[:2] != ["id", "cluster"]:
            raise ParseError("expected CSV header 'id,cluster'")
        any_rows = False
        for rownum, rec in enumerate(reader, start=1):
            if not rec:
                continue
            any_rows = True
            eid, raw_c = rec[0], rec[1]
            try:
                idx = dataset.index_of(eid)
            except KeyError:
                raise ParseError(f"unknown element id {eid!r}", row=rownum)
            if seen[idx]:
                raise ParseError(f"element {eid!r} assigned twice", row=rownum)
            try:
                raw[idx] = int(raw_c)
            except ValueError:
                raise ParseError(f"non-integer cluster id {raw_c!r}", row=rownum)
            seen[idx] = True
    if not any_rows:
        raise ParseError(f"empty cluster file {path}")
    if not seen.all():
        missing = dataset.ids[int(np.flatnonzero(~seen)[0])]
        raise ParseError(f"element {missing!r} has no cluster assignment")
    originals = np.unique(raw)
    remap = {int(orig): dense for dense, orig in enumerate(originals, start=1)}
    dense = np.array([remap[int(c)] for c in raw], dtype=np.int64)
    return ClusterAssignment(
        assignment=dense,
        original_ids={v: str(k) for k, v in remap.items()},
    )


def save_clusters(clusters: ClusterAssignment, dataset: EmbeddedDataset, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "cluster"])
        for i, eid in enumerate(dataset.ids):
            writer.writerow([eid, int(clusters.assignment[i])])


# ---------------------------------------------------------------------------
# built-in clusterer
# ---------------------------------------------------------------------------

def kmeans_clusters(dataset: EmbeddedDataset, k: int, seed: int = 0) -> ClusterAssignment:
    """Lloyd iterations with seeded init and farthest-point re-seeding.

    Converges when the max centroid shift drops below 1e-6 or after 100
    rounds. Emptied clusters are refilled with the point currently farthest
    from its own centroid, so every returned cluster is non-empty.
    """
    X = dataset.vectors
    n = dataset.n
    if not 2 <= k <= n:
        raise ValueError(f"k must lie in 2..{n}, got {k}")
    rng = np.random.default_rng(seed)
    centroids = X[rng.choice(n, size=k, replace=False)].copy()

    assign = np.zeros(n, dtype=np.int64)
    for _ in range(100):
        d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        own = d2[np.arange(n), assign]
        taken = np.zeros(n, dtype=bool)
        for c in range(k):
            if (assign == c).any():
                continue
            candidates = np.where(taken, -np.inf, own)
            far = int(candidates.argmax())
            assign[far] = c
            taken[far] = True
        new_centroids = np.stack([X[assign == c].mean(axis=0) for c in range(k)])
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if shift < 1e-6:
            break
    return ClusterAssignment(assignment=assign + 1)
