"""Label sources: ground-truth simulation and a human annotation queue.

The active-learning loop is batch-synchronous: a queued batch must be fully
answered before the model updates and the next batch is selected.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dataset import PartialLabels
from .strategy import QueryBatch


@dataclass(frozen=True)
class OracleAnswer:
    index: int
    label: int
    latency: float | None = None

    def __post_init__(self):
        if self.label < 1:
            raise ValueError("oracle answers carry real labels (never 0)")


class SimulatedOracle:
    """Discloses labels from a fully labeled ground truth."""

    def __init__(self, ground_truth: PartialLabels):
        if not ground_truth.is_fully_labeled():
            raise ValueError("simulated oracle needs a fully labeled ground truth")
        self.ground_truth = ground_truth

    def answer(self, batch: QueryBatch) -> list[OracleAnswer]:
        return [
            OracleAnswer(index=int(i), label=int(self.ground_truth.labels[i]))
            for i in batch.indices
        ]


def simulated_answer(batch: QueryBatch, ground_truth: PartialLabels) -> list[OracleAnswer]:
    """Echo ground-truth labels for exactly the batch indices, in order."""
    return SimulatedOracle(ground_truth).answer(batch)


class AnnotationQueue:
    """Pending/answered bookkeeping for one human-labeled batch at a time."""

    def __init__(self, num_classes: int | None = None):
        self.num_classes = num_classes
        self._batch_order: list[int] = []
        self.pending: set[int] = set()
        self.answered: dict[int, int] = {}

    def enqueue(self, batch: QueryBatch) -> None:
        if self.pending:
            raise ValueError("previous batch still has pending elements")
        self._batch_order = [int(i) for i in batch.indices]
        self.pending = set(self._batch_order)

    def submit(self, index: int, label: int) -> None:
        if index not in self.pending:
            if index in self.answered:
                raise ValueError(f"element {index} was already answered")
            raise ValueError(f"element {index} is not pending")
        if label < 1 or (self.num_classes is not None and label > self.num_classes):
            raise ValueError(f"label {label} outside 1..{self.num_classes}")
        self.pending.discard(index)
        self.answered[index] = label

    def drain_complete(self) -> list[OracleAnswer] | None:
        """Answers for the whole batch in query order, or None while short."""
        if self.pending or not self._batch_order:
            return None
        answers = [OracleAnswer(index=i, label=self.answered[i]) for i in self._batch_order]
        self._batch_order = []
        return answers

    @property
    def pending_ordered(self) -> list[int]:
        return [i for i in self._batch_order if i in self.pending]
