"""
Bookkeeping of one active-learning run: who is labeled, who may be queried,
and who is held out.
"""
import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Protocol as TypingProtocol

import numpy as np

logger = logging.getLogger(__name__)


class PoolExhaustedError(RuntimeError):
    """The query pool ran dry before the stop rule was reached."""


class Oracle(TypingProtocol):
    """Source of labels for queried nodes."""

    def query(self, node: int) -> int:
        ...


class GroundTruthOracle:
    """Answers queries from the ground-truth labels; never labels reserved nodes."""

    def __init__(self, labels: np.ndarray, reserved: Iterable[int] = ()):
        self.labels = labels
        self.reserved = frozenset(int(i) for i in reserved)
        self.queries = 0

    def query(self, node: int) -> int:
        node = int(node)
        if node in self.reserved:
            raise ValueError(f"Node {node} is reserved for evaluation and cannot be queried")
        self.queries += 1
        return int(self.labels[node])


@dataclass
class ALState:
    """
    Labeled set (in query order, with the iteration each node was added),
    candidate pool, and the optional reserved test and validation sets.
    """
    n: int
    test: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    validation: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    labeled: List[int] = field(default_factory=list)
    stamps: List[int] = field(default_factory=list)

    def __post_init__(self):
        self._in_pool = np.ones(self.n, dtype=bool)
        self._in_pool[self.test] = False
        self._in_pool[self.validation] = False
        self.check_invariants()

    @property
    def pool(self) -> np.ndarray:
        return np.flatnonzero(self._in_pool)

    @property
    def labeled_array(self) -> np.ndarray:
        return np.asarray(self.labeled, dtype=np.int64)

    @property
    def unlabeled(self) -> np.ndarray:
        """Every node not labeled, reserved nodes included."""
        mask = np.ones(self.n, dtype=bool)
        mask[self.labeled_array] = False
        return np.flatnonzero(mask)

    def move(self, nodes: Iterable[int], iteration: int) -> None:
        """Move ``nodes`` from the pool to the labeled set."""
        nodes = [int(i) for i in nodes]
        if len(set(nodes)) != len(nodes):
            raise ValueError(f"Duplicate nodes in batch {nodes}")
        outside = [i for i in nodes if not self._in_pool[i]]
        if outside:
            raise ValueError(f"Nodes {outside} are not in the pool")
        self._in_pool[nodes] = False
        self.labeled.extend(nodes)
        self.stamps.extend([iteration] * len(nodes))

    def check_invariants(self) -> None:
        labeled = self.labeled_array
        reserved = np.concatenate([self.test, self.validation]).astype(np.int64)
        counts = np.bincount(np.concatenate([labeled, reserved, self.pool]), minlength=self.n)
        if counts.max(initial=0) > 1:
            raise AssertionError(f"Labeled, pool and reserved sets overlap at nodes "
                                 f"{np.flatnonzero(counts > 1)[:5].tolist()}")


def initial_seed(labels: np.ndarray, pool: np.ndarray, rng: np.random.Generator,
                 num_classes: Optional[int] = None) -> List[int]:
    """One uniformly drawn pool node per class, in class order."""
    pool = np.asarray(pool, dtype=np.int64)
    num_classes = int(labels.max()) + 1 if num_classes is None else num_classes
    pool_labels = labels[pool]
    seeds = []
    for c in range(num_classes):
        members = pool[pool_labels == c]
        if members.size == 0:
            raise ValueError(f"Class {c} has no node in the query pool")
        seeds.append(int(rng.choice(members)))
    return seeds
