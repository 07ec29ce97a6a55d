"""Evaluation of GCN predictions on held-out nodes."""
import logging
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, Mapping, Sequence, Union

import numpy as np
from sklearn.metrics import accuracy_score, f1_score

logger = logging.getLogger(__name__)

PROBA_FLOOR = 1e-12

Truth = Union[np.ndarray, Sequence[int], Mapping[int, int]]


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    micro_f1: float
    macro_f1: float
    mean_loss: float
    n_evaluated: int

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def _truth_for(truth: Truth, nodes: np.ndarray) -> np.ndarray:
    if isinstance(truth, Mapping):
        missing = [int(i) for i in nodes if int(i) not in truth]
        if missing:
            raise KeyError(f"No ground-truth label for nodes {missing[:5]}")
        return np.array([truth[int(i)] for i in nodes], dtype=np.int64)
    truth = np.asarray(truth)
    if nodes.size and nodes.max() >= truth.shape[0]:
        raise KeyError(f"No ground-truth label for node {int(nodes.max())}")
    y = truth[nodes]
    if (y < 0).any():
        raise KeyError("Evaluation set contains nodes without a ground-truth label")
    return y.astype(np.int64)


def evaluate(p: np.ndarray, truth: Truth, eval_set: Iterable[int]) -> EvalReport:
    """
    Accuracy, micro/macro F1 and mean cross-entropy over ``eval_set``.

    Args:
        p: N x C class probabilities
        truth: labels indexed by node (array with -1 for unknown, or a mapping)
        eval_set: node indices to score

    Returns:
        EvalReport; macro F1 averages over all C classes, absent ones counting 0
    """
    nodes = np.asarray(list(eval_set), dtype=np.int64)
    if nodes.size == 0:
        raise ValueError("Cannot evaluate on an empty node set")
    p = np.asarray(p, dtype=np.float64)
    y = _truth_for(truth, nodes)
    num_classes = p.shape[1]
    if y.max() >= num_classes:
        raise ValueError(f"Label {int(y.max())} outside the {num_classes} predicted classes")

    rows = p[nodes]
    # argmax returns the first maximum, i.e. the lowest class index on ties
    pred = rows.argmax(axis=1)
    labels = list(range(num_classes))
    loss = -np.log(np.maximum(rows[np.arange(nodes.size), y], PROBA_FLOOR)).mean()
    return EvalReport(
        accuracy=float(accuracy_score(y, pred)),
        micro_f1=float(f1_score(y, pred, labels=labels, average='micro', zero_division=0)),
        macro_f1=float(f1_score(y, pred, labels=labels, average='macro', zero_division=0)),
        mean_loss=float(loss),
        n_evaluated=int(nodes.size),
    )
