"""
Two-layer graph convolutional network.

Symmetric mode:       H1 = ReLU(S X W0),              logits = S H1 W1
Directed-split mode:  H1 = ReLU([S X W0 | K X W0]),   logits = S H1 W1 + K H1 W1

In split mode each layer's 2N x o output is rearranged to N x 2o, so W1 has
2 * hidden rows; the two N x C halves of the last layer are summed before
the softmax. Trained full-batch in float64 with Adam on the cross-entropy of
the training rows plus L2 weight decay on both layers.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sp
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..analysis.graph.core import Graph, NormalizedAdjacency, normalized_adjacency
from ..config import GcnConfig

logger = logging.getLogger(__name__)

Weights = Tuple[np.ndarray, np.ndarray]
DTYPE = torch.float64


class GcnTrainingError(RuntimeError):
    def __init__(self, message: str, epoch: Optional[int] = None):
        super().__init__(message)
        self.epoch = epoch


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    kind: str  # "neighbor-labels" or "bag-of-words"

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape


def neighbor_label_features(g: Graph, known_labels: Mapping[int, int], num_classes: int,
                            normalize: bool = False) -> FeatureMatrix:
    """
    Row i, column c counts the undirected neighbors of i labeled c.

    With ``normalize`` each non-zero row is scaled to sum to one.
    """
    nodes = np.fromiter(known_labels.keys(), dtype=np.int64, count=len(known_labels))
    classes = np.fromiter(known_labels.values(), dtype=np.int64, count=len(known_labels))
    if classes.size and (classes.min() < 0 or classes.max() >= num_classes):
        bad = classes[(classes < 0) | (classes >= num_classes)][0]
        raise ValueError(f"Class {bad} out of range for {num_classes} classes")
    if nodes.size and (nodes.min() < 0 or nodes.max() >= g.n):
        raise IndexError(f"Labeled node index out of range for graph with {g.n} nodes")

    one_hot = sp.csr_matrix((np.ones(nodes.size), (nodes, classes)), shape=(g.n, num_classes))
    counts = np.asarray((g.undirected_csr @ one_hot).todense(), dtype=np.float64)
    if normalize:
        totals = counts.sum(axis=1, keepdims=True)
        counts = np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
    return FeatureMatrix(values=counts, kind="neighbor-labels")


def to_torch_sparse(m: sp.spmatrix) -> torch.Tensor:
    coo = m.tocoo()
    indices = torch.from_numpy(np.vstack([coo.row, coo.col]).astype(np.int64))
    values = torch.from_numpy(coo.data.astype(np.float64))
    return torch.sparse_coo_tensor(indices, values, coo.shape, dtype=DTYPE).coalesce()


@dataclass(frozen=True)
class TorchAdjacency:
    """S and, in directed-split mode, K as torch sparse tensors."""
    symmetric: torch.Tensor
    anti_symmetric: Optional[torch.Tensor] = None

    @classmethod
    def from_normalized(cls, adj: NormalizedAdjacency) -> 'TorchAdjacency':
        k = to_torch_sparse(adj.anti_symmetric) if adj.is_split else None
        return cls(symmetric=to_torch_sparse(adj.symmetric), anti_symmetric=k)

    @property
    def is_split(self) -> bool:
        return self.anti_symmetric is not None


class GCN(nn.Module):
    """Bias-free two-layer GCN; ``forward`` returns the N x C logits."""

    def __init__(self, n_features: int, hidden: int, num_classes: int,
                 dropout: float = 0.0, split: bool = False):
        super().__init__()
        self.dropout = dropout
        self.layer0 = nn.Linear(n_features, hidden, bias=False, dtype=DTYPE)
        self.layer1 = nn.Linear(2 * hidden if split else hidden, num_classes, bias=False, dtype=DTYPE)
        nn.init.xavier_uniform_(self.layer0.weight)
        nn.init.xavier_uniform_(self.layer1.weight)

    def forward(self, x: torch.Tensor, adj: TorchAdjacency) -> torch.Tensor:
        x = F.dropout(x, self.dropout, training=self.training)
        xw = self.layer0(x)
        h = torch.sparse.mm(adj.symmetric, xw)
        if adj.is_split:
            h = torch.cat([h, torch.sparse.mm(adj.anti_symmetric, xw)], dim=1)
        h = F.dropout(F.relu(h), self.dropout, training=self.training)
        hw = self.layer1(h)
        logits = torch.sparse.mm(adj.symmetric, hw)
        if adj.is_split:
            logits = logits + torch.sparse.mm(adj.anti_symmetric, hw)
        return logits

    def get_weights(self) -> Weights:
        """(W0, W1) in input x output layout."""
        return (self.layer0.weight.detach().T.numpy().copy(),
                self.layer1.weight.detach().T.numpy().copy())

    def set_weights(self, weights: Weights) -> None:
        with torch.no_grad():
            for layer, w in zip((self.layer0, self.layer1), weights):
                w = torch.as_tensor(np.asarray(w), dtype=DTYPE).T
                if w.shape != layer.weight.shape:
                    raise ValueError(f"Weight of shape {tuple(w.T.shape)} does not fit "
                                     f"layer {tuple(layer.weight.T.shape)}")
                layer.weight.copy_(w)


def training_loss(net: GCN, logits: torch.Tensor, train_idx: torch.Tensor,
                  train_y: torch.Tensor, weight_decay: float) -> torch.Tensor:
    """Mean cross-entropy on ``train_idx`` plus (weight_decay / 2) * sum ||W||^2."""
    ce = F.cross_entropy(logits[train_idx], train_y)
    l2 = sum(p.pow(2).sum() for p in net.parameters())
    return ce + 0.5 * weight_decay * l2


@dataclass
class TrainedModel:
    network: GCN
    adjacency: NormalizedAdjacency
    features: np.ndarray
    num_classes: int
    config: GcnConfig
    losses: List[float] = field(default_factory=list)
    val_accuracy: List[float] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def weights(self) -> Weights:
        return self.network.get_weights()

    def history(self) -> pd.DataFrame:
        return pd.DataFrame({
            'epoch': np.arange(1, len(self.losses) + 1),
            'loss': self.losses,
            'val_accuracy': self.val_accuracy or [np.nan] * len(self.losses),
        })


def split_validation(labeled: np.ndarray, fraction: float,
                     rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Carve a validation subset out of the labeled nodes (none below 10 labels)."""
    if labeled.size < 10 or fraction <= 0:
        return labeled, np.empty(0, dtype=np.int64)
    n_val = max(1, int(round(fraction * labeled.size)))
    order = rng.permutation(labeled.size)
    return np.sort(labeled[order[n_val:]]), np.sort(labeled[order[:n_val]])


def train(g: Graph, x0: FeatureMatrix, labels: Mapping[int, int], cfg: GcnConfig,
          num_classes: Optional[int] = None,
          adjacency: Optional[NormalizedAdjacency] = None,
          initial_weights: Optional[Weights] = None) -> TrainedModel:
    """
    Fit a fresh GCN on the labeled nodes and return the best-validation snapshot.

    Without a validation split (fewer than 10 labels) the final epoch is kept.
    Weight init and dropout are seeded with ``cfg.seed`` inside a forked
    torch RNG, so the caller's torch RNG state is restored afterwards.
    """
    if not labels:
        raise ValueError("Cannot train a GCN on an empty label map")
    if x0.values.shape[0] != g.n:
        raise ValueError(f"Feature matrix has {x0.values.shape[0]} rows for {g.n} nodes")

    nodes = np.fromiter(labels.keys(), dtype=np.int64, count=len(labels))
    y = np.fromiter(labels.values(), dtype=np.int64, count=len(labels))
    if num_classes is None:
        num_classes = x0.values.shape[1] if x0.kind == "neighbor-labels" else int(y.max()) + 1
    if y.min() < 0 or y.max() >= num_classes:
        raise ValueError(f"Training labels must lie in 0..{num_classes - 1}")

    adj = adjacency or normalized_adjacency(g, cfg.adjacency_mode.value)
    rng = np.random.default_rng(cfg.seed)
    label_of = dict(zip(nodes.tolist(), y.tolist()))
    train_idx, val_idx = split_validation(np.sort(nodes), cfg.validation_fraction, rng)
    train_y = torch.as_tensor([label_of[i] for i in train_idx], dtype=torch.int64)
    val_y = np.array([label_of[i] for i in val_idx], dtype=np.int64)
    train_idx_t = torch.as_tensor(train_idx, dtype=torch.int64)

    features = x0.values
    x = torch.as_tensor(features, dtype=DTYPE)
    tadj = TorchAdjacency.from_normalized(adj)

    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(cfg.seed)
        net = GCN(features.shape[1], cfg.hidden, num_classes, cfg.dropout, adj.is_split)
        if initial_weights is not None:
            net.set_weights(initial_weights)
        model = TrainedModel(network=net, adjacency=adj, features=features,
                             num_classes=num_classes, config=cfg)
        optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
        best_state, best_acc = None, -1.0

        for epoch in range(1, cfg.epochs + 1):
            net.train()
            optimizer.zero_grad()
            loss = training_loss(net, net(x, tadj), train_idx_t, train_y, cfg.weight_decay)
            if not torch.isfinite(loss):
                raise GcnTrainingError(f"Loss became {loss.item()} at epoch {epoch}", epoch=epoch)
            loss.backward()
            optimizer.step()
            model.losses.append(float(loss.item()))

            if val_idx.size:
                net.eval()
                with torch.no_grad():
                    pred = net(x, tadj)[torch.as_tensor(val_idx)].argmax(dim=1).numpy()
                acc = float((pred == val_y).mean())
                model.val_accuracy.append(acc)
                if acc > best_acc:
                    best_acc, model.best_epoch = acc, epoch
                    best_state = {k: v.detach().clone() for k, v in net.state_dict().items()}

    if best_state is not None:
        net.load_state_dict(best_state)
    else:
        model.best_epoch = cfg.epochs
    net.eval()
    logger.debug(f"GCN trained on {train_idx.size} nodes ({val_idx.size} validation), "
                 f"best epoch {model.best_epoch}, final loss {model.losses[-1]:.4f}")
    return model


def _logits(m: TrainedModel) -> torch.Tensor:
    m.network.eval()
    with torch.no_grad():
        return m.network(torch.as_tensor(m.features, dtype=DTYPE),
                         TorchAdjacency.from_normalized(m.adjacency))


def representations(m: TrainedModel) -> np.ndarray:
    """Pre-softmax logits, N x C."""
    return _logits(m).numpy()


def predict_proba(m: TrainedModel) -> np.ndarray:
    return torch.softmax(_logits(m), dim=1).numpy()


def dump_weights(m: TrainedModel, directory: Path) -> List[Path]:
    """Write each layer's weight matrix to ``layer<k>.csv``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, w in enumerate(m.weights):
        path = directory / f"layer{k}.csv"
        pd.DataFrame(w).to_csv(path, index=False, header=False)
        paths.append(path)
    return paths
