"""
Synthetic graphs with planted classes.
"""
import logging
from typing import Sequence, Tuple

import networkx as nx
import numpy as np

from .core import Graph, build_graph

logger = logging.getLogger(__name__)


def sbm_generate(block_sizes: Sequence[int],
                 within_prob: float,
                 between_prob: float,
                 directed: bool = False,
                 seed: int = 0) -> Tuple[Graph, np.ndarray]:
    """
    Stochastic block model graph; the block index is the ground-truth label.

    Node ids are the decimal node numbers, so index i is node id ``str(i)``.
    Undirected draws are stored as both directed edges.
    """
    for name, p in (("within_prob", within_prob), ("between_prob", between_prob)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {p}")
    sizes = [int(s) for s in block_sizes]
    if not sizes or min(sizes) < 1:
        raise ValueError(f"block sizes must all be >= 1, got {list(block_sizes)}")

    probs = np.full((len(sizes), len(sizes)), between_prob)
    np.fill_diagonal(probs, within_prob)
    nx_graph = nx.stochastic_block_model(sizes, probs.tolist(), seed=seed,
                                         directed=directed, selfloops=False)

    pairs = []
    for u, v in sorted(nx_graph.edges()):
        pairs.append((str(u), str(v)))
        if not directed:
            pairs.append((str(v), str(u)))

    graph = build_graph(pairs, node_order=[str(i) for i in range(sum(sizes))])
    labels = np.repeat(np.arange(len(sizes)), sizes)
    logger.debug(f"SBM {sizes}: {graph.num_edges} directed edges (seed={seed})")
    return graph, labels

