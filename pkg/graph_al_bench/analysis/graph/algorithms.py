"""
Pure graph algorithms used by the query strategies and the distance analysis.
"""
import logging
from typing import Dict, Iterable, List, Set, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .core import Graph

logger = logging.getLogger(__name__)


def _as_index_array(g: Graph, nodes: Iterable[int]) -> np.ndarray:
    idx = np.unique(np.asarray(list(nodes), dtype=np.int64))
    if idx.size and (idx[0] < 0 or idx[-1] >= g.n):
        raise IndexError(f"Node indices out of range for graph with {g.n} nodes")
    return idx


def bfs_distances(g: Graph, sources: Iterable[int], cap: int = 9) -> np.ndarray:
    """
    Hop distance on the undirected view from each node to its nearest source,
    clamped to ``cap``. Nodes with no path to any source get ``cap``.
    """
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    src = _as_index_array(g, sources)
    if src.size == 0:
        raise ValueError("bfs_distances needs at least one source")

    dist = dijkstra(g.undirected_csr, directed=False, indices=src,
                    unweighted=True, min_only=True, limit=cap)
    dist = np.where(np.isfinite(dist), dist, cap)
    return np.minimum(dist, cap).astype(np.int64)


def k_truss_scores(g: Graph) -> np.ndarray:
    """
    Node trussness on the undirected view.

    Edges are peeled in rounds: round k removes every edge left in fewer than
    k - 1 triangles, and those edges have trussness k. A node scores the max
    trussness of its edges, 0 when isolated.
    """
    csr = g.undirected_csr
    nbrs: List[Set[int]] = [set(csr.indices[csr.indptr[v]:csr.indptr[v + 1]].tolist())
                            for v in range(g.n)]
    support: Dict[Tuple[int, int], int] = {}
    for u in range(g.n):
        for v in nbrs[u]:
            if u < v:
                support[(u, v)] = len(nbrs[u] & nbrs[v])

    truss: Dict[Tuple[int, int], int] = {}
    k = 2
    while support:
        queue = [e for e, s in support.items() if s <= k - 2]
        while queue:
            e = queue.pop()
            if e not in support:
                continue
            u, v = e
            del support[e]
            truss[e] = k
            for w in nbrs[u] & nbrs[v]:
                for f in ((min(u, w), max(u, w)), (min(v, w), max(v, w))):
                    support[f] -= 1
                    if support[f] <= k - 2:
                        queue.append(f)
            nbrs[u].discard(v)
            nbrs[v].discard(u)
        k += 1

    scores = np.zeros(g.n, dtype=np.int64)
    for (u, v), t in truss.items():
        scores[u] = max(scores[u], t)
        scores[v] = max(scores[v], t)
    logger.debug(f"k-truss: max trussness {scores.max() if g.n else 0}")
    return scores


def region_matrix(g: Graph, hops: int = 1, direction: str = "undirected",
                  include_self: bool = False) -> sp.csr_matrix:
    """
    Binary N x N membership matrix; row i marks the region of node i.

    The region is every node within ``hops`` steps along ``direction``
    (undirected view, out-edges or in-edges), the focal node excluded unless
    ``include_self``.
    """
    if hops < 1:
        raise ValueError(f"hops must be >= 1, got {hops}")
    views = {"undirected": g.undirected_csr, "out": g.out_csr, "in": g.in_csr}
    try:
        step = views[direction]
    except KeyError:
        raise ValueError(f"Unknown region direction: {direction}") from None

    reach = step.copy()
    frontier = step
    for _ in range(hops - 1):
        frontier = (frontier @ step).tocsr()
        frontier.data[:] = 1.0
        reach = (reach + frontier).tocsr()
        reach.data[:] = 1.0

    reach = reach.tolil()
    reach.setdiag(1.0 if include_self else 0.0)
    reach = reach.tocsr()
    reach.eliminate_zeros()
    reach.sort_indices()
    return reach


def regional_phase_fraction(g: Graph) -> float:
    """Labeled fraction of one over the mean undirected degree."""
    if g.n == 0 or g.undirected_csr.nnz == 0:
        return 1.0
    return float(min(1.0, 1.0 / g.undirected_degree.mean()))
