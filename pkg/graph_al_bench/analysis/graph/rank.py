"""
PageRank and Adaptive PageRank (APR).

APR pins labeled nodes at their PageRank and lets the rest of the graph
settle around them: unlabeled nodes forward rank only to unlabeled
out-neighbors, since labeled nodes already hold a fixed value. Nodes near
labeled nodes therefore end up with APR above PR, while components with no
labeled node keep APR == PR. The PR/APR ratio is highest for central nodes
outside the labeled nodes' reach.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import pandas as pd
import scipy.sparse as sp

from .core import Graph, transition_parts

logger = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """Power iteration did not reach the tolerance within max_iters."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class RankVector:
    values: np.ndarray
    gamma: float
    kind: str  # "PR" or "APR"

    def __len__(self) -> int:
        return int(self.values.shape[0])


def _check_gamma(gamma: float, tol: float) -> None:
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")


def pagerank(g: Graph, gamma: float = 0.85, tol: float = 1e-10,
             max_iters: int = 10_000) -> RankVector:
    """
    Power iteration for pr = gamma * Abar^T pr + (1 - gamma) / N.

    Abar is the random-walk matrix with dangling rows spread uniformly; the
    dangling part is applied as a scalar instead of materialised.
    """
    _check_gamma(gamma, tol)
    n = g.n
    if n == 0:
        return RankVector(values=np.empty(0), gamma=gamma, kind="PR")

    transition, dangling = transition_parts(g)
    transition_t = transition.T.tocsr()
    teleport = (1.0 - gamma) / n
    x = np.full(n, 1.0 / n)
    residual = np.inf
    for iteration in range(1, max_iters + 1):
        new = gamma * (transition_t @ x + x[dangling].sum() / n) + teleport
        residual = float(np.abs(new - x).max())
        x = new
        if residual < tol:
            logger.debug(f"PageRank converged in {iteration} iterations (residual {residual:.2e})")
            return RankVector(values=x / x.sum(), gamma=gamma, kind="PR")

    raise ConvergenceError(
        f"PageRank did not converge in {max_iters} iterations (residual {residual:.3e})",
        residual=residual, iterations=max_iters,
    )


def labeled_aware_transition(g: Graph, labeled_mask: np.ndarray) -> sp.csr_matrix:
    """
    Transition matrix of the APR walk.

    Labeled rows are the ordinary D^-1 A rows. An unlabeled row spreads over
    its unlabeled out-neighbors only; it is empty when the node is dangling
    or points at labeled nodes alone.
    """
    keep_cols = sp.diags((~labeled_mask).astype(np.float64))
    to_unlabeled = (g.out_csr @ keep_cols).tocsr()
    to_unlabeled.eliminate_zeros()
    u_degree = np.diff(to_unlabeled.indptr).astype(np.float64)
    out_degree = g.out_degree.astype(np.float64)

    row_scale = np.where(labeled_mask,
                         np.divide(1.0, out_degree, out=np.zeros_like(out_degree), where=out_degree > 0),
                         0.0)
    labeled_rows = sp.diags(row_scale) @ g.out_csr
    u_scale = np.where(~labeled_mask,
                       np.divide(1.0, u_degree, out=np.zeros_like(u_degree), where=u_degree > 0),
                       0.0)
    unlabeled_rows = sp.diags(u_scale) @ to_unlabeled
    return (labeled_rows + unlabeled_rows).tocsr()


def _labeled_mask(g: Graph, labeled: Iterable[int]) -> np.ndarray:
    idx = np.asarray(list(labeled), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= g.n):
        raise IndexError(f"Labeled index out of range for graph with {g.n} nodes")
    mask = np.zeros(g.n, dtype=bool)
    mask[idx] = True
    return mask


def apr_constant(g: Graph, pr: RankVector) -> float:
    """Teleport plus dangling inflow every node receives at the PageRank fixed point."""
    _, dangling = transition_parts(g)
    return (1.0 - pr.gamma) / g.n + pr.gamma * float(pr.values[dangling].sum()) / g.n


def adaptive_pagerank(g: Graph, labeled: Iterable[int], pr: RankVector,
                      gamma: Optional[float] = None, tol: float = 1e-10,
                      max_iters: int = 10_000) -> RankVector:
    """
    Fixed point of APR(U) = gamma * T^T_{U:L} PR(L) + gamma * T^T_{U:U} APR(U) + c
    with APR(L) pinned to PR(L).

    T is ``labeled_aware_transition`` and c the per-node constant of the
    PageRank fixed point, so an empty labeled set reproduces ``pr``.
    """
    gamma = pr.gamma if gamma is None else gamma
    _check_gamma(gamma, tol)
    if len(pr) != g.n:
        raise ValueError(f"PageRank vector has {len(pr)} entries for a graph with {g.n} nodes")
    if not np.isclose(gamma, pr.gamma):
        raise ValueError(f"APR gamma {gamma} differs from the PageRank gamma {pr.gamma}")

    mask = _labeled_mask(g, labeled)
    unlabeled = ~mask
    transition_t = labeled_aware_transition(g, mask).T.tocsr()
    constant = apr_constant(g, pr)

    x = np.where(mask, pr.values, 0.0)
    residual = np.inf
    for iteration in range(1, max_iters + 1):
        new_u = gamma * (transition_t @ x)[unlabeled] + constant
        residual = float(np.abs(new_u - x[unlabeled]).max()) if unlabeled.any() else 0.0
        if residual < tol:
            logger.debug(f"APR converged in {iteration} iterations with {int(mask.sum())} labeled")
            return RankVector(values=x, gamma=gamma, kind="APR")
        x[unlabeled] = new_u

    raise ConvergenceError(
        f"APR did not converge in {max_iters} iterations (residual {residual:.3e})",
        residual=residual, iterations=max_iters,
    )


def apr_query_scores(pr: RankVector, apr: RankVector, candidates: Iterable[int]) -> np.ndarray:
    """PR / APR over ``candidates``; higher means central yet outside the labeled reach."""
    if len(pr) != len(apr):
        raise ValueError(f"PR has {len(pr)} entries but APR has {len(apr)}")
    idx = np.asarray(list(candidates), dtype=np.int64)
    return pr.values[idx] / apr.values[idx]


def rank_table(g: Graph, labeled: Iterable[int], gamma: float = 0.85,
               tol: float = 1e-10, max_iters: int = 10_000) -> pd.DataFrame:
    """``node_id, pr, apr, ratio`` for every node."""
    labeled = list(labeled)
    pr = pagerank(g, gamma=gamma, tol=tol, max_iters=max_iters)
    apr = adaptive_pagerank(g, labeled, pr, tol=tol, max_iters=max_iters)
    return pd.DataFrame({
        'node_id': list(g.node_ids),
        'pr': pr.values,
        'apr': apr.values,
        'ratio': pr.values / apr.values,
    })
