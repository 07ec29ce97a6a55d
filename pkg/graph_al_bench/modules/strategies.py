"""
Query strategies.

Every strategy maps the current state of an active-learning run to one score
per candidate node; the greedy rule then queries the highest scores. Scores
are oriented so that higher always means "query first".
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Callable, Dict, Iterable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve
from scipy.special import entr
from sklearn.neighbors import LocalOutlierFactor
from sklearn.preprocessing import minmax_scale

from ..analysis.graph.algorithms import bfs_distances, k_truss_scores, region_matrix
from ..analysis.graph.core import Graph
from ..analysis.graph.rank import RankVector, adaptive_pagerank, apr_query_scores, pagerank

if TYPE_CHECKING:
    from ..config import StrategyParams

logger = logging.getLogger(__name__)

STRATEGY_NAMES = (
    "random", "entropy", "margin", "centrality_pr", "geo_dist", "geo_centrality",
    "rep_mah", "rep_lof", "k_truss", "chang", "apr_ratio",
    "region_entropy", "region_margin", "region_entropy_ae", "region_margin_ae",
)


class UnknownStrategyError(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"Unknown strategy '{self.name}'; known strategies: {', '.join(STRATEGY_NAMES)}"


@dataclass(frozen=True)
class ScoreVector:
    values: np.ndarray
    candidates: np.ndarray
    strategy: str
    iteration: int = 0

    def __post_init__(self):
        if self.values.shape != self.candidates.shape:
            raise ValueError(f"{self.values.shape[0]} scores for {self.candidates.shape[0]} candidates")
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"Strategy '{self.strategy}' produced non-finite scores")


# --- local uncertainty -------------------------------------------------------

def _check_proba(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2:
        raise ValueError(f"Expected an N x C probability matrix, got shape {p.shape}")
    if (p < 0).any():
        raise ValueError("Probabilities must be non-negative")
    return p


def entropy_scores(p: np.ndarray) -> np.ndarray:
    """Shannon entropy per row in nats, with 0 ln 0 = 0."""
    return entr(_check_proba(p)).sum(axis=1)


def margin_scores(p: np.ndarray) -> np.ndarray:
    """
    1 - (p_first - p_second) per row, so the smallest margin scores highest.
    All-zero rows (isolated regional sentinel) score 0.
    """
    p = _check_proba(p)
    if p.shape[1] < 2:
        raise ValueError(f"Margin needs at least 2 classes, got {p.shape[1]}")
    top2 = -np.partition(-p, 1, axis=1)[:, :2]
    scores = 1.0 - (top2[:, 0] - top2[:, 1])
    return np.where(p.sum(axis=1) > 0, scores, 0.0)


# --- regional transforms -----------------------------------------------------

def _region(g: Graph, region: Optional[sp.csr_matrix]) -> sp.csr_matrix:
    return region_matrix(g) if region is None else region


def regional_average_proba(g: Graph, p: np.ndarray,
                           region: Optional[sp.csr_matrix] = None) -> np.ndarray:
    """Mean probability row over each node's region; nodes with an empty region get zeros."""
    p = _check_proba(p)
    members = _region(g, region)
    counts = np.diff(members.indptr).astype(np.float64)
    sums = members @ p
    return np.divide(sums, counts[:, None], out=np.zeros_like(sums), where=counts[:, None] > 0)


def regional_average_scores(g: Graph, s: np.ndarray,
                            region: Optional[sp.csr_matrix] = None) -> np.ndarray:
    """Mean of a per-node score over each node's region; empty regions score 0."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (g.n,):
        raise ValueError(f"Expected {g.n} scores, got shape {s.shape}")
    members = _region(g, region)
    counts = np.diff(members.indptr).astype(np.float64)
    sums = members @ s
    return np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)


# --- hybrids -----------------------------------------------------------------

def _normalized(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return minmax_scale(v) if v.size else v


def geo_centrality_scores(geo: np.ndarray, centrality: np.ndarray) -> np.ndarray:
    """0.7 * geo + 0.3 * centrality after min-max scaling each over the candidates."""
    geo, centrality = np.asarray(geo), np.asarray(centrality)
    if geo.shape != centrality.shape:
        raise ValueError(f"geo has {geo.shape} scores but centrality has {centrality.shape}")
    return 0.7 * _normalized(geo) + 0.3 * _normalized(centrality)


def chang_weights(t: int, budget: int):
    if budget <= 0:
        raise ValueError(f"budget must be > 0, got {budget}")
    if not 0 <= t <= budget:
        raise ValueError(f"iteration {t} outside 0..{budget}")
    progress = t / budget
    return 1.0 - progress, progress / 2.0, progress / 2.0


def chang_scores(centrality: np.ndarray, entropy: np.ndarray, density: np.ndarray,
                 t: int, budget: int) -> np.ndarray:
    """Linear schedule from pure centrality to half entropy, half density."""
    alpha, beta, delta = chang_weights(t, budget)
    if not (np.shape(centrality) == np.shape(entropy) == np.shape(density)):
        raise ValueError("chang inputs must cover the same candidates")
    return alpha * _normalized(centrality) + beta * _normalized(entropy) + delta * _normalized(density)


# --- representativeness ------------------------------------------------------

def mahalanobis_scores(reps: np.ndarray, labeled: Iterable[int],
                       candidates: Iterable[int]) -> np.ndarray:
    """Mahalanobis distance of each candidate to the labeled representations."""
    labeled = np.asarray(list(labeled), dtype=np.int64)
    candidates = np.asarray(list(candidates), dtype=np.int64)
    if labeled.size < 2:
        raise ValueError(f"Mahalanobis needs at least 2 labeled nodes, got {labeled.size}")
    ref = reps[labeled]
    mu = ref.mean(axis=0)
    cov = np.atleast_2d(np.cov(ref, rowvar=False))
    d = cov.shape[0]
    eps = max(1e-6 * np.trace(cov) / d, 1e-9)
    factor = cho_factor(cov + eps * np.eye(d))
    diff = reps[candidates] - mu
    sq = np.einsum('ij,ij->i', diff, cho_solve(factor, diff.T).T)
    return np.sqrt(np.maximum(sq, 0.0))


def lof_scores(reps: np.ndarray, labeled: Iterable[int], candidates: Iterable[int],
               k: int = 20) -> np.ndarray:
    """Local outlier factor of each candidate against the labeled reference set."""
    labeled = np.asarray(list(labeled), dtype=np.int64)
    candidates = np.asarray(list(candidates), dtype=np.int64)
    if k < 1 or labeled.size <= k:
        raise ValueError(f"LOF needs more than k={k} labeled nodes, got {labeled.size}")
    lof = LocalOutlierFactor(n_neighbors=k, novelty=True)
    lof.fit(reps[labeled])
    return -lof.score_samples(reps[candidates])


def _euclidean_to_labeled(reps: np.ndarray, labeled: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    if labeled.size == 0:
        return np.zeros(candidates.size)
    return np.linalg.norm(reps[candidates] - reps[labeled].mean(axis=0), axis=1)


# --- batch selection ---------------------------------------------------------

def select_batch(scores: np.ndarray, candidates: Iterable[int], b: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Top-b candidates by score, ties broken uniformly at random, best first."""
    scores = np.asarray(scores, dtype=np.float64)
    candidates = np.asarray(list(candidates), dtype=np.int64)
    if b < 1:
        raise ValueError(f"batch size must be >= 1, got {b}")
    if candidates.size < b:
        raise ValueError(f"Only {candidates.size} candidates left for a batch of {b}")
    if scores.shape != candidates.shape:
        raise ValueError(f"{scores.size} scores for {candidates.size} candidates")
    if not np.all(np.isfinite(scores)):
        raise ValueError("Cannot select from non-finite scores")
    order = np.lexsort((rng.random(candidates.size), -scores))
    return candidates[order[:b]]


# --- registry ----------------------------------------------------------------

class GraphCache:
    """Per-run graph quantities that do not depend on the labeled set."""

    def __init__(self, graph: Graph, params: "StrategyParams"):
        self.graph = graph
        self.params = params

    @cached_property
    def pagerank(self) -> RankVector:
        return pagerank(self.graph, gamma=self.params.gamma, tol=self.params.rank_tol,
                        max_iters=self.params.rank_max_iters)

    @cached_property
    def k_truss(self) -> np.ndarray:
        return k_truss_scores(self.graph)

    @cached_property
    def region(self) -> sp.csr_matrix:
        r = self.params.region
        return region_matrix(self.graph, hops=r.hops, direction=r.direction,
                             include_self=r.include_self)


@dataclass
class StrategyContext:
    """What a strategy may look at when scoring the pool."""
    cache: GraphCache
    labeled: np.ndarray
    candidates: np.ndarray
    iteration: int = 0
    budget: int = 1
    proba: Optional[np.ndarray] = None
    reps: Optional[np.ndarray] = None

    @property
    def graph(self) -> Graph:
        return self.cache.graph

    @property
    def params(self) -> "StrategyParams":
        return self.cache.params

    def require_model(self, name: str) -> None:
        if self.proba is None or self.reps is None:
            raise ValueError(f"Strategy '{name}' needs model outputs")


def _random(ctx: StrategyContext) -> np.ndarray:
    return np.zeros(ctx.candidates.size)


def _entropy(ctx):
    ctx.require_model("entropy")
    return entropy_scores(ctx.proba)[ctx.candidates]


def _margin(ctx):
    ctx.require_model("margin")
    return margin_scores(ctx.proba)[ctx.candidates]


def _centrality(ctx):
    return ctx.cache.pagerank.values[ctx.candidates]


def _geo_dist(ctx):
    if ctx.labeled.size == 0:
        return np.full(ctx.candidates.size, float(ctx.params.distance_cap))
    return bfs_distances(ctx.graph, ctx.labeled, ctx.params.distance_cap)[ctx.candidates].astype(float)


def _geo_centrality(ctx):
    return geo_centrality_scores(_geo_dist(ctx), _centrality(ctx))


def _rep_mah(ctx):
    ctx.require_model("rep_mah")
    if ctx.labeled.size < 2:
        logger.debug("rep_mah: fewer than 2 labeled nodes, using Euclidean distance")
        return _euclidean_to_labeled(ctx.reps, ctx.labeled, ctx.candidates)
    return mahalanobis_scores(ctx.reps, ctx.labeled, ctx.candidates)


def _rep_lof(ctx):
    ctx.require_model("rep_lof")
    k = min(ctx.params.lof_k, ctx.labeled.size - 1)
    if k < 1:
        logger.debug("rep_lof: too few labeled nodes, using Euclidean distance")
        return _euclidean_to_labeled(ctx.reps, ctx.labeled, ctx.candidates)
    return lof_scores(ctx.reps, ctx.labeled, ctx.candidates, k=k)


def _k_truss(ctx):
    return ctx.cache.k_truss[ctx.candidates].astype(float)


def _chang(ctx):
    ctx.require_model("chang")
    t = min(ctx.iteration, ctx.budget)
    return chang_scores(_centrality(ctx), _entropy(ctx), _rep_mah(ctx), t, max(ctx.budget, 1))


def _apr_ratio(ctx):
    pr = ctx.cache.pagerank
    apr = adaptive_pagerank(ctx.graph, ctx.labeled, pr, tol=ctx.params.rank_tol,
                            max_iters=ctx.params.rank_max_iters)
    return apr_query_scores(pr, apr, ctx.candidates)


def _region_entropy(ctx):
    ctx.require_model("region_entropy")
    return entropy_scores(regional_average_proba(ctx.graph, ctx.proba, ctx.cache.region))[ctx.candidates]


def _region_margin(ctx):
    ctx.require_model("region_margin")
    return margin_scores(regional_average_proba(ctx.graph, ctx.proba, ctx.cache.region))[ctx.candidates]


def _region_entropy_ae(ctx):
    ctx.require_model("region_entropy_ae")
    return regional_average_scores(ctx.graph, entropy_scores(ctx.proba), ctx.cache.region)[ctx.candidates]


def _region_margin_ae(ctx):
    ctx.require_model("region_margin_ae")
    return regional_average_scores(ctx.graph, margin_scores(ctx.proba), ctx.cache.region)[ctx.candidates]


STRATEGIES: Dict[str, Callable[[StrategyContext], np.ndarray]] = {
    "random": _random,
    "entropy": _entropy,
    "margin": _margin,
    "centrality_pr": _centrality,
    "geo_dist": _geo_dist,
    "geo_centrality": _geo_centrality,
    "rep_mah": _rep_mah,
    "rep_lof": _rep_lof,
    "k_truss": _k_truss,
    "chang": _chang,
    "apr_ratio": _apr_ratio,
    "region_entropy": _region_entropy,
    "region_margin": _region_margin,
    "region_entropy_ae": _region_entropy_ae,
    "region_margin_ae": _region_margin_ae,
}


def get_strategy(name: str) -> Callable[[StrategyContext], np.ndarray]:
    try:
        return STRATEGIES[name]
    except KeyError:
        raise UnknownStrategyError(name) from None


def score_candidates(name: str, ctx: StrategyContext) -> ScoreVector:
    values = np.asarray(get_strategy(name)(ctx), dtype=np.float64)
    return ScoreVector(values=values, candidates=ctx.candidates, strategy=name,
                       iteration=ctx.iteration)
