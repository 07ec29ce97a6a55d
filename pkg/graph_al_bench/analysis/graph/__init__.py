"""
Graph Analysis Module for graph-al-bench.
Sparse directed graphs, derived operators, ranking and synthetic generators.
"""
from .algorithms import bfs_distances, k_truss_scores, region_matrix, regional_phase_fraction
from .core import (
    EdgeListParseError,
    Graph,
    LoadStats,
    NormalizedAdjacency,
    build_graph,
    load_edge_list,
    normalized_adjacency,
    random_walk_matrix,
    read_edge_pairs,
    undirected_neighbors,
)
from .generators import sbm_generate
from .rank import (
    ConvergenceError,
    RankVector,
    adaptive_pagerank,
    apr_query_scores,
    pagerank,
    rank_table,
)

__all__ = [
    'ConvergenceError',
    'EdgeListParseError',
    'Graph',
    'LoadStats',
    'NormalizedAdjacency',
    'RankVector',
    'adaptive_pagerank',
    'apr_query_scores',
    'bfs_distances',
    'build_graph',
    'k_truss_scores',
    'load_edge_list',
    'normalized_adjacency',
    'pagerank',
    'random_walk_matrix',
    'rank_table',
    'read_edge_pairs',
    'region_matrix',
    'regional_phase_fraction',
    'sbm_generate',
    'undirected_neighbors',
]
