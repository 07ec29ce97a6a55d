import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from graph_al_bench.analysis.graph.algorithms import (
    bfs_distances,
    k_truss_scores,
    region_matrix,
    regional_phase_fraction,
)
from graph_al_bench.analysis.graph.generators import sbm_generate
from tests.conftest import graph_from_edges, random_graph, undirected


@pytest.mark.parametrize("sources,cap,expected", [
    ([0], 9, [0, 1, 2, 3, 4]),
    ([0], 2, [0, 1, 2, 2, 2]),
    ([0, 4], 9, [0, 1, 2, 1, 0]),
    ([2], 1, [1, 1, 0, 1, 1]),
])
def test_bfs_distances_on_path(path_graph, sources, cap, expected):
    assert bfs_distances(path_graph, sources, cap).tolist() == expected


def test_bfs_distances_ignores_direction():
    g = graph_from_edges([(0, 1), (1, 2)])
    assert bfs_distances(g, [2]).tolist() == [2, 1, 0]


def test_unreachable_nodes_get_cap(two_cliques):
    d = bfs_distances(two_cliques, [0], cap=9)
    assert d[:4].tolist() == [0, 1, 1, 1]
    assert d[4:].tolist() == [9, 9, 9, 9]


def test_bfs_distances_rejects_bad_input(path_graph):
    with pytest.raises(ValueError):
        bfs_distances(path_graph, [])
    with pytest.raises(ValueError):
        bfs_distances(path_graph, [0], cap=0)
    with pytest.raises(IndexError):
        bfs_distances(path_graph, [7])


@given(st.integers(0, 10_000))
def test_bfs_matches_networkx(seed):
    g = random_graph(seed, n=25, p=0.08)
    nxg = nx.Graph()
    nxg.add_nodes_from(range(g.n))
    nxg.add_edges_from(g.edges.tolist())
    lengths = nx.multi_source_dijkstra_path_length(nxg, {0, 5})
    expected = [min(lengths.get(v, 9), 9) for v in range(g.n)]
    assert bfs_distances(g, [0, 5], cap=9).tolist() == expected


@pytest.mark.parametrize("edges,n,expected", [
    # triangle with a pendant edge
    (undirected([(0, 1), (1, 2), (0, 2), (2, 3)]), 5, [3, 3, 3, 2, 0]),
    # 4-clique
    (undirected([(a, b) for a in range(4) for b in range(a + 1, 4)]), 4, [4, 4, 4, 4]),
    # a single directed edge still forms a 2-truss
    ([(0, 1)], 2, [2, 2]),
])
def test_k_truss_worked_examples(edges, n, expected):
    assert k_truss_scores(graph_from_edges(edges, n=n)).tolist() == expected


def _networkx_trussness(g):
    nxg = nx.Graph()
    nxg.add_nodes_from(range(g.n))
    nxg.add_edges_from(g.edges.tolist())
    scores = np.zeros(g.n, dtype=np.int64)
    k = 2
    while True:
        truss = nx.k_truss(nxg, k)
        if truss.number_of_edges() == 0:
            return scores
        scores[list(truss.nodes)] = k
        k += 1


@given(st.integers(0, 10_000))
def test_k_truss_matches_networkx(seed):
    g = random_graph(seed, n=14, p=0.35, directed=False)
    assert k_truss_scores(g).tolist() == _networkx_trussness(g).tolist()


def test_k_truss_on_sbm_matches_networkx():
    g, _ = sbm_generate([12, 12], 0.6, 0.05, seed=1)
    assert k_truss_scores(g).tolist() == _networkx_trussness(g).tolist()


def _rows(r):
    return [sorted(r.indices[r.indptr[i]:r.indptr[i + 1]].tolist()) for i in range(r.shape[0])]


def test_region_matrix_one_hop(path_graph):
    assert _rows(region_matrix(path_graph)) == [[1], [0, 2], [1, 3], [2, 4], [3]]


def test_region_matrix_two_hops_excludes_self(path_graph):
    rows = _rows(region_matrix(path_graph, hops=2))
    assert rows[0] == [1, 2]
    assert rows[2] == [0, 1, 3, 4]


def test_region_matrix_include_self(path_graph):
    assert _rows(region_matrix(path_graph, include_self=True))[0] == [0, 1]


def test_region_matrix_directions():
    g = graph_from_edges([(0, 1), (1, 2)])
    assert _rows(region_matrix(g, direction="out")) == [[1], [2], []]
    assert _rows(region_matrix(g, direction="in")) == [[], [0], [1]]
    with pytest.raises(ValueError):
        region_matrix(g, direction="sideways")
    with pytest.raises(ValueError):
        region_matrix(g, hops=0)


def test_regional_phase_fraction(path_graph, two_cliques):
    # mean degree 1.6 on the 5-path
    assert regional_phase_fraction(path_graph) == pytest.approx(0.625)
    assert regional_phase_fraction(two_cliques) == pytest.approx(1 / 3)
    assert regional_phase_fraction(graph_from_edges([], n=3)) == 1.0


def test_sbm_same_seed_gives_same_edges():
    first, labels = sbm_generate([20, 20], 0.3, 0.05, seed=11)
    second, _ = sbm_generate([20, 20], 0.3, 0.05, seed=11)
    assert (first.out_csr != second.out_csr).nnz == 0
    assert labels.tolist() == [0] * 20 + [1] * 20


def test_sbm_certain_within_and_no_between_gives_disjoint_cliques():
    g, labels = sbm_generate([4, 5], 1.0, 0.0, seed=0)
    dense = g.out_csr.toarray().astype(bool)
    same_block = labels[:, None] == labels[None, :]
    np.fill_diagonal(same_block, False)
    assert (dense == same_block).all()


def test_sbm_edge_count_is_binomial():
    g, _ = sbm_generate([40], 0.5, 0.0, seed=4)
    pairs = 40 * 39 // 2
    mean, sd = 0.5 * pairs, np.sqrt(0.25 * pairs)
    # undirected draws are stored in both directions
    assert abs(g.num_edges / 2 - mean) <= 4 * sd


@pytest.mark.parametrize("within,between", [(1.5, 0.1), (0.5, -0.1)])
def test_sbm_rejects_invalid_probability(within, between):
    with pytest.raises(ValueError):
        sbm_generate([10, 10], within, between)
