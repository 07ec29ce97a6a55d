from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from graph_al_bench.analysis.graph.core import Graph, build_graph
from graph_al_bench.analysis.graph.generators import sbm_generate
from graph_al_bench.config import GcnConfig
from graph_al_bench.data_providers import DatasetBundle, save_bundle

settings.register_profile("ci", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


def graph_from_edges(edges, n=None) -> Graph:
    """Graph whose index i is node id str(i)."""
    if n is None:
        n = max(max(e) for e in edges) + 1 if edges else 0
    return build_graph([(str(a), str(b)) for a, b in edges],
                       node_order=[str(i) for i in range(n)])


def undirected(edges):
    return [e for a, b in edges for e in ((a, b), (b, a))]


def random_graph(seed: int, n: int = 20, p: float = 0.15, directed: bool = True) -> Graph:
    """Erdos-Renyi draw over n nodes."""
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    if not directed:
        mask = np.triu(mask)
        mask = mask | mask.T
    src, dst = np.nonzero(mask)
    return graph_from_edges(list(zip(src.tolist(), dst.tolist())), n=n)


@pytest.fixture
def two_cliques() -> Graph:
    """Two disjoint 4-cliques: nodes 0-3 and 4-7."""
    edges = []
    for block in (range(0, 4), range(4, 8)):
        edges += [(a, b) for a in block for b in block if a != b]
    return graph_from_edges(edges, n=8)


@pytest.fixture
def path_graph() -> Graph:
    """0 - 1 - 2 - 3 - 4 (both directions)."""
    return graph_from_edges(undirected([(0, 1), (1, 2), (2, 3), (3, 4)]), n=5)


@pytest.fixture
def sbm_bundle() -> DatasetBundle:
    graph, labels = sbm_generate([50, 50], 0.4, 0.01, seed=3)
    return DatasetBundle(name="sbm", graph=graph, labels=labels, class_names=("a", "b"))


@pytest.fixture
def fast_gcn() -> GcnConfig:
    return GcnConfig(epochs=60, hidden=8)


@pytest.fixture
def dataset_dir(tmp_path: Path, sbm_bundle: DatasetBundle) -> Path:
    directory = tmp_path / "sbm"
    save_bundle(sbm_bundle, directory)
    return directory
