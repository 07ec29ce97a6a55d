"""
Sparse directed graph and the matrices derived from it.

A ``Graph`` is immutable: out- and in-neighbor CSR structures are built once
at construction and every derived operator is a pure function of it.
"""
import io
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

TextSource = Union[str, Path, TextIO, Iterable[str]]


class EdgeListParseError(ValueError):
    """Raised on a malformed edge-list line."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        super().__init__(message)
        self.line_number = line_number


@dataclass(frozen=True)
class LoadStats:
    """Cleanup counts reported by ``load_edge_list``."""
    raw_edges: int = 0
    self_loops: int = 0
    duplicates: int = 0


@dataclass(frozen=True)
class Graph:
    """Directed simple graph over node indices ``0..n-1``."""
    n: int
    edges: np.ndarray  # (E, 2) int64, unique, no self-loops
    node_ids: Tuple[str, ...]
    stats: LoadStats = field(default=LoadStats(), compare=False)

    def __post_init__(self):
        if len(self.node_ids) != self.n:
            raise ValueError(f"node_ids has {len(self.node_ids)} entries for n={self.n}")
        if len(set(self.node_ids)) != self.n:
            raise ValueError("node_ids must be unique")

    @cached_property
    def id_to_index(self) -> Dict[str, int]:
        return {node_id: i for i, node_id in enumerate(self.node_ids)}

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def out_csr(self) -> sp.csr_matrix:
        """Binary adjacency A with A[i, j] = 1 for the edge i -> j."""
        data = np.ones(self.num_edges, dtype=np.float64)
        return sp.csr_matrix(
            (data, (self.edges[:, 0], self.edges[:, 1])), shape=(self.n, self.n)
        )

    @cached_property
    def in_csr(self) -> sp.csr_matrix:
        """Row i lists the in-neighbors of i."""
        data = np.ones(self.num_edges, dtype=np.float64)
        return sp.csr_matrix(
            (data, (self.edges[:, 1], self.edges[:, 0])), shape=(self.n, self.n)
        )

    @cached_property
    def undirected_csr(self) -> sp.csr_matrix:
        """clip(A + A^T) without the diagonal."""
        sym = (self.out_csr + self.in_csr).tocsr()
        sym.data[:] = 1.0
        sym.sort_indices()
        return sym

    @cached_property
    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_csr.indptr)

    @cached_property
    def undirected_degree(self) -> np.ndarray:
        return np.diff(self.undirected_csr.indptr)

    def index_of(self, node_id: str) -> int:
        try:
            return self.id_to_index[node_id]
        except KeyError:
            raise KeyError(f"Unknown node id '{node_id}'") from None

    def check_index(self, i: int) -> int:
        if not 0 <= int(i) < self.n:
            raise IndexError(f"Node index {i} out of range for graph with {self.n} nodes")
        return int(i)


def build_graph(
    id_pairs: Iterable[Tuple[str, str]],
    extra_ids: Iterable[str] = (),
    node_order: Iterable[str] = (),
) -> Graph:
    """
    Build a Graph from directed (src, dst) external-id pairs.

    Ids in ``node_order`` take the first indices, in that order; the rest
    follow order of first appearance in the pairs, and ``extra_ids`` not seen
    in any pair are appended as isolated nodes. Self-loops are dropped and
    duplicate directed edges collapsed.
    """
    id_to_index: Dict[str, int] = {}
    for node_id in node_order:
        id_to_index.setdefault(node_id, len(id_to_index))
    src: List[int] = []
    dst: List[int] = []
    raw = 0
    for a, b in id_pairs:
        raw += 1
        for node_id in (a, b):
            if node_id not in id_to_index:
                id_to_index[node_id] = len(id_to_index)
        src.append(id_to_index[a])
        dst.append(id_to_index[b])
    for node_id in extra_ids:
        if node_id not in id_to_index:
            id_to_index[node_id] = len(id_to_index)

    n = len(id_to_index)
    if raw:
        pairs = np.column_stack([np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64)])
        loops = pairs[:, 0] == pairs[:, 1]
        pairs = pairs[~loops]
        # stable dedup keeps first-appearance order
        _, first = np.unique(pairs[:, 0] * n + pairs[:, 1], return_index=True)
        edges = pairs[np.sort(first)]
        self_loops = int(loops.sum())
        duplicates = int(pairs.shape[0] - edges.shape[0])
    else:
        edges = np.empty((0, 2), dtype=np.int64)
        self_loops = duplicates = 0

    if self_loops or duplicates:
        logger.info(f"Edge cleanup: dropped {self_loops} self-loops and {duplicates} duplicate edges")

    node_ids = tuple(sorted(id_to_index, key=id_to_index.__getitem__))
    return Graph(n=n, edges=edges, node_ids=node_ids,
                 stats=LoadStats(raw_edges=raw, self_loops=self_loops, duplicates=duplicates))


def iter_lines(source: TextSource) -> Iterable[str]:
    """Yield lines from a path, an open text stream, a raw string or a line iterable."""
    if isinstance(source, Path):
        with source.open(encoding='utf-8') as f:
            yield from f
    elif isinstance(source, str):
        if '\n' not in source and '\t' not in source and Path(source).is_file():
            with open(source, encoding='utf-8') as f:
                yield from f
        else:
            yield from io.StringIO(source)
    else:
        yield from source


def split_fields(line: str, whitespace: bool) -> List[str]:
    return line.split() if whitespace else line.rstrip('\r\n').split('\t')


def read_edge_pairs(source: TextSource, whitespace: bool = False) -> List[Tuple[str, str]]:
    """
    Parse ``src<TAB>dst`` lines into external-id pairs.

    Blank lines and ``#`` comments are skipped. With ``whitespace=True`` any
    run of blanks separates the two fields.
    """
    pairs: List[Tuple[str, str]] = []
    for line_number, line in enumerate(iter_lines(source), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        fields = split_fields(line, whitespace)
        if len(fields) != 2 or not fields[0].strip() or not fields[1].strip():
            raise EdgeListParseError(
                f"line {line_number}: expected 2 fields, got {len(fields)}: {stripped!r}",
                line_number=line_number,
            )
        pairs.append((fields[0].strip(), fields[1].strip()))

    if not pairs:
        raise EdgeListParseError("edge list is empty")
    return pairs


def load_edge_list(source: TextSource, whitespace: bool = False) -> Graph:
    """Parse an edge list straight into a Graph; see ``read_edge_pairs``."""
    graph = build_graph(read_edge_pairs(source, whitespace))
    logger.info(f"Loaded edge list: {graph.n} nodes, {graph.stats.raw_edges} raw edges, "
                f"{graph.num_edges} after cleanup")
    return graph


def undirected_neighbors(g: Graph, i: int) -> np.ndarray:
    """Sorted indices of in- and out-neighbors of ``i``, excluding ``i``."""
    i = g.check_index(i)
    csr = g.undirected_csr
    return csr.indices[csr.indptr[i]:csr.indptr[i + 1]].copy()


@dataclass(frozen=True)
class NormalizedAdjacency:
    """
    GCN propagation operator.

    ``symmetric`` holds S; in directed-split mode ``anti_symmetric`` holds K
    and the pair is the 2N x N operator [S; K].
    """
    mode: str
    symmetric: sp.csr_matrix
    anti_symmetric: Optional[sp.csr_matrix] = None

    @property
    def is_split(self) -> bool:
        return self.anti_symmetric is not None

    def stacked(self) -> sp.csr_matrix:
        if not self.is_split:
            return self.symmetric
        return sp.vstack([self.symmetric, self.anti_symmetric]).tocsr()


def normalized_adjacency(g: Graph, mode: str = "symmetric") -> NormalizedAdjacency:
    """
    D^-1/2 (clip(A + A^T) + I) D^-1/2, plus the anti-symmetric channel
    D^-1/2 (A - A^T) D^-1/2 when ``mode == 'directed-split'``.
    """
    mode = getattr(mode, 'value', mode)
    if mode not in ("symmetric", "directed-split"):
        raise ValueError(f"Unknown adjacency mode: {mode}")

    augmented = (g.undirected_csr + sp.identity(g.n, format='csr')).tocsr()
    degree = np.asarray(augmented.sum(axis=1)).ravel()
    inv_sqrt = sp.diags(1.0 / np.sqrt(degree))
    s = (inv_sqrt @ augmented @ inv_sqrt).tocsr()
    if mode == "symmetric":
        return NormalizedAdjacency(mode=mode, symmetric=s)

    k = (inv_sqrt @ (g.out_csr - g.in_csr) @ inv_sqrt).tocsr()
    k.eliminate_zeros()
    return NormalizedAdjacency(mode=mode, symmetric=s, anti_symmetric=k)


def transition_parts(g: Graph) -> Tuple[sp.csr_matrix, np.ndarray]:
    """
    Row-normalized out-adjacency with dangling rows left empty, and the
    dangling mask. ``random_walk_matrix`` fills those rows with 1/N.
    """
    out_degree = g.out_degree.astype(np.float64)
    dangling = out_degree == 0
    scale = np.divide(1.0, out_degree, out=np.zeros_like(out_degree), where=~dangling)
    return (sp.diags(scale) @ g.out_csr).tocsr(), dangling


def random_walk_matrix(g: Graph) -> sp.csr_matrix:
    """D^-1 A with dangling rows spread uniformly over all N nodes."""
    partial, dangling = transition_parts(g)
    if not dangling.any():
        return partial
    rows = np.flatnonzero(dangling)
    fill = sp.csr_matrix(
        (np.full(rows.size * g.n, 1.0 / g.n),
         (np.repeat(rows, g.n), np.tile(np.arange(g.n), rows.size))),
        shape=(g.n, g.n),
    )
    return (partial + fill).tocsr()
