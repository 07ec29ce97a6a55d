"""
Dataset loading for graph-al-bench.

A dataset directory holds ``edges.tsv`` (``src<TAB>dst``), ``labels.tsv``
(``node_id<TAB>class_name``) and optionally ``content.tsv``
(``node_id<TAB>w1 ... wF<TAB>class_name``, the Cora/CiteSeer layout).
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..analysis.graph.algorithms import regional_phase_fraction
from ..analysis.graph.core import (
    Graph,
    TextSource,
    build_graph,
    iter_lines,
    read_edge_pairs,
    split_fields,
)
from ..modules.gcn import FeatureMatrix

logger = logging.getLogger(__name__)

EDGES_FILE = "edges.tsv"
LABELS_FILE = "labels.tsv"
CONTENT_FILE = "content.tsv"


class DatasetFormatError(ValueError):
    """Malformed or inconsistent dataset file."""

    def __init__(self, message: str, line_number: Optional[int] = None,
                 node_id: Optional[str] = None):
        super().__init__(message)
        self.line_number = line_number
        self.node_id = node_id


@dataclass(frozen=True)
class DatasetSpec:
    """Published statistics and run defaults of a benchmark dataset."""
    name: str
    nodes: int
    edges: int
    classes: int
    directed: bool = True
    has_content: bool = False
    batch_size: int = 1
    drop_isolated: bool = False
    source_url: str = ""


REGISTRY: Dict[str, DatasetSpec] = {
    spec.name: spec for spec in (
        DatasetSpec("cora", 2708, 5429, 7, has_content=True, drop_isolated=True,
                    source_url="https://linqs.org/datasets/#cora"),
        DatasetSpec("citeseer", 3312, 4732, 6, has_content=True,
                    source_url="https://linqs.org/datasets/#citeseer-doc-classification"),
        DatasetSpec("email-eu", 1005, 25571, 42,
                    source_url="https://snap.stanford.edu/data/email-Eu-core.html"),
        DatasetSpec("pubmed", 19717, 44338, 3, has_content=True, batch_size=5,
                    source_url="https://linqs.org/datasets/#pubmed-diabetes"),
        DatasetSpec("subelj", 23166, 91500, 10, batch_size=5,
                    source_url="http://konect.cc/networks/subelj_cora/"),
        DatasetSpec("wikispeedia", 4604, 119882, 15,
                    source_url="https://snap.stanford.edu/data/wikispeedia.html"),
    )
}

_ALIASES = {
    "email": "email-eu", "email_eu": "email-eu", "emaileu": "email-eu",
    "subelj_cora": "subelj", "subelj-cora": "subelj", "wiki": "wikispeedia",
}


def get_dataset(name: str) -> DatasetSpec:
    """Look up a registry entry by (case-insensitive) name or alias."""
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    try:
        return REGISTRY[key]
    except KeyError:
        raise KeyError(f"Unknown dataset '{name}'; known: {', '.join(REGISTRY)}") from None


def find_dataset(name: Optional[str]) -> Optional[DatasetSpec]:
    if not name:
        return None
    try:
        return get_dataset(name)
    except KeyError:
        return None


@dataclass(frozen=True)
class DatasetBundle:
    """Graph with total ground-truth labels and optional bag-of-words features."""
    name: str
    graph: Graph
    labels: np.ndarray  # class index per node
    class_names: Tuple[str, ...]
    features: Optional[FeatureMatrix] = None

    def __post_init__(self):
        if self.labels.shape != (self.graph.n,):
            raise DatasetFormatError(f"{self.labels.shape[0]} labels for {self.graph.n} nodes")
        if self.graph.n and (self.labels.min() < 0 or self.labels.max() >= len(self.class_names)):
            raise DatasetFormatError(f"Class indices must lie in 0..{len(self.class_names) - 1}")
        if self.features is not None and self.features.values.shape[0] != self.graph.n:
            raise DatasetFormatError(
                f"Feature matrix has {self.features.values.shape[0]} rows for {self.graph.n} nodes")

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def label_of(self, node_id: str) -> str:
        return self.class_names[self.labels[self.graph.index_of(node_id)]]


@dataclass(frozen=True)
class ContentTable:
    """Rows of a ``.content`` file in file order."""
    node_ids: Tuple[str, ...]
    class_by_node: Dict[str, str]
    values: np.ndarray

    @property
    def num_features(self) -> int:
        return int(self.values.shape[1])


def load_labels(source: TextSource) -> Tuple[Dict[str, int], List[str]]:
    """
    Parse ``node_id<TAB>class_name`` lines.

    Returns:
        (node id -> class index, class names); classes are indexed by first
        appearance
    """
    labels: Dict[str, int] = {}
    class_index: Dict[str, int] = {}
    for line_number, line in enumerate(iter_lines(source), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        fields = [f.strip() for f in split_fields(line, whitespace=False)]
        if len(fields) != 2 or not fields[0] or not fields[1]:
            raise DatasetFormatError(f"labels line {line_number}: expected 2 fields: {stripped!r}",
                                     line_number=line_number)
        node_id, class_name = fields
        if node_id in labels:
            raise DatasetFormatError(f"labels line {line_number}: duplicate node id '{node_id}'",
                                     line_number=line_number, node_id=node_id)
        labels[node_id] = class_index.setdefault(class_name, len(class_index))
    if not labels:
        raise DatasetFormatError("labels file is empty")
    return labels, list(class_index)


def load_content(source: TextSource) -> ContentTable:
    """Parse ``node_id<TAB>w1 ... wF<TAB>class_name`` rows; values may be real-valued."""
    ids: List[str] = []
    classes: Dict[str, str] = {}
    rows: List[List[float]] = []
    width: Optional[int] = None
    for line_number, line in enumerate(iter_lines(source), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        fields = [f.strip() for f in split_fields(line, whitespace=False)]
        if len(fields) < 3:
            raise DatasetFormatError(f"content line {line_number}: too few columns",
                                     line_number=line_number)
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise DatasetFormatError(
                f"content line {line_number}: {len(fields)} columns, expected {width}",
                line_number=line_number)
        node_id = fields[0]
        if node_id in classes:
            raise DatasetFormatError(f"content line {line_number}: duplicate node id '{node_id}'",
                                     line_number=line_number, node_id=node_id)
        try:
            rows.append([float(v) for v in fields[1:-1]])
        except ValueError:
            raise DatasetFormatError(f"content line {line_number}: non-numeric feature value",
                                     line_number=line_number, node_id=node_id) from None
        ids.append(node_id)
        classes[node_id] = fields[-1]
    if not ids:
        raise DatasetFormatError("content file is empty")
    return ContentTable(node_ids=tuple(ids), class_by_node=classes,
                        values=np.asarray(rows, dtype=np.float64))


def assemble_bundle(name: str,
                    pairs: Sequence[Tuple[str, str]],
                    labels: Dict[str, int],
                    class_names: Sequence[str],
                    content: Optional[ContentTable] = None,
                    drop_isolated: bool = False) -> DatasetBundle:
    """
    Align edges, labels and content on a common node set.

    Nodes are ordered as in the labels; edges touching a node without a
    label (or without a content row, when content is given) are dropped with
    a warning, as are content rows without a label.
    """
    keep = [node_id for node_id in labels if content is None or node_id in content.class_by_node]
    if content is not None:
        missing_content = len(labels) - len(keep)
        orphan_rows = sum(1 for node_id in content.node_ids if node_id not in labels)
        if missing_content or orphan_rows:
            logger.warning(f"{name}: dropped {missing_content} labeled nodes without content "
                           f"and {orphan_rows} content rows without a label")
    kept = set(keep)

    aligned = [(a, b) for a, b in pairs if a in kept and b in kept]
    if len(aligned) < len(pairs):
        logger.warning(f"{name}: dropped {len(pairs) - len(aligned)} edges touching unlabeled nodes")

    graph = build_graph(aligned, node_order=keep)
    if drop_isolated:
        linked = graph.undirected_degree > 0
        if not linked.all():
            logger.info(f"{name}: dropping {int((~linked).sum())} isolated nodes")
            keep = [node_id for node_id, ok in zip(graph.node_ids, linked) if ok]
            graph = build_graph(aligned, node_order=keep)

    # re-densify classes by first appearance among the kept nodes
    raw = np.array([labels[node_id] for node_id in graph.node_ids], dtype=np.int64)
    order = list(dict.fromkeys(raw.tolist()))
    remap = {old: new for new, old in enumerate(order)}
    dense = np.array([remap[c] for c in raw.tolist()], dtype=np.int64)
    names = tuple(class_names[old] for old in order)

    features = None
    if content is not None:
        row_of = {node_id: i for i, node_id in enumerate(content.node_ids)}
        rows = np.array([row_of[node_id] for node_id in graph.node_ids], dtype=np.int64)
        features = FeatureMatrix(values=content.values[rows], kind="bag-of-words")
        disagree = sum(1 for node_id in graph.node_ids
                       if content.class_by_node[node_id] != class_names[labels[node_id]])
        if disagree:
            logger.warning(f"{name}: {disagree} nodes have different classes in labels and content")

    return DatasetBundle(name=name, graph=graph, labels=dense, class_names=names,
                         features=features)


def load_bundle(directory: Union[str, Path], name: Optional[str] = None,
                drop_isolated: Optional[bool] = None,
                whitespace_separated: bool = False) -> DatasetBundle:
    """
    Load a dataset directory.

    Args:
        directory: folder with edges.tsv, labels.tsv and optional content.tsv
        name: registry name; defaults to the folder name
        drop_isolated: remove nodes without edges; defaults to the registry
            entry (on for Cora)
        whitespace_separated: split edge lines on any whitespace

    Returns:
        DatasetBundle
    """
    directory = Path(directory)
    name = name or directory.name
    edges_path, labels_path = directory / EDGES_FILE, directory / LABELS_FILE
    for path in (edges_path, labels_path):
        if not path.is_file():
            raise FileNotFoundError(f"Missing dataset file: {path}")

    spec = find_dataset(name)
    if drop_isolated is None:
        drop_isolated = spec.drop_isolated if spec else False

    pairs = read_edge_pairs(edges_path, whitespace=whitespace_separated)
    labels, class_names = load_labels(labels_path)
    content_path = directory / CONTENT_FILE
    content = load_content(content_path) if content_path.is_file() else None

    bundle = assemble_bundle(name, pairs, labels, class_names, content, drop_isolated)
    logger.info(f"Loaded {name}: {bundle.graph.n} nodes, {bundle.graph.num_edges} edges, "
                f"{bundle.num_classes} classes"
                + (f", {bundle.features.values.shape[1]} features" if bundle.features else ""))
    return bundle


def _format_value(v: float) -> str:
    return repr(int(v)) if float(v).is_integer() else repr(float(v))


def save_bundle(bundle: DatasetBundle, directory: Union[str, Path]) -> List[Path]:
    """Write the bundle in the layout ``load_bundle`` reads."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ids = bundle.graph.node_ids

    edges_path = directory / EDGES_FILE
    with edges_path.open('w', encoding='utf-8') as f:
        for src, dst in bundle.graph.edges:
            f.write(f"{ids[src]}\t{ids[dst]}\n")

    labels_path = directory / LABELS_FILE
    with labels_path.open('w', encoding='utf-8') as f:
        for node_id, c in zip(ids, bundle.labels):
            f.write(f"{node_id}\t{bundle.class_names[c]}\n")

    written = [edges_path, labels_path]
    if bundle.features is not None:
        content_path = directory / CONTENT_FILE
        with content_path.open('w', encoding='utf-8') as f:
            for node_id, row, c in zip(ids, bundle.features.values, bundle.labels):
                values = '\t'.join(_format_value(v) for v in row)
                f.write(f"{node_id}\t{values}\t{bundle.class_names[c]}\n")
        written.append(content_path)
    logger.info(f"Saved {bundle.name} to {directory}")
    return written


def import_linqs(source_dir: Union[str, Path], name: str,
                 output_dir: Union[str, Path]) -> List[Path]:
    """
    Convert a LINQS ``<name>.cites`` / ``<name>.content`` pair to the
    dataset-directory layout.

    LINQS lists each citation as ``cited<TAB>citing``; edges.tsv gets the
    citing -> cited direction. Class labels come from the content rows.
    """
    source_dir, output_dir = Path(source_dir), Path(output_dir)
    cites_path, content_path = source_dir / f"{name}.cites", source_dir / f"{name}.content"
    for path in (cites_path, content_path):
        if not path.is_file():
            raise FileNotFoundError(f"Missing LINQS file: {path}")

    pairs = read_edge_pairs(cites_path, whitespace=True)
    content = load_content(content_path)
    output_dir.mkdir(parents=True, exist_ok=True)

    edges_path = output_dir / EDGES_FILE
    with edges_path.open('w', encoding='utf-8') as f:
        for cited, citing in pairs:
            f.write(f"{citing}\t{cited}\n")
    labels_path = output_dir / LABELS_FILE
    with labels_path.open('w', encoding='utf-8') as f:
        for node_id in content.node_ids:
            f.write(f"{node_id}\t{content.class_by_node[node_id]}\n")
    out_content = output_dir / CONTENT_FILE
    with out_content.open('w', encoding='utf-8') as f:
        for node_id, row in zip(content.node_ids, content.values):
            values = '\t'.join(_format_value(v) for v in row)
            f.write(f"{node_id}\t{values}\t{content.class_by_node[node_id]}\n")

    logger.info(f"Imported {name}: {len(pairs)} citations, {len(content.node_ids)} content rows")
    return [edges_path, labels_path, out_content]


@dataclass
class ValidationReport:
    name: str
    nodes: int
    edges: int
    classes: int
    isolated: int
    features: Optional[int]
    regional_phase: float
    expected: Optional[DatasetSpec] = None
    mismatches: List[str] = field(default_factory=list)

    def lines(self) -> List[str]:
        out = [
            f"dataset: {self.name}",
            f"{self.nodes} nodes / {self.edges} edges / {self.classes} classes",
            f"isolated nodes: {self.isolated}",
            f"regional phase ends near labeled fraction {self.regional_phase:.4f}",
        ]
        if self.features is not None:
            out.append(f"features: {self.features}")
        if self.expected is not None:
            out.append(f"expected: {self.expected.nodes} nodes / {self.expected.edges} edges / "
                       f"{self.expected.classes} classes")
        out.extend(f"WARNING: {m}" for m in self.mismatches)
        return out


def validate_bundle(b: DatasetBundle) -> ValidationReport:
    """Report counts and compare them with the registry entry, if any."""
    g = b.graph
    report = ValidationReport(
        name=b.name,
        nodes=g.n,
        edges=g.num_edges,
        classes=b.num_classes,
        isolated=int((g.undirected_degree == 0).sum()),
        features=None if b.features is None else int(b.features.values.shape[1]),
        regional_phase=regional_phase_fraction(g),
        expected=find_dataset(b.name),
    )
    if report.expected is not None:
        for field_name in ("nodes", "edges", "classes"):
            actual, expected = getattr(report, field_name), getattr(report.expected, field_name)
            if actual != expected:
                report.mismatches.append(f"{field_name}: {actual} (expected {expected})")
    for message in report.mismatches:
        logger.warning(f"{b.name}: {message}")
    return report


__all__ = [
    "ContentTable",
    "DatasetBundle",
    "DatasetFormatError",
    "DatasetSpec",
    "REGISTRY",
    "ValidationReport",
    "assemble_bundle",
    "find_dataset",
    "get_dataset",
    "import_linqs",
    "load_bundle",
    "load_content",
    "load_labels",
    "save_bundle",
    "validate_bundle",
]
