import io
import logging

import numpy as np
import pytest

from graph_al_bench.analysis.graph.core import build_graph
from graph_al_bench.data_providers import (
    REGISTRY,
    DatasetBundle,
    DatasetFormatError,
    assemble_bundle,
    get_dataset,
    import_linqs,
    load_bundle,
    load_content,
    load_labels,
    save_bundle,
    validate_bundle,
)
from graph_al_bench.modules.gcn import FeatureMatrix


def test_load_labels_indexes_classes_by_first_appearance():
    labels, classes = load_labels(io.StringIO("p1\tTheory\np2\tRL\np3\tTheory\n"))
    assert classes == ["Theory", "RL"]
    assert labels == {"p1": 0, "p2": 1, "p3": 0}


def test_load_labels_rejects_duplicates_and_bad_lines():
    with pytest.raises(DatasetFormatError) as excinfo:
        load_labels(io.StringIO("a\tx\na\ty\n"))
    assert excinfo.value.node_id == "a"
    with pytest.raises(DatasetFormatError) as excinfo:
        load_labels(io.StringIO("a\tx\nb\n"))
    assert excinfo.value.line_number == 2


def test_load_content_accepts_binary_and_real_values():
    text = "d1\t0\t1\t0\tNeural\nd2\t0\t0\t0\tTheory\nd3\t0.25\t0\t1.5\tNeural\n"
    table = load_content(io.StringIO(text))
    assert table.num_features == 3
    assert table.node_ids == ("d1", "d2", "d3")
    assert table.values[1].tolist() == [0.0, 0.0, 0.0]
    assert table.class_by_node["d3"] == "Neural"


def test_load_content_rejects_ragged_rows():
    with pytest.raises(DatasetFormatError):
        load_content(io.StringIO("d1\t0\t1\tA\nd2\t1\tA\n"))
    with pytest.raises(DatasetFormatError):
        load_content(io.StringIO("d1\t0\tx\tA\n"))


def test_assemble_drops_misaligned_nodes(caplog):
    pairs = [("a", "b"), ("b", "c"), ("c", "ghost")]
    labels = {"a": 0, "b": 1, "c": 0, "d": 1}
    content = load_content(io.StringIO("a\t1\t0\tX\nb\t0\t1\tY\nc\t1\t1\tX\nz\t0\t0\tX\n"))
    with caplog.at_level(logging.WARNING):
        bundle = assemble_bundle("toy", pairs, labels, ["X", "Y"], content)
    assert bundle.graph.node_ids == ("a", "b", "c")
    assert bundle.graph.num_edges == 2
    assert bundle.features.values.tolist() == [[1, 0], [0, 1], [1, 1]]
    assert bundle.features.kind == "bag-of-words"
    assert "content rows without a label" in caplog.text
    assert "edges touching unlabeled nodes" in caplog.text


def test_isolated_labeled_nodes_kept_unless_dropped():
    pairs = [("a", "b")]
    labels = {"a": 0, "b": 1, "lonely": 2}
    kept = assemble_bundle("toy", pairs, labels, ["X", "Y", "Z"])
    assert kept.graph.n == 3
    assert kept.num_classes == 3
    dropped = assemble_bundle("toy", pairs, labels, ["X", "Y", "Z"], drop_isolated=True)
    assert dropped.graph.node_ids == ("a", "b")
    assert dropped.class_names == ("X", "Y")


def test_bundle_invariants():
    g = build_graph([("a", "b")])
    with pytest.raises(DatasetFormatError):
        DatasetBundle("bad", g, np.array([0]), ("X",))
    with pytest.raises(DatasetFormatError):
        DatasetBundle("bad", g, np.array([0, 1]), ("X",))
    with pytest.raises(DatasetFormatError):
        DatasetBundle("bad", g, np.array([0, 0]), ("X",), FeatureMatrix(np.ones((3, 2)), "bag-of-words"))


def test_save_load_round_trip(tmp_path, sbm_bundle):
    rng = np.random.default_rng(0)
    features = FeatureMatrix(rng.random((sbm_bundle.graph.n, 4)).round(3), "bag-of-words")
    original = DatasetBundle("sbm", sbm_bundle.graph, sbm_bundle.labels,
                             sbm_bundle.class_names, features)
    save_bundle(original, tmp_path / "sbm")
    loaded = load_bundle(tmp_path / "sbm")
    assert loaded.name == "sbm"
    assert loaded.graph.node_ids == original.graph.node_ids
    np.testing.assert_array_equal(loaded.graph.edges, original.graph.edges)
    np.testing.assert_array_equal(loaded.labels, original.labels)
    assert loaded.class_names == original.class_names
    np.testing.assert_array_equal(loaded.features.values, original.features.values)


def test_node_alignment_spot_audit(dataset_dir, sbm_bundle):
    loaded = load_bundle(dataset_dir)
    rng = np.random.default_rng(1)
    for i in rng.choice(sbm_bundle.graph.n, size=15, replace=False):
        node_id = sbm_bundle.graph.node_ids[i]
        j = loaded.graph.index_of(node_id)
        assert loaded.label_of(node_id) == sbm_bundle.label_of(node_id)
        ours = {loaded.graph.node_ids[k] for k in loaded.graph.undirected_csr[j].indices}
        theirs = {sbm_bundle.graph.node_ids[k] for k in sbm_bundle.graph.undirected_csr[i].indices}
        assert ours == theirs


def test_load_bundle_missing_labels(tmp_path):
    (tmp_path / "edges.tsv").write_text("a\tb\n", encoding="utf-8")
    with pytest.raises(FileNotFoundError):
        load_bundle(tmp_path)


def test_cora_drops_isolated_by_default(tmp_path):
    directory = tmp_path / "cora"
    directory.mkdir()
    (directory / "edges.tsv").write_text("1\t2\n", encoding="utf-8")
    (directory / "labels.tsv").write_text("1\tA\n2\tB\n3\tA\n", encoding="utf-8")
    assert load_bundle(directory).graph.n == 2
    assert load_bundle(directory, drop_isolated=False).graph.n == 3


@pytest.mark.parametrize("name,nodes,edges,classes,batch", [
    ("cora", 2708, 5429, 7, 1),
    ("CiteSeer", 3312, 4732, 6, 1),
    ("email-eu", 1005, 25571, 42, 1),
    ("pubmed", 19717, 44338, 3, 5),
    ("subelj_cora", 23166, 91500, 10, 5),
    ("wikispeedia", 4604, 119882, 15, 1),
])
def test_registry_counts(name, nodes, edges, classes, batch):
    spec = get_dataset(name)
    assert (spec.nodes, spec.edges, spec.classes, spec.batch_size) == (nodes, edges, classes, batch)


def test_unknown_dataset():
    with pytest.raises(KeyError):
        get_dataset("imagenet")
    assert len(REGISTRY) == 6


def test_validate_bundle_counts_and_mismatch(sbm_bundle, caplog):
    report = validate_bundle(sbm_bundle)
    assert (report.nodes, report.classes) == (100, 2)
    assert report.expected is None and report.mismatches == []
    assert "100 nodes" in report.lines()[1]

    renamed = DatasetBundle("email-eu", sbm_bundle.graph, sbm_bundle.labels, sbm_bundle.class_names)
    with caplog.at_level(logging.WARNING):
        report = validate_bundle(renamed)
    assert any(m.startswith("nodes: 100") for m in report.mismatches)
    assert "expected 42" in caplog.text


def test_import_linqs_reverses_citations(tmp_path):
    src = tmp_path / "raw"
    src.mkdir()
    (src / "toy.cites").write_text("p1\tp2\np1\tp3\n")
    (src / "toy.content").write_text("p1\t1\t0\tTheory\np2\t0\t1\tRL\np3\t1\t1\tTheory\n")

    import_linqs(src, "toy", tmp_path / "toy")
    assert (tmp_path / "toy" / "edges.tsv").read_text() == "p2\tp1\np3\tp1\n"

    bundle = load_bundle(tmp_path / "toy")
    assert bundle.graph.node_ids == ("p1", "p2", "p3")
    assert bundle.class_names == ("Theory", "RL")
    assert bundle.features.values.tolist() == [[1, 0], [0, 1], [1, 1]]
    i = bundle.graph.index_of
    assert bundle.graph.out_csr[i("p2"), i("p1")] == 1


def test_import_linqs_missing_files(tmp_path):
    with pytest.raises(FileNotFoundError, match="toy.cites"):
        import_linqs(tmp_path, "toy", tmp_path / "out")
