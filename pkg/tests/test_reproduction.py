"""
Desk-scale checks on Cora.

Needs the Cora files: set GRAPH_AL_DATA to a directory holding ``cora/``
(edges.tsv, labels.tsv, content.tsv). Run with ``pytest -m slow``.
"""
import os
from pathlib import Path

import numpy as np
import pytest

from graph_al_bench.config import FeatureKind, GcnConfig, Protocol, ProtocolConfig
from graph_al_bench.data_providers import load_bundle, validate_bundle
from graph_al_bench.experiment import distance_to_sampled_curve, final_points, run_sweep

DATA_ROOT = os.getenv("GRAPH_AL_DATA")
CORA_DIR = Path(DATA_ROOT) / "cora" if DATA_ROOT else None
WORKERS = os.cpu_count() or 1
REPS = 10

pytestmark = [
    pytest.mark.slow,
    pytest.mark.skipif(CORA_DIR is None or not CORA_DIR.is_dir(),
                       reason="GRAPH_AL_DATA does not point at a directory with cora/"),
]


@pytest.fixture(scope="module")
def cora():
    return load_bundle(CORA_DIR, name="cora")


def _final_accuracy(result, strategy):
    last = final_points(result.curves)
    return last.loc[last["strategy"] == strategy, "accuracy"].to_numpy()


def test_cora_counts(cora):
    report = validate_bundle(cora)
    assert report.nodes == 2708
    assert report.classes == 7
    assert report.features == 1433


@pytest.fixture(scope="module")
def fixed_split_result(cora):
    cfgs = [
        ProtocolConfig(protocol=Protocol.FIXED_SPLIT, strategy=name, batch_size=1,
                       labeled_count=200, feature_kind=FeatureKind.BAG_OF_WORDS,
                       seeds=list(range(REPS)), splits=1, inits=1, gcn=GcnConfig())
        for name in ("random", "region_margin")
    ]
    result = run_sweep(cora, cfgs, workers=WORKERS)
    assert not result.failed_runs
    return result


def test_fixed_split_random_baseline(fixed_split_result):
    acc = _final_accuracy(fixed_split_result, "random")
    assert acc.size == REPS
    assert acc.mean() == pytest.approx(0.80, abs=0.03)


def test_region_margin_beats_random(fixed_split_result):
    random_acc = _final_accuracy(fixed_split_result, "random")
    region_acc = _final_accuracy(fixed_split_result, "region_margin")
    assert region_acc.mean() >= random_acc.mean() + 0.01


def test_apr_at_low_fraction(cora):
    cfgs = [
        ProtocolConfig(protocol=Protocol.FRACTION_BUDGET, strategy=name, batch_size=1,
                       labeled_fraction=0.05, feature_kind=FeatureKind.NEIGHBOR_LABELS,
                       seeds=list(range(REPS)))
        for name in ("apr_ratio", "centrality_pr")
    ]
    result = run_sweep(cora, cfgs, workers=WORKERS)
    assert not result.failed_runs
    assert (_final_accuracy(result, "apr_ratio").mean()
            >= _final_accuracy(result, "centrality_pr").mean())


def test_distance_curve_plateaus(cora):
    fractions = [0.005, 0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.15]
    curve = distance_to_sampled_curve(cora.graph, fractions, repetitions=20, cap=9,
                                      rng=np.random.default_rng(0))
    mean = curve["mean_distance"].to_numpy()
    se = curve["se"].to_numpy()
    # any rise between neighboring fractions is within two standard errors
    assert np.all(np.diff(mean) <= 2 * np.hypot(se[1:], se[:-1]))

    at = dict(zip(curve["fraction"], mean))
    total_drop = at[0.005] - at[0.15]
    assert total_drop > 0
    assert at[0.05] - at[0.15] <= 0.15 * total_drop
