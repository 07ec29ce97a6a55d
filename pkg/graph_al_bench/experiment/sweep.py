"""
Repeated runs across strategies, executed on a joblib worker pool, and the
tables summarizing them.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import stats

from ..config import Protocol, ProtocolConfig
from ..data_providers import DatasetBundle
from ..modules.strategies import GraphCache
from .runner import CURVE_COLUMNS, RunSeeds, run_active_learning

logger = logging.getLogger(__name__)

MEASURES = ("loss", "accuracy", "micro_f1", "macro_f1")
_SUMMARY_NAMES = {"accuracy": "acc", "micro_f1": "micro_f1", "macro_f1": "macro_f1", "loss": "loss"}
DELTA_COLUMNS = ["dataset", "strategy", "measure", "mean_delta", "se_delta", "p_value", "n_pairs"]


@dataclass(frozen=True)
class SweepJob:
    cfg: ProtocolConfig
    seeds: RunSeeds

    @property
    def run_id(self) -> str:
        return f"{self.cfg.strategy}:{self.seeds.key}"


@dataclass
class SweepResult:
    curves: pd.DataFrame
    summary: pd.DataFrame
    final_deltas: pd.DataFrame

    @property
    def failed_runs(self) -> List[str]:
        errors = self.curves[self.curves["error"] != ""]
        return sorted(errors["run_id"].unique())

    def write(self, directory: Path) -> Dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {
            "curves": directory / "curves.csv",
            "summary": directory / "summary.csv",
            "final_deltas": directory / "final_deltas.csv",
        }
        self.curves.to_csv(paths["curves"], index=False)
        self.summary.to_csv(paths["summary"], index=False)
        self.final_deltas.to_csv(paths["final_deltas"], index=False)
        return paths


def plan_jobs(cfgs: Sequence[ProtocolConfig]) -> List[SweepJob]:
    """
    Expand configs into runs: one per seed, or for the fixed-split protocol
    one per (split, init, rep) combination.
    """
    if not cfgs:
        raise ValueError("A sweep needs at least one protocol config")
    jobs = []
    for cfg in cfgs:
        for seed in cfg.run_seeds():
            if cfg.protocol == Protocol.FIXED_SPLIT:
                jobs.extend(SweepJob(cfg, RunSeeds(split=s, init=i, rep=seed))
                            for s in range(cfg.splits) for i in range(cfg.inits))
            else:
                jobs.append(SweepJob(cfg, RunSeeds.from_seed(seed)))
    return jobs


def _execute(bundle: DatasetBundle, job: SweepJob) -> List[Dict]:
    try:
        cache = GraphCache(bundle.graph, job.cfg.params)
        records = run_active_learning(bundle, job.cfg, job.seeds, run_id=job.run_id, cache=cache)
        return [{**r.to_row(), "error": ""} for r in records]
    except Exception as e:
        logger.error(f"[{job.run_id}] failed: {e}", exc_info=True)
        row = {column: np.nan for column in CURVE_COLUMNS}
        row.update(run_id=job.run_id, dataset=bundle.name, strategy=job.cfg.strategy,
                   protocol=job.cfg.protocol.value, error=f"{type(e).__name__}: {e}")
        return [row]


def _sem(values: pd.Series) -> float:
    return float(stats.sem(values, ddof=1)) if values.count() > 1 else np.nan


def summarize(curves: pd.DataFrame) -> pd.DataFrame:
    """Mean and standard error per strategy and iteration over successful runs."""
    ok = curves[curves["error"] == ""]
    if ok.empty:
        return pd.DataFrame(columns=["dataset", "strategy", "iteration"])
    grouped = ok.groupby(["dataset", "strategy", "iteration"])
    parts = {"n_runs": grouped["run_id"].nunique(), "mean_labeled": grouped["labeled"].mean()}
    for measure, short in _SUMMARY_NAMES.items():
        parts[f"mean_{short}"] = grouped[measure].mean()
        parts[f"se_{short}"] = grouped[measure].agg(_sem)
    summary = pd.DataFrame(parts).reset_index()

    baseline = summary[summary["strategy"] == "random"][["dataset", "iteration", "mean_acc"]]
    if not baseline.empty:
        summary = summary.merge(baseline.rename(columns={"mean_acc": "random_acc"}),
                                on=["dataset", "iteration"], how="left")
        summary["delta_acc_vs_random"] = summary["mean_acc"] - summary.pop("random_acc")
    return summary


def final_points(curves: pd.DataFrame) -> pd.DataFrame:
    """Last recorded iteration of every successful run, keyed by its seed."""
    ok = curves[curves["error"] == ""]
    last = ok.loc[ok.groupby("run_id")["iteration"].idxmax()].copy()
    last["seed_key"] = last["run_id"].str.split(":", n=1).str[1]
    return last


def final_deltas(curves: pd.DataFrame) -> pd.DataFrame:
    """
    Final-point difference of each strategy to random, paired by seed, with a
    paired t-test p-value.
    """
    last = final_points(curves)
    rows = []
    if last.empty or "random" not in set(last["strategy"]):
        return pd.DataFrame(rows, columns=DELTA_COLUMNS)
    for (dataset, strategy), group in last.groupby(["dataset", "strategy"]):
        baseline = last[(last["dataset"] == dataset) & (last["strategy"] == "random")]
        paired = group.merge(baseline, on="seed_key", suffixes=("", "_random"))
        for measure in MEASURES:
            ours, theirs = paired[measure].to_numpy(float), paired[f"{measure}_random"].to_numpy(float)
            diff = ours - theirs
            if diff.size == 0:
                mean, se, p_value = np.nan, np.nan, np.nan
            else:
                mean = float(diff.mean())
                se = float(stats.sem(diff, ddof=1)) if diff.size > 1 else np.nan
                if diff.size < 2:
                    p_value = np.nan
                elif np.allclose(diff, 0.0):
                    p_value = 1.0
                else:
                    p_value = float(stats.ttest_rel(ours, theirs).pvalue)
            rows.append({"dataset": dataset, "strategy": strategy, "measure": measure,
                         "mean_delta": mean, "se_delta": se, "p_value": p_value,
                         "n_pairs": int(diff.size)})
    return pd.DataFrame(rows, columns=DELTA_COLUMNS)


def run_sweep(bundle: DatasetBundle, cfgs: Sequence[ProtocolConfig],
              workers: int = 1, jobs: Optional[Sequence[SweepJob]] = None) -> SweepResult:
    """
    Run every (config, seed) job and aggregate.

    Failed runs are logged and kept as a single row with the ``error`` column
    set; the sweep carries on.
    """
    jobs = list(jobs) if jobs is not None else plan_jobs(cfgs)
    logger.info(f"Sweep on {bundle.name}: {len(jobs)} runs, {workers} workers")
    outputs = Parallel(n_jobs=workers, backend="loky")(
        delayed(_execute)(bundle, job) for job in jobs
    )
    rows = [row for output in outputs for row in output]
    curves = pd.DataFrame(rows, columns=CURVE_COLUMNS + ["error"])
    curves = curves.sort_values(["run_id", "iteration"], kind="stable", na_position="first")
    curves = curves.reset_index(drop=True)

    result = SweepResult(curves=curves, summary=summarize(curves), final_deltas=final_deltas(curves))
    if result.failed_runs:
        logger.warning(f"{len(result.failed_runs)} of {len(jobs)} runs failed")
    return result
