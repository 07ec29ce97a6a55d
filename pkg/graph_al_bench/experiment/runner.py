"""
The greedy active-learning loop.

Each iteration trains a fresh GCN on the labeled nodes, evaluates it, scores
the pool with the configured strategy and queries the top batch.
"""
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from ..analysis.graph.core import normalized_adjacency
from ..config import FeatureKind, Protocol, ProtocolConfig
from ..data_providers import DatasetBundle
from ..modules.gcn import (
    FeatureMatrix,
    dump_weights,
    neighbor_label_features,
    predict_proba,
    representations,
    train,
)
from ..modules.metrics import evaluate
from ..modules.strategies import (
    GraphCache,
    StrategyContext,
    get_strategy,
    score_candidates,
    select_batch,
)
from .state import ALState, GroundTruthOracle, PoolExhaustedError, initial_seed

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["run_id", "dataset", "strategy", "protocol", "iteration", "labeled",
                 "accuracy", "micro_f1", "macro_f1", "loss"]


@dataclass(frozen=True)
class RunSeeds:
    """Seeds of one run: the held-out split, the initial labeled seed, and everything else."""
    split: int
    init: int
    rep: int

    @classmethod
    def from_seed(cls, seed: int) -> 'RunSeeds':
        return cls(split=seed, init=seed, rep=seed)

    @property
    def key(self) -> str:
        if self.split == self.init == self.rep:
            return f"seed{self.rep}"
        return f"split{self.split}-init{self.init}-rep{self.rep}"


@dataclass(frozen=True)
class CurveRecord:
    run_id: str
    dataset: str
    strategy: str
    protocol: str
    iteration: int
    labeled: int
    accuracy: float
    micro_f1: float
    macro_f1: float
    loss: float

    def to_row(self) -> Dict[str, Union[str, int, float]]:
        return asdict(self)


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream]))


class ActiveLearningRun:
    """One repetition of one strategy under one protocol."""

    def __init__(self, bundle: DatasetBundle, cfg: ProtocolConfig,
                 run_seed: Union[int, RunSeeds], run_id: Optional[str] = None,
                 cache: Optional[GraphCache] = None):
        get_strategy(cfg.strategy)
        self.bundle = bundle
        self.cfg = cfg
        self.seeds = run_seed if isinstance(run_seed, RunSeeds) else RunSeeds.from_seed(run_seed)
        self.run_id = run_id or f"{cfg.strategy}:{self.seeds.key}"
        self.cache = cache or GraphCache(bundle.graph, cfg.params)
        if self.cache.graph is not bundle.graph:
            raise ValueError("GraphCache was built for a different graph")
        self.records: List[CurveRecord] = []
        self.queried: List[int] = []

        split_rng = _rng(self.seeds.split, 0)
        self.init_rng = _rng(self.seeds.init, 1)
        self.rep_rng = _rng(self.seeds.rep, 2)

        test, validation = self._reserve(split_rng)
        self.state = ALState(n=bundle.graph.n, test=test, validation=validation)
        self.oracle = GroundTruthOracle(bundle.labels, reserved=np.concatenate([test, validation]))

    def _reserve(self, rng: np.random.Generator):
        empty = np.empty(0, dtype=np.int64)
        if self.cfg.protocol != Protocol.FIXED_SPLIT:
            return empty, empty
        n, held = self.bundle.graph.n, self.cfg.test_size + self.cfg.validation_size
        if n < held + self.bundle.num_classes:
            raise ValueError(f"Fixed split needs at least {held + self.bundle.num_classes} nodes, "
                             f"dataset has {n}")
        order = rng.permutation(n)
        test = np.sort(order[:self.cfg.test_size])
        validation = np.sort(order[self.cfg.test_size:held])
        return test, validation

    def _features(self, known: Dict[int, int]) -> FeatureMatrix:
        if self.cfg.feature_kind == FeatureKind.BAG_OF_WORDS:
            if self.bundle.features is None:
                raise ValueError(f"Dataset {self.bundle.name} has no bag-of-words content")
            return self.bundle.features
        return neighbor_label_features(self.bundle.graph, known, self.bundle.num_classes,
                                       normalize=self.cfg.gcn.normalize_features)

    def _eval_set(self) -> np.ndarray:
        if self.cfg.protocol == Protocol.FIXED_SPLIT:
            return self.state.test
        return self.state.unlabeled

    def run(self) -> List[CurveRecord]:
        cfg, bundle, state = self.cfg, self.bundle, self.state
        g, labels = bundle.graph, bundle.labels
        adjacency = normalized_adjacency(g, cfg.gcn.adjacency_mode)

        seed_nodes = initial_seed(labels, state.pool, self.init_rng, bundle.num_classes)
        known = {i: self.oracle.query(i) for i in seed_nodes}
        state.move(seed_nodes, iteration=0)

        stop = cfg.stop_count(g.n, len(seed_nodes))
        budget = max(1, int(np.ceil((stop - len(seed_nodes)) / cfg.batch_size)))
        logger.info(f"[{self.run_id}] start: {bundle.name}, {cfg.protocol.value}, "
                    f"{len(seed_nodes)} seeds, stop at {stop} labeled")

        weights = None
        iteration = 0
        while True:
            gcn_cfg = cfg.gcn.model_copy(update={'seed': int(self.rep_rng.integers(2**31))})
            model = train(g, self._features(known), known, gcn_cfg,
                          num_classes=bundle.num_classes, adjacency=adjacency,
                          initial_weights=weights if cfg.warm_start else None)
            weights = model.weights
            proba = predict_proba(model)
            self._record(iteration, proba)

            if len(state.labeled) >= stop:
                break
            batch_size = min(cfg.batch_size, stop - len(state.labeled))
            candidates = state.pool
            if candidates.size < batch_size:
                raise PoolExhaustedError(
                    f"[{self.run_id}] pool has {candidates.size} nodes left, "
                    f"{stop - len(state.labeled)} queries still due")

            ctx = StrategyContext(cache=self.cache, labeled=state.labeled_array,
                                  candidates=candidates, iteration=iteration, budget=budget,
                                  proba=proba, reps=representations(model))
            scores = score_candidates(cfg.strategy, ctx)
            batch = select_batch(scores.values, candidates, batch_size, self.rep_rng)
            for node in batch:
                known[int(node)] = self.oracle.query(int(node))
            state.move(batch, iteration=iteration + 1)
            state.check_invariants()
            self.queried.extend(int(i) for i in batch)
            iteration += 1

        if cfg.weights_dir is not None:
            dump_weights(model, Path(cfg.weights_dir) / self.run_id.replace(":", "_"))
        last = self.records[-1]
        logger.info(f"[{self.run_id}] done: {last.labeled} labeled, accuracy {last.accuracy:.4f}, "
                    f"{self.oracle.queries} oracle queries")
        return self.records

    def _record(self, iteration: int, proba: np.ndarray) -> None:
        eval_set = self._eval_set()
        if eval_set.size:
            report = evaluate(proba, self.bundle.labels, eval_set)
            values = (report.accuracy, report.micro_f1, report.macro_f1, report.mean_loss)
        else:
            values = (np.nan,) * 4
        record = CurveRecord(self.run_id, self.bundle.name, self.cfg.strategy,
                             self.cfg.protocol.value, iteration, len(self.state.labeled), *values)
        self.records.append(record)
        logger.debug(f"[{self.run_id}] iteration {iteration}: {record.labeled} labeled, "
                     f"accuracy {record.accuracy:.4f}")


def run_active_learning(bundle: DatasetBundle, cfg: ProtocolConfig,
                        run_seed: Union[int, RunSeeds], run_id: Optional[str] = None,
                        cache: Optional[GraphCache] = None) -> List[CurveRecord]:
    """Run one active-learning repetition and return its learning curve."""
    return ActiveLearningRun(bundle, cfg, run_seed, run_id=run_id, cache=cache).run()
