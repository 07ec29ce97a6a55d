"""Distance from a typical node to a uniformly sampled node set."""
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from ..analysis.graph.algorithms import bfs_distances
from ..analysis.graph.core import Graph

logger = logging.getLogger(__name__)


def distance_to_sampled_curve(g: Graph, fractions: Sequence[float], repetitions: int = 20,
                              cap: int = 9,
                              rng: Optional[np.random.Generator] = None) -> pd.DataFrame:
    """
    Mean capped hop distance of unsampled nodes to the nearest sampled node,
    for each sampling fraction.

    Returns:
        DataFrame with columns fraction, mean_distance, se (standard error
        over repetitions)
    """
    if len(fractions) == 0:
        raise ValueError("fractions must not be empty")
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    bad = [f for f in fractions if not 0.0 < f <= 1.0]
    if bad:
        raise ValueError(f"fractions must lie in (0, 1], got {bad}")
    rng = rng if rng is not None else np.random.default_rng(0)

    rows = []
    for f in fractions:
        k = min(g.n, max(1, int(np.ceil(f * g.n))))
        means = np.zeros(repetitions)
        for r in range(repetitions):
            sample = rng.choice(g.n, size=k, replace=False)
            unsampled = np.ones(g.n, dtype=bool)
            unsampled[sample] = False
            if unsampled.any():
                means[r] = bfs_distances(g, sample, cap)[unsampled].mean()
        se = float(stats.sem(means, ddof=1)) if repetitions > 1 else 0.0
        rows.append({"fraction": float(f), "mean_distance": float(means.mean()),
                     "se": 0.0 if np.isnan(se) else se})
        logger.debug(f"fraction {f:.4f}: mean distance {means.mean():.3f}")
    return pd.DataFrame(rows, columns=["fraction", "mean_distance", "se"])


def write_distance_curve(curve: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    curve.to_csv(path, index=False)
    return path
