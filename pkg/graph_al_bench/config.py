"""
Configuration for graph-al-bench.

A single TOML file with sections ``dataset``, ``protocol``, ``gcn``,
``strategy``, ``output`` and ``analysis``; command-line overrides are passed
as init kwargs and win over the file. Environment variables are never read,
so a run is reproducible from its manifest alone.
"""
import json
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

from .modules.strategies import STRATEGY_NAMES


class AdjacencyMode(str, Enum):
    """How the GCN propagation operator is built from the directed graph."""
    SYMMETRIC = "symmetric"
    DIRECTED_SPLIT = "directed-split"


class FeatureKind(str, Enum):
    NEIGHBOR_LABELS = "neighbor-labels"
    BAG_OF_WORDS = "bag-of-words"


class Protocol(str, Enum):
    FRACTION_BUDGET = "fraction-budget"
    FIXED_SPLIT = "fixed-split"


def _parse_list(v: Any) -> Any:
    """Parse comma-separated strings or JSON arrays into lists."""
    if isinstance(v, str):
        v_stripped = v.strip()
        if not v_stripped:
            return []
        if v_stripped.startswith('[') and v_stripped.endswith(']'):
            try:
                parsed = json.loads(v_stripped)
                if isinstance(parsed, list):
                    return parsed
            except (json.JSONDecodeError, ValueError):
                pass
        return [item.strip() for item in v_stripped.split(',') if item.strip()]
    return v


class GcnConfig(BaseModel):
    """Two-layer GCN hyper-parameters."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    hidden: int = 16
    epochs: int = 200
    learning_rate: float = 0.01
    dropout: float = 0.6  # drop probability
    weight_decay: float = 0.005
    validation_fraction: float = 0.10
    adjacency_mode: AdjacencyMode = AdjacencyMode.SYMMETRIC
    normalize_features: bool = False
    seed: int = 0

    @field_validator('hidden', 'epochs')
    @classmethod
    def _positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"must be >= 1, got {v}")
        return v

    @field_validator('learning_rate')
    @classmethod
    def _positive_rate(cls, v: float) -> float:
        if not v > 0:
            raise ValueError(f"must be > 0, got {v}")
        return v

    @field_validator('dropout', 'validation_fraction')
    @classmethod
    def _unit_half_open(cls, v: float) -> float:
        if not 0.0 <= v < 1.0:
            raise ValueError(f"must be in [0, 1), got {v}")
        return v

    @field_validator('weight_decay')
    @classmethod
    def _non_negative(cls, v: float) -> float:
        if v < 0:
            raise ValueError(f"must be >= 0, got {v}")
        return v


class RegionConfig(BaseModel):
    """Neighborhood used by the regional strategies."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    hops: int = 1
    direction: Literal["undirected", "out", "in"] = "undirected"
    include_self: bool = False

    @field_validator('hops')
    @classmethod
    def _hops(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"hops must be >= 1, got {v}")
        return v


class StrategyParams(BaseModel):
    """Knobs shared by the query strategies."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma: float = 0.85
    rank_tol: float = 1e-10
    rank_max_iters: int = 10_000
    distance_cap: int = 9
    lof_k: int = 20
    region: RegionConfig = RegionConfig()

    @field_validator('gamma')
    @classmethod
    def _gamma(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {v}")
        return v

    @field_validator('distance_cap', 'lof_k', 'rank_max_iters')
    @classmethod
    def _at_least_one(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"must be >= 1, got {v}")
        return v


class ProtocolConfig(BaseModel):
    """Everything one active-learning run needs besides the dataset and its seed."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    protocol: Protocol = Protocol.FRACTION_BUDGET
    strategy: str = "random"
    batch_size: int = 1
    labeled_fraction: Optional[float] = None
    labeled_count: Optional[int] = None
    feature_kind: FeatureKind = FeatureKind.NEIGHBOR_LABELS
    repetitions: int = 20
    seeds: List[int] = Field(default_factory=list)
    gcn: GcnConfig = GcnConfig()
    params: StrategyParams = StrategyParams()
    test_size: int = 1000
    validation_size: int = 500
    splits: int = 2
    inits: int = 2
    warm_start: bool = False
    weights_dir: Optional[Path] = None

    @field_validator('strategy')
    @classmethod
    def _known_strategy(cls, v: str) -> str:
        if v not in STRATEGY_NAMES:
            raise ValueError(f"unknown strategy '{v}'; known: {', '.join(STRATEGY_NAMES)}")
        return v

    @field_validator('batch_size', 'repetitions', 'splits', 'inits')
    @classmethod
    def _at_least_one(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"must be >= 1, got {v}")
        return v

    @field_validator('test_size', 'validation_size')
    @classmethod
    def _non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError(f"must be >= 0, got {v}")
        return v

    @field_validator('seeds', mode='before')
    @classmethod
    def _parse_seeds(cls, v: Any) -> Any:
        return [int(s) for s in _parse_list(v)] if isinstance(v, str) else v

    @model_validator(mode='before')
    @classmethod
    def _default_stop_rule(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        if data.get('labeled_fraction') is None and data.get('labeled_count') is None:
            # fixed-split stops after a node budget, fraction-budget at 15%
            if Protocol(data.get('protocol', Protocol.FRACTION_BUDGET)) == Protocol.FIXED_SPLIT:
                data = {**data, 'labeled_count': 200}
            else:
                data = {**data, 'labeled_fraction': 0.15}
        return data

    @model_validator(mode='after')
    def _one_stop_rule(self) -> 'ProtocolConfig':
        if self.labeled_fraction is not None and self.labeled_count is not None:
            raise ValueError("set exactly one of labeled_fraction / labeled_count")
        if self.labeled_fraction is not None and not 0.0 < self.labeled_fraction <= 1.0:
            raise ValueError(f"labeled_fraction must be in (0, 1], got {self.labeled_fraction}")
        if self.labeled_count is not None and self.labeled_count < 1:
            raise ValueError(f"labeled_count must be >= 1, got {self.labeled_count}")
        return self

    def stop_count(self, n_nodes: int, n_seed: int) -> int:
        """Number of labeled nodes at which the loop stops."""
        if self.labeled_count is not None:
            # budget counts queries on top of the per-class seed
            return n_seed + self.labeled_count
        return max(n_seed, int(np.ceil(self.labeled_fraction * n_nodes)))

    def run_seeds(self) -> List[int]:
        return list(self.seeds) if self.seeds else list(range(self.repetitions))


class DatasetSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: Path = Path("data/cora")
    name: Optional[str] = None
    drop_isolated: Optional[bool] = None
    whitespace_separated: bool = False


class ProtocolSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    protocol: Protocol = Protocol.FRACTION_BUDGET
    batch_size: Optional[int] = None
    labeled_fraction: Optional[float] = None
    labeled_count: Optional[int] = None
    feature_kind: FeatureKind = FeatureKind.NEIGHBOR_LABELS
    repetitions: Optional[int] = None  # 20 for fraction-budget, 5 for fixed-split
    seed: int = 0
    seeds: List[int] = Field(default_factory=list)
    test_size: int = 1000
    validation_size: int = 500
    splits: int = 2
    inits: int = 2
    warm_start: bool = False

    @field_validator('seeds', mode='before')
    @classmethod
    def _parse_seeds(cls, v: Any) -> Any:
        return [int(s) for s in _parse_list(v)] if isinstance(v, str) else v


class StrategySection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    names: List[str] = Field(default_factory=lambda: ["random"])
    gamma: float = 0.85
    rank_tol: float = 1e-10
    rank_max_iters: int = 10_000
    distance_cap: int = 9
    lof_k: int = 20
    region_hops: int = 1
    region_direction: Literal["undirected", "out", "in"] = "undirected"
    region_include_self: bool = False

    @field_validator('names', mode='before')
    @classmethod
    def _parse_names(cls, v: Any) -> Any:
        return _parse_list(v)

    @field_validator('names')
    @classmethod
    def _known_names(cls, v: List[str]) -> List[str]:
        if not v:
            raise ValueError("at least one strategy is required")
        unknown = [name for name in v if name not in STRATEGY_NAMES]
        if unknown:
            raise ValueError(f"unknown strategies {unknown}; known: {', '.join(STRATEGY_NAMES)}")
        return v


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: Path = Path("results")
    log_level: str = "INFO"
    log_to_file: bool = True
    dump_weights: bool = False


class AnalysisSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fractions: List[float] = Field(
        default_factory=lambda: [round(float(f), 6) for f in np.linspace(0.005, 0.15, 15)]
    )
    repetitions: int = 20
    cap: int = 9
    seed: int = 0

    @field_validator('fractions', mode='before')
    @classmethod
    def _parse_fractions(cls, v: Any) -> Any:
        return [float(f) for f in _parse_list(v)] if isinstance(v, str) else v

    @field_validator('fractions')
    @classmethod
    def _fraction_range(cls, v: List[float]) -> List[float]:
        bad = [f for f in v if not 0.0 < f <= 1.0]
        if bad:
            raise ValueError(f"fractions must lie in (0, 1], got {bad}")
        return v


class Settings(BaseSettings):
    """Resolved configuration: TOML file underneath, overrides on top."""

    dataset: DatasetSection = DatasetSection()
    protocol: ProtocolSection = ProtocolSection()
    gcn: GcnConfig = GcnConfig()
    strategy: StrategySection = StrategySection()
    output: OutputSection = OutputSection()
    analysis: AnalysisSection = AnalysisSection()
    workers: Optional[int] = None

    model_config = SettingsConfigDict(extra="forbid", toml_file=None)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return init_settings, TomlConfigSettingsSource(settings_cls)

    @field_validator('workers')
    @classmethod
    def _workers(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError(f"workers must be >= 1, got {v}")
        return v

    @property
    def effective_workers(self) -> int:
        return self.workers or os.cpu_count() or 1

    def strategy_params(self) -> StrategyParams:
        s = self.strategy
        return StrategyParams(
            gamma=s.gamma,
            rank_tol=s.rank_tol,
            rank_max_iters=s.rank_max_iters,
            distance_cap=s.distance_cap,
            lof_k=s.lof_k,
            region=RegionConfig(
                hops=s.region_hops,
                direction=s.region_direction,
                include_self=s.region_include_self,
            ),
        )

    def protocol_config(self, strategy: str, default_batch_size: int = 1) -> ProtocolConfig:
        """Build the per-run protocol for one strategy of the sweep."""
        p = self.protocol
        repetitions = p.repetitions or (5 if p.protocol == Protocol.FIXED_SPLIT else 20)
        seeds = p.seeds or [p.seed + r for r in range(repetitions)]
        return ProtocolConfig(
            protocol=p.protocol,
            strategy=strategy,
            batch_size=p.batch_size or default_batch_size,
            labeled_fraction=p.labeled_fraction,
            labeled_count=p.labeled_count,
            feature_kind=p.feature_kind,
            repetitions=len(seeds),
            seeds=seeds,
            gcn=self.gcn,
            params=self.strategy_params(),
            test_size=p.test_size,
            validation_size=p.validation_size,
            splits=p.splits,
            inits=p.inits,
            warm_start=p.warm_start,
            weights_dir=self.output.directory / "weights" if self.output.dump_weights else None,
        )

    def snapshot(self) -> Dict[str, Any]:
        return self.model_dump(mode='json')


def load_settings(config_path: Union[str, Path, None] = None, **overrides: Any) -> Settings:
    """
    Load settings from a TOML file with keyword overrides on top.

    Overrides are nested dicts keyed by section, e.g.
    ``load_settings(path, protocol={"repetitions": 3})``.
    """
    if config_path is None:
        return Settings(**overrides)

    path = Path(config_path)
    if not path.is_file():
        raise FileNotFoundError(f"Config file not found: {path}")

    class FileSettings(Settings):
        model_config = SettingsConfigDict(toml_file=path)

    return FileSettings(**overrides)
