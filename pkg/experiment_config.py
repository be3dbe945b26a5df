"""JSON configuration for the search and sweep pipelines."""

import json
import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from data_generator import SYSTEMS, SystemSpec, generate_dataset, load_csv, system_spec
from decision_maker import PreferenceSpec
from evolution_core import GoalPoint
from exceptions import ConfigError
from moea_optimizers import RunConfig
from narx_model import Dataset, ModelSet, generate_model_set

logger = logging.getLogger(__name__)

DEFAULT_PC_VALUES = [round(0.1 * i, 1) for i in range(1, 11)]
DEFAULT_PM_VALUES = [float(v) for v in np.linspace(0.001, 0.0199, 10)]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSetSpec(StrictModel):
    n_u: int = Field(4, ge=0)
    n_y: int = Field(4, ge=0)
    n_l: int = Field(3, ge=1)

    def build(self) -> ModelSet:
        return generate_model_set(self.n_u, self.n_y, self.n_l)


class GoalSpec(StrictModel):
    xi_lim: int = Field(20, ge=1)
    nmse_lim: float = Field(30.0, gt=0)

    def to_goal(self) -> GoalPoint:
        return GoalPoint(self.xi_lim, self.nmse_lim)


class MCDMSpec(StrictModel):
    method: Literal["mmd", "mtd", "both"] = "both"
    ranks: List[int] = Field(default_factory=lambda: [1, 2])
    intensity: float = Field(5.0, ge=1.0, le=9.0)

    @field_validator("ranks")
    @classmethod
    def _permutation(cls, ranks: List[int]) -> List[int]:
        if sorted(ranks) != list(range(1, len(ranks) + 1)):
            raise ValueError(f"ranks must be a permutation of 1..{len(ranks)}")
        return ranks

    def to_preference(self) -> PreferenceSpec:
        return PreferenceSpec(tuple(self.ranks), self.intensity)


class DataSource(StrictModel):
    """Either a named benchmark system or an external ``u,y`` CSV file"""

    system: Optional[str] = None
    data_path: Optional[str] = None
    n_samples: Optional[int] = Field(None, gt=2)
    estimation_len: Optional[int] = Field(None, gt=0)
    model_set: Optional[ModelSetSpec] = None
    goal: GoalSpec = Field(default_factory=GoalSpec)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.system is None) == (self.data_path is None):
            raise ValueError("exactly one of system or data_path must be given")
        if self.system is not None and self.system not in SYSTEMS:
            raise ValueError(f"unknown system {self.system!r}; expected one of {sorted(SYSTEMS)}")
        return self

    @property
    def label(self) -> str:
        return self.system or Path(self.data_path).stem

    def system_spec(self, system: Optional[str] = None, seed: int = 0) -> SystemSpec:
        estimation_len = self.estimation_len
        if estimation_len is None and self.n_samples is not None:
            estimation_len = round(0.7 * self.n_samples)
        return system_spec(
            system or self.system,
            n_samples=self.n_samples,
            estimation_len=estimation_len,
            seed=seed,
        )

    def describe(self, seed: int = 0) -> Dict:
        """Enough to rebuild the dataset later (stored next to archives)"""
        if self.data_path is not None:
            return {"data_path": self.data_path, "estimation_len": self.estimation_len}
        spec = self.system_spec(seed=seed)
        return {
            "system": spec.id,
            "seed": seed,
            "n_samples": spec.n_samples,
            "estimation_len": spec.estimation_len,
        }

    def build_dataset(self, system: Optional[str] = None, seed: int = 0) -> Dataset:
        if system is None and self.data_path is not None:
            return load_csv(self.data_path, self.estimation_len)
        return generate_dataset(self.system_spec(system, seed))

    def build_model_set(self, system: Optional[str] = None) -> ModelSet:
        if self.model_set is not None:
            return self.model_set.build()
        if system or self.system:
            return self.system_spec(system).build_model_set()
        return ModelSetSpec().build()


class ExperimentConfig(DataSource):
    run: RunConfig = Field(default_factory=RunConfig)
    runs: int = Field(40, ge=1)
    mcdm: MCDMSpec = Field(default_factory=MCDMSpec)
    alpha: float = Field(0.05, gt=0, lt=1)
    seed: int = 0
    workers: int = Field(1, ge=1)
    out: str = "results"


class SweepConfig(StrictModel):
    systems: List[str] = Field(default_factory=lambda: ["S1", "S2", "S3", "S4", "S5", "S6"], min_length=1)
    p_c_values: List[float] = Field(default_factory=lambda: list(DEFAULT_PC_VALUES), min_length=1)
    p_m_values: List[float] = Field(default_factory=lambda: list(DEFAULT_PM_VALUES), min_length=1)
    runs: int = Field(20, ge=1)
    algorithm: Literal["nsga2", "spea2", "moead"] = "nsga2"
    crossover: Literal["uniform", "single_point"] = "uniform"
    compare_crossovers: bool = False
    run: RunConfig = Field(default_factory=RunConfig)
    model_set: Optional[ModelSetSpec] = None
    goal: GoalSpec = Field(default_factory=GoalSpec)
    n_samples: Optional[int] = Field(None, gt=2)
    estimation_len: Optional[int] = Field(None, gt=0)
    seed: int = 0
    workers: int = Field(1, ge=1)
    out: str = "sweep"

    @field_validator("systems")
    @classmethod
    def _known_systems(cls, systems: List[str]) -> List[str]:
        unknown = [s for s in systems if s not in SYSTEMS or s == "duffing"]
        if unknown:
            raise ValueError(f"unknown or non-discrete systems {unknown}")
        return systems

    @field_validator("p_c_values")
    @classmethod
    def _pc_range(cls, values: List[float]) -> List[float]:
        if any(not 0.1 <= v <= 1.0 for v in values):
            raise ValueError("crossover probabilities must lie in [0.1, 1]")
        return values

    @field_validator("p_m_values")
    @classmethod
    def _pm_range(cls, values: List[float]) -> List[float]:
        if any(not 0.001 <= v < 0.02 for v in values):
            raise ValueError("mutation probabilities must lie in [0.001, 0.02)")
        return values

    @property
    def cells(self) -> List[tuple]:
        """(cell index, p_c, p_m), p_m varying fastest"""
        return [
            (index, p_c, p_m)
            for index, (p_c, p_m) in enumerate((pc, pm) for pc in self.p_c_values for pm in self.p_m_values)
        ]

    def cell_run_config(self, p_c: float, p_m: float, crossover: str, seed: int) -> RunConfig:
        fields = self.run.model_dump()
        fields.update(algorithm=self.algorithm, p_c=p_c, p_m=p_m, crossover=crossover, seed=seed)
        return RunConfig(**fields)

    def data_source(self, system: str) -> DataSource:
        return DataSource(
            system=system,
            n_samples=self.n_samples,
            estimation_len=self.estimation_len,
            model_set=self.model_set,
            goal=self.goal,
        )


def rebuild_dataset(description: Dict, system: Optional[str] = None) -> Dataset:
    """Inverse of ``DataSource.describe``"""
    if "data_path" in description:
        return load_csv(description["data_path"], description.get("estimation_len"))
    system = system or description.get("system")
    if system is None:
        raise ConfigError("archive does not record its data source; pass a system id", ["system"])
    spec = system_spec(
        system,
        n_samples=description.get("n_samples"),
        estimation_len=description.get("estimation_len"),
        seed=description.get("seed", 0),
    )
    return generate_dataset(spec)


def format_validation_error(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        path = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{path}: {item['msg']}")
    return "; ".join(lines)


def read_config_file(path: Union[str, Path]) -> Dict:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"configuration file {path} not found") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return raw


def validate_config(model: type, raw: dict, source: str = "configuration"):
    try:
        return model.model_validate(raw)
    except ValidationError as e:
        fields = [".".join(str(p) for p in item["loc"]) for item in e.errors()]
        raise ConfigError(f"{source}: {format_validation_error(e)}", fields) from e


def merge_overrides(raw: Dict, overrides: Optional[Dict]) -> Dict:
    """Overlay command-line values on a file config; nested blocks merge one level deep"""
    merged = dict(raw)
    for key, value in (overrides or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return merged


def load_experiment_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Dict] = None) -> ExperimentConfig:
    raw = merge_overrides(read_config_file(path) if path else {}, overrides)
    if overrides and "system" in overrides:
        # a named system replaces the data file
        raw.pop("data_path", None)
    return validate_config(ExperimentConfig, raw, str(path) if path else "command line")


def load_sweep_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Dict] = None) -> SweepConfig:
    raw = merge_overrides(read_config_file(path) if path else {}, overrides)
    return validate_config(SweepConfig, raw, str(path) if path else "command line")
