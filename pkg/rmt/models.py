"""
Declarative configuration documents for rmt

Ensemble, experiment, oracle and perturbation configs are JSON documents
validated here. Laws, mixtures and targets are parsed by their own modules.
"""
import json
import re
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from rmt.services.ensembles import BandSpec, half_width_rule
from rmt.services.limits import parse_target
from rmt.services.mixtures import parse_entries, parse_law
from rmt.utils.errors import ConfigError
from rmt.utils.settings import DEFAULT_MASTER_SEED

METRICS = ("ks_vs_target", "opnorm_ratio", "second_singular_ratio", "moment_track", "aggregate_histogram")
_MOMENT_TRACK = re.compile(r"^moment_track\((\d+)\)$")


class HalfWidthRule(BaseModel):
    """b_N = max(1, floor(c * N**q))"""
    model_config = ConfigDict(frozen=True)

    c: float = Field(default=1.0, gt=0.0)
    q: float = Field(ge=0.0, le=1.0)


class EnsembleConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["strict", "periodic", "full"] = "full"
    n: Optional[int] = Field(default=None, ge=1)
    half_width: Optional[int] = Field(default=None, ge=0)
    rule: Optional[HalfWidthRule] = None

    @model_validator(mode="after")
    def _check_band(self):
        if self.kind != "full" and self.half_width is None and self.rule is None:
            raise ValueError(f"{self.kind} ensemble needs half_width or rule")
        return self

    def spec_for(self, n: int) -> BandSpec:
        """Band specification at dimension n"""
        if self.kind == "full":
            return BandSpec.full(n)
        if self.rule is not None:
            b = half_width_rule(n, self.rule.c, self.rule.q)
        else:
            b = min(self.half_width, n - 1)
        return BandSpec(n=n, half_width=b, kind=self.kind)


class AcceptanceSpec(BaseModel):
    """One pass/fail criterion over a result"""
    model_config = ConfigDict(frozen=True)

    key: str = "value"
    statistic: Literal["every_trial", "median", "aggregate"] = "every_trial"
    lo: Optional[float] = None
    hi: Optional[float] = None
    sizes: Optional[List[int]] = None
    trend: Optional[Literal["non_increasing"]] = None
    allowed_inversions: int = Field(default=1, ge=0)
    min_growth: Optional[float] = None
    max_spread: Optional[float] = None


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str = "experiment"
    ensemble: EnsembleConfig = EnsembleConfig()
    entries: Any
    sizes: List[int] = Field(default_factory=list)
    trials: int = Field(default=1, ge=1)
    master_seed: int = Field(default=DEFAULT_MASTER_SEED, ge=0)
    metric: str = "ks_vs_target"
    moment_k: int = Field(default=2, ge=0)
    target: Any = None
    bins: int = Field(default=60, ge=1)
    normalization: Optional[Literal["sqrt_w", "w"]] = None
    eigensolver: Optional[Literal["householder_ql", "lapack"]] = None
    threads: int = Field(default=1, ge=1)
    acceptance: List[AcceptanceSpec] = Field(default_factory=list)

    @model_validator(mode="before")
    @classmethod
    def _unpack(cls, data):
        if not isinstance(data, dict):
            return data
        data = dict(data)
        ensemble = dict(data.get("ensemble") or {})
        # ensemble documents may carry their own entries
        if "entries" not in data and "entries" in ensemble:
            data["entries"] = ensemble["entries"]
        ensemble.pop("entries", None)
        data["ensemble"] = ensemble
        if not data.get("sizes") and ensemble.get("n"):
            data["sizes"] = [ensemble["n"]]
        match = _MOMENT_TRACK.match(str(data.get("metric", "")))
        if match:
            data["metric"] = "moment_track"
            data["moment_k"] = int(match.group(1))
        return data

    @field_validator("entries")
    @classmethod
    def _parse_entries(cls, value):
        return parse_entries(value)

    @field_validator("target")
    @classmethod
    def _parse_target(cls, value):
        return None if value is None else parse_target(value)

    @field_validator("metric")
    @classmethod
    def _check_metric(cls, value):
        if value not in METRICS:
            raise ValueError(f"unknown metric {value!r}; expected one of {METRICS}")
        return value

    @field_validator("sizes")
    @classmethod
    def _check_sizes(cls, sizes):
        if not sizes:
            raise ValueError("sizes must list at least one dimension")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("sizes must be strictly ascending")
        if min(sizes) < 1:
            raise ValueError("sizes must be positive")
        return sizes


class OracleConfig(BaseModel):
    n: int = Field(ge=1)
    k: int = Field(ge=1)
    ensemble: EnsembleConfig = EnsembleConfig()
    entries: Any = Field(default={"kind": "rademacher"}, validate_default=True)
    trials: int = Field(default=100000, ge=2)
    master_seed: int = Field(default=DEFAULT_MASTER_SEED, ge=0)
    n_N: Optional[int] = Field(default=None, ge=1)
    support_bound: float = Field(default=1.0, gt=0.0)

    @field_validator("entries")
    @classmethod
    def _parse_law(cls, value):
        return parse_law(value)

    @property
    def spec(self) -> BandSpec:
        return self.ensemble.spec_for(self.n)


class PerturbConfig(BaseModel):
    instances: int = Field(default=1000, ge=1)
    sizes: List[int] = Field(default_factory=lambda: [8, 16, 32])
    master_seed: int = Field(default=DEFAULT_MASTER_SEED, ge=0)
    projection_sizes: List[int] = Field(default_factory=lambda: [16, 64, 256])
    split_mean: float = 1.0

    @field_validator("projection_sizes")
    @classmethod
    def _check_projection_sizes(cls, sizes):
        if any(n < 2 for n in sizes):
            raise ValueError("projection sizes must be at least 2")
        return sizes


def _validate(model, data: Dict[str, Any], overrides: Dict[str, Any]):
    data = dict(data)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid {model.__name__}: {e}") from e


def load_document(path: str) -> Dict[str, Any]:
    """Read a JSON config document"""
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Could not read config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config {path} must be a JSON object")
    return data


def experiment_config(data: Dict[str, Any], **overrides) -> ExperimentConfig:
    return _validate(ExperimentConfig, data, overrides)


def oracle_config(data: Dict[str, Any], **overrides) -> OracleConfig:
    return _validate(OracleConfig, data, overrides)


def perturb_config(data: Dict[str, Any], **overrides) -> PerturbConfig:
    return _validate(PerturbConfig, data, overrides)
