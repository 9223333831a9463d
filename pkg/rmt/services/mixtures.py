"""
Exchangeable sequences via the de Finetti mixture representation

A mixture is a de Finetti measure over component laws; an exchangeable
sequence is drawn by picking a component once and then sampling i.i.d. from it.
"""
import json
import math
from dataclasses import dataclass
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator, model_validator
from scipy import integrate

from rmt.utils.errors import ConfigError, EmptySequenceError
from rmt.utils.logger import get_component_logger
from rmt.utils.streams import Stream

logger = get_component_logger("mixtures")

WEIGHT_TOLERANCE = 1e-12

TauTag = Union[int, float]


class PointMasses(BaseModel):
    """Finitely many atoms (value, weight)"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["point_masses"] = "point_masses"
    atoms: Tuple[Tuple[float, float], ...]

    @field_validator("atoms")
    @classmethod
    def _check_atoms(cls, atoms):
        if not atoms:
            raise ValueError("point_masses needs at least one atom")
        for value, weight in atoms:
            if not math.isfinite(value):
                raise ValueError(f"atom value must be finite, got {value}")
            if not 0.0 <= weight <= 1.0:
                raise ValueError(f"atom weight must lie in [0, 1], got {weight}")
        total = sum(w for _, w in atoms)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"atom weights sum to {total!r}, expected 1")
        return atoms

    @property
    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.atoms], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)


class UniformInterval(BaseModel):
    """Uniform distribution on [lo, hi]"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["uniform"] = "uniform"
    lo: float
    hi: float

    @model_validator(mode="after")
    def _check_interval(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("uniform bounds must be finite")
        if not self.lo < self.hi:
            raise ValueError(f"uniform needs lo < hi, got [{self.lo}, {self.hi}]")
        return self


class SpinLaw(BaseModel):
    """+1 with probability (1+t)/2, -1 with probability (1-t)/2"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["spin"] = "spin"
    t: float = Field(ge=-1.0, le=1.0)


ComponentLaw = Annotated[Union[PointMasses, UniformInterval, SpinLaw], Field(discriminator="kind")]


class MixtureComponent(BaseModel):
    model_config = ConfigDict(frozen=True)

    weight: float = Field(ge=0.0, le=1.0)
    law: ComponentLaw


class DiscreteMixture(BaseModel):
    """Finite de Finetti measure: component index drawn with the given weights"""
    model_config = ConfigDict(frozen=True)

    components: Tuple[MixtureComponent, ...]

    @field_validator("components")
    @classmethod
    def _check_weights(cls, components):
        if not components:
            raise ValueError("a mixture needs at least one component")
        total = sum(c.weight for c in components)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"component weights sum to {total!r}, expected 1")
        return components


class SpinContinuous(BaseModel):
    """Spin case with de Finetti measure mu over the parameter t in [-1, 1]"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["spin_continuous"] = "spin_continuous"
    mu: Annotated[Union[PointMasses, UniformInterval], Field(discriminator="kind")]

    @field_validator("mu")
    @classmethod
    def _check_support(cls, mu):
        lo, hi = _support(mu)
        if lo < -1.0 or hi > 1.0:
            raise ValueError(f"spin de Finetti measure must live on [-1, 1], got [{lo}, {hi}]")
        return mu


DeFinettiMixture = Union[DiscreteMixture, SpinContinuous]


@dataclass(frozen=True)
class ExchangeableSequence:
    values: np.ndarray
    tau_tag: TauTag


@dataclass(frozen=True)
class PushForward:
    """
    Push-forwards of the de Finetti measure under tau -> v(tau) and tau -> m1(tau)

    Discrete measures are atom lists; for a continuous spin measure `base` holds
    mu and nu is the law of 1 - t**2 under it.
    """
    nu: Tuple[Tuple[float, float], ...]
    mu1: Tuple[Tuple[float, float], ...]
    base: Optional[UniformInterval] = None

    @property
    def is_discrete(self) -> bool:
        return self.base is None

    def nu_moment(self, p: int) -> float:
        """Integral of v**p against nu"""
        if self.is_discrete:
            return float(sum(w * v ** p for v, w in self.nu))
        density = 1.0 / (self.base.hi - self.base.lo)
        value, _ = integrate.quad(lambda t: (1.0 - t * t) ** p * density, self.base.lo, self.base.hi)
        return value

    def zero_variance_weight(self) -> float:
        """nu({0}), the mass that ends up in the atom of the limit law"""
        return float(sum(w for v, w in self.nu if v == 0.0))


_law_adapter = TypeAdapter(ComponentLaw)
_mixture_adapter = TypeAdapter(DeFinettiMixture)


def parse_law(data: Dict[str, Any]) -> ComponentLaw:
    """
    Parse a component-law descriptor

    Accepts {"kind": "point_masses", "atoms": [[v, w], ...]},
    {"kind": "uniform", "lo": a, "hi": b}, {"kind": "spin", "t": t}
    and the shorthand {"kind": "rademacher"}.
    """
    if isinstance(data, BaseModel):
        return data
    if isinstance(data, dict) and data.get("kind") == "rademacher":
        data = {"kind": "spin", "t": 0.0}
    try:
        return _law_adapter.validate_python(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid law descriptor: {e}") from e


def parse_mixture(data: Dict[str, Any]) -> DeFinettiMixture:
    """
    Parse a de Finetti mixture descriptor

    A bare law descriptor is accepted and wrapped as a one-component mixture.
    """
    if isinstance(data, (DiscreteMixture, SpinContinuous)):
        return data
    if isinstance(data, dict) and "components" not in data and data.get("kind") != "spin_continuous":
        return single_component(parse_law(data))
    if isinstance(data, dict) and "components" in data:
        data = dict(data)
        data["components"] = [
            {"weight": c.get("weight"), "law": parse_law(c.get("law"))} if isinstance(c, dict) else c
            for c in data["components"]
        ]
    try:
        return _mixture_adapter.validate_python(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid mixture descriptor: {e}") from e


def parse_entries(data: Dict[str, Any]) -> Union[ComponentLaw, DeFinettiMixture]:
    """Entries of an ensemble are either a single law (Wigner) or a mixture (de Finetti)"""
    if isinstance(data, dict) and ("components" in data or data.get("kind") == "spin_continuous"):
        return parse_mixture(data)
    return parse_law(data)


def is_mixture(entries: Any) -> bool:
    return isinstance(entries, (DiscreteMixture, SpinContinuous))


def single_component(law: ComponentLaw) -> DiscreteMixture:
    return DiscreteMixture(components=(MixtureComponent(weight=1.0, law=law),))


def describe(law_or_mixture: Any) -> str:
    """Compact JSON descriptor used in provenance records"""
    return json.dumps(law_or_mixture.model_dump(), sort_keys=True, separators=(",", ":"))


def _support(law) -> Tuple[float, float]:
    if isinstance(law, PointMasses):
        return float(law.values.min()), float(law.values.max())
    if isinstance(law, UniformInterval):
        return law.lo, law.hi
    return (-1.0, 1.0) if abs(law.t) < 1.0 else (law.t, law.t)


def sample_law(law: ComponentLaw, size: Union[int, Tuple[int, ...]], stream: Stream) -> np.ndarray:
    """
    Draw i.i.d. values from a component law

    Args:
        law: Component law
        size: Number (or shape) of draws
        stream: Random-number stream

    Returns:
        Array of draws
    """
    if isinstance(law, PointMasses):
        return stream.choice(law.values, size=size, p=law.weights)
    if isinstance(law, UniformInterval):
        return stream.uniform(law.lo, law.hi, size=size)
    if isinstance(law, SpinLaw):
        return np.where(stream.random(size) < 0.5 * (1.0 + law.t), 1.0, -1.0)
    raise ConfigError(f"Unsupported law: {law!r}")


def sample_tau(mixture: DeFinettiMixture, stream: Stream) -> TauTag:
    """
    Draw the mixing parameter

    Returns the component index for a discrete mixture and the spin
    parameter t for a continuous spin mixture.
    """
    if isinstance(mixture, DiscreteMixture):
        weights = np.array([c.weight for c in mixture.components])
        if len(weights) == 1:
            return 0
        return int(stream.choice(len(weights), p=weights / weights.sum()))
    return float(sample_law(mixture.mu, 1, stream)[0])


def component_law(mixture: DeFinettiMixture, tau_tag: TauTag) -> ComponentLaw:
    """Conditional law given the mixing parameter"""
    if isinstance(mixture, DiscreteMixture):
        return mixture.components[int(tau_tag)].law
    return SpinLaw(t=float(tau_tag))


def sample_exchangeable(mixture: DeFinettiMixture, n: int, stream: Stream) -> ExchangeableSequence:
    """
    Draw an exchangeable sequence of length n

    The mixing parameter is drawn once, then n i.i.d. values from its law.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    tau = sample_tau(mixture, stream)
    values = sample_law(component_law(mixture, tau), n, stream)
    return ExchangeableSequence(values=values, tau_tag=tau)


def empirical_mean(seq) -> float:
    values = np.asarray(seq, dtype=float)
    if values.size == 0:
        raise EmptySequenceError("empirical mean of an empty sequence")
    return float(values.mean())


def empirical_variance(seq) -> float:
    """V_n, the mean squared deviation from the empirical mean; exactly zero on constant input"""
    values = np.asarray(seq, dtype=float)
    if values.size == 0:
        raise EmptySequenceError("empirical variance of an empty sequence")
    if np.ptp(values) == 0.0:
        return 0.0
    deviations = values - values.mean()
    return max(float(np.mean(deviations * deviations)), 0.0)


def component_moment(law: ComponentLaw, k: int) -> float:
    """
    k-th moment of a component law

    Args:
        law: Component law
        k: Non-negative order

    Returns:
        Exact moment (closed form for the uniform law)
    """
    if k < 0:
        raise ValueError("moment order must be non-negative")
    if k == 0:
        return 1.0
    if isinstance(law, PointMasses):
        return float(np.dot(law.weights, law.values ** k))
    if isinstance(law, UniformInterval):
        return (law.hi ** (k + 1) - law.lo ** (k + 1)) / ((k + 1) * (law.hi - law.lo))
    return 1.0 if k % 2 == 0 else float(law.t)


def law_mean(law: ComponentLaw) -> float:
    return component_moment(law, 1)


def law_variance(law: ComponentLaw) -> float:
    mean = component_moment(law, 1)
    return max(component_moment(law, 2) - mean * mean, 0.0)


def truncated_moment(law: ComponentLaw, k: int, cutoff: float) -> float:
    """E[X**k ; |X| <= cutoff]"""
    if isinstance(law, SpinLaw):
        return component_moment(law, k) if cutoff >= 1.0 else 0.0
    if isinstance(law, PointMasses):
        keep = np.abs(law.values) <= cutoff
        return float(np.dot(law.weights[keep], law.values[keep] ** k))
    lo, hi = max(law.lo, -cutoff), min(law.hi, cutoff)
    if lo >= hi:
        return 0.0
    return (hi ** (k + 1) - lo ** (k + 1)) / ((k + 1) * (law.hi - law.lo))


def _merge_atoms(atoms: List[Tuple[float, float]]) -> Tuple[Tuple[float, float], ...]:
    merged: Dict[float, float] = {}
    for value, weight in atoms:
        if weight > 0.0:
            merged[value] = merged.get(value, 0.0) + weight
    return tuple(sorted(merged.items()))


def pushforward_nu(mixture: DeFinettiMixture) -> PushForward:
    """
    Variance and mean push-forwards of the de Finetti measure

    Returns:
        PushForward with nu (law of v(tau)) and mu1 (law of m1(tau))
    """
    if isinstance(mixture, DiscreteMixture):
        nu = [(law_variance(c.law), c.weight) for c in mixture.components]
        mu1 = [(law_mean(c.law), c.weight) for c in mixture.components]
        return PushForward(nu=_merge_atoms(nu), mu1=_merge_atoms(mu1))

    mu = mixture.mu
    if isinstance(mu, PointMasses):
        nu = [(max(1.0 - t * t, 0.0), w) for t, w in mu.atoms]
        return PushForward(nu=_merge_atoms(nu), mu1=_merge_atoms(list(mu.atoms)))
    return PushForward(nu=(), mu1=(), base=mu)


def is_centred(entries: Any) -> bool:
    """True when every component law has mean zero"""
    if isinstance(entries, DiscreteMixture):
        return all(abs(law_mean(c.law)) <= WEIGHT_TOLERANCE for c in entries.components)
    if isinstance(entries, SpinContinuous):
        return isinstance(entries.mu, PointMasses) and all(
            abs(t) <= WEIGHT_TOLERANCE for t, w in entries.mu.atoms if w > 0
        )
    return abs(law_mean(entries)) <= WEIGHT_TOLERANCE


def truncated_mean(law: ComponentLaw, cutoff: float) -> float:
    return truncated_moment(law, 1, cutoff)


def truncated_second_moment(law: ComponentLaw, cutoff: float) -> float:
    return truncated_moment(law, 2, cutoff)
