"""
Closed-form limit laws

Scaled semicircles, the mixture law sigma_mu (atom at zero plus density),
the spin-case density, Catalan moments and the Kolmogorov-Smirnov distance
of an eigenvalue distribution to any of these targets.
"""
import math
from typing import Annotated, Any, Dict, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator, model_validator
from scipy import integrate, optimize

from rmt.services.mixtures import (
    DeFinettiMixture,
    DiscreteMixture,
    PointMasses,
    SpinContinuous,
    UniformInterval,
    pushforward_nu,
)
from rmt.services.spectra import ESDCdf
from rmt.utils.errors import ConfigError, DensityUndefinedError
from rmt.utils.logger import get_component_logger

logger = get_component_logger("limits")

WEIGHT_TOLERANCE = 1e-12
QUAD_RELATIVE_TOLERANCE = 1e-8
SEMICIRCLE_RELATIVE_TOLERANCE = 1e-12


class SemicircleLaw(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["semicircle"] = "semicircle"
    v: float = Field(ge=0.0)


class MixtureLaw(BaseModel):
    """Atom at zero plus a finite mixture of semicircles with variances nu"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["mixture"] = "mixture"
    atom: float = Field(default=0.0, ge=0.0, le=1.0)
    nu: Tuple[Tuple[float, float], ...] = ()

    @model_validator(mode="after")
    def _check_weights(self):
        for v, w in self.nu:
            if v <= 0.0:
                raise ValueError(f"nu atoms must be positive variances, got {v}")
            if not 0.0 <= w <= 1.0:
                raise ValueError(f"nu weight must lie in [0, 1], got {w}")
        total = self.atom + sum(w for _, w in self.nu)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"atom + nu weights sum to {total!r}, expected 1")
        return self


class SpinMixtureLaw(BaseModel):
    """sigma_mu in the spin case, mu a measure on [-1, 1]"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["spin_mixture"] = "spin_mixture"
    mu: Annotated[Union[PointMasses, UniformInterval], Field(discriminator="kind")]

    @field_validator("mu")
    @classmethod
    def _check_support(cls, mu):
        lo, hi = (mu.lo, mu.hi) if isinstance(mu, UniformInterval) else (min(mu.values), max(mu.values))
        if lo < -1.0 or hi > 1.0:
            raise ValueError("spin de Finetti measure must live on [-1, 1]")
        return mu

    @property
    def atom(self) -> float:
        if isinstance(self.mu, PointMasses):
            return float(sum(w for t, w in self.mu.atoms if abs(t) == 1.0))
        return 0.0


TargetLaw = Annotated[Union[SemicircleLaw, MixtureLaw, SpinMixtureLaw], Field(discriminator="kind")]

_target_adapter = TypeAdapter(TargetLaw)

SPIN_UNIFORM = SpinMixtureLaw(mu=UniformInterval(lo=-1.0, hi=1.0))


def parse_target(data: Dict[str, Any]) -> TargetLaw:
    """
    Parse a target-law descriptor

    {"kind": "semicircle", "v": 1.0} | {"kind": "mixture", "atom": 0.0, "nu": [[1.0, 0.5], ...]}
    | {"kind": "spin_uniform"} | {"kind": "spin_mixture", "mu": {...}}
    """
    if isinstance(data, BaseModel):
        return data
    if isinstance(data, dict) and data.get("kind") == "spin_uniform":
        return SPIN_UNIFORM
    try:
        return _target_adapter.validate_python(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid target descriptor: {e}") from e


def target_from_mixture(mixture: DeFinettiMixture) -> TargetLaw:
    """sigma_mu for a de Finetti mixture (a plain semicircle when nu is a point mass)"""
    if not isinstance(mixture, DiscreteMixture) and isinstance(mixture.mu, UniformInterval):
        return SpinMixtureLaw(mu=mixture.mu)
    push = pushforward_nu(mixture)
    if len(push.nu) == 1:
        return SemicircleLaw(v=push.nu[0][0])
    atom = push.zero_variance_weight()
    nu = tuple((v, w) for v, w in push.nu if v > 0.0)
    # re-normalise rounding so the weights validate
    total = atom + sum(w for _, w in nu)
    return MixtureLaw(atom=atom / total, nu=tuple((v, w / total) for v, w in nu))


def semicircle_pdf(v: float, x: float) -> float:
    """s_v(x) = sqrt((4v - x^2)_+) / (2 pi v); zero everywhere for v = 0"""
    if v < 0:
        raise ValueError("variance must be non-negative")
    if v == 0:
        return 0.0
    return math.sqrt(max(4.0 * v - x * x, 0.0)) / (2.0 * math.pi * v)


def semicircle_cdf(v: float, x: float) -> float:
    if v < 0:
        raise ValueError("variance must be non-negative")
    if v == 0:
        return 1.0 if x >= 0 else 0.0
    edge = 2.0 * math.sqrt(v)
    if x <= -edge:
        return 0.0
    if x >= edge:
        return 1.0
    value = (x * math.sqrt(4.0 * v - x * x) / 2.0 + 2.0 * v * math.asin(x / edge)) / (2.0 * math.pi * v) + 0.5
    return min(max(value, 0.0), 1.0)


def catalan(m: int) -> int:
    return math.comb(2 * m, m) // (m + 1)


def semicircle_moment(v: float, k: int) -> float:
    """v^{k/2} C_{k/2} for even k, 0 for odd k"""
    if k < 0:
        raise ValueError("moment order must be non-negative")
    if k % 2:
        return 0.0
    return v ** (k // 2) * catalan(k // 2)


def mixture_density(law: MixtureLaw, x: float) -> float:
    """
    Density of the absolutely continuous part of sigma_mu

    Args:
        law: Mixture target
        x: Non-zero point

    Returns:
        Sum over nu atoms with v > x^2/4 of weight * sqrt(4v - x^2) / (2 pi v)
    """
    if x == 0:
        raise DensityUndefinedError("mixture density is not evaluated at x = 0")
    x = abs(x)
    total = 0.0
    for v, w in law.nu:
        if 4.0 * v > x * x:
            total += w * math.sqrt(4.0 * v - x * x) / (2.0 * math.pi * v)
    return total


def _spin_integrand(a: float, t: float) -> float:
    return math.sqrt(max(a * a - 4.0 * t * t, 0.0)) / (1.0 - t * t)


def spin_mixture_density(mu, x: float) -> float:
    """
    Spin-case density (1/2pi) int sqrt(a^2 - 4t^2) / (1 - t^2) dmu(t), a = sqrt(4 - x^2)

    Exact for atomic mu, adaptive quadrature for a uniform mu.
    """
    if x == 0:
        raise DensityUndefinedError("spin mixture density is not evaluated at x = 0")
    if abs(x) > 2.0:
        return 0.0
    a = math.sqrt(4.0 - x * x)
    half = a / 2.0
    if isinstance(mu, PointMasses):
        total = sum(w * _spin_integrand(a, t) for t, w in mu.atoms if abs(t) < half)
        return total / (2.0 * math.pi)

    lo, hi = max(mu.lo, -half), min(mu.hi, half)
    if lo >= hi:
        return 0.0
    value, _ = integrate.quad(lambda t: _spin_integrand(a, t), lo, hi, epsrel=QUAD_RELATIVE_TOLERANCE)
    return value / ((mu.hi - mu.lo) * 2.0 * math.pi)


def target_atom(law: TargetLaw) -> float:
    if isinstance(law, SemicircleLaw):
        return 1.0 if law.v == 0 else 0.0
    return float(law.atom)


def target_density(law: TargetLaw, x: float) -> float:
    """Density of the absolutely continuous part of any target"""
    if isinstance(law, SemicircleLaw):
        return semicircle_pdf(law.v, x)
    if isinstance(law, MixtureLaw):
        return mixture_density(law, x)
    return spin_mixture_density(law.mu, x)


def target_cdf(law: TargetLaw, x: float, left: bool = False) -> float:
    """
    Distribution function of a target law

    Args:
        law: Target law
        x: Evaluation point
        left: Return the left limit F(x-) (differs only at the atom 0)
    """
    if left and x == 0:
        return target_cdf(law, 0.0) - target_atom(law)

    if isinstance(law, SemicircleLaw):
        return semicircle_cdf(law.v, x)
    if isinstance(law, MixtureLaw):
        value = law.atom * (1.0 if x >= 0 else 0.0)
        value += sum(w * semicircle_cdf(v, x) for v, w in law.nu)
        return min(value, 1.0)

    mu = law.mu
    if isinstance(mu, PointMasses):
        return min(sum(w * semicircle_cdf(max(1.0 - t * t, 0.0), x) for t, w in mu.atoms), 1.0)
    if x <= -2.0:
        return 0.0
    if x >= 2.0:
        return 1.0
    if mu.lo == -1.0 and mu.hi == 1.0:
        # uniform spin case: density (2 - |x|)/4
        return (2.0 + x) ** 2 / 8.0 if x <= 0 else 1.0 - (2.0 - x) ** 2 / 8.0
    density = 1.0 / (mu.hi - mu.lo)
    value, _ = integrate.quad(
        lambda t: semicircle_cdf(max(1.0 - t * t, 0.0), x) * density,
        mu.lo,
        mu.hi,
        epsrel=QUAD_RELATIVE_TOLERANCE,
        limit=200,
    )
    return min(max(value, 0.0), 1.0)


def target_support(law: TargetLaw) -> float:
    """Half-length of the support, 2 sqrt(v_max)"""
    if isinstance(law, SemicircleLaw):
        return 2.0 * math.sqrt(law.v)
    if isinstance(law, MixtureLaw):
        return 2.0 * math.sqrt(max((v for v, _ in law.nu), default=0.0))
    return 2.0


def target_quantile(law: TargetLaw, p: float) -> float:
    """Smallest x with F(x) >= p"""
    if not 0.0 < p < 1.0:
        raise ValueError("quantile level must lie in (0, 1)")
    edge = target_support(law)
    if edge == 0.0:
        return 0.0
    atom = target_atom(law)
    if atom > 0 and target_cdf(law, 0.0, left=True) < p <= target_cdf(law, 0.0):
        return 0.0
    return float(optimize.brentq(lambda x: target_cdf(law, x) - p, -edge, edge, xtol=1e-14))


def is_semicircle(nu) -> Tuple[bool, float]:
    """
    Whether sigma_mu is a semicircle, i.e. nu is a point mass

    Cauchy-Schwarz: int v^2 dnu = (int v dnu)^2 iff nu is degenerate.

    Args:
        nu: Atom list, MixtureLaw, SpinMixtureLaw or PushForward; continuous nu
            goes through its quadrature moments

    Returns:
        (flag, a) with a = int v dnu (meaningful when flag is true)
    """
    if isinstance(nu, SpinMixtureLaw):
        nu = pushforward_nu(SpinContinuous(mu=nu.mu))
    if hasattr(nu, "nu_moment"):
        first, second = nu.nu_moment(1), nu.nu_moment(2)
    else:
        atoms = nu.nu if hasattr(nu, "nu") else nu
        first = float(sum(w * v for v, w in atoms))
        second = float(sum(w * v * v for v, w in atoms))
    scale = max(second, first * first)
    if scale == 0.0:
        return True, 0.0
    flag = abs(second - first * first) <= SEMICIRCLE_RELATIVE_TOLERANCE * scale
    return flag, first


def ks_distance(cdf: ESDCdf, target: TargetLaw) -> float:
    """
    Kolmogorov-Smirnov distance between an eigenvalue distribution and a target

    The supremum is attained at an eigenvalue (or at the target atom); both
    one-sided limits are compared there.
    """
    points = np.unique(cdf.points)
    if target_atom(target) > 0.0:
        # the target jumps at 0 even when no eigenvalue sits there
        points = np.union1d(points, [0.0])
    distance = 0.0
    for x in points:
        right = abs(float(cdf(x)) - target_cdf(target, float(x)))
        left = abs(float(cdf.left_limit(x)) - target_cdf(target, float(x), left=True))
        distance = max(distance, right, left)
    return min(distance, 1.0)
