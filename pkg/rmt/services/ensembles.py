"""
Prototype band matrices and random symmetric ensembles

Strict bands keep entries with |i - j| <= b, periodic bands measure the
distance on the circle Z/NZ. Random matrices are filled row-wise over the
in-band upper triangle and mirrored.
"""
import math
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from rmt.services.mixtures import (
    ComponentLaw,
    DeFinettiMixture,
    TauTag,
    component_law,
    describe,
    is_mixture,
    law_variance,
    sample_law,
    sample_tau,
    truncated_mean,
    truncated_second_moment,
)
from rmt.utils.errors import ConfigError
from rmt.utils.logger import get_component_logger
from rmt.utils.streams import Stream

logger = get_component_logger("ensembles")


class BandSpec(BaseModel):
    """Dimension, half-width and band kind"""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    half_width: int = Field(ge=0)
    kind: Literal["strict", "periodic"] = "strict"

    @model_validator(mode="after")
    def _check_half_width(self):
        if self.half_width > self.n - 1:
            raise ValueError(f"half_width {self.half_width} exceeds n - 1 = {self.n - 1}")
        return self

    @classmethod
    def full(cls, n: int) -> "BandSpec":
        return cls(n=n, half_width=n - 1, kind="strict")

    def bandwidth(self) -> int:
        return min(self.n, 2 * self.half_width + 1)

    @property
    def is_full(self) -> bool:
        return self.bandwidth() == self.n and (self.kind == "periodic" or self.half_width == self.n - 1)


@dataclass(frozen=True)
class Provenance:
    seed: Optional[int]
    tau_tag: Union[TauTag, str]
    entry_law: ComponentLaw

    @property
    def entry_law_descriptor(self) -> str:
        return describe(self.entry_law)


@dataclass(frozen=True)
class MatrixSample:
    """A realized symmetric matrix and where it came from"""
    entries: np.ndarray
    spec: BandSpec
    provenance: Provenance

    @property
    def n(self) -> int:
        return self.spec.n

    def in_band_entries(self) -> np.ndarray:
        """Upper-triangle in-band entries in fill order"""
        rows, cols = _fill_positions(self.spec)
        return self.entries[rows, cols]


@dataclass(frozen=True)
class TruncationResult:
    truncated: MatrixSample
    centered: MatrixSample
    mean_matrix: MatrixSample
    e: float
    truncated_variance: float
    support_bound: float


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def band_distance(n: int, kind: str) -> np.ndarray:
    idx = np.arange(n)
    distance = np.abs(idx[:, None] - idx[None, :])
    if kind == "periodic":
        distance = np.minimum(distance, n - distance)
    return distance


def prototype(spec: BandSpec) -> np.ndarray:
    """
    0/1 band prototype

    Args:
        spec: Band specification

    Returns:
        Symmetric n x n float matrix, B_N for strict and P_N for periodic bands
    """
    return (band_distance(spec.n, spec.kind) <= spec.half_width).astype(float)


def maximal_row_occupancy(spec: BandSpec) -> int:
    """Largest number of in-band positions in a row"""
    return int(prototype(spec).sum(axis=1).max())


def half_width_rule(n: int, c: float, q: float) -> int:
    """b_N = max(1, floor(c * N**q)), capped at N - 1"""
    if n < 1:
        raise ConfigError("n must be at least 1")
    if q == 0:
        logger.warning("Half-width rule with q = 0 gives a bounded bandwidth; no convergence claim applies")
    b = max(1, int(math.floor(c * n ** q)))
    return min(b, n - 1)


def _fill_positions(spec: BandSpec):
    mask = np.triu(band_distance(spec.n, spec.kind) <= spec.half_width)
    return np.nonzero(mask)


def _symmetric_fill(spec: BandSpec, values: np.ndarray) -> np.ndarray:
    rows, cols = _fill_positions(spec)
    entries = np.zeros((spec.n, spec.n))
    entries[rows, cols] = values
    entries[cols, rows] = values
    return entries


def _draw_in_band(spec: BandSpec, law: ComponentLaw, stream: Stream) -> np.ndarray:
    count = len(_fill_positions(spec)[0])
    return _symmetric_fill(spec, sample_law(law, count, stream))


def build_wigner(spec: BandSpec, law: ComponentLaw, stream: Stream, seed: Optional[int] = None) -> MatrixSample:
    """
    Wigner band matrix with independent in-band entries

    Args:
        spec: Band specification
        law: Entry law
        stream: Random-number stream
        seed: Seed recorded in the provenance (informational)

    Returns:
        MatrixSample tagged "wigner"
    """
    entries = _draw_in_band(spec, law, stream)
    return MatrixSample(
        entries=_frozen(entries),
        spec=spec,
        provenance=Provenance(seed=seed, tau_tag="wigner", entry_law=law),
    )


def build_definetti(
    spec: BandSpec, mixture: DeFinettiMixture, stream: Stream, seed: Optional[int] = None
) -> MatrixSample:
    """
    de Finetti band matrix: one mixing draw, then i.i.d. entries from its law

    Args:
        spec: Band specification
        mixture: de Finetti mixture
        stream: Random-number stream
        seed: Seed recorded in the provenance (informational)

    Returns:
        MatrixSample whose provenance carries the drawn tau_tag
    """
    tau = sample_tau(mixture, stream)
    law = component_law(mixture, tau)
    entries = _draw_in_band(spec, law, stream)
    logger.debug(f"de Finetti build n={spec.n} b={spec.half_width} tau={tau}")
    return MatrixSample(
        entries=_frozen(entries),
        spec=spec,
        provenance=Provenance(seed=seed, tau_tag=tau, entry_law=law),
    )


def build(spec: BandSpec, entries, stream: Stream, seed: Optional[int] = None) -> MatrixSample:
    """Dispatch on a law (Wigner) or a mixture (de Finetti)"""
    if is_mixture(entries):
        return build_definetti(spec, entries, stream, seed=seed)
    return build_wigner(spec, entries, stream, seed=seed)


def truncate_and_center(sample: MatrixSample, cutoff: float) -> TruncationResult:
    """
    Truncation and centering used for the operator-norm bound

    Entries with |x| > cutoff are zeroed; the truncated mean is computed
    exactly from the entry law and subtracted on the band.

    Args:
        sample: Matrix sample whose provenance carries its entry law
        cutoff: Truncation level K > 0

    Returns:
        TruncationResult with e = |E(truncated entry)| and the support bound K + e
    """
    if cutoff <= 0:
        raise ValueError(f"cutoff must be positive, got {cutoff}")

    law = sample.provenance.entry_law
    truncated = np.where(np.abs(sample.entries) <= cutoff, sample.entries, 0.0)
    mean = truncated_mean(law, cutoff)
    second = truncated_second_moment(law, cutoff)
    mean_matrix = mean * prototype(sample.spec)
    centered = truncated - mean_matrix

    variance = max(second - mean * mean, 0.0)
    if variance > law_variance(law) + 1e-12:
        logger.warning(f"Truncated variance {variance} exceeds the original {law_variance(law)}")

    def _wrap(entries):
        return MatrixSample(entries=_frozen(entries), spec=sample.spec, provenance=sample.provenance)

    return TruncationResult(
        truncated=_wrap(truncated),
        centered=_wrap(centered),
        mean_matrix=_wrap(mean_matrix),
        e=abs(mean),
        truncated_variance=variance,
        support_bound=cutoff + abs(mean),
    )


def build_wigner_batch(spec: BandSpec, law: ComponentLaw, count: int, stream: Stream) -> np.ndarray:
    """
    Stack of independent Wigner band matrices

    Returns:
        Array of shape (count, n, n)
    """
    rows, cols = _fill_positions(spec)
    values = sample_law(law, (count, len(rows)), stream)
    batch = np.zeros((count, spec.n, spec.n))
    batch[:, rows, cols] = values
    batch[:, cols, rows] = values
    return batch
