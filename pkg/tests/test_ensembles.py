"""
Tests for band prototypes, random ensembles and truncation
"""
from collections import Counter

import numpy as np
import pytest

from rmt.services.ensembles import (
    BandSpec,
    build,
    build_definetti,
    build_wigner,
    build_wigner_batch,
    half_width_rule,
    maximal_row_occupancy,
    prototype,
    truncate_and_center,
)
from rmt.services.mixtures import (
    PointMasses,
    SpinContinuous,
    SpinLaw,
    UniformInterval,
    component_moment,
    single_component,
)
from rmt.services.perturb import matrix_rank


def test_band_spec_validation():
    with pytest.raises(ValueError):
        BandSpec(n=3, half_width=3)
    with pytest.raises(ValueError):
        BandSpec(n=0, half_width=0)
    assert BandSpec(n=10, half_width=2).bandwidth() == 5
    assert BandSpec(n=4, half_width=3).bandwidth() == 4
    assert BandSpec.full(6).is_full
    assert BandSpec(n=5, half_width=2, kind="periodic").is_full
    assert not BandSpec(n=5, half_width=2, kind="strict").is_full


def test_prototype_examples():
    assert np.array_equal(prototype(BandSpec(n=3, half_width=0)), np.eye(3))
    periodic = prototype(BandSpec(n=4, half_width=1, kind="periodic"))
    assert periodic[0].tolist() == [1.0, 1.0, 0.0, 1.0]
    for i in range(4):
        assert np.array_equal(periodic[i], np.roll(periodic[0], i))
    assert np.array_equal(prototype(BandSpec(n=4, half_width=3)), np.ones((4, 4)))


@pytest.mark.parametrize("n", [1, 2, 5, 12, 40])
def test_periodic_rows_have_bandwidth_ones(n):
    for b in range(n):
        spec = BandSpec(n=n, half_width=b, kind="periodic")
        assert set(prototype(spec).sum(axis=1)) == {float(spec.bandwidth())}
        assert maximal_row_occupancy(spec) == spec.bandwidth()


def test_periodic_minus_strict_rank():
    for n in range(1, 41):
        for b in range(n):
            diff = prototype(BandSpec(n=n, half_width=b, kind="periodic")) - prototype(BandSpec(n=n, half_width=b))
            assert matrix_rank(diff) <= 2 * min(b, n - b - 1)


def test_half_width_rule():
    assert half_width_rule(2000, 1.0, 0.8) == int(np.floor(2000 ** 0.8))
    assert half_width_rule(10, 0.01, 0.5) == 1
    assert half_width_rule(10, 5.0, 1.0) == 9
    assert half_width_rule(100, 3.0, 0.0) == 3


def test_point_mass_law_gives_scaled_prototype(stream):
    spec = BandSpec(n=7, half_width=2, kind="periodic")
    sample = build_wigner(spec, PointMasses(atoms=((2.5, 1.0),)), stream)
    assert np.array_equal(sample.entries, 2.5 * prototype(spec))
    assert sample.provenance.tau_tag == "wigner"


def test_wigner_mask_and_symmetry(stream):
    spec = BandSpec(n=100, half_width=10)
    sample = build_wigner(spec, UniformInterval(lo=-1.0, hi=1.0), stream)
    entries = sample.entries
    assert np.array_equal(entries, entries.T)
    i, j = np.indices(entries.shape)
    assert np.all(entries[np.abs(i - j) > 10] == 0.0)
    assert np.all(entries[np.abs(i - j) <= 10] != 0.0)
    assert len(sample.in_band_entries()) == sum(min(100 - d, 100) for d in range(11))


def test_samples_are_read_only(stream):
    sample = build_wigner(BandSpec.full(3), SpinLaw(t=0.0), stream)
    with pytest.raises(ValueError):
        sample.entries[0, 0] = 5.0


def test_rademacher_two_by_two_outcomes(stream):
    spec = BandSpec(n=2, half_width=1)
    batch = build_wigner_batch(spec, SpinLaw(t=0.0), 100000, stream)
    keys = Counter(zip(batch[:, 0, 0], batch[:, 0, 1], batch[:, 1, 1]))
    assert len(keys) == 8
    assert np.array_equal(batch[:, 0, 1], batch[:, 1, 0])
    expected = 100000 / 8
    chi2 = sum((c - expected) ** 2 / expected for c in keys.values())
    # 0.1% critical value of chi-squared with 7 degrees of freedom
    assert chi2 < 24.322


def test_batch_matches_single_build_layout(stream):
    spec = BandSpec(n=6, half_width=1, kind="periodic")
    batch = build_wigner_batch(spec, PointMasses(atoms=((1.0, 1.0),)), 3, stream)
    assert batch.shape == (3, 6, 6)
    assert np.array_equal(batch[2], prototype(spec))


def test_definetti_single_component_matches_wigner_moments():
    spec = BandSpec(n=3, half_width=1)
    mixture = single_component(SpinLaw(t=0.0))
    stream = np.random.default_rng(3)
    values = np.array([build_definetti(spec, mixture, stream).entries[0, 1] for _ in range(10000)])
    for k in range(1, 5):
        powers = values ** k
        se = max(powers.std() / np.sqrt(len(powers)), 1e-12)
        assert abs(powers.mean() - component_moment(SpinLaw(t=0.0), k)) <= 5 * se


def test_definetti_spin_one_is_prototype(stream):
    spec = BandSpec(n=5, half_width=1, kind="periodic")
    sample = build_definetti(spec, SpinContinuous(mu=PointMasses(atoms=((1.0, 1.0),))), stream)
    assert np.array_equal(sample.entries, prototype(spec))
    assert sample.provenance.tau_tag == 1.0


def test_definetti_plus_minus_prototype(stream):
    spec = BandSpec(n=4, half_width=1)
    mixture = SpinContinuous(mu=PointMasses(atoms=((1.0, 0.5), (-1.0, 0.5))))
    p = prototype(spec)
    signs = []
    for _ in range(10000):
        sample = build_definetti(spec, mixture, stream)
        sign = sample.provenance.tau_tag
        assert np.array_equal(sample.entries, sign * p)
        signs.append(sign)
    assert abs(signs.count(1.0) / len(signs) - 0.5) <= 0.02


def test_definetti_conditional_entries_follow_component(stream):
    mixture = SpinContinuous(mu=PointMasses(atoms=((0.0, 0.5), (0.8, 0.5))))
    sample = build_definetti(BandSpec.full(300), mixture, stream)
    entries = sample.in_band_entries()
    law = sample.provenance.entry_law
    for k in range(1, 5):
        powers = entries ** k
        se = max(powers.std() / np.sqrt(len(powers)), 1e-12)
        assert abs(powers.mean() - component_moment(law, k)) <= 5 * se


def test_build_dispatches_on_mixture(stream):
    spec = BandSpec.full(3)
    assert build(spec, SpinLaw(t=0.0), stream).provenance.tau_tag == "wigner"
    assert build(spec, single_component(SpinLaw(t=0.0)), stream).provenance.tau_tag == 0


def test_truncation_rademacher_unchanged(stream):
    sample = build_wigner(BandSpec.full(5), SpinLaw(t=0.0), stream)
    result = truncate_and_center(sample, 2.0)
    assert result.e == 0.0
    assert np.array_equal(result.truncated.entries, sample.entries)
    assert np.array_equal(result.centered.entries, sample.entries)
    assert result.support_bound == 2.0


def test_truncation_removes_large_point_mass(stream):
    sample = build_wigner(BandSpec.full(4), PointMasses(atoms=((3.0, 1.0),)), stream)
    result = truncate_and_center(sample, 2.0)
    assert np.array_equal(result.truncated.entries, np.zeros((4, 4)))
    assert result.e == 0.0


def test_truncation_centres_skewed_law(stream):
    law = PointMasses(atoms=((-1.0, 0.75), (3.0, 0.25)))
    spec = BandSpec(n=30, half_width=3, kind="periodic")
    sample = build_wigner(spec, law, stream)
    result = truncate_and_center(sample, 2.0)
    assert result.e == pytest.approx(0.75)
    assert np.allclose(result.mean_matrix.entries, -0.75 * prototype(spec))
    centred = result.centered.in_band_entries()
    assert set(np.round(centred, 12)) <= {-0.25, 0.75}
    assert result.truncated_variance == pytest.approx(0.75 - 0.5625)
    assert result.truncated_variance <= 3.0


def test_truncation_rejects_non_positive_cutoff(stream):
    sample = build_wigner(BandSpec.full(2), SpinLaw(t=0.0), stream)
    with pytest.raises(ValueError):
        truncate_and_center(sample, 0.0)
