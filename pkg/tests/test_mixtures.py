"""
Tests for entry laws, de Finetti mixtures and their statistics
"""
import math
from itertools import permutations

import numpy as np
import pytest

from rmt.services.mixtures import (
    DiscreteMixture,
    MixtureComponent,
    PointMasses,
    SpinContinuous,
    SpinLaw,
    UniformInterval,
    component_law,
    component_moment,
    empirical_mean,
    empirical_variance,
    is_centred,
    law_mean,
    law_variance,
    parse_entries,
    parse_law,
    parse_mixture,
    pushforward_nu,
    sample_exchangeable,
    sample_law,
    sample_tau,
    single_component,
    truncated_mean,
    truncated_second_moment,
)
from rmt.utils.errors import ConfigError, EmptySequenceError
from rmt.utils.streams import derive_stream


def spin_mixture(*atoms):
    return SpinContinuous(mu=PointMasses(atoms=atoms))


def test_point_masses_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        PointMasses(atoms=((0.0, 0.5), (1.0, 0.4)))


def test_uniform_needs_lo_below_hi():
    with pytest.raises(ValueError):
        UniformInterval(lo=1.0, hi=1.0)


def test_parse_law_shorthand_and_errors():
    assert parse_law({"kind": "rademacher"}) == SpinLaw(t=0.0)
    assert parse_law({"kind": "uniform", "lo": -1, "hi": 1}) == UniformInterval(lo=-1.0, hi=1.0)
    with pytest.raises(ConfigError):
        parse_law({"kind": "spin", "t": 1.5})
    with pytest.raises(ConfigError):
        parse_law({"kind": "cauchy"})


def test_parse_mixture_document():
    mixture = parse_mixture({
        "components": [
            {"weight": 0.5, "law": {"kind": "spin", "t": 0.0}},
            {"weight": 0.5, "law": {"kind": "spin", "t": 0.8}},
        ]
    })
    assert isinstance(mixture, DiscreteMixture)
    assert [c.law.t for c in mixture.components] == [0.0, 0.8]


def test_parse_mixture_wraps_bare_law():
    mixture = parse_mixture({"kind": "rademacher"})
    assert mixture == single_component(SpinLaw(t=0.0))


def test_parse_mixture_rejects_bad_weights():
    with pytest.raises(ConfigError):
        parse_mixture({"components": [{"weight": 0.7, "law": {"kind": "rademacher"}}]})


def test_spin_continuous_support_checked():
    with pytest.raises(ConfigError):
        parse_entries({"kind": "spin_continuous", "mu": {"kind": "uniform", "lo": -2, "hi": 1}})


def test_parse_entries_dispatch():
    assert isinstance(parse_entries({"kind": "spin", "t": 0.5}), SpinLaw)
    assert isinstance(parse_entries({"kind": "spin_continuous", "mu": {"kind": "uniform", "lo": -1, "hi": 1}}),
                      SpinContinuous)


def test_sample_tau_single_component_always_zero(stream):
    mixture = single_component(SpinLaw(t=0.3))
    assert {sample_tau(mixture, stream) for _ in range(50)} == {0}


def test_sample_tau_zero_weight_never_drawn(stream):
    mixture = DiscreteMixture(components=(
        MixtureComponent(weight=1.0, law=SpinLaw(t=0.0)),
        MixtureComponent(weight=0.0, law=SpinLaw(t=1.0)),
    ))
    assert {sample_tau(mixture, stream) for _ in range(200)} == {0}


def test_sample_tau_half_half_frequency(stream):
    mixture = DiscreteMixture(components=(
        MixtureComponent(weight=0.5, law=SpinLaw(t=0.0)),
        MixtureComponent(weight=0.5, law=SpinLaw(t=1.0)),
    ))
    draws = [sample_tau(mixture, stream) for _ in range(100000)]
    assert 0.49 <= draws.count(0) / len(draws) <= 0.51


def test_sample_tau_spin_continuous_returns_parameter(stream):
    tau = sample_tau(SpinContinuous(mu=UniformInterval(lo=-0.5, hi=0.5)), stream)
    assert isinstance(tau, float)
    assert -0.5 <= tau <= 0.5
    assert component_law(SpinContinuous(mu=UniformInterval(lo=-0.5, hi=0.5)), tau) == SpinLaw(t=tau)


def test_exchangeable_deterministic_laws(stream):
    seq = sample_exchangeable(single_component(SpinLaw(t=1.0)), 5, stream)
    assert seq.values.tolist() == [1.0] * 5
    seq = sample_exchangeable(single_component(PointMasses(atoms=((3.0, 1.0),))), 3, stream)
    assert seq.values.tolist() == [3.0] * 3


def test_exchangeable_requires_positive_length(stream):
    with pytest.raises(ValueError):
        sample_exchangeable(single_component(SpinLaw(t=0.0)), 0, stream)


def test_exchangeable_sample_mean_follows_tau(stream):
    mixture = spin_mixture((0.0, 0.5), (0.8, 0.5))
    for _ in range(10):
        seq = sample_exchangeable(mixture, 10000, stream)
        assert seq.tau_tag in (0.0, 0.8)
        assert abs(empirical_mean(seq.values) - seq.tau_tag) <= 0.05


def test_exchangeability_of_permuted_events():
    # event {xi_0 = 1, xi_1 = -1, xi_2 = -1} under all permutations of the indices
    mixture = spin_mixture((0.6, 0.5), (-0.2, 0.5))
    stream = derive_stream(7, 1)
    draws = np.array([sample_exchangeable(mixture, 3, stream).values for _ in range(100000)])
    pattern = np.array([1.0, -1.0, -1.0])
    freqs = [np.mean(np.all(draws[:, list(p)] == pattern, axis=1)) for p in permutations(range(3))]
    p = float(np.mean(freqs))
    se = math.sqrt(p * (1 - p) / len(draws))
    assert max(freqs) - min(freqs) <= 2 * 4 * se


def test_conditional_moments_match_component(stream):
    mixture = DiscreteMixture(components=(
        MixtureComponent(weight=0.5, law=UniformInterval(lo=-1.0, hi=2.0)),
        MixtureComponent(weight=0.5, law=PointMasses(atoms=((-1.0, 0.25), (0.5, 0.75)))),
    ))
    for _ in range(4):
        seq = sample_exchangeable(mixture, 10000, stream)
        law = component_law(mixture, seq.tau_tag)
        for k in range(1, 5):
            powers = seq.values ** k
            se = powers.std() / math.sqrt(len(powers))
            assert abs(powers.mean() - component_moment(law, k)) <= 5 * se + 1e-12


def test_empirical_statistics():
    assert empirical_mean([2.5, 2.5, 2.5]) == 2.5
    assert empirical_variance([2.5, 2.5, 2.5]) == 0.0
    assert empirical_mean([1.0, -1.0]) == 0.0
    assert empirical_variance([1.0, -1.0]) == 1.0


def test_empirical_statistics_reject_empty():
    with pytest.raises(EmptySequenceError):
        empirical_mean([])
    with pytest.raises(EmptySequenceError):
        empirical_variance([])


@pytest.mark.parametrize("c", [0.1, 0.3, 1000.1])
@pytest.mark.parametrize("n", [1, 7, 1000])
def test_empirical_variance_of_constant_sequence(c, n):
    assert empirical_variance([c] * n) == 0.0


def test_empirical_variance_far_from_origin():
    # shifted data keeps its spread
    assert empirical_variance([1e9 + 1.0, 1e9 - 1.0]) == 1.0


def test_spin_sequence_statistics(stream):
    t = 0.6
    values = sample_law(SpinLaw(t=t), 10000, stream)
    assert abs(empirical_mean(values) - t) <= 0.05
    assert abs(empirical_variance(values) - (1 - t * t)) <= 0.05


def test_component_moments():
    assert component_moment(SpinLaw(t=0.3), 1) == 0.3
    assert component_moment(SpinLaw(t=0.3), 2) == 1.0
    assert component_moment(UniformInterval(lo=-1.0, hi=1.0), 2) == pytest.approx(1 / 3)
    assert component_moment(PointMasses(atoms=((0.0, 0.5), (2.0, 0.5))), 2) == 2.0
    assert component_moment(SpinLaw(t=0.3), 0) == 1.0


def test_law_mean_and_variance():
    law = PointMasses(atoms=((0.0, 0.5), (2.0, 0.5)))
    assert law_mean(law) == 1.0
    assert law_variance(law) == 1.0
    assert law_variance(UniformInterval(lo=-math.sqrt(3), hi=math.sqrt(3))) == pytest.approx(1.0)


def test_truncated_moments():
    law = PointMasses(atoms=((-1.0, 0.75), (3.0, 0.25)))
    assert truncated_mean(law, 2.0) == pytest.approx(-0.75)
    assert truncated_second_moment(law, 2.0) == pytest.approx(0.75)
    assert truncated_mean(UniformInterval(lo=-1.0, hi=3.0), 1.0) == pytest.approx(0.0)
    assert truncated_mean(SpinLaw(t=0.5), 0.5) == 0.0


def test_pushforward_examples():
    push = pushforward_nu(single_component(SpinLaw(t=0.0)))
    assert push.nu == ((1.0, 1.0),)
    assert push.mu1 == ((0.0, 1.0),)

    push = pushforward_nu(spin_mixture((0.0, 0.5), (0.8, 0.5)))
    assert [v for v, _ in push.nu] == pytest.approx([0.36, 1.0])
    assert [w for _, w in push.nu] == [0.5, 0.5]

    push = pushforward_nu(single_component(PointMasses(atoms=((0.0, 0.5), (2.0, 0.5)))))
    assert push.nu == ((1.0, 1.0),)
    assert push.mu1 == ((1.0, 1.0),)


def test_pushforward_weights_and_atoms():
    mixture = DiscreteMixture(components=(
        MixtureComponent(weight=0.2, law=SpinLaw(t=1.0)),
        MixtureComponent(weight=0.3, law=SpinLaw(t=-1.0)),
        MixtureComponent(weight=0.5, law=UniformInterval(lo=0.0, hi=1.0)),
    ))
    push = pushforward_nu(mixture)
    assert sum(w for _, w in push.nu) == pytest.approx(1.0)
    assert all(v >= 0 for v, _ in push.nu)
    assert push.zero_variance_weight() == pytest.approx(0.5)


def test_pushforward_continuous_spin_moment():
    push = pushforward_nu(SpinContinuous(mu=UniformInterval(lo=-1.0, hi=1.0)))
    assert not push.is_discrete
    # E(1 - t^2) for t uniform on [-1, 1]
    assert push.nu_moment(1) == pytest.approx(2 / 3)


def test_is_centred():
    assert is_centred(SpinLaw(t=0.0))
    assert not is_centred(SpinLaw(t=0.2))
    assert is_centred(single_component(UniformInterval(lo=-1.0, hi=1.0)))
    assert not is_centred(spin_mixture((-0.8, 0.5), (0.8, 0.5)))
    assert not is_centred(SpinContinuous(mu=UniformInterval(lo=-1.0, hi=1.0)))
