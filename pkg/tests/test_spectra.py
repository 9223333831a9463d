"""
Tests for the eigensolver and spectral summaries
"""
import math

import numpy as np
import pytest

from rmt.services.ensembles import BandSpec, build_wigner, prototype
from rmt.services.mixtures import SpinLaw
from rmt.services.spectra import (
    SpectralSummary,
    esd_cdf,
    esd_histogram,
    esd_moment,
    histogram_rows,
    interlacing_check,
    kth_largest_singular,
    strict_band_norm_bounds,
    operator_norm,
    periodic_prototype_spectrum,
    singular_values,
    symmetric_eigenvalues,
    tridiagonal_ql,
    tridiagonalize,
)
from rmt.utils.errors import ConvergenceError, DimensionMismatchError


def summary(*values):
    return SpectralSummary(eigenvalues=np.array(values, dtype=float))


def test_diagonal_matrix():
    result = symmetric_eigenvalues(np.diag([3.0, 1.0, 2.0]))
    assert result.eigenvalues.tolist() == pytest.approx([1.0, 2.0, 3.0], abs=1e-14)


def test_periodic_prototype_four():
    result = symmetric_eigenvalues(prototype(BandSpec(n=4, half_width=1, kind="periodic")))
    assert result.eigenvalues.tolist() == pytest.approx([-1.0, 1.0, 1.0, 3.0], abs=1e-12)


def test_strict_prototype_four():
    result = symmetric_eigenvalues(prototype(BandSpec(n=4, half_width=1)))
    expected = sorted(1 + 2 * math.cos(k * math.pi / 5) for k in range(1, 5))
    assert result.eigenvalues.tolist() == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx([-0.618034, 0.381966, 1.618034, 2.618034], abs=1e-6)


def test_scale_divides_matrix():
    result = symmetric_eigenvalues(np.diag([4.0, -2.0]), scale=2.0)
    assert result.eigenvalues.tolist() == pytest.approx([-1.0, 2.0])
    assert result.scale == 2.0
    with pytest.raises(ValueError):
        symmetric_eigenvalues(np.eye(2), scale=0.0)


def test_non_finite_entries_rejected():
    with pytest.raises(ValueError):
        symmetric_eigenvalues(np.array([[1.0, np.nan], [np.nan, 0.0]]))


def test_one_by_one_and_empty():
    assert symmetric_eigenvalues(np.array([[5.0]])).eigenvalues.tolist() == [5.0]
    assert symmetric_eigenvalues(np.zeros((0, 0))).n == 0


def test_tridiagonalization_preserves_spectrum(stream):
    a = stream.standard_normal((9, 9))
    a = a + a.T
    d, e = tridiagonalize(a.copy())
    t = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert np.allclose(np.linalg.eigvalsh(t), np.linalg.eigvalsh(a), atol=1e-10)


def test_ql_reports_non_convergence(mocker):
    mocker.patch("rmt.services.spectra.QL_SWEEPS_PER_EIGENVALUE", 0)
    with pytest.raises(ConvergenceError):
        tridiagonal_ql(np.array([1.0, 2.0]), np.array([1.0]))


@pytest.mark.parametrize("n", [4, 16, 64, 256])
def test_solver_matches_analytic_periodic_spectrum(n):
    for b in sorted({0, 1, n // 4, n - 1}):
        spec = BandSpec(n=n, half_width=b, kind="periodic")
        computed = symmetric_eigenvalues(prototype(spec)).eigenvalues
        analytic = np.sort(periodic_prototype_spectrum(n, b))
        assert np.max(np.abs(computed - analytic)) <= 1e-9 * spec.bandwidth()


@pytest.mark.slow
def test_solver_matches_analytic_periodic_spectrum_512():
    n = 512
    for b in (0, 1, n // 4, n - 1):
        spec = BandSpec(n=n, half_width=b, kind="periodic")
        computed = symmetric_eigenvalues(prototype(spec)).eigenvalues
        analytic = np.sort(periodic_prototype_spectrum(n, b))
        assert np.max(np.abs(computed - analytic)) <= 1e-9 * spec.bandwidth()


def test_solver_agrees_with_lapack(stream):
    sample = build_wigner(BandSpec(n=120, half_width=7, kind="periodic"), SpinLaw(t=0.3), stream)
    ql = symmetric_eigenvalues(sample, scale=math.sqrt(15), method="householder_ql").eigenvalues
    lapack = symmetric_eigenvalues(sample, scale=math.sqrt(15), method="lapack").eigenvalues
    assert np.max(np.abs(ql - lapack)) <= 1e-9 * max(1.0, np.max(np.abs(lapack)))


def test_default_method_from_setting(monkeypatch, mocker):
    monkeypatch.setenv("RMT_EIGENSOLVER", "lapack")
    spy = mocker.spy(np.linalg, "eigvalsh")
    symmetric_eigenvalues(np.eye(3))
    assert spy.call_count == 1


def test_periodic_spectrum_examples():
    assert sorted(periodic_prototype_spectrum(4, 1)) == pytest.approx([-1.0, 1.0, 1.0, 3.0])
    assert periodic_prototype_spectrum(7, 0) == pytest.approx(np.ones(7))
    assert periodic_prototype_spectrum(6, 5).tolist() == [6.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        periodic_prototype_spectrum(4, 4)


@pytest.mark.parametrize("n", [4, 16, 64, 256, 512])
def test_prototype_norms(n):
    for b in sorted({0, 1, n // 4, n - 1}):
        w = min(n, 2 * b + 1)
        periodic = operator_norm(symmetric_eigenvalues(prototype(BandSpec(n=n, half_width=b, kind="periodic"))))
        assert periodic == pytest.approx(w, abs=1e-9 * w)
        lo, hi = strict_band_norm_bounds(n, b)
        strict = operator_norm(symmetric_eigenvalues(prototype(BandSpec(n=n, half_width=b))))
        assert lo - 1e-9 <= strict <= hi + 1e-9


def test_strict_norm_bound_example():
    lo, hi = strict_band_norm_bounds(4, 1)
    assert (lo, hi) == pytest.approx((2.4375, 3.0))
    assert operator_norm(symmetric_eigenvalues(prototype(BandSpec(n=4, half_width=1)))) == pytest.approx(
        2.618034, abs=1e-6
    )


def test_operator_norm_examples():
    assert operator_norm(summary(-1, 1, 1, 3)) == 3.0
    assert operator_norm(symmetric_eigenvalues(np.ones((5, 5)))) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        operator_norm(summary())


def test_singular_values():
    s = summary(-3, 1, 2)
    assert singular_values(s).tolist() == [1.0, 2.0, 3.0]
    assert kth_largest_singular(s, 0) == 3.0
    assert kth_largest_singular(s, 1) == 2.0
    with pytest.raises(ValueError):
        kth_largest_singular(s, 3)
    rank_one = symmetric_eigenvalues(np.ones((5, 5)))
    assert kth_largest_singular(rank_one, 1) == pytest.approx(0.0, abs=1e-12)


def test_esd_moments():
    assert esd_moment(summary(0.3, -2, 5), 0) == 1.0
    assert esd_moment(summary(-1, 1), 2) == 1.0
    with pytest.raises(ValueError):
        esd_moment(summary(1), -1)


def test_second_moment_of_scaled_wigner(stream):
    n = 300
    sample = build_wigner(BandSpec.full(n), SpinLaw(t=0.0), stream)
    # for +-1 entries the second moment is exactly 1
    assert esd_moment(symmetric_eigenvalues(sample, scale=math.sqrt(n)), 2) == pytest.approx(1.0, abs=1e-9)


def test_esd_cdf_is_right_continuous():
    cdf = esd_cdf(summary(-1, 0, 0, 2))
    assert cdf(-1.5) == 0.0
    assert cdf(0.0) == 0.75
    assert cdf.left_limit(0.0) == 0.25
    assert cdf(2.0) == 1.0


def test_histogram_counts_and_rows():
    s = summary(-0.9, -0.1, 0.1, 0.4, 5.0)
    counts = esd_histogram(s, 4, (-1.0, 1.0))
    assert counts.tolist() == [1, 1, 2, 0]
    assert counts.sum() == s.n - 1
    rows = histogram_rows(counts, (-1.0, 1.0), s.n)
    assert [r["bin_lo"] for r in rows] == [-1.0, -0.5, 0.0, 0.5]
    assert rows[2]["density"] == pytest.approx(2 / (5 * 0.5))
    with pytest.raises(ValueError):
        esd_histogram(s, 0, (-1.0, 1.0))


def test_interlacing_examples():
    base = symmetric_eigenvalues(np.zeros((2, 2)))
    perturbed = symmetric_eigenvalues(np.ones((2, 2)))
    assert interlacing_check(base, perturbed)
    assert interlacing_check(base, base)
    with pytest.raises(DimensionMismatchError):
        interlacing_check(base, summary(1.0))


def test_interlacing_random_rank_one(stream):
    for _ in range(100):
        a = stream.standard_normal((8, 8))
        a = a + a.T
        v = stream.standard_normal(8)
        assert interlacing_check(symmetric_eigenvalues(a), symmetric_eigenvalues(a + np.outer(v, v)))


def test_interlacing_detects_violation():
    assert not interlacing_check(summary(0.0, 1.0), summary(-1.0, 1.0))


def test_weyl_stability(stream):
    for n in (4, 16, 64):
        a = stream.standard_normal((n, n))
        a = a + a.T
        r = stream.standard_normal((n, n))
        r = r + r.T
        r *= 1e-3 / operator_norm(symmetric_eigenvalues(r))
        shift = symmetric_eigenvalues(a + r).eigenvalues - symmetric_eigenvalues(a).eigenvalues
        assert np.max(np.abs(shift)) <= 1e-3 + 1e-9
