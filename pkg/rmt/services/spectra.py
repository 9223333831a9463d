"""
Dense symmetric eigensolver and spectral summaries

Eigenvalues are computed by Householder tridiagonalization followed by
implicit-shift QL iteration (eigenvalues only). A LAPACK backend is
available for large experiment sweeps.
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from rmt.services.ensembles import MatrixSample
from rmt.utils.errors import ConvergenceError, DimensionMismatchError
from rmt.utils.logger import get_component_logger
from rmt.utils.settings import get_setting

logger = get_component_logger("spectra")

EPS = np.finfo(float).eps
QL_SWEEPS_PER_EIGENVALUE = 50
IDENTITY_TOLERANCE = 1e-8
INTERLACING_SLACK = 1e-9


@dataclass(frozen=True)
class SpectralSummary:
    eigenvalues: np.ndarray
    scale: float = 1.0

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


class ESDCdf:
    """Right-continuous distribution function of an eigenvalue distribution"""

    def __init__(self, eigenvalues: np.ndarray):
        self.points = np.sort(np.asarray(eigenvalues, dtype=float))
        self.n = len(self.points)

    def __call__(self, x):
        return np.searchsorted(self.points, x, side="right") / self.n

    def left_limit(self, x):
        return np.searchsorted(self.points, x, side="left") / self.n


def _as_matrix(sample: Union[MatrixSample, np.ndarray]) -> np.ndarray:
    if isinstance(sample, MatrixSample):
        return np.array(sample.entries, dtype=float)
    return np.array(sample, dtype=float)


def tridiagonalize(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Householder reduction of a symmetric matrix to tridiagonal form

    Args:
        a: Symmetric matrix (overwritten)

    Returns:
        Diagonal d (length n) and off-diagonal e (length n - 1)
    """
    n = len(a)
    e = np.zeros(max(n - 1, 0))
    for k in range(n - 2):
        u = a[k + 1:, k].copy()
        alpha = math.sqrt(float(np.dot(u, u)))
        if alpha == 0.0:
            continue
        if u[0] < 0.0:
            alpha = -alpha
        u[0] += alpha
        h = float(np.dot(u, u)) / 2.0
        sub = a[k + 1:, k + 1:]
        v = sub @ u / h
        g = float(np.dot(u, v)) / (2.0 * h)
        v -= g * u
        sub -= np.outer(v, u) + np.outer(u, v)
        e[k] = -alpha
    if n >= 2:
        e[n - 2] = a[n - 1, n - 2]
    return np.diagonal(a).copy(), e


def tridiagonal_ql(d: np.ndarray, e: np.ndarray) -> np.ndarray:
    """
    Implicit-shift QL iteration on a symmetric tridiagonal matrix

    Args:
        d: Diagonal
        e: Off-diagonal (length n - 1)

    Returns:
        Unsorted eigenvalues
    """
    d = [float(x) for x in d]
    n = len(d)
    e = [float(x) for x in e] + [0.0]
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                if abs(e[m]) <= EPS * (abs(d[m]) + abs(d[m + 1])):
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > QL_SWEEPS_PER_EIGENVALUE:
                raise ConvergenceError(f"QL iteration did not converge for eigenvalue {l} of {n}")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.array(d)


def _check_identities(matrix: np.ndarray, eigenvalues: np.ndarray) -> None:
    n = len(matrix)
    largest = float(np.max(np.abs(matrix))) if n else 0.0
    tolerance = IDENTITY_TOLERANCE * n * max(largest, 1e-300)
    trace_gap = abs(float(eigenvalues.sum()) - float(np.trace(matrix)))
    frobenius_gap = abs(float(np.dot(eigenvalues, eigenvalues)) - float(np.sum(matrix * matrix)))
    if trace_gap > tolerance or frobenius_gap > tolerance * max(largest, 1.0):
        raise ConvergenceError(
            f"Spectrum violates trace/Frobenius identities (trace gap {trace_gap:.3e}, "
            f"Frobenius gap {frobenius_gap:.3e})"
        )


def symmetric_eigenvalues(
    sample: Union[MatrixSample, np.ndarray], scale: float = 1.0, method: Optional[str] = None
) -> SpectralSummary:
    """
    Eigenvalues of sample / scale

    Args:
        sample: Matrix sample or symmetric array
        scale: Positive divisor applied before solving
        method: "householder_ql" or "lapack"; defaults to the RMT_EIGENSOLVER setting

    Returns:
        SpectralSummary with ascending eigenvalues
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    matrix = _as_matrix(sample) / scale
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix has non-finite entries")
    method = method or get_setting("RMT_EIGENSOLVER")

    if len(matrix) == 0:
        eigenvalues = np.zeros(0)
    elif method == "lapack":
        eigenvalues = np.linalg.eigvalsh(matrix)
    else:
        d, e = tridiagonalize(matrix.copy())
        eigenvalues = tridiagonal_ql(d, e)

    eigenvalues = np.sort(eigenvalues)
    _check_identities(matrix, eigenvalues)
    return SpectralSummary(eigenvalues=eigenvalues, scale=float(scale))


def periodic_prototype_spectrum(n: int, b: int) -> np.ndarray:
    """
    Analytic eigenvalues of the periodic prototype P_N

    mu_0 = w and mu_j = sin(j pi w / n) / sin(j pi / n) for j >= 1.

    Returns:
        The n eigenvalues in index order j = 0..n-1
    """
    if not 0 <= b <= n - 1:
        raise ValueError(f"half-width {b} outside [0, {n - 1}]")
    w = min(n, 2 * b + 1)
    j = np.arange(1, n)
    omega = j * np.pi / n
    rest = np.sin(omega * w) / np.sin(omega)
    if w == n:
        rest = np.zeros(n - 1)
    return np.concatenate([[float(w)], rest])


def strict_band_norm_bounds(n: int, b: int) -> Tuple[float, float]:
    """Interval [w(1 - delta), w] containing the strict-band prototype norm"""
    w = min(n, 2 * b + 1)
    delta = w / (4.0 * n) if 2 * b + 1 <= n else (1.0 - b / n) ** 2
    return w * (1.0 - delta), float(w)


def operator_norm(summary: SpectralSummary) -> float:
    if summary.n == 0:
        raise ValueError("operator norm of an empty spectrum")
    return float(max(abs(summary.eigenvalues[0]), abs(summary.eigenvalues[-1])))


def singular_values(summary: SpectralSummary) -> np.ndarray:
    return np.sort(np.abs(summary.eigenvalues))


def kth_largest_singular(summary: SpectralSummary, m: int) -> float:
    """Singular value s_{n-m}; offset 0 is the operator norm, offset 1 the second largest"""
    if not 0 <= m < summary.n:
        raise ValueError(f"offset {m} outside [0, {summary.n - 1}]")
    return float(singular_values(summary)[summary.n - 1 - m])


def esd_moment(summary: SpectralSummary, k: int) -> float:
    if k < 0:
        raise ValueError("moment order must be non-negative")
    return float(np.mean(summary.eigenvalues ** k))


def esd_cdf(summary: SpectralSummary) -> ESDCdf:
    return ESDCdf(summary.eigenvalues)


def esd_histogram(summary: SpectralSummary, bins: int, value_range: Tuple[float, float]) -> np.ndarray:
    """Counts of eigenvalues per bin; values outside the range are dropped"""
    if bins < 1:
        raise ValueError("bins must be at least 1")
    counts, _ = np.histogram(summary.eigenvalues, bins=bins, range=value_range)
    return counts


def histogram_rows(counts: np.ndarray, value_range: Tuple[float, float], total: int) -> List[dict]:
    """
    Histogram as CSV-ready rows

    Args:
        counts: Counts per bin
        value_range: (lo, hi) of the binning
        total: Number of eigenvalues the density is normalised by

    Returns:
        Rows with bin_lo, bin_hi, count, density = count / (total * bin_width)
    """
    edges = np.linspace(value_range[0], value_range[1], len(counts) + 1)
    width = edges[1] - edges[0]
    return [
        {
            "bin_lo": float(edges[i]),
            "bin_hi": float(edges[i + 1]),
            "count": int(counts[i]),
            "density": float(counts[i]) / (total * width),
        }
        for i in range(len(counts))
    ]


def interlacing_check(base: SpectralSummary, perturbed: SpectralSummary) -> bool:
    """
    Interlacing for a positive semidefinite rank-one perturbation

    Checks base_j <= perturbed_j <= base_{j+1} (last one unbounded above).
    """
    if base.n != perturbed.n:
        raise DimensionMismatchError(f"spectra of size {base.n} and {perturbed.n}")
    lam, mu = base.eigenvalues, perturbed.eigenvalues
    lower = np.all(lam <= mu + INTERLACING_SLACK)
    upper = np.all(mu[:-1] <= lam[1:] + INTERLACING_SLACK)
    return bool(lower and upper)
