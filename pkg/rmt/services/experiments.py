"""
Experiment runner

Each experiment sweeps the dimensions in a config, draws `trials` matrices
per dimension from streams derived from (master_seed, N, trial), and records
one row per trial plus per-N aggregates. Rows are merged in (N, trial) order
so outputs do not depend on thread scheduling.
"""
import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from rmt.models import AcceptanceSpec, ExperimentConfig
from rmt.services.ensembles import MatrixSample, build
from rmt.services.limits import (
    SemicircleLaw,
    ks_distance,
    semicircle_moment,
    target_atom,
    target_cdf,
    target_from_mixture,
    target_support,
)
from rmt.services.mixtures import (
    describe,
    empirical_mean,
    empirical_variance,
    is_mixture,
    law_mean,
    law_variance,
    single_component,
)
from rmt.services.spectra import (
    SpectralSummary,
    esd_cdf,
    esd_histogram,
    esd_moment,
    histogram_rows,
    kth_largest_singular,
    operator_norm,
    symmetric_eigenvalues,
)
from rmt.utils.logger import get_component_logger
from rmt.utils.streams import derive_stream

logger = get_component_logger("experiments")

CSV_HEADER = ["N", "trial", "tau_tag", "metric", "value"]
CENTRED_TOLERANCE = 1e-12


@dataclass
class ResultRow:
    n: int
    trial: int
    tau_tag: str
    metric: str
    value: float
    aux: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.n,
            "trial": self.trial,
            "tau_tag": self.tau_tag,
            "metric": self.metric,
            "value": self.value,
            "aux": dict(sorted(self.aux.items())),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ResultRow":
        return cls(
            n=int(data["N"]),
            trial=int(data["trial"]),
            tau_tag=str(data["tau_tag"]),
            metric=str(data["metric"]),
            value=float(data["value"]),
            aux={k: float(v) for k, v in data.get("aux", {}).items()},
        )


@dataclass
class AcceptanceCheck:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "pass": self.passed, "detail": self.detail}


@dataclass
class ExperimentResult:
    name: str
    metric: str
    rows: List[ResultRow] = field(default_factory=list)
    aggregates: Dict[int, Dict[str, float]] = field(default_factory=dict)
    histograms: Dict[int, List[Dict[str, float]]] = field(default_factory=dict)
    checks: List[AcceptanceCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "metric": self.metric,
            "rows": [r.to_dict() for r in self.rows],
            "aggregates": {str(n): dict(sorted(a.items())) for n, a in sorted(self.aggregates.items())},
            "checks": [c.to_dict() for c in self.checks],
            "pass": self.passed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentResult":
        return cls(
            name=data["name"],
            metric=data["metric"],
            rows=[ResultRow.from_dict(r) for r in data.get("rows", [])],
            aggregates={int(n): {k: float(v) for k, v in a.items()} for n, a in data.get("aggregates", {}).items()},
            checks=[AcceptanceCheck(c["name"], bool(c["pass"]), c.get("detail", "")) for c in data.get("checks", [])],
        )


def format_tau(tau) -> str:
    if isinstance(tau, str):
        return tau
    if isinstance(tau, (int, np.integer)):
        return str(int(tau))
    return format(float(tau), ".17g")


@dataclass(frozen=True)
class Trial:
    n: int
    index: int
    sample: MatrixSample
    summary: SpectralSummary

    @property
    def bandwidth(self) -> int:
        return self.sample.spec.bandwidth()

    @property
    def law(self):
        return self.sample.provenance.entry_law

    def base_aux(self) -> Dict[str, float]:
        entries = self.sample.in_band_entries()
        return {
            "w": float(self.bandwidth),
            "empirical_mean": empirical_mean(entries),
            "empirical_variance": empirical_variance(entries),
            "law_mean": law_mean(self.law),
            "law_variance": law_variance(self.law),
        }


def draw_trial(config: ExperimentConfig, n: int, index: int, scaled: bool = True) -> Trial:
    """
    Build and solve one matrix of an experiment

    Args:
        config: Experiment configuration
        n: Dimension
        index: Trial index
        scaled: Divide by sqrt(w_N) before solving

    Returns:
        Trial with the sample and its spectrum
    """
    spec = config.ensemble.spec_for(n)
    stream = derive_stream(config.master_seed, n, index)
    sample = build(spec, config.entries, stream, seed=config.master_seed)
    scale = math.sqrt(spec.bandwidth()) if scaled else 1.0
    summary = symmetric_eigenvalues(sample, scale=scale, method=config.eigensolver)
    return Trial(n=n, index=index, sample=sample, summary=summary)


def _run_cells(config: ExperimentConfig, work: Callable[[int, int], Any]) -> List[Any]:
    results = []
    for n in config.sizes:
        logger.debug(f"{config.name}: N={n}, {config.trials} trials")
        if config.threads > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                results.extend(pool.map(lambda i: work(n, i), range(config.trials)))
        else:
            results.extend(work(n, i) for i in range(config.trials))
    return results


def _aggregate(result: ExperimentResult) -> None:
    by_n: Dict[int, List[float]] = {}
    for row in result.rows:
        by_n.setdefault(row.n, []).append(row.value)
    for n, values in by_n.items():
        q25, q50, q75 = np.percentile(values, [25, 50, 75])
        agg = result.aggregates.setdefault(n, {})
        agg.update({"median": float(q50), "iqr": float(q75 - q25), "count": float(len(values))})


def conditional_target(trial: Trial, config: ExperimentConfig):
    """sigma_v for the variance of the law that actually filled the matrix"""
    if config.target is not None and config.metric != "aggregate_histogram":
        return config.target
    return SemicircleLaw(v=law_variance(trial.law))


def run_semicircle(config: ExperimentConfig) -> ExperimentResult:
    """
    Per-trial KS distance of the scaled eigenvalue distribution to its semicircle

    de Finetti trials are compared with sigma_{v(tau)} of their own tau_tag.
    """
    if config.metric == "moment_track":
        return run_moment_track(config)
    if config.metric != "ks_vs_target":
        raise ValueError(f"run_semicircle needs metric ks_vs_target, got {config.metric}")
    logger.info(f"Semicircle run {config.name}: sizes={config.sizes} trials={config.trials}")

    def work(n: int, i: int) -> ResultRow:
        trial = draw_trial(config, n, i)
        target = conditional_target(trial, config)
        aux = trial.base_aux()
        if isinstance(target, SemicircleLaw):
            aux["target_v"] = target.v
        value = ks_distance(esd_cdf(trial.summary), target)
        return ResultRow(n, i, format_tau(trial.sample.provenance.tau_tag), "ks_vs_target", value, aux)

    result = ExperimentResult(config.name, "ks_vs_target", rows=_run_cells(config, work))
    _aggregate(result)
    return finish(result, config)


def run_moment_track(config: ExperimentConfig) -> ExperimentResult:
    """
    k-th moment of the scaled eigenvalue distribution per trial

    Aggregates include N * w_N * Var over trials, which stays bounded when the
    moment concentrates at rate 1/(N w_N).
    """
    k = config.moment_k

    def work(n: int, i: int) -> ResultRow:
        trial = draw_trial(config, n, i)
        aux = trial.base_aux()
        aux["target"] = semicircle_moment(law_variance(trial.law), k)
        value = esd_moment(trial.summary, k)
        return ResultRow(n, i, format_tau(trial.sample.provenance.tau_tag), f"moment_track({k})", value, aux)

    result = ExperimentResult(config.name, f"moment_track({k})", rows=_run_cells(config, work))
    _aggregate(result)
    for n in config.sizes:
        values = [r.value for r in result.rows if r.n == n]
        w = config.ensemble.spec_for(n).bandwidth()
        variance = float(np.var(values, ddof=1)) if len(values) > 1 else 0.0
        result.aggregates[n].update({"variance": variance, "scaled_variance": n * w * variance})
    return finish(result, config)


def density_target(config: ExperimentConfig):
    """sigma_mu of the configured entries (or the explicit target)"""
    if config.target is not None:
        return config.target
    mixture = config.entries if is_mixture(config.entries) else single_component(config.entries)
    return target_from_mixture(mixture)


def histogram_l1(eigenvalues: np.ndarray, target, bins: int) -> Tuple[float, List[Dict[str, float]]]:
    """
    L1 distance between a histogram density and the target density

    Target mass per bin comes from the cdf; the bin holding 0 is skipped when
    the target has an atom there.

    Returns:
        (distance, histogram rows)
    """
    edge = target_support(target)
    if edge == 0.0:
        edge = max(float(np.max(np.abs(eigenvalues))), 1e-12)
    value_range = (-edge, edge)
    counts = esd_histogram(SpectralSummary(eigenvalues=eigenvalues), bins, value_range)
    rows = histogram_rows(counts, value_range, len(eigenvalues))
    atom = target_atom(target)
    distance = 0.0
    for row in rows:
        lo, hi = row["bin_lo"], row["bin_hi"]
        if atom > 0.0 and lo <= 0.0 <= hi:
            continue
        width = hi - lo
        mass = target_cdf(target, hi) - target_cdf(target, lo)
        distance += abs(row["density"] - mass / width) * width
    return distance, rows


def run_expected_density(config: ExperimentConfig) -> ExperimentResult:
    """
    Pooled eigenvalue histogram vs the expected limit sigma_mu

    Rows carry the per-trial L1 distance; aggregates carry the pooled L1 and KS.
    """
    target = density_target(config)
    logger.info(f"Expected-density run {config.name}: target={describe(target)}")

    def work(n: int, i: int):
        trial = draw_trial(config, n, i)
        value, _ = histogram_l1(trial.summary.eigenvalues, target, config.bins)
        row = ResultRow(n, i, format_tau(trial.sample.provenance.tau_tag), "aggregate_histogram", value, trial.base_aux())
        return row, trial.summary.eigenvalues

    outputs = _run_cells(config, work)
    result = ExperimentResult(config.name, "aggregate_histogram", rows=[row for row, _ in outputs])
    _aggregate(result)
    for n in config.sizes:
        pooled = np.concatenate([eig for row, eig in outputs if row.n == n])
        distance, rows = histogram_l1(pooled, target, config.bins)
        result.histograms[n] = rows
        result.aggregates[n].update({
            "pooled_l1": distance,
            "pooled_ks": ks_distance(esd_cdf(SpectralSummary(eigenvalues=pooled)), target),
        })
    return finish(result, config)


def opnorm_target(law, normalization: str) -> float:
    """Limit of the normalised operator norm for a given entry law"""
    if normalization == "w":
        return abs(law_mean(law))
    return 2.0 * math.sqrt(law_variance(law))


def run_opnorm(config: ExperimentConfig) -> ExperimentResult:
    """
    Operator-norm and second-singular-value scaling

    Aux values per trial: ||X|| / sqrt(w), ||X|| / w, s_{N-1} / sqrt(w) and
    the limits expected from the trial's own entry law.
    """
    if config.metric not in ("opnorm_ratio", "second_singular_ratio"):
        raise ValueError(f"run_opnorm needs opnorm_ratio or second_singular_ratio, got {config.metric}")
    logger.info(f"Operator-norm run {config.name}: sizes={config.sizes} trials={config.trials}")

    def work(n: int, i: int) -> ResultRow:
        trial = draw_trial(config, n, i, scaled=False)
        w = trial.bandwidth
        norm = operator_norm(trial.summary)
        second = kth_largest_singular(trial.summary, 1) if n > 1 else 0.0
        normalization = config.normalization or (
            "sqrt_w" if abs(law_mean(trial.law)) <= CENTRED_TOLERANCE else "w"
        )
        aux = trial.base_aux()
        aux.update({
            "opnorm_sqrt_w": norm / math.sqrt(w),
            "opnorm_w": norm / w,
            "second_singular_sqrt_w": second / math.sqrt(w),
            "target_opnorm": opnorm_target(trial.law, normalization),
            "target_second_singular": 2.0 * math.sqrt(law_variance(trial.law)),
        })
        if config.metric == "opnorm_ratio":
            value = aux["opnorm_w"] if normalization == "w" else aux["opnorm_sqrt_w"]
            aux["deviation"] = value - aux["target_opnorm"]
        else:
            value = aux["second_singular_sqrt_w"]
            aux["deviation"] = value - aux["target_second_singular"]
        return ResultRow(n, i, format_tau(trial.sample.provenance.tau_tag), config.metric, value, aux)

    result = ExperimentResult(config.name, config.metric, rows=_run_cells(config, work))
    _aggregate(result)
    return finish(result, config)


def run_sample(config: ExperimentConfig) -> Dict[str, Any]:
    """One matrix at the first configured size, with its provenance"""
    n = config.sizes[0]
    spec = config.ensemble.spec_for(n)
    sample = build(spec, config.entries, derive_stream(config.master_seed, n, 0), seed=config.master_seed)
    entries = sample.in_band_entries()
    return {
        "sample": sample,
        "report": {
            "N": n,
            "half_width": spec.half_width,
            "kind": spec.kind,
            "bandwidth": spec.bandwidth(),
            "seed": config.master_seed,
            "tau_tag": format_tau(sample.provenance.tau_tag),
            "entry_law": json.loads(sample.provenance.entry_law_descriptor),
            "empirical_mean": empirical_mean(entries),
            "empirical_variance": empirical_variance(entries),
        },
    }


def run_spectrum(config: ExperimentConfig) -> Dict[str, Any]:
    """Spectrum of one scaled matrix with summary statistics and histogram"""
    n = config.sizes[0]
    trial = draw_trial(config, n, 0)
    summary = trial.summary
    target = conditional_target(trial, config)
    edge = max(target_support(target), float(np.max(np.abs(summary.eigenvalues))) if n else 0.0, 1e-12)
    value_range = (-edge, edge)
    counts = esd_histogram(summary, config.bins, value_range)
    return {
        "summary": summary,
        "histogram": histogram_rows(counts, value_range, n),
        "report": {
            "N": n,
            "bandwidth": trial.bandwidth,
            "scale": summary.scale,
            "tau_tag": format_tau(trial.sample.provenance.tau_tag),
            "eigenvalues": [float(x) for x in summary.eigenvalues],
            "operator_norm": operator_norm(summary),
            "second_singular": kth_largest_singular(summary, 1) if n > 1 else 0.0,
            "moments": {str(k): esd_moment(summary, k) for k in range(0, 9)},
            "ks_vs_target": ks_distance(esd_cdf(summary), target),
        },
    }


def _statistic(result: ExperimentResult, spec: AcceptanceSpec, n: int) -> Optional[float]:
    if spec.statistic == "aggregate":
        return result.aggregates.get(n, {}).get(spec.key)
    values = [r.value if spec.key == "value" else r.aux.get(spec.key) for r in result.rows if r.n == n]
    values = [v for v in values if v is not None]
    return float(np.median(values)) if values else None


def evaluate_acceptance(result: ExperimentResult, specs: List[AcceptanceSpec]) -> List[AcceptanceCheck]:
    """Turn declarative acceptance specs into pass/fail checks"""
    checks = []
    all_sizes = sorted(result.aggregates)
    for spec in specs:
        sizes = [n for n in all_sizes if spec.sizes is None or n in spec.sizes]
        name = f"{spec.key}:{spec.statistic}"
        failures = []

        if spec.lo is not None or spec.hi is not None:
            lo = -math.inf if spec.lo is None else spec.lo
            hi = math.inf if spec.hi is None else spec.hi
            if spec.statistic == "every_trial":
                for row in result.rows:
                    if row.n not in sizes:
                        continue
                    value = row.value if spec.key == "value" else row.aux.get(spec.key)
                    if value is None or not lo <= value <= hi:
                        failures.append(f"N={row.n} trial={row.trial}: {value}")
            else:
                for n in sizes:
                    value = _statistic(result, spec, n)
                    if value is None or not lo <= value <= hi:
                        failures.append(f"N={n}: {value}")
            name += f" in [{lo}, {hi}]"

        series = [_statistic(result, spec, n) for n in sizes]
        series = [v for v in series if v is not None]
        if spec.trend == "non_increasing" and len(series) > 1:
            inversions = sum(1 for a, b in zip(series, series[1:]) if b > a)
            if inversions > spec.allowed_inversions:
                failures.append(f"{inversions} inversions in {series}")
            name += " non_increasing"
        if spec.min_growth is not None and len(series) > 1:
            growth = series[-1] / series[0] if series[0] else math.inf
            if growth < spec.min_growth:
                failures.append(f"growth {growth:.4g} < {spec.min_growth}")
            name += f" growth>={spec.min_growth}"
        if spec.max_spread is not None and series:
            spread = max(series) / min(series) if min(series) > 0 else math.inf
            if spread > spec.max_spread:
                failures.append(f"spread {spread:.4g} > {spec.max_spread}")
            name += f" spread<={spec.max_spread}"

        checks.append(AcceptanceCheck(name=name, passed=not failures, detail="; ".join(failures)))
    return checks


def finish(result: ExperimentResult, config: ExperimentConfig) -> ExperimentResult:
    result.rows.sort(key=lambda r: (r.n, r.trial))
    result.checks = evaluate_acceptance(result, config.acceptance)
    outcome = "pass" if result.passed else "FAIL"
    logger.info(f"{config.name}: {len(result.rows)} rows, acceptance {outcome}")
    return result


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Dispatch on the configured metric"""
    if config.metric in ("ks_vs_target", "moment_track"):
        return run_semicircle(config)
    if config.metric == "aggregate_histogram":
        return run_expected_density(config)
    return run_opnorm(config)


def emit(result: ExperimentResult, path: str, fmt: str = "csv") -> None:
    """
    Write a result as CSV (one line per row) or JSON (rows plus aggregates)

    Args:
        result: Experiment result
        path: Output file
        fmt: "csv" or "json"
    """
    if fmt == "csv":
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in result.rows:
                writer.writerow([row.n, row.trial, row.tau_tag, row.metric, repr(row.value)])
    elif fmt == "json":
        with open(path, "w") as f:
            json.dump(result.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
    else:
        raise ValueError(f"Unknown output format: {fmt}")


def emit_histogram(rows: List[Dict[str, float]], path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["bin_lo", "bin_hi", "count", "density"])
        for row in rows:
            writer.writerow([repr(row["bin_lo"]), repr(row["bin_hi"]), row["count"], repr(row["density"])])


def write_outputs(result: ExperimentResult, out_dir: str) -> List[str]:
    """results.csv, results.json and one histogram CSV per N"""
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, "results.csv"), os.path.join(out_dir, "results.json")]
    emit(result, paths[0], "csv")
    emit(result, paths[1], "json")
    for n, rows in sorted(result.histograms.items()):
        path = os.path.join(out_dir, f"histogram_N{n}.csv")
        emit_histogram(rows, path)
        paths.append(path)
    return paths
