"""
rmt action handlers

Shared by the CLI and the HTTP surface: each action takes the JSON config
document of its command and returns a JSON-ready result.
"""
from typing import Any, Callable, Dict, Optional

from rmt.models import experiment_config, oracle_config, perturb_config
from rmt.services.experiments import (
    ExperimentResult,
    run_expected_density,
    run_opnorm,
    run_sample,
    run_semicircle,
    run_spectrum,
)
from rmt.services.mixtures import component_moment
from rmt.services.oracle import expected_trace_exact, monte_carlo_trace, verify_trace_bounds
from rmt.services.perturb import TestFunction, check_split_estimate, run_perturbation_suite
from rmt.utils.errors import ConfigError
from rmt.utils.logger import get_component_logger
from rmt.utils.settings import load_settings
from rmt.utils.streams import derive_stream

logger = get_component_logger("actions")

# metric each experiment command runs when the document does not name one
DEFAULT_METRICS = {
    "semicircle": "ks_vs_target",
    "density": "aggregate_histogram",
    "opnorm": "opnorm_ratio",
}
MC_STANDARD_ERRORS = 4.0
ALLOWED_METRICS = {
    "semicircle": ("ks_vs_target", "moment_track"),
    "density": ("aggregate_histogram",),
    "opnorm": ("opnorm_ratio", "second_singular_ratio"),
}


def _with_defaults(params: Dict[str, Any], overrides: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    """Environment defaults < config document < explicit overrides"""
    settings = load_settings()
    merged = {"master_seed": settings["RMT_MASTER_SEED"]}
    merged.update(params or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return merged


def _experiment(command: str, params: Dict[str, Any], overrides: Optional[Dict[str, Any]]):
    data = _with_defaults(params, overrides)
    data.setdefault("threads", load_settings()["RMT_THREADS"])
    if command in DEFAULT_METRICS:
        data.setdefault("metric", DEFAULT_METRICS[command])
    config = experiment_config(data)
    if command in ALLOWED_METRICS and config.metric not in ALLOWED_METRICS[command]:
        raise ConfigError(f"rmt {command} cannot run metric {config.metric!r}")
    return config


def sample(params: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Draw one matrix and report its provenance"""
    out = run_sample(_experiment("sample", params, overrides))
    report = dict(out["report"])
    report["entries"] = out["sample"].entries.tolist()
    return report


def spectrum(params: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    out = run_spectrum(_experiment("spectrum", params, overrides))
    report = dict(out["report"])
    report["histogram"] = out["histogram"]
    return report


def semicircle(params: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> ExperimentResult:
    return run_semicircle(_experiment("semicircle", params, overrides))


def density(params: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> ExperimentResult:
    return run_expected_density(_experiment("density", params, overrides))


def opnorm(params: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> ExperimentResult:
    return run_opnorm(_experiment("opnorm", params, overrides))


def oracle(params: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    Exact E tr(X^k), its Monte Carlo estimate and the combinatorial bound report

    Args:
        params: Oracle config document (n, k, ensemble, entries, trials, n_N, support_bound)
        overrides: seed override

    Returns:
        {"n", "k", "exact", "mc_mean", "mc_se", "mc_agrees", "pass", "bounds": [...]}
    """
    data = _with_defaults(params, {"master_seed": (overrides or {}).get("master_seed")})
    config = oracle_config(data)
    spec = config.spec
    moments = [component_moment(config.entries, a) for a in range(1, config.k + 1)]

    exact = expected_trace_exact(config.n, config.k, spec, moments)
    mc_mean, mc_se = monte_carlo_trace(
        spec, config.entries, config.k, config.trials, derive_stream(config.master_seed, config.n, config.k)
    )
    report = verify_trace_bounds(
        config.n,
        config.k,
        spec,
        n_N=config.n_N,
        support_bound=config.support_bound,
        entry_moments=moments,
    )
    mc_agrees = abs(mc_mean - exact) <= (MC_STANDARD_ERRORS * mc_se if mc_se > 0 else 1e-9 * max(1.0, abs(exact)))
    logger.info(f"Oracle n={config.n} k={config.k}: exact={exact} mc={mc_mean}+-{mc_se}")
    return {
        "n": config.n,
        "k": config.k,
        "exact": exact,
        "mc_mean": mc_mean,
        "mc_se": mc_se,
        "mc_agrees": mc_agrees,
        "pass": report.passed and mc_agrees,
        "bounds": [b.to_dict() for b in report.bounds],
    }


def perturb(params: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Randomized perturbation-bound suite plus the periodic-band split estimate"""
    data = _with_defaults(params, {"master_seed": (overrides or {}).get("master_seed")})
    config = perturb_config(data)
    result = run_perturbation_suite(config.instances, derive_stream(config.master_seed, 0), sizes=config.sizes)

    f = TestFunction(kind="atan")
    split = []
    for n in config.projection_sizes:
        b = min(n - 1, max(1, int(n ** 0.8) // 2))
        row = {"N": n, "half_width": b}
        row.update(check_split_estimate(n, b, config.split_mean, f, derive_stream(config.master_seed, 1, n)))
        split.append(row)
    result["split"] = split
    result["pass"] = (
        result["bound_a_fail"] == 0 and result["bound_b_fail"] == 0 and all(row["holds"] for row in split)
    )
    return result


ACTIONS: Dict[str, Callable[..., Any]] = {
    "sample": sample,
    "spectrum": spectrum,
    "semicircle": semicircle,
    "density": density,
    "opnorm": opnorm,
    "oracle": oracle,
    "perturb": perturb,
}


def run_action(command: str, params: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Run a command and return its JSON-ready result (errors propagate)"""
    if command not in ACTIONS:
        raise ValueError(f"Unknown rmt action: {command}")
    result = ACTIONS[command](params, overrides)
    return result.to_dict() if isinstance(result, ExperimentResult) else result


def handle_action(action: str, params: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Route an `rmt.<command>` action to its handler"""
    logger.info(f"Processing rmt action: {action}")

    try:
        if not action.startswith("rmt."):
            raise ValueError(f"Unknown rmt action: {action}")
        return run_action(action[len("rmt."):], params or {})
    except Exception as e:
        logger.error(f"Error processing rmt action {action}: {str(e)}")
        return {
            "error": str(e),
            "action": action,
            "success": False,
        }
