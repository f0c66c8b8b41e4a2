"""Simulation design with a known quantile treatment effect, and experiment runners.

Outcomes follow ``Y^N = t_inv(U) + T`` and ``Y^I = t_inv(U) + U + 1`` where
``t_inv`` is the Student-t quantile function and ``U`` is Beta distributed
in the control group and uniform in the treated group. The effect at level
q is exactly q.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import EstimationError, QuadData
from .ecic import AutoConfig, estimate_auto, estimate_classic, estimate_left_tail, estimate_right_tail
from .special import beta_quantile, student_t_quantile

log = logging.getLogger(__name__)

METHODS = ("ecic", "cic", "auto")
MAX_FAILURE_RATE = 0.2


@dataclass(frozen=True)
class SimDesign:
    pi_G: float = 0.1
    pi_T: float = 0.5
    pi_A: float = 1.0
    pi_B: float = 2.0
    alpha_dof: float = 10.0
    n: int = 5000
    seed: int = 0

    def __post_init__(self):
        # pi_G = pi_T = 1 is allowed: it switches every unit to treatment
        if not (0 < self.pi_G <= 1 and 0 < self.pi_T <= 1):
            raise ValueError("pi_G and pi_T must lie in (0, 1]")
        if not (self.pi_A > 0 and self.pi_B > 0 and self.alpha_dof > 0):
            raise ValueError("shape parameters and degrees of freedom must be positive")
        if self.n < 100:
            raise ValueError("n must be at least 100")


@dataclass(frozen=True)
class GeneratedSample:
    """Unit-level draws behind one simulated dataset."""

    y: np.ndarray
    g: np.ndarray
    t: np.ndarray
    i_treat: np.ndarray
    u: np.ndarray
    redraws: int = 0


def true_tau(q: float) -> float:
    if not 0 < q < 1:
        raise ValueError(f"quantile level must lie in (0, 1), got {q}")
    return float(q)


def _rng(design: SimDesign, replicate: int) -> np.random.Generator:
    return np.random.default_rng([design.seed, replicate])


def _draw(design: SimDesign, rng: np.random.Generator):
    n = design.n
    g = (rng.random(n) < design.pi_G).astype(np.int8)
    t = (rng.random(n) < design.pi_T).astype(np.int8)
    v = rng.random(n)
    # v == 0 has probability ~2**-53 but would break the inverse transform
    v = np.where(v == 0.0, np.nextafter(0.0, 1.0), v)
    u = np.where(g == 0, beta_quantile(v, design.pi_A, design.pi_B), v)
    base = student_t_quantile(u, design.alpha_dof)
    i_treat = g * t
    y = np.where(i_treat == 1, base + u + 1.0, base + t)
    return y, g, t, i_treat, u


def generate_units(design: SimDesign, replicate: int, max_redraws: int = 100) -> GeneratedSample:
    """Draw ``design.n`` units; redraw everything while some cell would be empty."""
    if replicate < 0:
        raise ValueError("replicate index must be non-negative")
    rng = _rng(design, replicate)
    full = design.pi_G == 1 or design.pi_T == 1
    for redraw in range(max_redraws + 1):
        y, g, t, i_treat, u = _draw(design, rng)
        cells = np.bincount(2 * g + t, minlength=4)
        if full or np.all(cells > 0):
            return GeneratedSample(y, g, t, i_treat, u, redraw)
    raise RuntimeError("could not populate all four cells; check pi_G and pi_T")


def generate_dataset(design: SimDesign, replicate: int) -> QuadData:
    sample = generate_units(design, replicate)
    if sample.redraws:
        log.info("replicate %d redrawn %d times for empty cells", replicate, sample.redraws)
    key = 2 * sample.g + sample.t
    return QuadData.from_arrays(*(sample.y[key == c] for c in range(4)))


def _estimate(data: QuadData, q: float, method: str, config: AutoConfig):
    if method == "cic":
        return estimate_classic(data, q, config)
    if method == "ecic":
        if q >= 0.5:
            return estimate_right_tail(data, q, config.k_rule, config.d_floor)
        return estimate_left_tail(data, q, config.transform, config.k_rule, config.d_floor)
    return estimate_auto(data, q, config)


def run_replicate(design: SimDesign, replicate: int, q_grid, method: str, config: AutoConfig):
    """Estimates, standard errors and CIs for one replicate (NaN where the estimator failed)."""
    data = generate_dataset(design, replicate)
    out = np.full((len(q_grid), 4), np.nan)
    errors = []
    for i, q in enumerate(q_grid):
        try:
            est = _estimate(data, q, method, config)
        except EstimationError as exc:
            errors.append(str(exc))
            continue
        out[i] = est.tau_hat, est.se, est.ci_low, est.ci_high
    return out, errors


@dataclass
class ExperimentResult:
    q_grid: list
    method: str
    reps: int
    design: SimDesign
    estimates: np.ndarray  # (reps, len(q_grid))
    ses: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    stats: dict = field(default_factory=dict)

    def as_dict(self, include_replicates: bool = False) -> dict:
        out = {
            "schema": 1,
            "method": self.method,
            "reps": self.reps,
            "design": asdict(self.design),
            "q_grid": list(self.q_grid),
            "stats": {k: list(v) for k, v in self.stats.items()},
        }
        if include_replicates:
            out["estimates"] = _nan_to_none(self.estimates)
            out["ses"] = _nan_to_none(self.ses)
        return out

    def to_json(self, include_replicates: bool = False) -> str:
        return json.dumps(self.as_dict(include_replicates), indent=2, allow_nan=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["q", "statistic", "value", "method", "n", "reps", "seed"])
        for i, q in enumerate(self.q_grid):
            for name, values in self.stats.items():
                writer.writerow(
                    [repr(float(q)), name, repr(float(values[i])), self.method,
                     self.design.n, self.reps, self.design.seed]
                )
        return buf.getvalue()


def _nan_to_none(arr):
    return [[None if np.isnan(v) else float(v) for v in row] for row in arr]


def _summarize(result: ExperimentResult, with_coverage: bool) -> dict:
    est = result.estimates
    ok = ~np.isnan(est)
    truth = np.array([true_tau(q) for q in result.q_grid])
    stats = {}
    stats["successes"] = ok.sum(axis=0).astype(float)
    stats["failure_rate"] = 1.0 - stats["successes"] / result.reps
    with np.errstate(invalid="ignore"), warnings.catch_warnings():
        # levels where every replicate failed summarize to NaN
        warnings.simplefilter("ignore", RuntimeWarning)
        stats["mean_estimate"] = np.nanmean(est, axis=0)
        stats["bias"] = stats["mean_estimate"] - truth
        stats["median"] = np.nanmedian(est, axis=0)
        stats["iqr_low"] = np.nanpercentile(est, 25, axis=0)
        stats["iqr_high"] = np.nanpercentile(est, 75, axis=0)
        stats["sd_estimate"] = np.nanstd(est, axis=0, ddof=1) if result.reps > 1 else np.zeros(len(truth))
        stats["mean_se"] = np.nanmean(result.ses, axis=0)
        if with_coverage:
            hit = (result.ci_low <= truth) & (truth <= result.ci_high)
            stats["coverage_rate"] = hit.sum(axis=0) / stats["successes"]
    return stats


def run_experiment(
    design: SimDesign,
    q_grid,
    reps: int,
    method: str = "ecic",
    config: AutoConfig | None = None,
    coverage: bool = True,
    workers: int = 1,
) -> ExperimentResult:
    """Run ``reps`` seeded replicates and summarize estimates per quantile level.

    Replicate ``r`` depends only on ``(design.seed, r)``, so results do not
    depend on ``workers`` or execution order. Estimator failures are excluded
    and counted; more than 20% failures at any level raises ``RuntimeError``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if reps < 1:
        raise ValueError("reps must be positive")
    q_grid = [float(q) for q in q_grid]
    if any(not 0 < q < 1 for q in q_grid):
        raise ValueError("quantile levels must lie in (0, 1)")
    config = config or AutoConfig()
    args = [(design, r, q_grid, method, config) for r in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            outputs = list(pool.map(_run_star, args, chunksize=max(1, reps // (4 * workers))))
    else:
        outputs = [run_replicate(*a) for a in args]
    cube = np.stack([o[0] for o in outputs])
    result = ExperimentResult(
        q_grid, method, reps, design,
        cube[:, :, 0], cube[:, :, 1], cube[:, :, 2], cube[:, :, 3],
    )
    result.stats = _summarize(result, coverage)
    worst = float(np.max(result.stats["failure_rate"]))
    if worst > MAX_FAILURE_RATE:
        messages = sorted({e for o in outputs for e in o[1]})
        raise RuntimeError(
            f"estimator failed in {worst:.0%} of replicates at some level; "
            f"errors seen: {messages[:5]}"
        )
    return result


def _run_star(args):
    return run_replicate(*args)


def run_bias_experiment(design, q_grid, reps, method="ecic", config=None, workers=1):
    """Mean, bias and interquartile range of the estimates at each level."""
    return run_experiment(design, q_grid, reps, method, config, coverage=False, workers=workers)


def run_coverage_experiment(design, q_grid, reps, method="ecic", config=None, workers=1):
    """Bias statistics plus 95% interval coverage of the true effect."""
    return run_experiment(design, q_grid, reps, method, config, coverage=True, workers=workers)
