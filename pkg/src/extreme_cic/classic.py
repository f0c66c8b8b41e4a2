"""Conventional plug-in changes-in-changes estimator built on empirical CDFs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import CellSample, EstimationError, QuadData

Z_95 = 1.96
DENSITY_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    sorted_ascending: np.ndarray

    @classmethod
    def from_sample(cls, sample: CellSample | np.ndarray) -> "EmpiricalCdf":
        values = sample.outcomes if isinstance(sample, CellSample) else np.asarray(sample, float)
        if values.size == 0:
            raise EstimationError("empty cell")
        arr = np.sort(values, kind="stable")
        arr.setflags(write=False)
        return cls(arr)

    @property
    def n(self) -> int:
        return int(self.sorted_ascending.size)


@dataclass(frozen=True)
class ClassicEstimate:
    q: float
    tau_hat: float
    se: float
    ci_low: float
    ci_high: float
    se_method: str
    clamped: bool = False


def ecdf_eval(cdf: EmpiricalCdf, y: float) -> float:
    """Share of outcomes at or below ``y``."""
    return np.searchsorted(cdf.sorted_ascending, y, side="right") / cdf.n


def _left_inverse_rank(n: int, q: float) -> int:
    # smallest j with j/n >= q, computed in the same float arithmetic as ecdf_eval
    j = min(max(math.ceil(q * n), 1), n)
    while j > 1 and (j - 1) / n >= q:
        j -= 1
    while j < n and j / n < q:
        j += 1
    return j


def ecdf_quantile(cdf: EmpiricalCdf, q: float) -> float:
    """Left inverse ``inf{y : F(y) >= q}``, i.e. the ceil(q n)-th smallest outcome."""
    if not 0 < q <= 1:
        raise EstimationError(f"quantile level must lie in (0, 1], got {q}")
    return float(cdf.sorted_ascending[_left_inverse_rank(cdf.n, q) - 1])


def _composition(data: QuadData, q: float):
    cdfs = {c.label: EmpiricalCdf.from_sample(c) for c in data}
    y_star = ecdf_quantile(cdfs["10"], q)
    q_prime = ecdf_eval(cdfs["00"], y_star)
    clamped = bool(q_prime == 0)
    if clamped:
        q_prime = 1.0 / cdfs["01"].n
    counterfactual = ecdf_quantile(cdfs["01"], q_prime)
    treated = ecdf_quantile(cdfs["11"], q)
    return cdfs, y_star, q_prime, counterfactual, treated, clamped


def cic_point_estimate(data: QuadData, q: float) -> float:
    """Plug-in quantile effect ``F11^-1(q) - F01^-1(F00(F10^-1(q)))``.

    A zero inner level ``F00(F10^-1(q))`` is replaced by ``1/n01``; use
    :func:`cic_estimate` to see whether that happened.
    """
    if not 0 < q < 1:
        raise EstimationError(f"quantile level must lie in (0, 1), got {q}")
    *_, counterfactual, treated, _ = _composition(data, q)
    return treated - counterfactual


def epanechnikov_density(sample: CellSample | np.ndarray, y, bandwidth: float):
    """Kernel density estimate with ``K(u) = 0.75 (1 - u^2)`` on ``|u| <= 1``."""
    if not bandwidth > 0:
        raise EstimationError("bandwidth must be positive")
    values = sample.outcomes if isinstance(sample, CellSample) else np.asarray(sample, float)
    y = np.asarray(y, dtype=float)
    u = (y[..., None] - values) / bandwidth
    kern = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    dens = kern.sum(axis=-1) / (values.size * bandwidth)
    return float(dens) if dens.ndim == 0 else dens


def silverman_bandwidth(sample: CellSample | np.ndarray) -> float:
    """``0.9 * min(sd, IQR / 1.34) * n**(-1/5)`` with left-inverse quartiles."""
    values = sample.outcomes if isinstance(sample, CellSample) else np.asarray(sample, float)
    n = values.size
    if n < 2:
        raise EstimationError("bandwidth needs at least two observations")
    sd = float(np.std(values, ddof=1))
    cdf = EmpiricalCdf.from_sample(values)
    iqr = ecdf_quantile(cdf, 0.75) - ecdf_quantile(cdf, 0.25)
    spread = min(sd, iqr / 1.34)
    if spread <= 0:
        # quartiles can coincide on lumpy data while sd is still positive
        spread = sd
    if not spread > 0:
        raise EstimationError("degenerate sample for bandwidth")
    return 0.9 * spread * n ** (-0.2)


def _density_at(sample: CellSample, y: float) -> float:
    dens = epanechnikov_density(sample, y, silverman_bandwidth(sample))
    if dens < DENSITY_FLOOR:
        raise EstimationError("vanishing density at evaluation point")
    return dens


def cic_analytic_se(data: QuadData, q: float) -> float:
    """Delta-method standard error treating the four cells as independent.

    Each of the four estimated CDFs / quantile functions in the composition
    contributes one term; densities are Epanechnikov KDEs with Silverman
    bandwidths.
    """
    if not 0 < q < 1:
        raise EstimationError(f"quantile level must lie in (0, 1), got {q}")
    for cell in data:
        if cell.n < 30:
            raise EstimationError(f"cell {cell.label} has {cell.n} < 30 observations")
    cdfs, y_star, q_prime, counterfactual, treated, _ = _composition(data, q)
    n = data.sizes
    f11 = _density_at(data.cell_11, treated)
    f01 = _density_at(data.cell_01, counterfactual)
    f10 = _density_at(data.cell_10, y_star)
    f00 = epanechnikov_density(data.cell_00, y_star, silverman_bandwidth(data.cell_00))
    qq = q * (1 - q)
    qp = q_prime * (1 - q_prime)
    var = (
        qq / (n["11"] * f11**2)
        + qp / (n["01"] * f01**2)
        + qp / (n["00"] * f01**2)
        + (f00 / f01) ** 2 * qq / (n["10"] * f10**2)
    )
    return math.sqrt(var)


def resample(data: QuadData, rng: np.random.Generator) -> QuadData:
    """With-replacement resample within each cell."""
    return data.map(lambda y: y[rng.integers(0, y.size, y.size)])


def cic_bootstrap_se(data: QuadData, q: float, reps: int = 500, seed: int = 0) -> float:
    """Bootstrap SD of :func:`cic_point_estimate`.

    Replicate ``r`` draws from ``np.random.default_rng([seed, r])`` so the
    result does not depend on evaluation order.
    """
    if reps < 100:
        raise EstimationError("bootstrap needs reps >= 100")
    draws = np.array(
        [
            cic_point_estimate(resample(data, np.random.default_rng([seed, r])), q)
            for r in range(reps)
        ]
    )
    return float(np.std(draws, ddof=1))


def cic_estimate(
    data: QuadData,
    q: float,
    se_method: str = "analytic_kernel",
    reps: int = 500,
    seed: int = 0,
) -> ClassicEstimate:
    """Point estimate plus standard error and 95% interval."""
    if not 0 < q < 1:
        raise EstimationError(f"quantile level must lie in (0, 1), got {q}")
    *_, counterfactual, treated, clamped = _composition(data, q)
    tau = treated - counterfactual
    if se_method == "analytic_kernel":
        se = cic_analytic_se(data, q)
    elif se_method == "bootstrap":
        se = cic_bootstrap_se(data, q, reps, seed)
    else:
        raise ValueError(f"unknown se_method {se_method!r}")
    return ClassicEstimate(q, tau, se, tau - Z_95 * se, tau + Z_95 * se, se_method, clamped)
