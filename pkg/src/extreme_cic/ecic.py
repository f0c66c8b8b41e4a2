"""Extreme changes-in-changes: tail-extrapolated point estimate and inference."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from . import classic
from .data import CELL_LABELS, EstimationError, QuadData
from .tails import (
    GH_C_CRIT,
    GH_WINDOW,
    K_POWER,
    K_SCALE,
    TailFit,
    TailTransform,
    _guillou_hall,
    extreme_quantile,
    hill_estimate,
    select_k_fixed,
    sort_descending,
)

Z_95 = 1.96
D_FLOOR = 10.0


@dataclass(frozen=True)
class GuillouHallRule:
    c_crit: float = GH_C_CRIT
    window: int = GH_WINDOW


@dataclass(frozen=True)
class FixedRule:
    power: float = K_POWER
    scale: float = K_SCALE


KRule = Union[GuillouHallRule, FixedRule]


@dataclass(frozen=True)
class EcicFit:
    fit_00: TailFit
    fit_01: TailFit
    fit_10: TailFit
    fit_11: TailFit
    fallback: tuple[str, ...] = ()

    def fits(self) -> dict[str, TailFit]:
        return {"00": self.fit_00, "01": self.fit_01, "10": self.fit_10, "11": self.fit_11}

    def lam(self, label: str) -> float:
        """k11 / k_gt."""
        return self.fit_11.k / self.fits()[label].k

    def eta(self, label: str) -> float:
        """n11 / n_gt."""
        return self.fit_11.n / self.fits()[label].n

    def scaled(self, c: float) -> "EcicFit":
        return EcicFit(*(f.scaled(c) for f in self.fits().values()), self.fallback)


@dataclass(frozen=True)
class EffectEstimate:
    q: float
    tau_hat: float
    se: float
    ci_low: float
    ci_high: float
    method: str
    tail: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "tau_hat": self.tau_hat,
            "se": self.se,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "method": self.method,
            "tail": self.tail,
            "diagnostics": dict(self.diagnostics),
        }

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


def counterfactual_tail_quantile(
    fit_00: TailFit, fit_01: TailFit, fit_10: TailFit, q: float
) -> float:
    """Tail-model counterfactual quantile ``F01^-1(F00(F10^-1(q)))`` in closed form."""
    if not 0 < q < 1:
        raise EstimationError(f"quantile level must lie in (0, 1), got {q}")
    a00, a01, a10 = fit_00.alpha_hat, fit_01.alpha_hat, fit_10.alpha_hat
    # grouped so that identical fits reduce to extreme_quantile bit for bit
    ratio = a00 / a01
    return (
        fit_01.threshold
        * (fit_10.threshold / fit_00.threshold) ** ratio
        * ((fit_01.k / fit_01.n) / (fit_00.k / fit_00.n)) ** (1.0 / a01)
        * fit_10.d_ratio(q) ** (ratio / a10)
    )


def ecic_point_estimate(efit: EcicFit, q: float) -> float:
    return extreme_quantile(efit.fit_11, q) - counterfactual_tail_quantile(
        efit.fit_00, efit.fit_01, efit.fit_10, q
    )


def _cross_term(efit: EcicFit) -> float:
    a = {lab: f.alpha_hat for lab, f in efit.fits().items()}
    lam_sum = efit.lam("00") + efit.lam("10") + efit.lam("01")
    return (
        (efit.lam("10") / efit.eta("10")) ** 2
        * lam_sum
        * a["00"] ** 2
        / (a["10"] ** 2 * a["01"] ** 2)
    )


def omega_variance(efit: EcicFit, varsigma_hat: float) -> float:
    """Plug-in asymptotic variance of the normalised estimator."""
    if not varsigma_hat > 0:
        raise EstimationError("varsigma_hat must be positive")
    omega = efit.fit_11.alpha_hat ** -2 + _cross_term(efit) / varsigma_hat**2
    if not math.isfinite(omega):
        raise EstimationError("non-finite plug-in in variance")
    return omega


def _se_terms(efit: EcicFit, q: float) -> tuple[float, float, float, float]:
    """(treated quantile, counterfactual quantile, treated var term, counterfactual var term)."""
    treated = extreme_quantile(efit.fit_11, q)
    counterfactual = counterfactual_tail_quantile(efit.fit_00, efit.fit_01, efit.fit_10, q)
    if not counterfactual > 0:
        raise EstimationError("non-positive counterfactual quantile")
    return (
        treated,
        counterfactual,
        treated**2 * efit.fit_11.alpha_hat ** -2,
        counterfactual**2 * _cross_term(efit),
    )


def _diagnostics(efit: EcicFit, q: float, d11: float, d_floor: float, varsigma: float) -> dict:
    diag = {
        "d_11": d11,
        "d_eff": max(d11, d_floor),
        "floor_applied": d11 < d_floor,
        "varsigma_hat": varsigma,
        "varsigma_warning": not 0.1 < varsigma < 10,
    }
    for lab, fit in efit.fits().items():
        diag[f"k_{lab}"] = fit.k
        diag[f"alpha_hat_{lab}"] = fit.alpha_hat
        diag[f"d_{lab}"] = fit.d_ratio(q)
    if efit.fallback:
        diag["k_fallback"] = list(efit.fallback)
    return diag


def ecic_confidence_interval(efit: EcicFit, q: float, d_floor: float = D_FLOOR) -> EffectEstimate:
    """Point estimate, standard error and 95% interval for the right tail.

    The extrapolation depth ``d11 = k11 / (n11 (1-q))`` is floored at
    ``d_floor`` inside the logarithm.
    """
    if not d_floor > 1:
        raise EstimationError("d_floor must exceed 1")
    treated, counterfactual, t_term, c_term = _se_terms(efit, q)
    d11 = efit.fit_11.d_ratio(q)
    scale = math.log(max(d11, d_floor)) / math.sqrt(efit.fit_11.k)
    se = scale * math.sqrt(t_term + c_term)
    tau = treated - counterfactual
    diag = _diagnostics(efit, q, d11, d_floor, treated / counterfactual)
    return EffectEstimate(q, tau, se, tau - Z_95 * se, tau + Z_95 * se, "ecic", "right", diag)


def fit_ecic(data: QuadData, k_rule: KRule | None = None) -> EcicFit:
    """Hill fit of every cell's upper tail with k chosen by ``k_rule``.

    ``None`` means the Guillou-Hall rule with default settings.
    """
    k_rule = GuillouHallRule() if k_rule is None else k_rule
    fits = []
    fallback = []
    for label, cell in zip(CELL_LABELS, data):
        try:
            srt = sort_descending(cell)
            if isinstance(k_rule, FixedRule):
                k = select_k_fixed(cell.n, k_rule.power, k_rule.scale)
            else:
                k, fell_back = _guillou_hall(srt, k_rule.c_crit, k_rule.window)
                if fell_back:
                    fallback.append(label)
            fits.append(hill_estimate(srt, k))
        except EstimationError as exc:
            raise EstimationError(f"cell {label}: {exc}") from exc
    return EcicFit(*fits, fallback=tuple(fallback))


def estimate_right_tail(
    data: QuadData, q: float, k_rule: KRule | None = None, d_floor: float = D_FLOOR
) -> EffectEstimate:
    return ecic_confidence_interval(fit_ecic(data, k_rule), q, d_floor)


def estimate_left_tail(
    data: QuadData,
    q: float,
    transform: TailTransform = TailTransform.NEGATE,
    k_rule: KRule | None = None,
    d_floor: float = D_FLOOR,
) -> EffectEstimate:
    """Lower-tail effect at level ``q`` via a strictly decreasing transform.

    The data are mapped so the lower tail becomes an upper tail, the
    right-tail machinery runs at ``1 - q``, and the two tail quantiles are
    mapped back. The standard error maps each variance component through the
    slope of the inverse transform at its own quantile.
    """
    transform = TailTransform(transform)
    if not transform.decreasing:
        raise EstimationError(f"left-tail estimation needs a decreasing transform, got {transform.value}")
    if not 0 < q < 1:
        raise EstimationError(f"quantile level must lie in (0, 1), got {q}")
    mapped = data.map(transform.forward)
    efit = fit_ecic(mapped, k_rule)
    level = 1.0 - q
    treated_t, counter_t, t_term, c_term = _se_terms(efit, level)
    treated = transform.inverse(treated_t)
    counterfactual = transform.inverse(counter_t)
    d11 = efit.fit_11.d_ratio(level)
    scale = math.log(max(d11, d_floor)) / math.sqrt(efit.fit_11.k)
    se = scale * math.sqrt(
        t_term * transform.inverse_slope(treated_t) ** 2
        + c_term * transform.inverse_slope(counter_t) ** 2
    )
    tau = treated - counterfactual
    diag = _diagnostics(efit, level, d11, d_floor, treated_t / counter_t)
    diag["transform"] = transform.value
    return EffectEstimate(q, tau, se, tau - Z_95 * se, tau + Z_95 * se, "ecic", "left", diag)


@dataclass(frozen=True)
class AutoConfig:
    extreme_low: float = 0.05
    extreme_high: float = 0.95
    d_floor: float = D_FLOOR
    k_rule: KRule = field(default_factory=GuillouHallRule)
    se_method: str = "analytic_kernel"
    transform: TailTransform = TailTransform.NEGATE
    bootstrap_reps: int = 500
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.extreme_low < self.extreme_high < 1:
            raise ValueError("need 0 < extreme_low < extreme_high < 1")
        if not self.d_floor > 1:
            raise ValueError("d_floor must exceed 1")


def estimate_classic(data: QuadData, q: float, config: AutoConfig | None = None) -> EffectEstimate:
    config = config or AutoConfig()
    est = classic.cic_estimate(data, q, config.se_method, config.bootstrap_reps, config.seed)
    tail = "right" if q >= 0.5 else "left"
    diag = {"se_method": est.se_method, "q_prime_clamped": est.clamped}
    return EffectEstimate(q, est.tau_hat, est.se, est.ci_low, est.ci_high, "cic", tail, diag)


def estimate_auto(data: QuadData, q: float, config: AutoConfig | None = None) -> EffectEstimate:
    """eCIC in the tails, conventional CIC in between.

    Levels at or above ``extreme_high`` use the right-tail estimator, levels
    at or below ``extreme_low`` the left-tail one; the switch is hard.
    """
    config = config or AutoConfig()
    if not 0 < q < 1:
        raise EstimationError(f"quantile level must lie in (0, 1), got {q}")
    if q >= config.extreme_high:
        return estimate_right_tail(data, q, config.k_rule, config.d_floor)
    if q <= config.extreme_low:
        return estimate_left_tail(data, q, config.transform, config.k_rule, config.d_floor)
    return estimate_classic(data, q, config)
