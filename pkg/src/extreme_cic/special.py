"""Student-t and Beta quantile functions used by the simulation design."""

from __future__ import annotations

import numpy as np
from scipy import special

_NEWTON_STEPS = 2


def _check_levels(q):
    q = np.asarray(q, dtype=float)
    if np.any(~((q > 0) & (q < 1))):
        raise ValueError("quantile levels must lie strictly inside (0, 1)")
    return q


def _t_log_density(x, nu):
    return (
        special.gammaln((nu + 1) / 2)
        - special.gammaln(nu / 2)
        - 0.5 * np.log(nu * np.pi)
        - (nu + 1) / 2 * np.log1p(x * x / nu)
    )


def student_t_quantile(q, nu: float):
    """Inverse CDF of Student-t with ``nu`` degrees of freedom.

    Starts from the incomplete-beta inversion and applies Newton steps on
    the CDF. Levels above 1/2 are reflected so ``f(1-q) == -f(q)`` exactly.
    """
    if not nu > 0:
        raise ValueError("degrees of freedom must be positive")
    q = _check_levels(q)
    lower = np.minimum(q, 1.0 - q)
    x = special.stdtrit(nu, lower)
    for _ in range(_NEWTON_STEPS):
        dens = np.exp(_t_log_density(x, nu))
        step = (special.stdtr(nu, x) - lower) / dens
        x = np.where(dens > 0, x - step, x)
    x = np.where(lower == 0.5, 0.0, x)
    out = np.where(q > 0.5, -x, x)
    return float(out) if out.ndim == 0 else out


def beta_quantile(q, a: float, b: float):
    """Inverse regularized incomplete beta function with Newton polish."""
    if not (a > 0 and b > 0):
        raise ValueError("Beta shape parameters must be positive")
    q = _check_levels(q)
    x = special.betaincinv(a, b, q)
    log_norm = special.betaln(a, b)
    for _ in range(_NEWTON_STEPS):
        inside = (x > 0) & (x < 1)
        xs = np.where(inside, x, 0.5)
        dens = np.exp((a - 1) * np.log(xs) + (b - 1) * np.log1p(-xs) - log_norm)
        step = (special.betainc(a, b, xs) - q) / dens
        cand = xs - step
        ok = inside & np.isfinite(cand) & (cand > 0) & (cand < 1)
        x = np.where(ok, cand, x)
    return float(x) if x.ndim == 0 else x
