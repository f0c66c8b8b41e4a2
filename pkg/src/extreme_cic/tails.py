"""Order statistics, Hill tail-index estimation and power-law extrapolation.

Everything here works on the upper tail. Lower tails are handled by mapping
the data through a strictly decreasing :class:`TailTransform` first.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .data import CellSample, EstimationError

# Guillou-Hall defaults
GH_C_CRIT = 1.25
GH_WINDOW = 5

# fixed k-rule defaults: k = scale * n**power
K_POWER = 0.5
K_SCALE = 2.0


@dataclass(frozen=True, eq=False)
class SortedSample:
    """Outcomes in non-increasing order (``descending[0]`` is the maximum)."""

    descending: np.ndarray

    @property
    def n(self) -> int:
        return int(self.descending.size)

    def order_stat(self, j: int) -> float:
        """The j-th largest value, 1-based."""
        return float(self.descending[j - 1])


@dataclass(frozen=True)
class TailFit:
    """Hill fit of one cell's upper tail.

    Attributes
    ----------
    k : int
        Number of top order statistics used.
    threshold : float
        The (k+1)-th largest outcome.
    alpha_hat : float
        Estimated Pareto exponent.
    n : int
        Cell size.
    """

    k: int
    threshold: float
    alpha_hat: float
    n: int

    def __post_init__(self):
        if not 1 <= self.k <= self.n - 1:
            raise EstimationError(f"k={self.k} outside [1, n-1] for n={self.n}")
        if not self.threshold > 0:
            raise EstimationError(
                "non-positive threshold: apply a transform or reduce k"
            )
        if not (self.alpha_hat > 0 and math.isfinite(self.alpha_hat)):
            raise EstimationError(f"invalid tail index {self.alpha_hat!r}")

    def scaled(self, c: float) -> "TailFit":
        return TailFit(self.k, self.threshold * c, self.alpha_hat, self.n)

    def d_ratio(self, q: float) -> float:
        """Extrapolation depth k / (n (1 - q))."""
        return self.k / (self.n * (1.0 - q))


class TailTransform(enum.Enum):
    """Strictly monotone maps used to turn a lower tail into an upper tail."""

    IDENTITY = "identity"
    NEGATE = "negate"
    RECIPROCAL = "reciprocal"

    @property
    def decreasing(self) -> bool:
        return self is not TailTransform.IDENTITY

    def forward(self, values):
        values = np.asarray(values, dtype=float)
        if self is TailTransform.IDENTITY:
            return values.copy()
        if self is TailTransform.NEGATE:
            return -values
        if np.any(values <= 0):
            raise EstimationError("reciprocal transform needs strictly positive outcomes")
        return 1.0 / values

    def inverse(self, value: float) -> float:
        if self is TailTransform.IDENTITY:
            return float(value)
        if self is TailTransform.NEGATE:
            return -float(value)
        if value == 0:
            raise EstimationError("reciprocal transform cannot invert 0")
        return 1.0 / float(value)

    def inverse_slope(self, value: float) -> float:
        """|d inverse / dv| at ``value`` (used to map standard errors back)."""
        if self is TailTransform.RECIPROCAL:
            return 1.0 / (value * value)
        return 1.0


def sort_descending(sample: CellSample | np.ndarray) -> SortedSample:
    values = sample.outcomes if isinstance(sample, CellSample) else np.asarray(sample, float)
    if values.size == 0:
        raise EstimationError("empty cell")
    order = np.argsort(-values, kind="stable")
    desc = values[order]
    desc.setflags(write=False)
    return SortedSample(desc)


def hill_estimate(sorted_sample: SortedSample, k: int) -> TailFit:
    """Hill estimator from the top ``k`` order statistics.

    The tail index is the inverse of the mean of
    ``log Y(j) - log Y(k+1)`` over ``j = 1..k``.
    """
    n = sorted_sample.n
    k = int(k)
    if not 1 <= k <= n - 1:
        raise EstimationError(f"k={k} outside [1, n-1] for n={n}")
    desc = sorted_sample.descending
    threshold = float(desc[k])
    if not threshold > 0:
        raise EstimationError("non-positive threshold: apply a transform or reduce k")
    mean_spacing = float(np.mean(np.log(desc[:k]) - math.log(threshold)))
    if mean_spacing <= 0:
        raise EstimationError("degenerate ties at threshold")
    return TailFit(k=k, threshold=threshold, alpha_hat=1.0 / mean_spacing, n=n)


def extreme_quantile(fit: TailFit, q: float) -> float:
    """Power-law extrapolated q-quantile, ``threshold * (k / (n (1-q)))**(1/alpha)``."""
    if not 0 < q < 1:
        raise EstimationError(f"quantile level must lie in (0, 1), got {q}")
    return fit.threshold * fit.d_ratio(q) ** (1.0 / fit.alpha_hat)


def tail_probability(fit: TailFit, y: float) -> float:
    """Estimated exceedance probability ``(k/n) (y/threshold)**(-alpha)``.

    Not clamped to [0, 1]: for ``y`` below the threshold the power law is
    returned as is.
    """
    if not y > 0:
        raise EstimationError(f"tail probability needs y > 0, got {y}")
    return (fit.k / fit.n) * (y / fit.threshold) ** (-fit.alpha_hat)


def select_k_fixed(n: int, power: float = K_POWER, scale: float = K_SCALE) -> int:
    if n < 10:
        raise EstimationError(f"fixed k-rule needs n >= 10, got {n}")
    if not 0 < power < 1 or not scale > 0:
        raise EstimationError("fixed k-rule needs 0 < power < 1 and scale > 0")
    k = int(round(scale * n**power))
    return min(max(k, 1), n - 1)


def guillou_hall_statistic(sorted_sample: SortedSample, k_max: int) -> np.ndarray:
    """T(k) for k = 1..k_max (entry k-1 holds T(k)).

    With ``Z_j = j (log Y(j) - log Y(j+1))`` the statistic is
    ``sqrt(3/k**3) * sum_j (k - 2j + 1) Z_j / mean(Z_1..Z_k)``, which is
    asymptotically N(0, 1) when the top order statistics are exactly Pareto.
    Requires ``Y(k_max + 1) > 0``.
    """
    logs = np.log(sorted_sample.descending[: k_max + 1])
    j = np.arange(1, k_max + 1, dtype=float)
    z = j * (logs[:-1] - logs[1:])
    s0 = np.cumsum(z)
    s1 = np.cumsum(j * z)
    k = j
    contrast = (k + 1.0) * s0 - 2.0 * s1
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = np.sqrt(3.0 / k**3) * contrast / (s0 / k)
    return stat


def _guillou_hall(sorted_sample: SortedSample, c_crit: float, window: int) -> tuple[int, bool]:
    """Return (k, fell_back)."""
    n = sorted_sample.n
    if n < 20:
        raise EstimationError(f"Guillou-Hall selection needs n >= 20, got {n}")
    if not c_crit > 0:
        raise EstimationError("c_crit must be positive")
    if window < 1 or window % 2 == 0:
        raise EstimationError("window must be an odd integer >= 1")
    half = window // 2
    k_min = max(10, int(round(0.02 * n)))
    k_top = int(round(0.2 * n))

    desc = sorted_sample.descending
    # largest k whose statistic is computable: Y(k+1) > 0 and k <= n-1
    n_pos = int(np.count_nonzero(desc > 0))
    k_avail = min(k_top + half, n - 1, n_pos - 1)
    if k_avail < k_min + window:
        return select_k_fixed(n), True

    stat = np.abs(guillou_hall_statistic(sorted_sample, k_avail))
    if not np.all(np.isfinite(stat[k_min - 1 - half:])):
        return select_k_fixed(n), True
    kernel = np.full(window, 1.0 / window)
    # smoothed[i] is centred on k = i + 1 + half
    smoothed = np.convolve(stat, kernel, mode="valid")
    k_last = min(k_top, k_avail - half)
    ks = np.arange(k_min, k_last + 1)
    crossed = np.nonzero(smoothed[ks - 1 - half] > c_crit)[0]
    if crossed.size == 0:
        return int(k_last), False
    return max(int(ks[crossed[0]]) - 1, k_min), False


def select_k_guillou_hall(
    sorted_sample: SortedSample, c_crit: float = GH_C_CRIT, window: int = GH_WINDOW
) -> int:
    """Choose the number of tail order statistics with the Guillou-Hall diagnostic.

    Scans k upward from ``max(10, 2% of n)`` and stops one short of the
    first k where the moving average of ``|T(k)|`` exceeds ``c_crit``. If the
    diagnostic never rejects, the largest candidate (20% of n) is returned.
    Falls back to :func:`select_k_fixed` with a warning when too few positive
    order statistics are available.
    """
    k, fell_back = _guillou_hall(sorted_sample, c_crit, window)
    if fell_back:
        warnings.warn(
            "too few positive order statistics for Guillou-Hall; using fixed k-rule",
            stacklevel=2,
        )
    return k


def apply_transform(sample: CellSample, transform: TailTransform) -> CellSample:
    return sample.with_outcomes(TailTransform(transform).forward(sample.outcomes))


def invert_transform(value: float, transform: TailTransform) -> float:
    return TailTransform(transform).inverse(value)


def jitter_ties(sample: CellSample, seed: int) -> CellSample:
    """Break ties by adding uniform noise of half the smallest positive gap.

    Order between distinct values is preserved; the noise stream is fully
    determined by ``seed``.
    """
    values = sample.outcomes
    gaps = np.diff(np.unique(values))
    if gaps.size == 0:
        raise EstimationError("cannot jitter a sample with a single distinct value")
    half_gap = 0.5 * float(gaps.min())
    rng = np.random.default_rng(seed)
    return sample.with_outcomes(values + rng.uniform(-half_gap / 2, half_gap / 2, values.size))
