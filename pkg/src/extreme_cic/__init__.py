"""Changes-in-changes quantile treatment effects, with tail extrapolation for extreme quantiles."""

__version__ = "0.1.0"

from .classic import (
    ClassicEstimate,
    EmpiricalCdf,
    cic_analytic_se,
    cic_bootstrap_se,
    cic_estimate,
    cic_point_estimate,
    ecdf_eval,
    ecdf_quantile,
    epanechnikov_density,
    silverman_bandwidth,
)
from .data import CellSample, EstimationError, QuadData
from .ecic import (
    AutoConfig,
    EcicFit,
    EffectEstimate,
    FixedRule,
    GuillouHallRule,
    counterfactual_tail_quantile,
    ecic_confidence_interval,
    ecic_point_estimate,
    estimate_auto,
    estimate_classic,
    estimate_left_tail,
    estimate_right_tail,
    fit_ecic,
    omega_variance,
)
from .io import RunConfig, parse_csv
from .montecarlo import (
    ExperimentResult,
    SimDesign,
    generate_dataset,
    run_bias_experiment,
    run_coverage_experiment,
    true_tau,
)
from .special import beta_quantile, student_t_quantile
from .tails import (
    SortedSample,
    TailFit,
    TailTransform,
    apply_transform,
    extreme_quantile,
    hill_estimate,
    invert_transform,
    jitter_ties,
    select_k_fixed,
    select_k_guillou_hall,
    sort_descending,
    tail_probability,
)
