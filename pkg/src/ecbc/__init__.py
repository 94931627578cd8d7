"""Nonparametric conditional copulas via checkerboard Bernstein smoothing.

The estimator is fully rank-based: no copula family is assumed and no
bandwidth is tuned. Fit a conditional copula with
:func:`fit_conditional_copula` and read off conditional Kendall's tau
and Spearman's rho with :func:`kendall_tau` / :func:`spearman_rho` or
:func:`dependence_curve`.
"""

__version__ = "0.1.0"

from .bernstein import (
    DegreeConfig,
    EcbcCoefficients,
    bernstein_basis,
    bernstein_pmf,
    ecbc_cdf,
    ecbc_partial_v,
    fit_ecbc,
    select_degrees,
)
from .checkerboard import (
    CheckerboardFit,
    checkerboard_cdf,
    checkerboard_cdf_grid,
    empirical_copula_cdf,
    empirical_copula_cdf_grid,
)
from .conditional import (
    ConditionalCopulaEnsemble,
    ConditionalCopulaFit,
    cond_copula_derivative,
    cond_margin,
    conditional_copula_at_x,
    conditional_copula_cdf,
    conditional_copula_grid,
    conditional_marginal_cdf,
    covariate_adjust,
    fit_conditional_copula,
    invert_cond_margin,
    load_fit,
    save_fit,
)
from .data import (
    Dataset,
    PseudoSample,
    empirical_cdf_at,
    empirical_quantile,
    load_dataset,
    pseudo_observations,
)
from .depmeasures import (
    DependenceCurve,
    EtaMatrix,
    dependence_curve,
    eta_matrix,
    kendall_tau,
    kendall_tau_from_eta,
    spearman_rho,
    spearman_rho_from_eta,
)
from .errors import EcbcError, InvariantError, TiesWarning, ValidationError
from .simbench import (
    BenchResult,
    SimModel,
    SimulationResult,
    performance_metrics,
    sample_clayton,
    sample_clayton_pair,
    simulate_replicates,
    true_clayton_tau,
    true_tau_curve,
)

__all__ = [
    "__version__",
    "DegreeConfig",
    "EcbcCoefficients",
    "bernstein_basis",
    "bernstein_pmf",
    "ecbc_cdf",
    "ecbc_partial_v",
    "fit_ecbc",
    "select_degrees",
    "CheckerboardFit",
    "checkerboard_cdf",
    "checkerboard_cdf_grid",
    "empirical_copula_cdf",
    "empirical_copula_cdf_grid",
    "ConditionalCopulaEnsemble",
    "ConditionalCopulaFit",
    "cond_copula_derivative",
    "cond_margin",
    "conditional_copula_at_x",
    "conditional_copula_cdf",
    "conditional_copula_grid",
    "conditional_marginal_cdf",
    "covariate_adjust",
    "fit_conditional_copula",
    "invert_cond_margin",
    "load_fit",
    "save_fit",
    "Dataset",
    "PseudoSample",
    "empirical_cdf_at",
    "empirical_quantile",
    "load_dataset",
    "pseudo_observations",
    "DependenceCurve",
    "EtaMatrix",
    "dependence_curve",
    "eta_matrix",
    "kendall_tau",
    "kendall_tau_from_eta",
    "spearman_rho",
    "spearman_rho_from_eta",
    "EcbcError",
    "InvariantError",
    "TiesWarning",
    "ValidationError",
    "BenchResult",
    "SimModel",
    "SimulationResult",
    "performance_metrics",
    "sample_clayton",
    "sample_clayton_pair",
    "simulate_replicates",
    "true_clayton_tau",
    "true_tau_curve",
]
