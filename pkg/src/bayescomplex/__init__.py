"""Bayesian complexity measures for shallow ReLU networks and linear models.

The package computes sharp and limiting complexities of function targets
under Gaussian-prior models, Minkowski codimensions of representation sets,
constructive projections onto those sets with movement bounds, Gibbs
posteriors (conjugate and SGLD), and PAC-Bayes generalization bounds. A CLI
driver (``bayescomplex``) wraps each experiment family with reproducible CSV
output.
"""

from .complexity import (
    DEFAULT_EPS_GRID,
    CodimQuery,
    ComplexityEstimate,
    OneChangeResult,
    SlopeEstimate,
    chi_from_q,
    codim_estimate,
    dist_to_representation_set,
    empirical_complexity_mc,
    exponential_complexity_mc,
    fit_limiting_slope,
    hyperbola_distance,
    limiting_complexity,
    limiting_complexity_closed_form,
    megaineq_gap,
    one_change_bounds,
    product_density_claimed,
    product_density_mc,
    q_closed_form,
    sharp_complexity_is,
    sharp_complexity_mc,
    sharp_with_noise,
)
from .errors import (
    BayescomplexError,
    CheckFailure,
    ConfigError,
    InsufficientSamplesError,
    NumericalError,
    SmallnessError,
)
from .families import LinearFamily, LinearTarget, PwlMoments, ShallowNetFamily
from .models import (
    BasisKind,
    BasisSpec,
    DeepNetParams,
    LinearFunction,
    LinearModelParams,
    ShallowNetParams,
    basis_matrix,
    build_periodic_deep_net,
    eval_linear,
    linear_l2_distance_sq,
    min_norm_realization,
    shallow_to_pwl,
)
from .posterior import (
    Dataset,
    GaussianPosterior,
    LossEstimate,
    LossSpec,
    SgldConfig,
    batch_means_se,
    clipped_loss,
    conjugate_empirical_loss,
    conjugate_posterior_linear,
    conjugate_true_loss,
    divergence_upper_bound,
    empirical_loss_of_Q,
    expected_clipped_loss_gaussian,
    find_sigma_alg,
    generate_dataset,
    kl_gaussians,
    pac_bayes_rhs,
    run_sgld,
    theorem_bound,
    true_loss_of_Q,
)
from .priors import (
    LinearPriorSpec,
    NnPriorSpec,
    log_nn_prior_density,
    sample_linear_prior,
    sample_nn_prior,
)
from .projection import (
    ProjectionPhases,
    ProjectionResult,
    l2_slope_lower_bound,
    movement_between,
    prefix_sum_bound,
    project_to_target,
    project_to_zero,
    project_to_zero_with_bias,
)
from .pwl import (
    CANONICAL_TOL,
    UNIFORM_SYM,
    UNIFORM_UNIT,
    L2Measure,
    MeasureKind,
    PwlFunction,
    canonical_equal,
    canonicalize,
    l2_distance_sq,
    l2_norm_sq,
    periodize,
    variational_complexity,
)
from .rng import SeededRng, partition_counts

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
