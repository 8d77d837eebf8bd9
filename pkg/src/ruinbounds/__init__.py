"""Certified exponential upper bounds on ruin probabilities for
non-homogeneous risk models, with Monte-Carlo verification of every bound."""

from .bounds import (
    BoundCertificate,
    TimeWindow,
    adjustment_coefficient,
    make_cumulant_evaluator,
    optimized_bound,
    periodic_exponent,
    quasi_periodic_constant,
    sup_cumulant,
    united_exponents,
)
from .distributions import (
    Deterministic,
    Discrete,
    DistributionSpec,
    Exponential,
    Gamma,
    Normal,
    TimeVaryingClaimFamily,
    Uniform,
    g_moment,
    mean,
    mgf_minus_one,
    parse_distribution,
    sample,
    truncated_second_moment,
    upper_tail_mean,
)
from .piecewise import PiecewisePolyFn
from .renewal_bounds import (
    RenewalBoundReport,
    TruncationParams,
    a_n_functional,
    b_n_functional,
    c_m_constant,
    corollary8_bound,
    corollary9_bound,
    corollary10_search,
    m_m_envelope,
)
from .risk_models import (
    CumulantResult,
    ModelA,
    ModelB,
    RenewalModel,
    RenewalStep,
    UnitedBranch,
    UnitedModel,
    check_quasi_periodic,
    cumulant_model_a,
    cumulant_model_b,
    cumulant_united,
    model_to_json,
    parse_model,
    renewal_expected_sums,
    renewal_log_mgf,
    renewal_sup_log_mgf,
)
from .rng import RngStream
from .simulator import (
    LatticeStep,
    LatticeWalk,
    SimConfig,
    SimEstimate,
    dp_exact_ruin,
    estimate_ruin_model_a,
    estimate_ruin_model_b,
    estimate_ruin_renewal,
    estimate_ruin_united,
    sample_nhpp,
)

__version__ = "0.1.0"
