"""Importance sampling for supremum exceedance probabilities of Gaussian fields,
efficient simultaneously over a class of mean and standard deviation functions."""
from .baseline import (
    DesignMeasure,
    abl09_value,
    q_dagger_weight,
    replicate_abl09,
    replicate_naive,
    sample_under_q_dagger,
)
from .errors import ClassViolation, NonAbsolutelyContinuous, NotPositiveSemidefinite, ZeroMixtureMass
from .field import (
    CovarianceModel,
    DiscretizedField,
    FunctionClassBounds,
    LatticeDomain,
    Polynomial,
    TrendModel,
    build_lattice,
    conditional_given_point,
    covariance_matrix,
    sample_field,
    sqrt_factor,
)
from .gaussian import TailValue, phi_bar, sample_truncated_std_normal
from .harness import ExperimentConfig, derive_stream, refine_lattice_check, run, simulate, sweep
from .oracles import OracleValue, brute_force_small, oracle_cosine, oracle_iid_max
from .summary import EstimateSummary
from .uniform_is import (
    MixturePriors,
    Replicate,
    SampleSet,
    TiltedSample,
    ell,
    evaluate_many_trends,
    likelihood_ratio,
    r_of_s,
    replicate_uniform,
    sample_under_q,
)

__version__ = "0.1.0"
