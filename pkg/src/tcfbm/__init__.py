"""Second-order structure of time-changed fractional Brownian motion.

``Z(t) = B_H(Y(t))`` where ``B_H`` is fractional Brownian motion and ``Y`` is
the inverse of an independent subordinator. The package evaluates moments,
covariances, correlations and asymptotics of ``Z`` and ``Y`` and checks them
against a Monte Carlo simulator.
"""

from __future__ import annotations

from .config import DEFAULT_EVAL, DEFAULT_INVERSION, EvalConfig, InversionConfig
from .cli import TablePlan, run
from .errors import (
    ConsistencyError,
    ConvergenceError,
    DegenerateVarianceError,
    DomainError,
    EmbeddingError,
    HorizonExceededError,
    InversionInstabilityError,
    QuadratureError,
    ReplicateFailureError,
    SamplerStallError,
    SpecValidationError,
    TcfbmError,
)
from .inversion import invert_laplace_at, stehfest, talbot
from .quadrature import tanh_sinh
from .moments import MomentQuery, cov_Y, increment_moment_Y, laplace_U_moment, moment_U, renewal_density
from .montecarlo import (
    McEstimate,
    PathConfig,
    RngStream,
    estimate,
    fgn_path,
    inverse_values_at,
    sample_D_at,
    sample_D_increments,
    sample_stable_increment,
    sample_tempered_increment,
    sample_Z_at,
    simulate,
)
from .specfun import (
    gamma_fn,
    incomplete_beta,
    kummer_m,
    lower_incomplete_gamma,
    mittag_leffler,
    prabhakar,
    regularized_lower_gamma,
)
from .subordinators import (
    CustomBernstein,
    DeterministicDrift,
    Stable,
    StableMixture,
    SubordinatorSpec,
    TemperedStable,
    from_kv,
    laplace_exponent,
    to_kv,
    validate_spec,
)
from .tfbm import (
    AsymptoticReport,
    TfbmModel,
    abs_increment_moment_Z,
    corr_Z,
    cov_Z,
    fbm_cov,
    fgn_autocov,
    increment_cov_Z,
    mixture_asymptotics,
    stable_asymptotics,
    stable_cov_closed_form,
    tempered_asymptotics,
    var_Z,
)

__version__ = "0.1.0"
