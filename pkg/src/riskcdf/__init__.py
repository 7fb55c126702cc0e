"""riskcdf: risk-sensitive loss analysis from a single empirical CDF.

Estimate loss CDFs, evaluate whole families of Holder risk functionals on
them (distortion, spectral, OCE, moment composites), certify the estimates
with uniform-convergence bounds driven by class complexity (finite class,
permutation complexity, growth numbers), and train models by sorted-loss
distortion risk minimization.
"""

from .bounds import (
    BoundCertificate,
    cdf_uniform_bound,
    certificate_finite_class,
    certificate_growth,
    certificate_permutation,
    certificate_vc_sauer,
    excess_risk_bound,
    mcdiarmid_term,
    monte_carlo_en,
    rademacher_finite_class,
    rademacher_growth,
    rademacher_permutation,
    rademacher_vc_sauer,
    risk_error_bound,
    wasserstein_risk_error_bound,
)
from .cdf import (
    EmpiricalCDF,
    build_cdf,
    build_cdf_unchecked,
    distance_report,
    moment,
    sup_norm_distance,
    wasserstein1,
)
from .data import Dataset, LossTable, generate_blobs, load_loss_table, toy_blobs
from .errors import ToolkitError
from .models import Example, LossModel, finite_difference_check, init_model
from .optim import (
    TrainConfig,
    TrainTrace,
    distortion_gradient,
    empirical_distortion_risk,
    noisy_gd_step,
    stationarity_report,
    train,
)
from .permcomplexity import (
    LossMatrix,
    WeakOrder,
    exact_min_permutations,
    greedy_min_permutations,
    monte_carlo_permutation_complexity,
    weak_order,
)
from .risks import (
    DistortionSpec,
    OceSpec,
    RiskValue,
    SpectrumSpec,
    cvar,
    cvar_distortion,
    cvar_spectrum,
    distortion_risk,
    holder_risk_error,
    identity_distortion,
    inverted_oce_risk,
    mean_variance,
    oce_lipschitz_constant,
    oce_risk,
    spectral_risk,
)

__version__ = "0.1.0"
