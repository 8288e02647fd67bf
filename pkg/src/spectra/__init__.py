"""
Optimal energy-penalized linear approximation of stationary processes in the
spectral domain.

Submodules
----------
spectral_model  measures, filters, preset processes
quadrature      adaptive Gauss-Kronrod engine
nonadaptive     optimal multiplier, error, time-domain kernels
criteria        log-integral test, no-loss horizon, regularity limit
interpolation   interpolation error and Galerkin oracle
variational     objective functional and optimality checks
montecarlo      spectral synthesis and time-domain simulation
verify          self-verification suite
cli             command-line front end
"""
from .domain import Domain
from .errors import (
    ConditioningError,
    DivergenceError,
    DomainError,
    InfiniteMassError,
    NumericalError,
    OutOfRangeError,
    ParameterError,
    QuadratureEvaluationError,
    SizingError,
    SpectraError,
    UnsupportedError,
)
from .spectral_model import (
    FunctionFilter,
    KineticContinuous,
    KineticDiscrete,
    PolynomialCircle,
    PolynomialLine,
    ProcessModel,
    SpectralMeasure,
    TabulatedFilter,
    ZeroFilter,
    covariance,
    preset_measure,
    total_mass,
)
from .nonadaptive import (
    closed_form_sigma2,
    continuous_kernel,
    discrete_kernel,
    discrete_to_continuous_limit,
    optimal_psi,
    sigma2_nonadaptive,
)
from .criteria import log_integral, no_loss_horizon, regularity_limit, trig_poly_degree
from .interpolation import galerkin_oracle, interpolation_residuals, sigma2_interpolation
from .variational import euler_residual, objective, perturbation_check, quadratic_expansion
from .montecarlo import build_grid, estimate_functional, time_domain_experiment

__version__ = "0.1.0"
