"""Phase retrieval by Wirtinger Flow: spectral initialization plus gradient refinement."""
from .core import (
    DegenerateError,
    DimensionError,
    DivergenceError,
    PreconditionError,
    RandomSource,
    WirtflowError,
    dist,
    optimal_phase,
    relative_error,
    sample_complex_gaussian,
)
from .initialization import ResampleConfig, SpectralConfig, partition, power_method, resampled_init, spectral_init
from .measurements import (
    OCTANARY,
    TERNARY,
    CdpEnsemble,
    GaussianEnsemble,
    PatternDistribution,
    adjoint,
    forward,
    observe,
    pattern_moments,
    sample_cdp_ensemble,
    sample_gaussian_ensemble,
    sample_pattern,
)
from .objective import loss, wirtinger_gradient
from .solver import Schedule, SolveResult, SolverConfig, schedule_mu, solve, step, success

__version__ = "0.1.0"
