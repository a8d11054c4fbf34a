"""Transfer-matrix toolkit for phantom relaxation rates.

Non-Hermitian transfer matrices of random-circuit correlators exhibit an
effective "phantom" decay rate at pre-asymptotic times that is not an
eigenvalue of the matrix; it is controlled by the pseudospectrum and, for
the physical vector pairs, sits strictly between the spectral asymptote
and the pseudospectral bound.  This package provides structured matrix
iteration (exact-rational and arbitrary-precision backends), analytic
spectra, pseudospectrum scans, closed-form cross-checks and rate
estimators, plus a CLI that emits reproducible figure datasets.
"""

__version__ = "0.1.0"

from .numerics import (
    BackendSpec,
    ConvergenceError,
    DEFAULT_PREC,
    DefectiveMatrixError,
    DomainError,
    EstimationError,
    FLOAT,
    FLOAT_BACKEND,
    NumericalError,
    RATIONAL,
    RATIONAL_BACKEND,
    binomial,
    catalan,
    gamma_ratio_3half_3,
    hyp2f1,
    rates_from_q,
)
from .transfer import (
    DecaySeries,
    DenseMatrix,
    MarkovWalk,
    ModelParams,
    ObcFull,
    PbcBlockCirculant,
    Rescaled,
    TransferMatrix,
    TridiagToeplitz,
    TwoDiagonal,
    VectorPair,
    build_jordan,
    build_markov_walk,
    build_obc,
    build_pbc,
    exp_localized_pair,
    iterate_series,
    otoc_vectors_obc,
    otoc_vectors_pbc,
    random_stochastic_vector,
    rescale,
    simulate_walk,
    stationary_left_vector,
)
from .spectral import (
    CurveSamples,
    EigenSystem,
    PseudospectrumField,
    extend_to_A,
    lambda2_obc,
    lambda2_pbc,
    obc_eigensystem,
    obc_pseudo_curve,
    pbc_commuting_factors,
    pbc_eigenvalues,
    pbc_fourier_block,
    pbc_pseudo_conjecture,
    pseudospectrum_grid,
    sigma_min,
)
from .closedform import (
    ConvolutionProfile,
    hyp_ratio_q2,
    inner_sum_identity,
    jordan_closed,
    leading_term_checks,
    otoc_closed_q2,
    r1_catalan,
    rate_closed_q2,
    spectral_sum_obc,
)
from .analysis import (
    RateProfile,
    compare_report,
    effective_rate,
    plateau_rate,
    transition_time,
)
