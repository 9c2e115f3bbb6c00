"""iic_lab: minimum l^p-norm interpolators, their selection criterion, and
the numerical oracles that validate every closed form."""

from .errors import (  # noqa: F401
    BadShape,
    BadSize,
    BudgetExhausted,
    ConfigInvalid,
    DataError,
    DegenerateCoordinates,
    DegreeExhausted,
    DimensionBound,
    DimensionTooHigh,
    EmptyKernel,
    IICLabError,
    InfiniteVolume,
    MaxIterations,
    MinimumAtBoundary,
    NonFinite,
    NotPositiveDefinite,
    NotUnique,
    NumericalError,
    ParseError,
    RankDeficient,
    SingularHessian,
    SupportNotFull,
    SupportRankDeficient,
    TargetMissing,
    TiedMaximum,
    TooFew,
    UnboundedBody,
    ZeroCoordinate,
    ZeroNorm,
    ZeroVariance,
)
from .linalg import DesignMatrix, KernelBasis, kernel_basis, log_det_gram, pinv_apply, validate_design  # noqa: F401
from .interpolate import (  # noqa: F401
    CertificateReport,
    Interpolator,
    SolverOptions,
    detect_support,
    min_norm_l1,
    min_norm_l2,
    min_norm_lp,
    uniqueness_certificate,
)
from .iic import (  # noqa: F401
    IICBreakdown,
    V0Result,
    iic_ridge,
    iic_smooth,
    iic_sparse,
    iic_sparse_n1,
    k1,
    k2,
    pac_bayes_bound,
    tau_star,
    v0_closed,
    v0_monte_carlo,
)
from .oracle import (  # noqa: F401
    DualPriorEstimate,
    OracleBudget,
    TauMinResult,
    dual_prior_numeric,
    dual_prior_residue_n1,
    dual_prior_ridge_asymptotic,
    dual_prior_smooth_asymptotic,
    dual_prior_sparse_asymptotic,
    free_energy_numeric_min,
)
from .features import FeatureMatrix, RFFConfig, apply_map, median_bandwidth, poly_map, rff_map  # noqa: F401
from .experiment import (  # noqa: F401
    CSV_COLUMNS,
    Dataset,
    ExperimentRecord,
    SweepConfig,
    emit,
    ingest_csv,
    load_sweep_config,
    mse,
    run_sweep,
    split,
)
from .stats import CorrelationReport, bootstrap_ci, spearman  # noqa: F401

__version__ = "0.1.0"
