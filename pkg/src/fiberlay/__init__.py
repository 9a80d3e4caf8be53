"""fiberlay: the fiber lay-down process on R^d x S^{d-1}.

Simulation (embedded and local-chart schemes with a compiled fast path),
generator/adjoint operator checks, spectral-gap estimation, ergodic
diagnostics, and the guaranteed-convergence-rate formula, with a CLI front
end (``fiberlay --help``).
"""

from .dynamics import (
    SCHEME_EMBEDDED,
    SCHEME_LOCAL,
    AngleState,
    ChartExitEvent,
    FiberState,
    PicardResult,
    SimConfig,
    Trajectory,
    WienerPath,
    default_init,
    picard_solve_2d,
    run_ensemble,
    simulate,
    step_embedded,
    step_local,
    wiener_path,
)
from .ergodics import (
    DecayFit,
    Observable,
    ObservableSeries,
    RateParams,
    StationarityReport,
    collect_ensemble,
    fit_decay,
    hypocoercivity_rate,
    mixing_series,
    optimal_sigma,
    rate_constants_report,
    series_from_ensemble,
    stationarity_audit,
)
from .errors import (
    BasisTooSmall,
    ChartExit,
    ConfigError,
    FiberlayError,
    InsufficientSignal,
    MissingDerivatives,
    NonIntegrable,
    NumericalInconsistency,
    PoleSingularity,
    StepFailure,
)
from .galerkin import GapEstimate, assemble_generator_2d, estimate_gap_2d, stable_gap_2d
from .geometry import (
    TOL_POLE,
    ScalarField,
    SphereQuadrature,
    SphericalAngles,
    UnitVector,
    angles_from_point,
    chart_jacobian,
    embed_angles,
    gauss_moment,
    hormander_rank,
    laplace_beltrami,
    laplace_beltrami_local,
    metric_factor,
    metric_factors,
    sphere_grad_linear,
    sphere_quadrature,
)
from .operators import (
    CoercivityConstants,
    ProductQuadrature,
    TestFunction,
    apply_antisymmetric_part,
    apply_fokker_planck,
    apply_kolmogorov,
    apply_symmetric_part,
    bs_identity_check,
    bump_observable,
    check_conjugation,
    check_invariance,
    check_symmetry_split,
    coercivity_constants,
    mu_drift_scale,
    product_quadrature,
)
from .potential import (
    PotentialSpec,
    audit_H2,
    audit_H4,
    builtin_anisotropic_quadratic,
    builtin_radial_quadratic,
    builtin_zero,
    make_custom,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # dynamics
    "SCHEME_EMBEDDED", "SCHEME_LOCAL", "AngleState", "ChartExitEvent",
    "FiberState", "PicardResult", "SimConfig", "Trajectory", "WienerPath",
    "default_init", "picard_solve_2d", "run_ensemble", "simulate",
    "step_embedded", "step_local", "wiener_path",
    # ergodics
    "DecayFit", "Observable", "ObservableSeries", "RateParams",
    "StationarityReport", "collect_ensemble", "fit_decay",
    "hypocoercivity_rate", "mixing_series", "optimal_sigma",
    "rate_constants_report", "series_from_ensemble", "stationarity_audit",
    # errors
    "BasisTooSmall", "ChartExit", "ConfigError", "FiberlayError",
    "InsufficientSignal", "MissingDerivatives", "NonIntegrable",
    "NumericalInconsistency", "PoleSingularity", "StepFailure",
    # galerkin
    "GapEstimate", "assemble_generator_2d", "estimate_gap_2d", "stable_gap_2d",
    # geometry
    "TOL_POLE", "ScalarField", "SphereQuadrature", "SphericalAngles",
    "UnitVector", "angles_from_point", "chart_jacobian", "embed_angles",
    "gauss_moment", "hormander_rank", "laplace_beltrami",
    "laplace_beltrami_local", "metric_factor", "metric_factors",
    "sphere_grad_linear", "sphere_quadrature",
    # operators
    "CoercivityConstants", "ProductQuadrature", "TestFunction",
    "apply_antisymmetric_part", "apply_fokker_planck", "apply_kolmogorov",
    "apply_symmetric_part", "bs_identity_check", "bump_observable",
    "check_conjugation", "check_invariance", "check_symmetry_split",
    "coercivity_constants", "mu_drift_scale", "product_quadrature",
    # potential
    "PotentialSpec", "audit_H2", "audit_H4", "builtin_anisotropic_quadratic",
    "builtin_radial_quadratic", "builtin_zero", "make_custom",
]
