"""Elastic shape analysis of spherically parameterized closed surfaces.

Surfaces are sampled on azimuth/polar grids, compared through a
square-root normal field transform whose L2 metric is invariant to
reparameterization, and registered over rotations and sphere
diffeomorphisms.  On top of the registration sit mean shapes, principal
component models, score regressions, and a vertex-wise baseline
pipeline for comparison.
"""

from .errors import (
    ConfigError,
    InputError,
    NumericalError,
    OrientationError,
    ParseError,
    RankDeficiencyError,
    ZeroAreaError,
)
from .grids import (
    SphericalGrid,
    Surface,
    make_grid,
    normal_field,
    normalize,
    surface_area,
)
from .srnf import SrnfField, inner, norm, srnf, srnf_action
from .diffeos import (
    Diffeo,
    compose,
    identity_diffeo,
    jacobian_det,
    pullback,
    random_diffeo,
)
from .registration import (
    RegistrationOpts,
    RegistrationResult,
    optimal_rotation,
    optimize_reparam,
    register,
)
from .shape_stats import (
    KarcherResult,
    ShapeModel,
    cumulative_variance,
    diff_field,
    geodesic,
    karcher_mean,
    pc_path,
    pc_scores,
    reconstruct,
    register_cohort,
    shape_pca,
)
from .regression import (
    CovariateTable,
    ModelSpec,
    RegressionFit,
    StepwiseResult,
    design_matrix,
    ols_fit,
    run_model_suite,
    stepwise_bidirectional,
)
from .baseline import (
    IcpResult,
    MdsResult,
    PointModel,
    class_distances,
    classical_mds,
    icp_register,
    knn_accuracy,
    vertex_pca,
)
from .fileio import (
    export_obj,
    load_model,
    load_surface,
    save_model,
    save_surface,
)
from .synthetic import (
    CohortSpec,
    gen_pca_cohort,
    gen_regression_cohort,
    gen_surface,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ConfigError",
    "InputError",
    "NumericalError",
    "OrientationError",
    "ParseError",
    "RankDeficiencyError",
    "ZeroAreaError",
    "SphericalGrid",
    "Surface",
    "make_grid",
    "normal_field",
    "normalize",
    "surface_area",
    "SrnfField",
    "inner",
    "norm",
    "srnf",
    "srnf_action",
    "Diffeo",
    "compose",
    "identity_diffeo",
    "jacobian_det",
    "pullback",
    "random_diffeo",
    "RegistrationOpts",
    "RegistrationResult",
    "optimal_rotation",
    "optimize_reparam",
    "register",
    "KarcherResult",
    "ShapeModel",
    "cumulative_variance",
    "diff_field",
    "geodesic",
    "karcher_mean",
    "pc_path",
    "pc_scores",
    "reconstruct",
    "register_cohort",
    "shape_pca",
    "CovariateTable",
    "ModelSpec",
    "RegressionFit",
    "StepwiseResult",
    "design_matrix",
    "ols_fit",
    "run_model_suite",
    "stepwise_bidirectional",
    "IcpResult",
    "MdsResult",
    "PointModel",
    "class_distances",
    "classical_mds",
    "icp_register",
    "knn_accuracy",
    "vertex_pca",
    "CohortSpec",
    "gen_pca_cohort",
    "gen_regression_cohort",
    "gen_surface",
]
