"""Time integration on the manifold of fixed-rank matrices.

Submodules
----------
manifold
    Factored points, tangent vectors, projections, Weingarten map.
retractions
    SVD, KSL, KLS and orthographic retractions, inverse orthographic retraction.
curves
    Retraction curves and retraction-based Hermite interpolation.
integrators
    PRK1-3, KSL, KLS, AFE, RH and ARH steppers plus an ambient reference solver.
problems
    Differential Lyapunov equation, factored rotation curve, Hermite test instances.
experiments
    Sweeps, order estimation and CSV output behind the ``fixedrank`` command.
"""
from .curves import HermiteData, HermiteError, JetData, euclidean_hermite_eval, hermite_eval, retraction_curve
from .integrators import (
    StepperKind,
    Trajectory,
    VectorField,
    dlra_acceleration,
    integrate,
    projected_field,
    reference_ambient_solve,
    step,
)
from .manifold import (
    Dims,
    FixedRankPoint,
    LowRankSum,
    RankDeficiencyError,
    TangentVector,
    embed,
    embed_tangent,
    inner,
    modeling_error,
    normal_part,
    random_point,
    random_tangent,
    tangent_project,
    truncated_svd,
    weingarten,
)
from .retractions import RetractionKind, SingularCoreError, inverse_retract_orth, retract

__version__ = "0.1.0"

__all__ = [
    "Dims",
    "FixedRankPoint",
    "TangentVector",
    "LowRankSum",
    "RankDeficiencyError",
    "SingularCoreError",
    "RetractionKind",
    "StepperKind",
    "VectorField",
    "Trajectory",
    "JetData",
    "HermiteData",
    "HermiteError",
    "embed",
    "embed_tangent",
    "tangent_project",
    "normal_part",
    "truncated_svd",
    "inner",
    "weingarten",
    "modeling_error",
    "random_point",
    "random_tangent",
    "retract",
    "inverse_retract_orth",
    "retraction_curve",
    "hermite_eval",
    "euclidean_hermite_eval",
    "projected_field",
    "dlra_acceleration",
    "step",
    "integrate",
    "reference_ambient_solve",
]
