"""svtune: structured controller tuning by singular value optimization.

Pole placement for parametric linear systems: minimize the largest
singular value of the closed-loop transfer matrix along a movable curve in
the complex plane, shifting nearby poles away from the curve, and walk the
curve until every pole sits in the target region.  Ships a power-system
model builder as the flagship application.
"""

__version__ = "0.1.0"

from .curves import ParametricCurve, VerticalLine, curve_distance
from .errors import (
    BoundsViolationError,
    EliminationError,
    EvaluationError,
    GammaSampleError,
    ModelFormatError,
    NearSingularError,
    NumericalError,
    PowerFlowError,
    SetupError,
    ShapeError,
    SvtuneError,
)
from .spectral import (
    GammaValue,
    Sample,
    SampleSet,
    build_sample_set,
    default_anchor_band,
    gamma_of,
    sigma_max,
)
from .subproblem import (
    ConvexSubproblem,
    SubproblemSolution,
    embed_min_eig,
    schur_embed,
    solve_subproblem,
)
from .systems import (
    LinearizedResponse,
    ParameterVector,
    ParametricStateSpace,
    PoleLocalModel,
    PoleSet,
    StepPolicy,
    TransferSample,
    compute_poles,
    eval_state_space,
    fit_pole_local_model,
    frequency_response,
    from_matrices,
    linearize_response,
    linearize_responses,
)
from .tuner import (
    Alg1Config,
    StabilizeConfig,
    TuningReport,
    detect_crossing,
    minimize_gamma,
    select_delta,
    stabilize,
)
from .pk_baseline import PKConfig, PKState, pk_baseline_step, pk_stabilize

__all__ = [
    "__version__",
    "VerticalLine",
    "ParametricCurve",
    "curve_distance",
    "sigma_max",
    "Sample",
    "SampleSet",
    "GammaValue",
    "build_sample_set",
    "default_anchor_band",
    "gamma_of",
    "schur_embed",
    "embed_min_eig",
    "ConvexSubproblem",
    "SubproblemSolution",
    "solve_subproblem",
    "ParameterVector",
    "ParametricStateSpace",
    "PoleSet",
    "PoleLocalModel",
    "TransferSample",
    "LinearizedResponse",
    "StepPolicy",
    "eval_state_space",
    "frequency_response",
    "linearize_response",
    "linearize_responses",
    "compute_poles",
    "fit_pole_local_model",
    "from_matrices",
    "Alg1Config",
    "StabilizeConfig",
    "TuningReport",
    "minimize_gamma",
    "stabilize",
    "select_delta",
    "detect_crossing",
    "PKState",
    "PKConfig",
    "pk_baseline_step",
    "pk_stabilize",
    "SvtuneError",
    "BoundsViolationError",
    "EvaluationError",
    "NearSingularError",
    "NumericalError",
    "GammaSampleError",
    "SetupError",
    "ShapeError",
    "PowerFlowError",
    "EliminationError",
    "ModelFormatError",
]
