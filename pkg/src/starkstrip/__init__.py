"""Trapped modes and Stark resonances of curved planar waveguides.

A numerical laboratory around one construction: bend a Dirichlet strip so it
traps a mode, tilt an electric field across it, and chase the trapped mode
into the complex plane with an exterior complex deformation of the guide
axis. The subpackages follow the pipeline: geometry -> fields -> distortion
-> discretize -> spectra -> lab.
"""

from .errors import (
    ConfigError,
    CurvatureEvaluationError,
    DiscretizationError,
    FitError,
    GeometryError,
    QuadratureError,
    RegimeError,
    SolverError,
    StarkstripError,
)
from .geometry import (
    CurvatureKind,
    CurvatureModel,
    GeometrySetup,
    HypothesisReport,
    bending_angle,
    bending_angle_table,
    check_hypotheses,
    curvature_eval,
    embed,
    metric_factor,
    total_bend,
)
from .fields import (
    FieldConfig,
    LongitudinalTables,
    ReferenceInteraction,
    Regime,
    cached_total_bend,
    classify_regime,
    curvature_potential,
    reference_constants,
    remainder,
    stark_potential,
)
from .distortion import (
    DistortedCoefficients,
    DistortionField,
    DistortionParams,
    distortion_field,
    nu_region_contains,
    smooth_step,
    smooth_step_derivatives,
)
from .discretize import (
    Grid,
    OperatorKind,
    OperatorMatrix,
    assemble,
    assemble_with_coefficients,
    auto_truncation,
    grid_for,
    transverse_modes,
)
from .spectra import (
    EigenSet,
    PipelineResult,
    PlateauReport,
    ResonanceEstimate,
    ResonanceSelection,
    SectorProbe,
    birman_schwinger_norm,
    bound_states,
    complex_eigs_near,
    count_below,
    grade_plateau,
    resonance_pipeline,
    sector_probe,
    select_resonances,
    theta_plateau,
)

__version__ = "0.1.0"

DEFAULT_MODEL = CurvatureModel.rational(-0.8, 2)
DEFAULT_SETUP = GeometrySetup(DEFAULT_MODEL, d=1.0)
DEFAULT_ETA = 0.3
