"""Discrete Willmore energy toolkit for triangle meshes with boundary.

Computes mean curvature, Willmore energy, and conormal data on oriented
triangle meshes; evaluates the area-ratio monotonicity diagnostics with
boundary remainder; generates analytic competitor surfaces for a coaxial
circle pair; minimizes the energy under Navier or clamped boundary
conditions; and exposes shape-fit and Hausdorff metrics plus a CLI
experiment runner.
"""

from . import errors
from .errors import (
    WblError,
    NonManifoldEdge,
    InconsistentOrientation,
    DegenerateFace,
    ZeroMixedArea,
    NoBoundary,
    FieldLengthMismatch,
    InvalidConfig,
    NoCatenoid,
    NonpositiveRadius,
    BasePointOnBoundary,
    BasePointOffSurface,
    Disconnected,
    EmptySample,
    DegenerateSample,
    BoundaryMismatch,
    LineSearchFailed,
    ConfigParse,
)
from .mesh import (
    TriMesh,
    BoundaryLoop,
    VertexField,
    build_mesh,
    boundary_loops,
    read_obj,
    write_obj,
)
from .curvature import (
    BoundaryData,
    mean_curvature_vectors,
    willmore_energy,
    conormal_field,
    gauss_bonnet_residual,
    second_form_norm_sq,
    first_variation_residual,
)
from .analytic import (
    BoundaryConfig,
    CatenoidSolution,
    MeshRecipe,
    truncated_sphere_energy,
    truncated_sphere_band_energy,
    truncated_sphere_mesh,
    catenoid_critical_height,
    solve_catenoid,
    catenoid_mesh,
    cylinder_mesh,
    icosphere,
    flat_disk,
    gamma_Rh_samples,
)
from .monotonicity import (
    MonotoneQuantity,
    MonotoneProfile,
    ball_area,
    monotone_quantity,
    monotone_profile,
    density_at,
    annulus_defect_integral,
    boundary_inverse_square_integral,
    lemma21_residual,
    lower_bound_gap,
)
from .metrics import (
    PointSample,
    ShapeFit,
    RescaleReport,
    hausdorff_distance,
    connected_components,
    sphere_fit,
    plane_fit,
    rescale_diagnostics,
)
from .optimizer import (
    BoundaryCondition,
    FlowConfig,
    FlowTrace,
    objective,
    conormal_deviation,
    objective_gradient,
    minimize,
)

__version__ = "0.1.0"
