"""Camera view selection with worst-case triangulation guarantees."""

from .exceptions import (
    BoundViolation,
    CollinearConfiguration,
    DegenerateConfiguration,
    EmptyIntersection,
    GeometryError,
    NearParallelRays,
    NoProgress,
    NoVisibleCameras,
    ParseError,
    SingularSystem,
    UnboundedIntersection,
)
from .geometry import (
    Cone3,
    ConvexPolygon2,
    HalfPlane2,
    Wedge2,
    cone_slice_length,
    diag_lengths,
    edge_lengths,
    intersect_halfplanes,
    intersect_wedges,
    label_quadrilateral,
    polygon_diameter,
)
from .uncertainty import (
    PairConfig,
    WorstCase2D,
    admissible_orientations,
    eps2_upper_bound,
    eps_inf_bracket,
    optimal_baseline,
    optimal_diag1,
    optimal_pair_config,
    ratio_bound,
    third_camera_segment,
    worst_case_pair,
    worst_case_pair_3d,
)
from .grid import (
    CameraGrid,
    CertificationReport,
    Perturbation,
    angle_sum,
    build_grid,
    certify_grid_bound,
    grid_uncertainty,
    optimal_pair,
    worst_in_cell,
)
from .mesh import CameraTrajectory, TriangleMesh, read_obj, read_trajectory
from .multires import (
    Selection,
    VisibilityCone,
    coverage_report,
    grid_subsample,
    in_cone,
    select_views,
    visibility_cone,
    visible_cameras,
)
from .montecarlo import (
    CameraModel,
    NoiseSpec,
    SimGeometry,
    SimSummary,
    pixel_to_alpha,
    ratio_two_vs_all,
    run_simulation,
    triangulate_all,
    triangulate_pair,
)

__version__ = "0.1.0"
