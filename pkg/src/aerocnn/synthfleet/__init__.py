from .fleet import (
    DEFAULT_PROJECTS,
    DEFAULT_STEPS,
    Fleet,
    FleetSample,
    FleetSpec,
    GroupSpread,
    InfeasibleFleetError,
    ProjectSpec,
    generate_fleet,
    group_spread,
    load_fleet_spec,
    project_means,
    write_fleet,
)
from .shapes import (
    RANGES,
    InfeasibleShapeError,
    ShapeParams,
    build_shape_mesh,
    drag_formula,
    hat,
    inset_profile,
    pseudo_drag,
    side_profile,
)

__all__ = [
    "DEFAULT_PROJECTS",
    "DEFAULT_STEPS",
    "Fleet",
    "FleetSample",
    "FleetSpec",
    "GroupSpread",
    "InfeasibleFleetError",
    "InfeasibleShapeError",
    "ProjectSpec",
    "RANGES",
    "ShapeParams",
    "build_shape_mesh",
    "drag_formula",
    "generate_fleet",
    "group_spread",
    "hat",
    "inset_profile",
    "load_fleet_spec",
    "project_means",
    "pseudo_drag",
    "side_profile",
    "write_fleet",
]
