from .bvh import TriBvh, build_bvh
from .sdf import (
    OracleGuardError,
    SdfGrid,
    generate_sdf,
    inside_mask,
    inside_test,
    sdf_oracle,
    unsigned_distance,
    unsigned_distances,
)
from .vsdf import VsdfFormatError, read_vsdf, write_vsdf

__all__ = [
    "OracleGuardError",
    "SdfGrid",
    "TriBvh",
    "VsdfFormatError",
    "build_bvh",
    "generate_sdf",
    "inside_mask",
    "inside_test",
    "read_vsdf",
    "sdf_oracle",
    "unsigned_distance",
    "unsigned_distances",
    "write_vsdf",
]
