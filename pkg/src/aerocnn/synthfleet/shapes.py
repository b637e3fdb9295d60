"""
Parameterized car-like body and its pseudo-drag label.

The body is a side profile in the XZ plane (front at -x, ground at z = 0)
extruded along Y through four layers. The two outer layers carry the profile
inset by half the chamfer, which bevels every side edge; the profile's own
corners are chamfered directly. The bottom edge holds one extra vertex under
the roof so each cap is a single fan.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from ..geometry import TriMesh

# (lo, hi); angles in degrees, lengths in meters
RANGES = {
    "length": (3.8, 5.2),
    "width": (1.7, 2.0),
    "height": (1.4, 1.8),
    "windshield_angle": (25.0, 40.0),
    "rear_slant": (10.0, 40.0),
    "boot": (0.2, 0.8),
    "clearance": (0.12, 0.25),
    "chamfer": (0.02, 0.15),
}

HOOD_HEIGHT = 0.6  # of body height
HOOD_LENGTH = 0.18  # of body length
SLANT_LENGTH = 0.15  # of body length


class InfeasibleShapeError(ValueError):
    pass


@dataclass(frozen=True)
class ShapeParams:
    length: float = 4.5
    width: float = 1.8
    height: float = 1.5
    windshield_angle: float = 32.0
    rear_slant: float = 25.0
    boot: float = 0.5
    clearance: float = 0.15
    chamfer: float = 0.05

    def __post_init__(self):
        for f in fields(self):
            value = float(getattr(self, f.name))
            lo, hi = RANGES[f.name]
            if not lo <= value <= hi:
                raise ValueError(f"{f.name} = {value} outside [{lo}, {hi}]")
            object.__setattr__(self, f.name, value)

    def to_dict(self) -> dict:
        return asdict(self)


def hat(theta: float) -> float:
    """Slant response: rises to 1 at 30 degrees, falls back to 0 at 60."""
    return theta / 30.0 if theta <= 30.0 else (60.0 - theta) / 30.0


def drag_formula(width, height, rear_slant, chamfer, clearance) -> float:
    """Label formula without range checks."""
    frontal = width * (height - clearance) / (1.9 * 1.5)
    return (
        0.18
        + 0.08 * (frontal - 1.0)
        + 0.05 * hat(rear_slant)
        + 0.03 * (0.15 - chamfer) / 0.13
        + 0.02 * (clearance - 0.12) / 0.13
    )


def pseudo_drag(p: ShapeParams) -> float:
    if not isinstance(p, ShapeParams):
        p = ShapeParams(**p)
    return drag_formula(p.width, p.height, p.rear_slant, p.chamfer, p.clearance)


def side_profile(p: ShapeParams) -> np.ndarray:
    """Counter-clockwise (x right, z up) profile; index 1 is the fan apex on the bottom edge."""
    x0, x1 = -p.length / 2, p.length / 2
    g, top, c = p.clearance, p.clearance + p.height, p.chamfer
    z_hood = g + HOOD_HEIGHT * p.height
    x_hood = x0 + HOOD_LENGTH * p.length
    x_roof_front = x_hood + (top - z_hood) / math.tan(math.radians(p.windshield_angle))
    slant = SLANT_LENGTH * p.length
    z_deck = top - slant * math.tan(math.radians(p.rear_slant))
    x_deck = x1 - p.boot
    x_roof_rear = x_deck - slant

    if x_roof_rear - x_roof_front <= 0:
        raise InfeasibleShapeError(
            f"no roof left: hood, windshield, slant and boot need more than length {p.length}"
        )
    if p.boot <= c:
        raise InfeasibleShapeError(f"boot {p.boot} not longer than chamfer {c}")
    if z_deck - c <= g + c:
        raise InfeasibleShapeError("rear slant drops the deck into the bottom chamfer")

    apex = 0.5 * (x_roof_front + x_roof_rear)
    return np.array(
        [
            (x0 + c, g),
            (apex, g),
            (x1 - c, g),
            (x1, g + c),
            (x1, z_deck - c),
            (x1 - c, z_deck),
            (x_deck, z_deck),
            (x_roof_rear, top),
            (x_roof_front, top),
            (x_hood, z_hood),
            (x0 + c, z_hood),
            (x0, z_hood - c),
            (x0, g + c),
        ],
        dtype=np.float64,
    )


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def inset_profile(profile: np.ndarray, d: float) -> np.ndarray:
    """Offset every edge of a counter-clockwise polygon inward by d (mitered corners)."""
    prev_edges = profile - np.roll(profile, 1, axis=0)
    next_edges = np.roll(profile, -1, axis=0) - profile
    out = np.empty_like(profile)
    for i, (v, e1, e2) in enumerate(zip(profile, prev_edges, next_edges)):
        n1 = np.array([-e1[1], e1[0]]) / np.linalg.norm(e1)
        n2 = np.array([-e2[1], e2[0]]) / np.linalg.norm(e2)
        if abs(_cross2(e1, e2)) <= 1e-12 * np.linalg.norm(e1) * np.linalg.norm(e2):
            out[i] = v + d * n1
        else:
            out[i] = v + d * (n1 + n2) / (1.0 + n1 @ n2)

    new_edges = np.roll(out, -1, axis=0) - out
    if np.any(np.sum(new_edges * next_edges, axis=1) <= 0):
        raise InfeasibleShapeError(f"chamfer {2 * d} collapses an edge of the side profile")
    return out


def _fan(profile: np.ndarray) -> list[tuple[int, int, int]]:
    chain = list(range(2, len(profile))) + [0]
    tris = [(1, b, c) for b, c in zip(chain[:-1], chain[1:])]
    for a, b, c in tris:
        if _cross2(profile[b] - profile[a], profile[c] - profile[a]) <= 0:
            raise InfeasibleShapeError("side profile is not visible from its fan apex")
    return tris


def build_shape_mesh(p: ShapeParams, name: str = "car") -> TriMesh:
    profile = side_profile(p)
    inset = inset_profile(profile, p.chamfer / 2)
    n = len(profile)
    half, c = p.width / 2, p.chamfer
    layers = [(inset, -half), (profile, -half + c / 2), (profile, half - c / 2), (inset, half)]

    vertices = np.concatenate(
        [np.column_stack([poly[:, 0], np.full(n, y), poly[:, 1]]) for poly, y in layers]
    )

    triangles = []
    for k in range(len(layers) - 1):
        for i in range(n):
            j = (i + 1) % n
            a, b = k * n + i, k * n + j
            cc, d = (k + 1) * n + j, (k + 1) * n + i
            triangles += [(a, cc, b), (a, d, cc)]

    fan_near = _fan(inset)
    last = (len(layers) - 1) * n
    triangles += fan_near
    triangles += [(last + a, last + c_, last + b) for a, b, c_ in fan_near]
    return TriMesh(vertices, np.asarray(triangles, dtype=np.int64), name)
