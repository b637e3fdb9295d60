"""
Vectorized point-triangle kernels shared by the BVH queries and the
exhaustive oracle.

Dot products are spelled out component-wise so every (point, triangle)
pair is evaluated with the same float operations whatever the batch shape.
"""

import numpy as np


def _dot(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] + u[..., 2] * v[..., 2]


def point_triangle_sqdist(p, a, b, c) -> np.ndarray:
    """
    Squared distance from points to triangles (closest-feature regions after
    Ericson, Real-Time Collision Detection 5.1.5).

    All arguments broadcast against each other with a trailing axis of 3,
    e.g. p (P, 1, 3) against a/b/c (1, T, 3) gives a (P, T) result.
    """
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = _dot(ab, ap)
    d2 = _dot(ac, ap)
    bp = p - b
    d3 = _dot(ab, bp)
    d4 = _dot(ac, bp)
    cp = p - c
    d5 = _dot(ab, cp)
    d6 = _dot(ac, cp)

    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    with np.errstate(divide="ignore", invalid="ignore"):
        total = va + vb + vc
        total = np.where(total != 0.0, total, 1.0)
        v_in = (vb / total)[..., None]
        w_in = (vc / total)[..., None]
        closest = a + ab * v_in + ac * w_in

        e43 = d4 - d3
        e56 = d5 - d6
        in_bc = (va <= 0) & (e43 >= 0) & (e56 >= 0)
        w_bc = (e43 / (e43 + e56))[..., None]
        closest = np.where(in_bc[..., None], b + w_bc * (c - b), closest)

        in_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        w_ac = (d2 / (d2 - d6))[..., None]
        closest = np.where(in_ac[..., None], a + w_ac * ac, closest)

        in_c = (d6 >= 0) & (d5 <= d6)
        closest = np.where(in_c[..., None], c, closest)

        in_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        v_ab = (d1 / (d1 - d3))[..., None]
        closest = np.where(in_ab[..., None], a + v_ab * ab, closest)

        in_b = (d3 >= 0) & (d4 <= d3)
        closest = np.where(in_b[..., None], b, closest)

        in_a = (d1 <= 0) & (d2 <= 0)
        closest = np.where(in_a[..., None], a, closest)

    diff = p - closest
    return _dot(diff, diff)


def ray_crossings(q, a, b, c, axis: int) -> np.ndarray:
    """
    Whether the ray from q along +axis crosses each triangle.

    The test projects onto the two other axes, classifies q with edge
    functions (edges inclusive) and interpolates the hit coordinate from the
    barycentric weights. Triangles with zero projected area never count.
    """
    u = (axis + 1) % 3
    v = (axis + 2) % 3
    qu, qv, qa = q[..., u], q[..., v], q[..., axis]

    e_ab = (b[..., u] - a[..., u]) * (qv - a[..., v]) - (b[..., v] - a[..., v]) * (qu - a[..., u])
    e_bc = (c[..., u] - b[..., u]) * (qv - b[..., v]) - (c[..., v] - b[..., v]) * (qu - b[..., u])
    e_ca = (a[..., u] - c[..., u]) * (qv - c[..., v]) - (a[..., v] - c[..., v]) * (qu - c[..., u])
    area = e_ab + e_bc + e_ca

    covered = (area != 0.0) & (
        ((e_ab >= 0) & (e_bc >= 0) & (e_ca >= 0)) | ((e_ab <= 0) & (e_bc <= 0) & (e_ca <= 0))
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.where(area != 0.0, area, 1.0)
        hit = (e_bc * a[..., axis] + e_ca * b[..., axis] + e_ab * c[..., axis]) / safe
    return covered & (hit > qa)


def box_sqdist(points: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    gap = np.maximum(np.maximum(lo - points, points - hi), 0.0)
    return _dot(gap, gap)
