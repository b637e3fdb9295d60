"""
Bounding volume hierarchy over mesh triangles, stored as flat arrays.

Queries run a whole batch of points through the tree at once: each stack
entry carries the subset of points that still need that node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import TriMesh
from .distance import box_sqdist, point_triangle_sqdist, ray_crossings

LEAF_SIZE = 8
# keeps the (points x triangles) temporaries of one leaf visit small
_PAIR_BUDGET = 1 << 18


@dataclass(frozen=True)
class TriBvh:
    node_min: np.ndarray
    node_max: np.ndarray
    left: np.ndarray  # -1 marks a leaf
    right: np.ndarray
    start: np.ndarray  # leaf range into `order`
    count: np.ndarray
    order: np.ndarray  # triangle index permutation
    corners: tuple[np.ndarray, np.ndarray, np.ndarray]  # a, b, c in `order`

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    def is_leaf(self, node: int) -> bool:
        return self.left[node] < 0

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.left < 0)

    def leaf_triangles(self, node: int) -> np.ndarray:
        s = self.start[node]
        return self.order[s : s + self.count[node]]


def build_bvh(mesh: TriMesh, leaf_size: int = LEAF_SIZE) -> TriBvh:
    a, b, c = mesh.corners()
    tri_min = np.minimum(np.minimum(a, b), c)
    tri_max = np.maximum(np.maximum(a, b), c)
    centroid = (a + b + c) / 3.0

    order = np.arange(mesh.n_triangles, dtype=np.int64)
    node_min, node_max, left, right, start, count = [], [], [], [], [], []

    def new_node(s: int, e: int) -> int:
        idx = order[s:e]
        node_min.append(tri_min[idx].min(axis=0))
        node_max.append(tri_max[idx].max(axis=0))
        left.append(-1)
        right.append(-1)
        start.append(s)
        count.append(e - s)
        return len(left) - 1

    stack = [(new_node(0, len(order)), 0, len(order))]
    while stack:
        node, s, e = stack.pop()
        if e - s <= leaf_size:
            continue
        cent = centroid[order[s:e]]
        spread = cent.max(axis=0) - cent.min(axis=0)
        axis = int(np.argmax(spread))
        if spread[axis] <= 0.0:
            continue
        order[s:e] = order[s:e][np.argsort(cent[:, axis], kind="stable")]
        mid = (s + e) // 2
        lhs = new_node(s, mid)
        rhs = new_node(mid, e)
        left[node], right[node] = lhs, rhs
        stack.append((rhs, mid, e))
        stack.append((lhs, s, mid))

    return TriBvh(
        node_min=np.asarray(node_min),
        node_max=np.asarray(node_max),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        start=np.asarray(start, dtype=np.int64),
        count=np.asarray(count, dtype=np.int64),
        order=order,
        corners=(a[order], b[order], c[order]),
    )


def _chunks(n_points: int, n_tris: int):
    step = max(1, _PAIR_BUDGET // max(n_tris, 1))
    for s in range(0, n_points, step):
        yield s, min(s + step, n_points)


def nearest_sqdist(bvh: TriBvh, points: np.ndarray) -> np.ndarray:
    """Exact squared distance from every point to its nearest triangle."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    best = np.full(len(points), np.inf)
    A, B, C = bvh.corners

    stack = [(0, np.arange(len(points)))]
    while stack:
        node, idx = stack.pop()
        near = box_sqdist(points[idx], bvh.node_min[node], bvh.node_max[node])
        idx = idx[near < best[idx]]
        if len(idx) == 0:
            continue

        if bvh.left[node] < 0:
            s = bvh.start[node]
            e = s + bvh.count[node]
            a, b, c = A[None, s:e], B[None, s:e], C[None, s:e]
            for lo, hi in _chunks(len(idx), e - s):
                sub = idx[lo:hi]
                d = point_triangle_sqdist(points[sub, None, :], a, b, c).min(axis=1)
                best[sub] = np.minimum(best[sub], d)
            continue

        lhs, rhs = bvh.left[node], bvh.right[node]
        d_l = box_sqdist(points[idx], bvh.node_min[lhs], bvh.node_max[lhs])
        d_r = box_sqdist(points[idx], bvh.node_min[rhs], bvh.node_max[rhs])
        left_first = d_l <= d_r
        # LIFO: each subset pops its nearer child first
        for child, subset in (
            (rhs, idx[left_first]),
            (lhs, idx[~left_first]),
            (lhs, idx[left_first]),
            (rhs, idx[~left_first]),
        ):
            if len(subset):
                stack.append((child, subset))
    return best


def ray_parity(bvh: TriBvh, origins: np.ndarray, axis: int) -> np.ndarray:
    """Number of triangles crossed by the ray from each origin along +axis."""
    origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    counts = np.zeros(len(origins), dtype=np.int64)
    A, B, C = bvh.corners
    u = (axis + 1) % 3
    v = (axis + 2) % 3

    stack = [(0, np.arange(len(origins)))]
    while stack:
        node, idx = stack.pop()
        q = origins[idx]
        lo, hi = bvh.node_min[node], bvh.node_max[node]
        reach = (
            (q[:, u] >= lo[u])
            & (q[:, u] <= hi[u])
            & (q[:, v] >= lo[v])
            & (q[:, v] <= hi[v])
            & (q[:, axis] < hi[axis])
        )
        idx = idx[reach]
        if len(idx) == 0:
            continue
        if bvh.left[node] < 0:
            s = bvh.start[node]
            e = s + bvh.count[node]
            a, b, c = A[None, s:e], B[None, s:e], C[None, s:e]
            for lo_i, hi_i in _chunks(len(idx), e - s):
                sub = idx[lo_i:hi_i]
                counts[sub] += ray_crossings(origins[sub, None, :], a, b, c, axis).sum(axis=1)
            continue
        stack.append((bvh.right[node], idx))
        stack.append((bvh.left[node], idx))
    return counts
