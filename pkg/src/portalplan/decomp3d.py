"""Slab convex decomposition of a box workspace with AABB obstacles.

Obstacle face coordinates induce an axis-aligned grid; cells whose center
lies inside any obstacle are removed and the remaining cells are greedily
merged into maximal boxes in fixed axis order (x runs, then y stacks, then z
stacks), which is deterministic and reaches the pairwise-merge fixpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyFreeSpace

# Planes closer than this are considered coincident.
PLANE_SNAP = 1e-12
# Face overlaps below this fraction of the workspace face area are slivers.
PORTAL_AREA_FRACTION = 1e-12


@dataclass(frozen=True)
class Box3:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def volume(self):
        return ((self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])
                * (self.hi[2] - self.lo[2]))

    def center(self):
        return tuple(0.5 * (l + h) for l, h in zip(self.lo, self.hi))

    def extents(self):
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    def contains(self, p, tol=0.0):
        return all(l - tol <= x <= h + tol for x, l, h in zip(p, self.lo, self.hi))


@dataclass(frozen=True)
class PortalFace:
    """Shared rectangular face between two cells, normal to one axis."""

    cells: tuple[int, int]          # cell indices, lower first
    axis: int                       # normal axis
    coord: float                    # plane coordinate on the normal axis
    u_range: tuple[float, float]    # extent along the lower remaining axis
    v_range: tuple[float, float]    # extent along the higher remaining axis

    @property
    def area(self):
        return ((self.u_range[1] - self.u_range[0])
                * (self.v_range[1] - self.v_range[0]))

    def midpoint(self):
        mid = [0.0, 0.0, 0.0]
        ua, va = _tangent_axes(self.axis)
        mid[self.axis] = self.coord
        mid[ua] = 0.5 * (self.u_range[0] + self.u_range[1])
        mid[va] = 0.5 * (self.v_range[0] + self.v_range[1])
        return tuple(mid)

    def corner_and_edges(self):
        """Rectangle as (corner, edge_u, edge_v) 3-vectors."""
        ua, va = _tangent_axes(self.axis)
        c0 = [0.0, 0.0, 0.0]
        c0[self.axis] = self.coord
        c0[ua] = self.u_range[0]
        c0[va] = self.v_range[0]
        du = [0.0, 0.0, 0.0]
        du[ua] = self.u_range[1] - self.u_range[0]
        dv = [0.0, 0.0, 0.0]
        dv[va] = self.v_range[1] - self.v_range[0]
        return tuple(c0), tuple(du), tuple(dv)


def _tangent_axes(axis):
    return tuple(a for a in range(3) if a != axis)


@dataclass
class SlabDecomposition:
    cells: list[Box3]
    planes: tuple[np.ndarray, np.ndarray, np.ndarray]
    bounds: Box3
    obstacles: list = None  # clipped input boxes, kept for clearance queries

    def free_volume(self):
        return sum(c.volume() for c in self.cells)


def _dedup_planes(values):
    values = np.sort(np.asarray(values, dtype=float))
    out = [values[0]]
    for v in values[1:]:
        if v - out[-1] > PLANE_SNAP:
            out.append(v)
    return np.asarray(out)


def _clip_obstacles(bounds, obstacles):
    lo_b, hi_b = bounds
    clipped = []
    for lo, hi in obstacles:
        c_lo = tuple(max(l, lb) for l, lb in zip(lo, lo_b))
        c_hi = tuple(min(h, hb) for h, hb in zip(hi, hi_b))
        if all(l < h for l, h in zip(c_lo, c_hi)):
            clipped.append((c_lo, c_hi))
    return clipped


def slab_decompose(bounds, obstacles) -> SlabDecomposition:
    """Decompose box minus obstacle union into merged free boxes.

    bounds: (lo, hi) 3-tuples. obstacles: list of (lo, hi); overlaps allowed
    (union semantics), anything outside bounds is clipped away.
    """
    lo_b, hi_b = tuple(map(float, bounds[0])), tuple(map(float, bounds[1]))
    if not all(l < h for l, h in zip(lo_b, hi_b)):
        raise ValueError(f"invalid bounds {bounds}")
    obstacles = _clip_obstacles((lo_b, hi_b), obstacles)

    planes = []
    for a in range(3):
        coords = [lo_b[a], hi_b[a]]
        for lo, hi in obstacles:
            coords.append(lo[a])
            coords.append(hi[a])
        planes.append(_dedup_planes(coords))
    xs, ys, zs = planes
    nx, ny, nz = len(xs) - 1, len(ys) - 1, len(zs) - 1

    centers = [0.5 * (p[:-1] + p[1:]) for p in planes]
    free = np.ones((nx, ny, nz), dtype=bool)
    for lo, hi in obstacles:
        i0, i1 = np.searchsorted(centers[0], (lo[0], hi[0]))
        j0, j1 = np.searchsorted(centers[1], (lo[1], hi[1]))
        k0, k1 = np.searchsorted(centers[2], (lo[2], hi[2]))
        free[i0:i1, j0:j1, k0:k1] = False
    if not free.any():
        raise EmptyFreeSpace("obstacles cover the entire workspace")

    runs = _merge_runs(free)
    cells = [
        Box3((xs[i0], ys[j0], zs[k0]), (xs[i1], ys[j1], zs[k1]))
        for (i0, i1, j0, j1, k0, k1) in runs
    ]
    return SlabDecomposition(cells=cells, planes=(xs, ys, zs),
                             bounds=Box3(lo_b, hi_b), obstacles=obstacles)


def _merge_runs(free):
    """Greedy maximal merge of free grid cells: x runs, y stacks, z stacks."""
    nx, ny, nz = free.shape
    # x runs per (j, k) column
    cols = free.transpose(1, 2, 0).reshape(ny * nz, nx)
    padded = np.zeros((ny * nz, nx + 1), dtype=bool)
    padded[:, :nx] = cols
    starts = cols & ~np.concatenate(
        [np.zeros((ny * nz, 1), dtype=bool), cols[:, :-1]], axis=1)
    ends = cols & ~padded[:, 1:]
    srow, scol = np.nonzero(starts)
    erow, ecol = np.nonzero(ends)
    # starts/ends appear in identical (row-major) order, so they pair up
    by_jk = {}
    for r, c0, c1 in zip(srow, scol, ecol):
        j, k = divmod(int(r), nz)
        by_jk.setdefault((int(c0), int(c1) + 1, k), []).append((j, j + 1))

    # y stacks: merge runs with identical x-range within each z slice
    by_xz = {}
    for (i0, i1, k), jruns in by_jk.items():
        jruns.sort()
        merged = [list(jruns[0])]
        for j0, j1 in jruns[1:]:
            if j0 == merged[-1][1]:
                merged[-1][1] = j1
            else:
                merged.append([j0, j1])
        for j0, j1 in merged:
            by_xz.setdefault((i0, i1, j0, j1), []).append((k, k + 1))

    # z stacks: merge boxes with identical (x, y) footprint
    out = []
    for (i0, i1, j0, j1), kruns in sorted(by_xz.items()):
        kruns.sort()
        merged = [list(kruns[0])]
        for k0, k1 in kruns[1:]:
            if k0 == merged[-1][1]:
                merged[-1][1] = k1
            else:
                merged.append([k0, k1])
        for k0, k1 in merged:
            out.append((i0, i1, j0, j1, k0, k1))
    out.sort()
    return out


def extract_portals(d: SlabDecomposition) -> list[PortalFace]:
    """All positive-area shared faces between pairs of cells (O(n^2) sweep)."""
    n = len(d.cells)
    if n < 2:
        return []
    lo = np.array([c.lo for c in d.cells])
    hi = np.array([c.hi for c in d.cells])
    ext_b = d.bounds.extents()
    portals = []
    for axis in range(3):
        ua, va = _tangent_axes(axis)
        min_area = PORTAL_AREA_FRACTION * ext_b[ua] * ext_b[va]
        # i's upper face touching j's lower face on this axis
        touch = hi[:, axis][:, None] == lo[:, axis][None, :]
        u0 = np.maximum(lo[:, ua][:, None], lo[:, ua][None, :])
        u1 = np.minimum(hi[:, ua][:, None], hi[:, ua][None, :])
        v0 = np.maximum(lo[:, va][:, None], lo[:, va][None, :])
        v1 = np.minimum(hi[:, va][:, None], hi[:, va][None, :])
        area = np.maximum(u1 - u0, 0.0) * np.maximum(v1 - v0, 0.0)
        ii, jj = np.nonzero(touch & (area > min_area))
        for i, j in zip(ii.tolist(), jj.tolist()):
            if i == j:
                continue
            portals.append(PortalFace(
                cells=(min(i, j), max(i, j)),
                axis=axis,
                coord=float(hi[i, axis]),
                u_range=(float(u0[i, j]), float(u1[i, j])),
                v_range=(float(v0[i, j]), float(v1[i, j])),
            ))
    portals.sort(key=lambda p: (p.cells, p.axis))
    return portals


def locate_cell_3d(d: SlabDecomposition, p) -> int:
    """Lowest index of a free cell containing p (boundary-inclusive)."""
    lo_b, hi_b = d.bounds.lo, d.bounds.hi
    if not all(l <= x <= h for x, l, h in zip(p, lo_b, hi_b)):
        raise ValueError(f"point {p} outside workspace bounds")
    for i, c in enumerate(d.cells):
        if c.contains(p):
            return i
    from .errors import PointInObstacle
    raise PointInObstacle(f"point {p} lies inside an obstacle")
