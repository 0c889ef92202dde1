"""Cell adjacency graph with the feature vectors consumed by the scorer.

The graph is directed with bidirectional edges: every portal appears as two
directed edges carrying identical (symmetric) features. All length-valued
features are normalised by the workspace diagonal (areas by its square,
volumes by its cube) so one trained model serves any map scale; coordinates
are offsets from the workspace minimum corner over the diagonal.

Feature packings are versioned; the scorer refuses weight files built for a
different packing.

FEATURE_VERSION_2D ("2d-v1"), node (d_n=11):
    area, cx, cy, d(z,qs), d(z,qg), d_perp(z,sg), aspect,
    is_start, is_goal, n_neighbors, clearance
edge (d_e=9):
    length, mx, my, d(m,qs), d(m,qg), d_perp(m,sg), angle_vs_sg,
    centroid_dist, clearance

FEATURE_VERSION_3D ("3d-v1"), node (d_n=14):
    volume, cx, cy, cz, d(z,qs), d(z,qg), d_perp(z,sg), aspect,
    is_start, is_goal, n_neighbors, clearance, min_extent, max_extent
edge (d_e=13):
    face_area, mx, my, mz, d(m,qs), d(m,qg), d_perp(m,sg), centroid_dist,
    clearance, normal_is_x, normal_is_y, normal_is_z, min_face_dim
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geom
from .decomp2d import Triangulation, locate_cell
from .decomp3d import SlabDecomposition, extract_portals, locate_cell_3d
from .errors import GoalInObstacle, PointInObstacle, StartInObstacle

FEATURE_VERSION_2D = "2d-v1"
FEATURE_VERSION_3D = "3d-v1"
NODE_DIM_2D, EDGE_DIM_2D = 11, 9
NODE_DIM_3D, EDGE_DIM_3D = 14, 13


@dataclass
class Cell:
    id: int
    centroid: tuple
    measure: float          # area (2D) or volume (3D)
    aspect: float
    clearance: float
    n_neighbors: int = 0
    ref: object = None      # triangle index (2D) or Box3 (3D)


@dataclass
class Portal:
    id: int
    cells: tuple            # (i, j), i < j
    midpoint: tuple
    size: float             # segment length (2D) or face area (3D)
    clearance: float
    score: float = 0.0      # in [0, 1]; 0 recovers the unguided planner
    segment: tuple = None   # 2D: (a, b) with a < b lexicographically
    face: object = None     # 3D: decomp3d.PortalFace


@dataclass
class CellGraph:
    dim: int
    cells: list[Cell]
    portals: list[Portal]
    adjacency: list[list[tuple[int, int]]]   # per cell: (neighbor, portal_id)
    node_features: np.ndarray                 # (n, d_n)
    edge_features: np.ndarray                 # (m, d_e), one row per portal
    start_cell: int
    goal_cell: int
    q_s: tuple
    q_g: tuple
    diagonal: float
    feature_version: str
    source: object = None                     # Triangulation | SlabDecomposition
    tri_to_cell: dict = field(default_factory=dict)

    @property
    def n_cells(self):
        return len(self.cells)

    def directed_edges(self):
        """Each portal as two directed (u, v, portal_id) edges."""
        out = []
        for p in self.portals:
            i, j = p.cells
            out.append((i, j, p.id))
            out.append((j, i, p.id))
        return out

    def portal_between(self, i, j):
        key = (min(i, j), max(i, j))
        return self._pair_index.get(key)

    def __post_init__(self):
        self._pair_index = {p.cells: p.id for p in self.portals}

    def centroid_distance(self, i, j):
        return math.dist(self.cells[i].centroid, self.cells[j].centroid)


def _perp_distance(points, qs, qg):
    """Distance of each point to the line through qs-qg (to qs if degenerate)."""
    qs = np.asarray(qs, dtype=float)
    qg = np.asarray(qg, dtype=float)
    d = qg - qs
    nrm = np.linalg.norm(d)
    if nrm == 0.0:
        return np.linalg.norm(points - qs, axis=1)
    rel = points - qs
    proj = (rel @ d)[:, None] * d[None, :] / (nrm * nrm)
    return np.linalg.norm(rel - proj, axis=1)


# ---------------------------------------------------------------------------
# 2D
# ---------------------------------------------------------------------------

def _wall_segments_2d(tri: Triangulation):
    """Obstacle and workspace-boundary edges as segment endpoint arrays."""
    a, b = [], []
    seen = set()
    for t in range(len(tri.tris)):
        vs = tri.tris[t]
        for e in range(3):
            if tri.neighbors[t][e] == -1 or tri.constrained[t][e]:
                u, w = vs[(e + 1) % 3], vs[(e + 2) % 3]
                key = (min(u, w), max(u, w))
                if key in seen:
                    continue
                seen.add(key)
                a.append(tri.verts[u])
                b.append(tri.verts[w])
    return np.asarray(a, dtype=float), np.asarray(b, dtype=float)


def build_graph_2d(tri: Triangulation, q_s, q_g) -> CellGraph:
    x0, y0, x1, y1 = tri.bounds
    diag = math.hypot(x1 - x0, y1 - y0)
    try:
        start_tri = locate_cell(tri, q_s)
    except PointInObstacle as exc:
        raise StartInObstacle(str(exc)) from exc
    try:
        goal_tri = locate_cell(tri, q_g)
    except PointInObstacle as exc:
        raise GoalInObstacle(str(exc)) from exc

    free = tri.free_indices()
    tri_to_cell = {t: i for i, t in enumerate(free)}
    n = len(free)

    pts = np.asarray(tri.verts, dtype=float)
    tv = np.asarray([tri.tris[t] for t in free])
    pa, pb, pc = pts[tv[:, 0]], pts[tv[:, 1]], pts[tv[:, 2]]
    centroids = (pa + pb + pc) / 3.0
    areas = 0.5 * np.abs((pb[:, 0] - pa[:, 0]) * (pc[:, 1] - pa[:, 1])
                         - (pb[:, 1] - pa[:, 1]) * (pc[:, 0] - pa[:, 0]))
    e_ab = np.linalg.norm(pb - pa, axis=1)
    e_bc = np.linalg.norm(pc - pb, axis=1)
    e_ca = np.linalg.norm(pa - pc, axis=1)
    e_max = np.maximum(np.maximum(e_ab, e_bc), e_ca)
    e_min = np.minimum(np.minimum(e_ab, e_bc), e_ca)
    aspect = e_max / np.maximum(e_min, 1e-300)

    wall_a, wall_b = _wall_segments_2d(tri)
    clearance = geom.points_to_segments_distance(centroids, wall_a, wall_b)

    # portals: edges shared by two free triangles
    portals = []
    adjacency = [[] for _ in range(n)]
    for t in free:
        for e in range(3):
            nb = tri.neighbors[t][e]
            if nb < 0 or nb < t or not tri.free[nb] or tri.constrained[t][e]:
                continue
            u, w = tri.tris[t][(e + 1) % 3], tri.tris[t][(e + 2) % 3]
            a, b = sorted((tri.verts[u], tri.verts[w]))
            ci, cj = tri_to_cell[t], tri_to_cell[nb]
            i, j = min(ci, cj), max(ci, cj)
            pid = len(portals)
            mid = (0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]))
            portals.append(Portal(
                id=pid, cells=(i, j), midpoint=mid,
                size=math.dist(a, b), clearance=0.0, segment=(a, b)))
            adjacency[i].append((j, pid))
            adjacency[j].append((i, pid))
    for row in adjacency:
        row.sort()

    cells = []
    for i, t in enumerate(free):
        cells.append(Cell(
            id=i, centroid=tuple(centroids[i]), measure=float(areas[i]),
            aspect=float(aspect[i]), clearance=float(clearance[i]),
            n_neighbors=len(adjacency[i]), ref=t))

    q_s = tuple(map(float, q_s))
    q_g = tuple(map(float, q_g))
    lo = np.array([x0, y0])
    X = np.zeros((n, NODE_DIM_2D))
    X[:, 0] = areas / diag ** 2
    X[:, 1:3] = (centroids - lo) / diag
    X[:, 3] = np.linalg.norm(centroids - q_s, axis=1) / diag
    X[:, 4] = np.linalg.norm(centroids - q_g, axis=1) / diag
    X[:, 5] = _perp_distance(centroids, q_s, q_g) / diag
    X[:, 6] = aspect
    X[tri_to_cell[start_tri], 7] = 1.0
    X[tri_to_cell[goal_tri], 8] = 1.0
    X[:, 9] = [c.n_neighbors for c in cells]
    X[:, 10] = clearance / diag

    m = len(portals)
    E = np.zeros((m, EDGE_DIM_2D))
    if m:
        mids = np.asarray([p.midpoint for p in portals])
        p_clear = geom.points_to_segments_distance(mids, wall_a, wall_b)
        sg_angle = math.atan2(q_g[1] - q_s[1], q_g[0] - q_s[0])
        for k, p in enumerate(portals):
            p.clearance = float(p_clear[k])
            a, b = p.segment
            theta = math.atan2(b[1] - a[1], b[0] - a[0]) - sg_angle
            theta = math.remainder(theta, 2.0 * math.pi)
            i, j = p.cells
            E[k, 0] = p.size / diag
            E[k, 1:3] = (mids[k] - lo) / diag
            E[k, 3] = math.dist(p.midpoint, q_s) / diag
            E[k, 4] = math.dist(p.midpoint, q_g) / diag
            E[k, 5] = _perp_distance(mids[k:k + 1], q_s, q_g)[0] / diag
            E[k, 6] = theta
            E[k, 7] = math.dist(cells[i].centroid, cells[j].centroid) / diag
            E[k, 8] = p.clearance / diag

    return CellGraph(
        dim=2, cells=cells, portals=portals, adjacency=adjacency,
        node_features=X, edge_features=E,
        start_cell=tri_to_cell[start_tri], goal_cell=tri_to_cell[goal_tri],
        q_s=q_s, q_g=q_g, diagonal=diag,
        feature_version=FEATURE_VERSION_2D, source=tri,
        tri_to_cell=tri_to_cell)


# ---------------------------------------------------------------------------
# 3D
# ---------------------------------------------------------------------------

def _clearance_3d(points, d: SlabDecomposition):
    lo_b, hi_b = d.bounds.lo, d.bounds.hi
    out = np.empty(len(points))
    for i, p in enumerate(points):
        best = min(min(x - l, h - x) for x, l, h in zip(p, lo_b, hi_b))
        for olo, ohi in (d.obstacles or []):
            best = min(best, geom.point_aabb_surface_distance(p, olo, ohi))
        out[i] = best
    return out


def build_graph_3d(d: SlabDecomposition, q_s, q_g) -> CellGraph:
    diag = math.dist(d.bounds.lo, d.bounds.hi)
    try:
        start_cell = locate_cell_3d(d, q_s)
    except PointInObstacle as exc:
        raise StartInObstacle(str(exc)) from exc
    try:
        goal_cell = locate_cell_3d(d, q_g)
    except PointInObstacle as exc:
        raise GoalInObstacle(str(exc)) from exc

    n = len(d.cells)
    centroids = np.asarray([c.center() for c in d.cells])
    extents = np.asarray([c.extents() for c in d.cells])
    volumes = extents.prod(axis=1)
    ext_min = extents.min(axis=1)
    ext_max = extents.max(axis=1)
    aspect = ext_max / np.maximum(ext_min, 1e-300)
    clearance = _clearance_3d(centroids, d)

    faces = extract_portals(d)
    portals = []
    adjacency = [[] for _ in range(n)]
    for f in faces:
        pid = len(portals)
        i, j = f.cells
        portals.append(Portal(
            id=pid, cells=(i, j), midpoint=f.midpoint(), size=f.area,
            clearance=0.0, face=f))
        adjacency[i].append((j, pid))
        adjacency[j].append((i, pid))
    for row in adjacency:
        row.sort()

    cells = []
    for i, box in enumerate(d.cells):
        cells.append(Cell(
            id=i, centroid=tuple(centroids[i]), measure=float(volumes[i]),
            aspect=float(aspect[i]), clearance=float(clearance[i]),
            n_neighbors=len(adjacency[i]), ref=box))

    q_s = tuple(map(float, q_s))
    q_g = tuple(map(float, q_g))
    lo = np.asarray(d.bounds.lo)
    X = np.zeros((n, NODE_DIM_3D))
    X[:, 0] = volumes / diag ** 3
    X[:, 1:4] = (centroids - lo) / diag
    X[:, 4] = np.linalg.norm(centroids - q_s, axis=1) / diag
    X[:, 5] = np.linalg.norm(centroids - q_g, axis=1) / diag
    X[:, 6] = _perp_distance(centroids, q_s, q_g) / diag
    X[:, 7] = aspect
    X[start_cell, 8] = 1.0
    X[goal_cell, 9] = 1.0
    X[:, 10] = [c.n_neighbors for c in cells]
    X[:, 11] = clearance / diag
    X[:, 12] = ext_min / diag
    X[:, 13] = ext_max / diag

    m = len(portals)
    E = np.zeros((m, EDGE_DIM_3D))
    if m:
        mids = np.asarray([p.midpoint for p in portals])
        p_clear = _clearance_3d(mids, d)
        for k, p in enumerate(portals):
            p.clearance = float(p_clear[k])
            f = p.face
            i, j = p.cells
            dims = (f.u_range[1] - f.u_range[0], f.v_range[1] - f.v_range[0])
            E[k, 0] = p.size / diag ** 2
            E[k, 1:4] = (mids[k] - lo) / diag
            E[k, 4] = math.dist(p.midpoint, q_s) / diag
            E[k, 5] = math.dist(p.midpoint, q_g) / diag
            E[k, 6] = _perp_distance(mids[k:k + 1], q_s, q_g)[0] / diag
            E[k, 7] = math.dist(cells[i].centroid, cells[j].centroid) / diag
            E[k, 8] = p.clearance / diag
            E[k, 9 + f.axis] = 1.0
            E[k, 12] = min(dims) / diag

    return CellGraph(
        dim=3, cells=cells, portals=portals, adjacency=adjacency,
        node_features=X, edge_features=E,
        start_cell=start_cell, goal_cell=goal_cell,
        q_s=q_s, q_g=q_g, diagonal=diag,
        feature_version=FEATURE_VERSION_3D, source=d)


def build_graph(decomposition, q_s, q_g) -> CellGraph:
    if isinstance(decomposition, Triangulation):
        return build_graph_2d(decomposition, q_s, q_g)
    if isinstance(decomposition, SlabDecomposition):
        return build_graph_3d(decomposition, q_s, q_g)
    raise TypeError(f"unsupported decomposition {type(decomposition)!r}")


# ---------------------------------------------------------------------------
# export (trainer wire format)
# ---------------------------------------------------------------------------

def graph_to_dict(g: CellGraph):
    return {
        "schema_version": 1,
        "dim": g.dim,
        "feature_packing": g.feature_version,
        "diagonal": g.diagonal,
        "query": {"start": list(g.q_s), "goal": list(g.q_g)},
        "start_cell": g.start_cell,
        "goal_cell": g.goal_cell,
        "num_cells": g.n_cells,
        "node_features": g.node_features.tolist(),
        "portals": [
            {
                "id": p.id,
                "cells": list(p.cells),
                "features": g.edge_features[p.id].tolist(),
                "midpoint": list(p.midpoint),
                "size": p.size,
            }
            for p in g.portals
        ],
    }
