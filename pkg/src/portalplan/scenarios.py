"""Parametric generators for benchmark environments and dynamic sequences.

Every generator is deterministic in (family, seed). When a spec requires a
solvable instance the generator verifies start-goal connectivity on the
actual decomposition and retries with a derived seed stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import geom
from .decomp2d import locate_cell, triangulate
from .decomp3d import extract_portals, locate_cell_3d, slab_decompose
from .errors import InvalidSpec, PointInObstacle
from .maps import Map2D, Map3D

FAMILIES_2D = ("forest", "dense_forest", "labyrinth", "dense_labyrinth",
               "bottleneck2d", "multi_room")
FAMILIES_3D = ("bn_office3d", "dense_bn_office3d", "bn_maze3d", "bn_layers3d")
FAMILIES_DYNAMIC = ("dynamic2d",)

_QUERY_INSET = 0.05
_MAX_ATTEMPTS = 60


@dataclass
class ScenarioSpec:
    family: str
    seed: int = 0
    obstacle_count: int | None = None
    door_width: float | None = None
    clutter_count: int | None = None
    start: tuple | None = None
    goal: tuple | None = None
    require_solvable: bool = True
    steps: int = 10  # dynamic sequences only

    def to_dict(self):
        d = asdict(self)
        return {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in d.items() if v is not None}

    @classmethod
    def from_dict(cls, d):
        kwargs = dict(d)
        for key in ("start", "goal"):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(map(float, kwargs[key]))
        known = cls.__dataclass_fields__
        unknown = set(kwargs) - set(known)
        if unknown:
            raise InvalidSpec(f"unknown scenario fields: {sorted(unknown)}")
        return cls(**kwargs)


@dataclass
class DynamicScenario:
    bounds: tuple
    steps: list[Map2D]
    query: tuple  # (q_s, q_g)
    kinds: list[str] = field(default_factory=list)  # static | moving | toggling

    def to_dict(self):
        return {
            "dim": 2,
            "bounds": list(self.bounds),
            "query": {"start": list(self.query[0]), "goal": list(self.query[1])},
            "kinds": self.kinds,
            "steps": [{"obstacles": [{"polygon": [list(v) for v in poly]}
                                     for poly in m.obstacles]}
                      for m in self.steps],
        }

    @classmethod
    def from_dict(cls, d):
        bounds = tuple(map(float, d["bounds"]))
        steps = [Map2D(bounds, [[tuple(map(float, v)) for v in o["polygon"]]
                                for o in s["obstacles"]])
                 for s in d["steps"]]
        q = (tuple(map(float, d["query"]["start"])),
             tuple(map(float, d["query"]["goal"])))
        return cls(bounds=bounds, steps=steps, query=q, kinds=list(d.get("kinds", [])))


def default_query(spec: ScenarioSpec, m):
    """Explicit query from the spec, else opposite corners inset by 5%."""
    if spec.start is not None and spec.goal is not None:
        return tuple(spec.start), tuple(spec.goal)
    if m.dim == 2:
        x0, y0, x1, y1 = m.bounds
        w, h = x1 - x0, y1 - y0
        return ((x0 + _QUERY_INSET * w, y0 + _QUERY_INSET * h),
                (x1 - _QUERY_INSET * w, y1 - _QUERY_INSET * h))
    lo, hi = m.bounds
    ext = [h - l for l, h in zip(lo, hi)]
    return (tuple(l + _QUERY_INSET * e for l, e in zip(lo, ext)),
            tuple(h - _QUERY_INSET * e for h, e in zip(hi, ext)))


# ---------------------------------------------------------------------------
# solvability
# ---------------------------------------------------------------------------

def is_solvable_2d(m: Map2D, qs, qg):
    try:
        tri = triangulate(m.bounds, m.obstacles)
        cs = locate_cell(tri, qs)
        cg = locate_cell(tri, qg)
    except (PointInObstacle, ValueError, Exception) as exc:
        if not isinstance(exc, (PointInObstacle, ValueError)):
            raise
        return False
    seen = {cs}
    stack = [cs]
    while stack:
        t = stack.pop()
        if t == cg:
            return True
        for e in range(3):
            nb = tri.neighbors[t][e]
            if nb >= 0 and tri.free[nb] and not tri.constrained[t][e] and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return cg in seen


def is_solvable_3d(m: Map3D, qs, qg):
    try:
        d = slab_decompose(m.bounds, m.obstacles)
        cs = locate_cell_3d(d, qs)
        cg = locate_cell_3d(d, qg)
    except (PointInObstacle, ValueError):
        return False
    adj = {}
    for p in extract_portals(d):
        i, j = p.cells
        adj.setdefault(i, set()).add(j)
        adj.setdefault(j, set()).add(i)
    seen = {cs}
    stack = [cs]
    while stack:
        c = stack.pop()
        for nb in adj.get(c, ()):
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return cg in seen


# ---------------------------------------------------------------------------
# 2D generators
# ---------------------------------------------------------------------------

def _convex_blob(rng, cx, cy, r, k):
    for _ in range(50):
        raw = rng.uniform(-r, r, (max(k, 3) + 2, 2))
        hull = geom.convex_hull([(cx + x, cy + y) for x, y in raw])
        if len(hull) >= 3 and abs(geom.polygon_signed_area(hull)) > 0.05 * r * r:
            return hull
    # fall back to a plain triangle around the center
    return [(cx - r, cy - r), (cx + r, cy - r), (cx, cy + r)]


def _poly_bbox(poly):
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    return min(xs), min(ys), max(xs), max(ys)


def _bbox_clear(bb, others, margin):
    x0, y0, x1, y1 = bb
    for ox0, oy0, ox1, oy1 in others:
        if x0 - margin < ox1 and x1 + margin > ox0 and \
                y0 - margin < oy1 and y1 + margin > oy0:
            return False
    return True


def _scatter_blobs(rng, count, keepout_bbs, r_range=(0.015, 0.05),
                   margin=0.015, k_range=(3, 7), region=(0.0, 0.0, 1.0, 1.0)):
    obstacles = []
    bbs = list(keepout_bbs)
    rx0, ry0, rx1, ry1 = region
    for _ in range(count):
        for _try in range(200):
            r = rng.uniform(*r_range)
            cx = rng.uniform(rx0 + r + 0.01, rx1 - r - 0.01)
            cy = rng.uniform(ry0 + r + 0.01, ry1 - r - 0.01)
            poly = _convex_blob(rng, cx, cy, r, int(rng.integers(*k_range)))
            bb = _poly_bbox(poly)
            if _bbox_clear(bb, bbs, margin):
                obstacles.append(poly)
                bbs.append(bb)
                break
    return obstacles


def _query_keepouts(qs, qg, r=0.05):
    return [(qs[0] - r, qs[1] - r, qs[0] + r, qs[1] + r),
            (qg[0] - r, qg[1] - r, qg[0] + r, qg[1] + r)]


def _rect(x0, y0, x1, y1):
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def _rect_union_polygons(rects):
    """Boundary loops of the union of axis-aligned rectangles.

    Rectangles may overlap or touch; the result is a list of simple polygons
    (outer boundaries and hole loops) that even-odd classification handles.
    """
    xs = np.array(sorted({r[0] for r in rects} | {r[2] for r in rects}))
    ys = np.array(sorted({r[1] for r in rects} | {r[3] for r in rects}))
    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    cov = np.zeros((len(xs) - 1, len(ys) - 1), dtype=bool)
    for x0, y0, x1, y1 in rects:
        i0, i1 = np.searchsorted(cx, (x0, x1))
        j0, j1 = np.searchsorted(cy, (y0, y1))
        cov[i0:i1, j0:j1] = True

    # directed boundary edges with the covered region on the left
    outgoing = {}

    def add(a, b):
        outgoing.setdefault(a, []).append(b)

    nx, ny = cov.shape
    for i in range(nx):
        for j in range(ny):
            if not cov[i, j]:
                continue
            if i == 0 or not cov[i - 1, j]:
                add((xs[i], ys[j + 1]), (xs[i], ys[j]))
            if i == nx - 1 or not cov[i + 1, j]:
                add((xs[i + 1], ys[j]), (xs[i + 1], ys[j + 1]))
            if j == 0 or not cov[i, j - 1]:
                add((xs[i], ys[j]), (xs[i + 1], ys[j]))
            if j == ny - 1 or not cov[i, j + 1]:
                add((xs[i + 1], ys[j + 1]), (xs[i], ys[j + 1]))

    loops = []
    while outgoing:
        start = min(outgoing)
        prev = start
        cur = outgoing[start].pop()
        if not outgoing[start]:
            del outgoing[start]
        loop = [start]
        while cur != start:
            loop.append(cur)
            nxts = outgoing[cur]
            if len(nxts) == 1:
                nxt = nxts[0]
            else:
                # corner shared by several boundary arcs: take the sharpest
                # left turn to keep the covered region on the left
                d_in = (cur[0] - prev[0], cur[1] - prev[1])
                nxt = max(nxts, key=lambda q: _turn_key(d_in, (q[0] - cur[0],
                                                               q[1] - cur[1])))
            nxts.remove(nxt)
            if not nxts:
                del outgoing[cur]
            prev, cur = cur, nxt
        loops.append(_simplify_loop(loop))
    return loops


def _turn_key(d_in, d_out):
    cross = d_in[0] * d_out[1] - d_in[1] * d_out[0]
    dot = d_in[0] * d_out[0] + d_in[1] * d_out[1]
    return math.atan2(cross, dot)


def _simplify_loop(loop):
    out = []
    n = len(loop)
    for i in range(n):
        a, b, c = loop[i - 1], loop[i], loop[(i + 1) % n]
        if (b[0] - a[0]) * (c[1] - b[1]) != (b[1] - a[1]) * (c[0] - b[0]):
            out.append((float(b[0]), float(b[1])))
    return out


def _gen_forest(spec, rng):
    n = spec.obstacle_count
    if n is None:
        n = 110 if spec.family == "dense_forest" else 25
    qs, qg = default_query(spec, Map2D((0, 0, 1, 1)))
    r_range = (0.012, 0.035) if spec.family == "dense_forest" else (0.02, 0.06)
    obstacles = _scatter_blobs(rng, n, _query_keepouts(qs, qg),
                               r_range=r_range,
                               margin=0.01 if spec.family == "dense_forest" else 0.02)
    return Map2D((0.0, 0.0, 1.0, 1.0), obstacles)


def _gen_labyrinth(spec, rng):
    dense = spec.family == "dense_labyrinth"
    rows = 9 if dense else 6
    gap = spec.door_width if spec.door_width is not None else (0.05 if dense else 0.09)
    thick = 0.012
    obstacles = []
    bbs = []
    for i in range(rows):
        y = (i + 1) / (rows + 1)
        gx = rng.uniform(0.08, 0.92 - gap)
        left = _rect(0.0, y - thick / 2, gx, y + thick / 2)
        right = _rect(gx + gap, y - thick / 2, 1.0, y + thick / 2)
        obstacles.extend([left, right])
        bbs.extend([_poly_bbox(left), _poly_bbox(right)])
    target = spec.obstacle_count if spec.obstacle_count is not None else \
        (110 if dense else 50)
    clutter = max(0, target - len(obstacles))
    qs, qg = default_query(spec, Map2D((0, 0, 1, 1)))
    obstacles += _scatter_blobs(rng, clutter, bbs + _query_keepouts(qs, qg),
                                r_range=(0.012, 0.03), margin=0.012)
    return Map2D((0.0, 0.0, 1.0, 1.0), obstacles)


def _gen_bottleneck2d(spec, rng):
    gap = spec.door_width if spec.door_width is not None else 0.03
    thick = 0.02
    x0, x1 = 0.5 - thick / 2, 0.5 + thick / 2
    gy = rng.uniform(0.15, 0.85 - gap)
    wall_lo = _rect(x0, 0.0, x1, gy)
    wall_hi = _rect(x0, gy + gap, x1, 1.0)
    obstacles = [wall_lo, wall_hi]
    bbs = [_poly_bbox(wall_lo), _poly_bbox(wall_hi),
           # guard band so clutter cannot choke the gap region
           (x0 - 0.05, gy - 0.05, x1 + 0.05, gy + gap + 0.05)]
    clutter = spec.clutter_count if spec.clutter_count is not None else 64
    qs, qg = spec.start, spec.goal
    if qs is None or qg is None:
        qs, qg = (0.06, 0.5), (0.94, 0.5)
    keep = _query_keepouts(qs, qg)
    half = clutter // 2
    obstacles += _scatter_blobs(rng, half, bbs + keep, r_range=(0.012, 0.035),
                                margin=0.012, region=(0.0, 0.0, x0 - 0.02, 1.0))
    obstacles += _scatter_blobs(rng, clutter - half, bbs + keep,
                                r_range=(0.012, 0.035), margin=0.012,
                                region=(x1 + 0.02, 0.0, 1.0, 1.0))
    return Map2D((0.0, 0.0, 1.0, 1.0), obstacles)


def _gen_multi_room(spec, rng):
    rooms = 4
    gap = spec.door_width if spec.door_width is not None else 0.06
    thick = 0.012
    wall_rects = []
    for i in range(1, rooms):       # vertical wall lines, one door per row
        x = i / rooms
        for j in range(rooms):
            y0, y1 = j / rooms, (j + 1) / rooms
            gy = rng.uniform(y0 + 0.03, y1 - 0.03 - gap)
            wall_rects.append((x - thick / 2, y0, x + thick / 2, gy))
            wall_rects.append((x - thick / 2, gy + gap, x + thick / 2, y1))
    for j in range(1, rooms):       # horizontal wall lines, one door per column
        y = j / rooms
        for i in range(rooms):
            x0, x1 = i / rooms, (i + 1) / rooms
            gx = rng.uniform(x0 + 0.03, x1 - 0.03 - gap)
            wall_rects.append((x0, y - thick / 2, gx, y + thick / 2))
            wall_rects.append((gx + gap, y - thick / 2, x1, y + thick / 2))
    # walls cross at junctions; emit their union as disjoint boundary loops
    obstacles = _rect_union_polygons(wall_rects)
    bbs = [r for r in wall_rects]
    clutter = spec.clutter_count if spec.clutter_count is not None else 0
    if clutter:
        qs, qg = default_query(spec, Map2D((0, 0, 1, 1)))
        obstacles += _scatter_blobs(rng, clutter, bbs + _query_keepouts(qs, qg),
                                    r_range=(0.012, 0.03), margin=0.012)
    return Map2D((0.0, 0.0, 1.0, 1.0), obstacles)


# ---------------------------------------------------------------------------
# 3D helpers and generators
# ---------------------------------------------------------------------------

def _boxes_overlap(a, b, margin=0.0):
    return all(a[0][i] - margin < b[1][i] and a[1][i] + margin > b[0][i]
               for i in range(3))


def _wall_with_door(plane_axis, coord, thick, u_axis, u0, u1, v0, v1,
                    door_u, door_w, door_v0, door_v1, elevated_bottom=None):
    """Axis-aligned wall slab with a rectangular door hole.

    The wall is normal to plane_axis at `coord`, spans [u0,u1] along u_axis
    and [v0,v1] along the remaining axis. Returns 3 boxes (door reaching v0)
    or 4 (elevated door with a sill below it).
    """
    v_axis = 3 - plane_axis - u_axis

    def box(ua, ub, va, vb):
        lo = [0.0, 0.0, 0.0]
        hi = [0.0, 0.0, 0.0]
        lo[plane_axis], hi[plane_axis] = coord - thick / 2, coord + thick / 2
        lo[u_axis], hi[u_axis] = ua, ub
        lo[v_axis], hi[v_axis] = va, vb
        return tuple(lo), tuple(hi)

    out = [box(u0, door_u, v0, v1), box(door_u + door_w, u1, v0, v1)]
    if elevated_bottom is not None and elevated_bottom > v0:
        out.append(box(door_u, door_u + door_w, v0, elevated_bottom))
        out.append(box(door_u, door_u + door_w, door_v1, v1))
    else:
        out.append(box(door_u, door_u + door_w, door_v1, v1))
    return out


def _slab_with_holes(z0, z1, holes):
    """Horizontal slab [0,1]^2 x [z0,z1] with square holes (x0,y0,x1,y1)."""
    holes = sorted(holes)
    boxes = []
    prev = 0.0
    for hx0, hy0, hx1, hy1 in holes:
        if hx0 > prev:
            boxes.append(((prev, 0.0, z0), (hx0, 1.0, z1)))
        if hy0 > 0.0:
            boxes.append(((hx0, 0.0, z0), (hx1, hy0, z1)))
        if hy1 < 1.0:
            boxes.append(((hx0, hy1, z0), (hx1, 1.0, z1)))
        prev = hx1
    if prev < 1.0:
        boxes.append(((prev, 0.0, z0), (1.0, 1.0, z1)))
    return boxes


def _scatter_boxes(rng, count, keepouts, size_range=(0.02, 0.06), margin=0.005):
    out = []
    placed = list(keepouts)
    for _ in range(count):
        for _try in range(300):
            size = rng.uniform(*size_range, 3)
            lo = rng.uniform(0.02, 0.98 - size)
            box = (tuple(lo), tuple(lo + size))
            if not any(_boxes_overlap(box, other, margin) for other in placed):
                out.append(box)
                placed.append(box)
                break
    return out


def _door_keepout(box_list, pad=0.04):
    """Inflated bbox of a door's wall pieces gap region: approximate keepout."""
    lo = [min(b[0][i] for b in box_list) for i in range(3)]
    hi = [max(b[1][i] for b in box_list) for i in range(3)]
    return (tuple(x - pad for x in lo), tuple(x + pad for x in hi))


def _gen_bn_office3d(spec, rng):
    rooms = 4
    thick = 0.012
    floor_z0, floor_z1 = 0.49, 0.51
    stories = [(0.0, floor_z0), (floor_z1, 1.0)]
    obstacles = []
    keepouts = []

    n_elevated = int(rng.integers(3, 13))  # lands total count in [181, 190]
    wall_slots = []
    for s_lo, s_hi in stories:
        for i in range(1, rooms):
            for j in range(rooms):
                wall_slots.append((0, i / rooms, 1, j / rooms, (j + 1) / rooms, s_lo, s_hi))
                wall_slots.append((1, i / rooms, 0, j / rooms, (j + 1) / rooms, s_lo, s_hi))
    order = rng.permutation(len(wall_slots))
    elevated = set(order[:n_elevated].tolist())

    for idx, (axis, coord, u_axis, u0, u1, s_lo, s_hi) in enumerate(wall_slots):
        w = spec.door_width if spec.door_width is not None else \
            float(rng.uniform(0.035, 0.05))
        du = float(rng.uniform(u0 + 0.02, u1 - 0.02 - w))
        door_h = w  # square doors: genuinely narrow passages
        if idx in elevated:
            bottom = s_lo + 0.3 * (s_hi - s_lo)
            pieces = _wall_with_door(axis, coord, thick, u_axis, u0, u1,
                                     s_lo, s_hi, du, w, bottom, bottom + door_h,
                                     elevated_bottom=bottom)
        else:
            pieces = _wall_with_door(axis, coord, thick, u_axis, u0, u1,
                                     s_lo, s_hi, du, w, s_lo, s_lo + door_h)
        obstacles.extend(pieces)
        door_lo = [0, 0, 0]
        door_hi = [0, 0, 0]
        v_axis = 3 - axis - u_axis
        door_lo[axis], door_hi[axis] = coord - thick, coord + thick
        door_lo[u_axis], door_hi[u_axis] = du, du + w
        door_lo[v_axis], door_hi[v_axis] = s_lo, s_lo + 2 * door_h
        keepouts.append(_door_keepout([(tuple(door_lo), tuple(door_hi))]))

    hatch_side = 0.1
    hx = float(rng.uniform(0.05, 0.95 - hatch_side))
    hy = float(rng.uniform(0.05, 0.95 - hatch_side))
    obstacles += _slab_with_holes(floor_z0, floor_z1,
                                  [(hx, hy, hx + hatch_side, hy + hatch_side)])
    keepouts.append(((hx - 0.04, hy - 0.04, floor_z0 - 0.06),
                     (hx + hatch_side + 0.04, hy + hatch_side + 0.04, floor_z1 + 0.06)))

    clutter = spec.clutter_count if spec.clutter_count is not None else 30
    if spec.family == "dense_bn_office3d":
        clutter += 120
    qs, qg = default_query(spec, Map3D(((0, 0, 0), (1, 1, 1))))
    keepouts.append((tuple(x - 0.06 for x in qs), tuple(x + 0.06 for x in qs)))
    keepouts.append((tuple(x - 0.06 for x in qg), tuple(x + 0.06 for x in qg)))
    obstacles += _scatter_boxes(rng, clutter, [*keepouts, *obstacles])
    return Map3D(((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)), obstacles)


def _gen_bn_maze3d(spec, rng):
    thick = 0.012
    floor_z0, floor_z1 = 0.49, 0.51
    obstacles = []
    keepouts = []

    def door_width():
        return spec.door_width if spec.door_width is not None else \
            float(rng.uniform(0.035, 0.05))

    # recursive division in plan view, full height per story
    def divide(x0, x1, y0, y1, depth, s_lo, s_hi):
        if depth == 0 or (x1 - x0) < 0.22 or (y1 - y0) < 0.22:
            return
        if (x1 - x0) >= (y1 - y0):
            cx = float(rng.uniform(x0 + 0.1, x1 - 0.1))
            w = door_width()
            du = float(rng.uniform(y0 + 0.02, y1 - 0.02 - w))
            obstacles.extend(_wall_with_door(0, cx, thick, 1, y0, y1,
                                             s_lo, s_hi, du, w, s_lo, s_lo + w))
            keepouts.append(((cx - 0.04, du - 0.02, s_lo), (cx + 0.04, du + w + 0.02, s_lo + 2 * w)))
            divide(x0, cx, y0, y1, depth - 1, s_lo, s_hi)
            divide(cx, x1, y0, y1, depth - 1, s_lo, s_hi)
        else:
            cy = float(rng.uniform(y0 + 0.1, y1 - 0.1))
            w = door_width()
            du = float(rng.uniform(x0 + 0.02, x1 - 0.02 - w))
            obstacles.extend(_wall_with_door(1, cy, thick, 0, x0, x1,
                                             s_lo, s_hi, du, w, s_lo, s_lo + w))
            keepouts.append(((du - 0.02, cy - 0.04, s_lo), (du + w + 0.02, cy + 0.04, s_lo + 2 * w)))
            divide(x0, x1, y0, cy, depth - 1, s_lo, s_hi)
            divide(x0, x1, cy, y1, depth - 1, s_lo, s_hi)

    for s_lo, s_hi in ((0.0, floor_z0), (floor_z1, 1.0)):
        divide(0.0, 1.0, 0.0, 1.0, 3, s_lo, s_hi)

    hatch = 0.1
    hx = float(rng.uniform(0.05, 0.95 - hatch))
    hy = float(rng.uniform(0.05, 0.95 - hatch))
    obstacles += _slab_with_holes(floor_z0, floor_z1, [(hx, hy, hx + hatch, hy + hatch)])
    keepouts.append(((hx - 0.04, hy - 0.04, floor_z0 - 0.06),
                     (hx + hatch + 0.04, hy + hatch + 0.04, floor_z1 + 0.06)))

    clutter = spec.clutter_count if spec.clutter_count is not None else 25
    qs, qg = default_query(spec, Map3D(((0, 0, 0), (1, 1, 1))))
    keepouts.append((tuple(x - 0.06 for x in qs), tuple(x + 0.06 for x in qs)))
    keepouts.append((tuple(x - 0.06 for x in qg), tuple(x + 0.06 for x in qg)))
    obstacles += _scatter_boxes(rng, clutter, [*keepouts, *obstacles])
    return Map3D(((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)), obstacles)


def _gen_bn_layers3d(spec, rng):
    thick = 0.012
    obstacles = []
    keepouts = []
    slabs = [(1 / 3 - 0.01, 1 / 3 + 0.01), (2 / 3 - 0.01, 2 / 3 + 0.01)]
    stories = [(0.0, slabs[0][0]), (slabs[0][1], slabs[1][0]), (slabs[1][1], 1.0)]

    for s_lo, s_hi in stories:
        for i in (1, 2):
            for j in range(3):
                for axis, u_axis in ((0, 1), (1, 0)):
                    coord = i / 3
                    u0, u1 = j / 3, (j + 1) / 3
                    w = spec.door_width if spec.door_width is not None else \
                        float(rng.uniform(0.035, 0.05))
                    du = float(rng.uniform(u0 + 0.02, u1 - 0.02 - w))
                    obstacles.extend(_wall_with_door(
                        axis, coord, thick, u_axis, u0, u1, s_lo, s_hi,
                        du, w, s_lo, s_lo + w))
                    ko_lo = [0, 0, 0]
                    ko_hi = [0, 0, 0]
                    v_axis = 3 - axis - u_axis
                    ko_lo[axis], ko_hi[axis] = coord - 0.04, coord + 0.04
                    ko_lo[u_axis], ko_hi[u_axis] = du - 0.02, du + w + 0.02
                    ko_lo[v_axis], ko_hi[v_axis] = s_lo, s_lo + 2 * w
                    keepouts.append((tuple(ko_lo), tuple(ko_hi)))

    for z0, z1 in slabs:
        holes = []
        xs = [0.15, 0.6]
        for hx_base in xs:
            # square holes area-matched to circular holes of radius 0.04-0.05
            r = float(rng.uniform(0.04, 0.05))
            side = r * math.sqrt(math.pi)
            hx = hx_base + float(rng.uniform(0.0, 0.2))
            hy = float(rng.uniform(0.08, 0.88 - side))
            holes.append((hx, hy, hx + side, hy + side))
        obstacles += _slab_with_holes(z0, z1, holes)
        for hx0, hy0, hx1, hy1 in holes:
            keepouts.append(((hx0 - 0.04, hy0 - 0.04, z0 - 0.06),
                             (hx1 + 0.04, hy1 + 0.04, z1 + 0.06)))

    clutter = spec.clutter_count if spec.clutter_count is not None else 30
    qs, qg = default_query(spec, Map3D(((0, 0, 0), (1, 1, 1))))
    keepouts.append((tuple(x - 0.06 for x in qs), tuple(x + 0.06 for x in qs)))
    keepouts.append((tuple(x - 0.06 for x in qg), tuple(x + 0.06 for x in qg)))
    obstacles += _scatter_boxes(rng, clutter, [*keepouts, *obstacles])
    return Map3D(((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)), obstacles)


# ---------------------------------------------------------------------------
# dynamic sequences
# ---------------------------------------------------------------------------

def generate_dynamic(spec: ScenarioSpec) -> DynamicScenario:
    """2D sequence with ~50% static, 30% moving and 20% toggling obstacles."""
    if spec.family not in FAMILIES_DYNAMIC:
        raise InvalidSpec(f"not a dynamic family: {spec.family}")
    rng = np.random.default_rng((spec.seed, 0xD1))
    n = spec.obstacle_count if spec.obstacle_count is not None else 24
    n_moving = round(0.3 * n)
    n_toggling = round(0.2 * n)
    n_static = n - n_moving - n_toggling
    kinds = ["static"] * n_static + ["moving"] * n_moving + ["toggling"] * n_toggling

    qs, qg = default_query(spec, Map2D((0, 0, 1, 1)))
    keep = _query_keepouts(qs, qg, r=0.07)
    steps = spec.steps
    base, bbs, tracks = [], list(keep), []
    speed = 0.02
    for kind in kinds:
        placed = False
        for _try in range(300):
            r = float(rng.uniform(0.02, 0.05))
            cx = float(rng.uniform(r + 0.02, 0.98 - r))
            cy = float(rng.uniform(r + 0.02, 0.98 - r))
            poly = _convex_blob(rng, cx, cy, r, int(rng.integers(3, 7)))
            ang = float(rng.uniform(0, 2 * math.pi))
            d = (speed * math.cos(ang), speed * math.sin(ang)) \
                if kind == "moving" else (0.0, 0.0)
            # tube = bbox swept over the whole horizon, so movers never collide
            x0, y0, x1, y1 = _poly_bbox(poly)
            sweep = (min(x0, x0 + d[0] * steps), min(y0, y0 + d[1] * steps),
                     max(x1, x1 + d[0] * steps), max(y1, y1 + d[1] * steps))
            if _bbox_clear(sweep, bbs, 0.012) and \
                    0.0 < sweep[0] and sweep[2] < 1.0 and \
                    0.0 < sweep[1] and sweep[3] < 1.0:
                base.append(poly)
                bbs.append(sweep)
                tracks.append(d)
                placed = True
                break
        if not placed:
            base.append(None)
            tracks.append((0.0, 0.0))

    maps = []
    for t in range(steps):
        obstacles = []
        for poly, kind, d in zip(base, kinds, tracks):
            if poly is None:
                continue
            if kind == "toggling" and t % 2 == 1:
                continue
            if kind == "moving":
                poly = [(x + d[0] * t, y + d[1] * t) for x, y in poly]
            obstacles.append(poly)
        maps.append(Map2D((0.0, 0.0, 1.0, 1.0), obstacles))
    kinds = [k for k, p in zip(kinds, base) if p is not None]
    return DynamicScenario(bounds=(0.0, 0.0, 1.0, 1.0), steps=maps,
                           query=(qs, qg), kinds=kinds)


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

_GENERATORS = {
    "forest": _gen_forest,
    "dense_forest": _gen_forest,
    "labyrinth": _gen_labyrinth,
    "dense_labyrinth": _gen_labyrinth,
    "bottleneck2d": _gen_bottleneck2d,
    "multi_room": _gen_multi_room,
    "bn_office3d": _gen_bn_office3d,
    "dense_bn_office3d": _gen_bn_office3d,
    "bn_maze3d": _gen_bn_maze3d,
    "bn_layers3d": _gen_bn_layers3d,
}


def generate(spec: ScenarioSpec):
    """Deterministic map for (family, seed); retries until solvable if required."""
    if spec.family in FAMILIES_DYNAMIC:
        raise InvalidSpec("use generate_dynamic for dynamic families")
    gen = _GENERATORS.get(spec.family)
    if gen is None:
        raise InvalidSpec(f"unknown scenario family {spec.family!r}")
    if spec.door_width is not None and spec.door_width <= 0:
        raise InvalidSpec("door_width must be positive")
    if spec.obstacle_count is not None and spec.obstacle_count < 0:
        raise InvalidSpec("obstacle_count must be non-negative")

    for attempt in range(_MAX_ATTEMPTS):
        rng = np.random.default_rng((spec.seed, attempt, 0xA5))
        m = gen(spec, rng)
        if not spec.require_solvable:
            return m
        qs, qg = default_query(spec, m)
        solvable = is_solvable_2d(m, qs, qg) if m.dim == 2 else \
            is_solvable_3d(m, qs, qg)
        if solvable:
            return m
    raise InvalidSpec(
        f"could not generate a solvable {spec.family} map for seed {spec.seed}")


# ---------------------------------------------------------------------------
# dense post-validation
# ---------------------------------------------------------------------------

BOUNDARY_TOL = 1e-12  # open obstacles: within this of the boundary is clean


def post_validate(waypoints, m, density=200.0) -> int:
    """Count sampled path points strictly inside any obstacle.

    density is in samples per workspace unit of path length. Obstacles are
    open sets, so boundary contact is clean; a point must be inside by more
    than BOUNDARY_TOL to count, which keeps exact boundary-hugging paths
    (whose samples drift inward by rounding) violation-free.
    """
    if density <= 0:
        raise ValueError("density must be positive")
    violations = 0
    edge_a = edge_b = None
    if m.dim == 2:
        edge_a, edge_b = m.obstacle_edges()
    for i in range(len(waypoints) - 1):
        a = np.asarray(waypoints[i], dtype=float)
        b = np.asarray(waypoints[i + 1], dtype=float)
        seg_len = float(np.linalg.norm(b - a))
        n = max(2, int(math.ceil(seg_len * density)) + 1)
        ts = np.linspace(0.0, 1.0, n)
        pts = a[None, :] + ts[:, None] * (b - a)[None, :]
        if m.dim == 2:
            inside = [p for p in pts if m.point_in_obstacle(tuple(p), boundary=False)]
            if inside:
                depth = geom.points_to_segments_distance(
                    np.asarray(inside), edge_a, edge_b)
                violations += int((depth > BOUNDARY_TOL).sum())
        else:
            for lo, hi in m.obstacles:
                depth = np.minimum(pts - np.asarray(lo), np.asarray(hi) - pts)
                violations += int((depth.min(axis=1) > BOUNDARY_TOL).sum())
    return violations
