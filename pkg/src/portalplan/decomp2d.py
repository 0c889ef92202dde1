"""Constrained Delaunay triangulation of a rectangular workspace.

Obstacle edges enter as constraints; free faces are identified by parity
flood fill from the outside (every constrained-edge crossing toggles the
inside/obstacle state). The bounding rectangle itself is the super-structure,
so the triangle union covers the workspace exactly.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import geom
from .errors import DegenerateObstacle, OverlappingObstacles, PointInObstacle

# Obstacles with area below this fraction of the workspace area are rejected.
MIN_AREA_FRACTION = 1e-12


@dataclass
class Triangulation:
    """Immutable result of `triangulate`. Do not mutate after construction."""

    verts: list[tuple[float, float]]
    tris: list[tuple[int, int, int]]          # CCW vertex index triples
    neighbors: list[tuple[int, int, int]]     # across edge opposite vertex i; -1 = hull
    constrained: list[tuple[bool, bool, bool]]
    free: list[bool]
    bounds: tuple[float, float, float, float]

    def tri_points(self, t):
        a, b, c = self.tris[t]
        return self.verts[a], self.verts[b], self.verts[c]

    def tri_area(self, t):
        a, b, c = self.tri_points(t)
        return 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    def tri_centroid(self, t):
        a, b, c = self.tri_points(t)
        return ((a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0)

    def free_indices(self):
        return [t for t, f in enumerate(self.free) if f]


def locate_cell(tri: Triangulation, p) -> int:
    """Lowest index of a free triangle containing p (boundary-inclusive)."""
    x0, y0, x1, y1 = tri.bounds
    if not (x0 <= p[0] <= x1 and y0 <= p[1] <= y1):
        raise ValueError(f"point {p} outside workspace bounds")
    fallback_hit = False
    for t in range(len(tri.tris)):
        a, b, c = tri.tri_points(t)
        if geom.point_in_triangle(p, a, b, c):
            if tri.free[t]:
                return t
            fallback_hit = True
    if fallback_hit:
        raise PointInObstacle(f"point {p} lies inside an obstacle")
    raise ValueError(f"point {p} not located in any triangle")  # pragma: no cover


# ---------------------------------------------------------------------------
# builder
# ---------------------------------------------------------------------------

class _Builder:
    def __init__(self, bounds):
        x0, y0, x1, y1 = bounds
        self.bounds = bounds
        self.verts = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        self.vert_ids = {v: i for i, v in enumerate(self.verts)}
        self.tris = [[0, 1, 2], [0, 2, 3]]
        self.neighbors = [[-1, 1, -1], [-1, -1, 0]]
        self.constrained = [[False, False, False], [False, False, False]]
        self.alive = [True, True]
        self.vert2tri = [0, 0, 0, 1]
        self._last = 0

    # -- basic accessors ----------------------------------------------------

    def _pts(self, t):
        vs = self.tris[t]
        return self.verts[vs[0]], self.verts[vs[1]], self.verts[vs[2]]

    def _pos_of(self, t, v):
        return self.tris[t].index(v)

    def _nb_pos(self, t, frm):
        """Edge position in t whose neighbor is frm."""
        return self.neighbors[t].index(frm)

    # -- point location -----------------------------------------------------

    def _locate(self, p):
        t = self._last if self.alive[self._last] else next(
            i for i, a in enumerate(self.alive) if a)
        limit = 4 * len(self.tris) + 64
        steps = 0
        while steps < limit:
            steps += 1
            a, b, c = self._pts(t)
            if geom.orient2d(b, c, p) < 0:
                t = self.neighbors[t][0]
            elif geom.orient2d(c, a, p) < 0:
                t = self.neighbors[t][1]
            elif geom.orient2d(a, b, p) < 0:
                t = self.neighbors[t][2]
            else:
                self._last = t
                return t
            if t < 0:
                raise ValueError(f"point {p} outside the triangulated domain")
        return self._locate_linear(p)

    def _locate_linear(self, p):
        for t in range(len(self.tris)):
            if not self.alive[t]:
                continue
            a, b, c = self._pts(t)
            if geom.point_in_triangle(p, a, b, c):
                self._last = t
                return t
        raise ValueError(f"point {p} not located")  # pragma: no cover

    # -- vertex insertion (Bowyer-Watson) -------------------------------------

    def add_point(self, p):
        """Insert p, returning its vertex id; near-duplicates are merged."""
        if p in self.vert_ids:
            return self.vert_ids[p]
        t0 = self._locate(p)
        for v in self.tris[t0]:
            q = self.verts[v]
            if (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 <= geom.SNAP_EPS ** 2:
                return v

        bad = {t0}
        stack = [t0]
        while stack:
            t = stack.pop()
            for nb in self.neighbors[t]:
                if nb >= 0 and nb not in bad:
                    a, b, c = self._pts(nb)
                    if geom.incircle(a, b, c, p) > 0:
                        bad.add(nb)
                        stack.append(nb)

        boundary = []  # (u, w, outer_tri, flag)
        for t in sorted(bad):
            vs = self.tris[t]
            for i in range(3):
                nb = self.neighbors[t][i]
                if nb < 0 or nb not in bad:
                    boundary.append((vs[(i + 1) % 3], vs[(i + 2) % 3], nb,
                                     self.constrained[t][i]))

        vid = len(self.verts)
        self.verts.append(p)
        self.vert_ids[p] = vid
        self.vert2tri.append(-1)

        half = {}
        created = []
        for u, w, outer, flag in boundary:
            if geom.orient2d(p, self.verts[u], self.verts[w]) <= 0:
                # p exactly on a hull edge: skip the degenerate fan triangle
                continue
            nt = self._new_tri([vid, u, w], [outer, -1, -1], [flag, False, False])
            created.append(nt)
            if outer >= 0:
                for i in range(3):
                    if self.neighbors[outer][i] in bad:
                        vs_o = self.tris[outer]
                        if {vs_o[(i + 1) % 3], vs_o[(i + 2) % 3]} == {u, w}:
                            self.neighbors[outer][i] = nt
                            break
            half[(vid, u)] = (nt, 2)   # edge (p, u) is edge opposite w (pos 2)
            half[(w, vid)] = (nt, 1)   # edge (w, p) is edge opposite u (pos 1)

        for (a, b), (t, e) in half.items():
            twin = half.get((b, a))
            if twin is not None:
                self.neighbors[t][e] = twin[0]

        for t in bad:
            self.alive[t] = False
        for nt in created:
            for v in self.tris[nt]:
                self.vert2tri[v] = nt
        self._last = created[0] if created else self._locate_linear(p)
        return vid

    def _new_tri(self, vs, nbs, flags):
        self.tris.append(list(vs))
        self.neighbors.append(list(nbs))
        self.constrained.append(list(flags))
        self.alive.append(True)
        return len(self.tris) - 1

    # -- vertex fans ----------------------------------------------------------

    def _fan(self, v):
        """All (triangle, position-of-v) incident to v."""
        t0 = self.vert2tri[v]
        if not self.alive[t0] or v not in self.tris[t0]:
            t0 = next(t for t in range(len(self.tris))
                      if self.alive[t] and v in self.tris[t])
            self.vert2tri[v] = t0
        out = []
        seen = set()
        t = t0
        while t >= 0 and t not in seen:
            seen.add(t)
            pos = self._pos_of(t, v)
            out.append((t, pos))
            t = self.neighbors[t][(pos + 1) % 3]
        if t < 0:  # hit the hull: rotate the other way from the start
            t = t0
            pos = self._pos_of(t, v)
            t = self.neighbors[t][(pos + 2) % 3]
            while t >= 0 and t not in seen:
                seen.add(t)
                pos = self._pos_of(t, v)
                out.append((t, pos))
                t = self.neighbors[t][(pos + 2) % 3]
        return out

    def _find_edge(self, u, w):
        """(t, e) such that edge e of t is (u, w); None if absent."""
        for t, pos in self._fan(u):
            vs = self.tris[t]
            if vs[(pos + 1) % 3] == w:
                return t, (pos + 2) % 3
            if vs[(pos + 2) % 3] == w:
                return t, (pos + 1) % 3
        return None

    def _mark_constrained(self, t, e):
        self.constrained[t][e] = True
        nb = self.neighbors[t][e]
        if nb >= 0:
            self.constrained[nb][self._nb_pos(nb, t)] = True

    # -- edge flip -------------------------------------------------------------

    def _flip(self, t, e):
        t2 = self.neighbors[t][e]
        e2 = self._nb_pos(t2, t)
        a = self.tris[t][e]
        u = self.tris[t][(e + 1) % 3]
        w = self.tris[t][(e + 2) % 3]
        b = self.tris[t2][e2]

        n_wa = self.neighbors[t][(e + 1) % 3]
        n_au = self.neighbors[t][(e + 2) % 3]
        f_wa = self.constrained[t][(e + 1) % 3]
        f_au = self.constrained[t][(e + 2) % 3]
        n_ub = self.neighbors[t2][(e2 + 1) % 3]
        n_bw = self.neighbors[t2][(e2 + 2) % 3]
        f_ub = self.constrained[t2][(e2 + 1) % 3]
        f_bw = self.constrained[t2][(e2 + 2) % 3]

        self.tris[t] = [a, u, b]
        self.neighbors[t] = [n_ub, t2, n_au]
        self.constrained[t] = [f_ub, False, f_au]
        self.tris[t2] = [a, b, w]
        self.neighbors[t2] = [n_bw, n_wa, t]
        self.constrained[t2] = [f_bw, f_wa, False]

        if n_ub >= 0:
            self.neighbors[n_ub][self._nb_pos(n_ub, t2)] = t
        if n_wa >= 0:
            self.neighbors[n_wa][self._nb_pos(n_wa, t)] = t2
        for v in (a, u, b):
            self.vert2tri[v] = t
        self.vert2tri[w] = t2
        return a, b

    # -- constraint insertion ----------------------------------------------------

    def insert_constraint(self, va, vb):
        if va == vb:
            return
        pending = deque([(va, vb)])
        while pending:
            x, y = pending.popleft()
            split = self._insert_constraint_once(x, y)
            if split is not None:
                pending.appendleft((split, y))
                pending.appendleft((x, split))

    def _insert_constraint_once(self, va, vb):
        """Insert one constraint; returns a vertex id to split at, or None."""
        pa, pb = self.verts[va], self.verts[vb]
        found = self._find_edge(va, vb)
        if found is not None:
            self._mark_constrained(*found)
            return None

        # locate the fan triangle the segment leaves va through: in CCW
        # triangle (va, x, y) the wedge contains the forward ray when x lies
        # right of it and y left of it, with the opposite edge straddling.
        start = relaxed = None
        for t, pos in self._fan(va):
            vs = self.tris[t]
            x, y = vs[(pos + 1) % 3], vs[(pos + 2) % 3]
            px, py = self.verts[x], self.verts[y]
            ox = geom.orient2d(pa, pb, px)
            oy = geom.orient2d(pa, pb, py)
            if ox == 0 and self._between(pa, pb, px):
                return x
            if oy == 0 and self._between(pa, pb, py):
                return y
            if ox < 0 < oy:
                if geom.orient2d(px, py, pa) * geom.orient2d(px, py, pb) < 0:
                    start = (t, pos, x, y)
                    break
                relaxed = (t, pos, x, y)
        if start is None:
            start = relaxed
        if start is None:  # pragma: no cover - valid inputs always find an exit
            raise OverlappingObstacles(
                f"cannot recover constraint {pa}-{pb}: inconsistent input")

        # walk the corridor collecting crossed edges
        crossing = []
        t, pos, _x, _y = start
        if self.constrained[t][pos]:
            raise OverlappingObstacles(
                f"constraint {pa}-{pb} crosses another constraint")
        vs = self.tris[t]
        crossing.append((vs[(pos + 1) % 3], vs[(pos + 2) % 3]))
        cur = self.neighbors[t][pos]
        prev = t
        while True:
            e = self._nb_pos(cur, prev)
            z = self.tris[cur][e]
            if z == vb:
                break
            oz = geom.orient2d(pa, pb, self.verts[z])
            if oz == 0:
                if self._between(pa, pb, self.verts[z]):
                    return z
                raise OverlappingObstacles(
                    f"constraint {pa}-{pb} grazes vertex {self.verts[z]}")
            # entering across CCW edge (A, B) puts A left / B right of the
            # ray; z extends whichever chain matches its side
            if oz > 0:
                nxt_e = (e + 1) % 3   # cross edge (B, z)
            else:
                nxt_e = (e + 2) % 3   # cross edge (z, A)
            if self.constrained[cur][nxt_e]:
                raise OverlappingObstacles(
                    f"constraint {pa}-{pb} crosses another constraint")
            vs = self.tris[cur]
            crossing.append((vs[(nxt_e + 1) % 3], vs[(nxt_e + 2) % 3]))
            prev = cur
            cur = self.neighbors[cur][nxt_e]

        # flip crossed edges out of the way (Sloan)
        queue = deque(crossing)
        fresh = []
        guard = 0
        limit = 64 * (len(crossing) + 4) ** 2 + 4096
        while queue:
            guard += 1
            if guard > limit:  # pragma: no cover
                raise OverlappingObstacles(
                    f"constraint recovery did not terminate for {pa}-{pb}")
            u, w = queue.popleft()
            hit = self._find_edge(u, w)
            if hit is None:
                continue
            t, e = hit
            t2 = self.neighbors[t][e]
            a = self.tris[t][e]
            b = self.tris[t2][self._nb_pos(t2, t)]
            p_a, p_b = self.verts[a], self.verts[b]
            p_u, p_w = self.verts[u], self.verts[w]
            # flip only if the quad is strictly convex
            if (geom.orient2d(p_a, p_b, p_u) * geom.orient2d(p_a, p_b, p_w) < 0
                    and geom.orient2d(p_u, p_w, p_a) * geom.orient2d(p_u, p_w, p_b) < 0):
                na, nb_ = self._flip(t, e)
                o1 = geom.orient2d(pa, pb, self.verts[na])
                o2 = geom.orient2d(pa, pb, self.verts[nb_])
                if o1 * o2 < 0 and self._segment_crosses(pa, pb, na, nb_):
                    queue.append((na, nb_))
                else:
                    fresh.append((na, nb_))
            else:
                queue.append((u, w))

        hit = self._find_edge(va, vb)
        if hit is None:  # pragma: no cover
            raise OverlappingObstacles(f"failed to recover constraint {pa}-{pb}")
        self._mark_constrained(*hit)
        self._restore_delaunay(fresh)
        return None

    def _segment_crosses(self, pa, pb, u, w):
        pu, pw = self.verts[u], self.verts[w]
        return (geom.orient2d(pu, pw, pa) * geom.orient2d(pu, pw, pb)) < 0

    @staticmethod
    def _between(pa, pb, p):
        if abs(pb[0] - pa[0]) >= abs(pb[1] - pa[1]):
            lo, hi = sorted((pa[0], pb[0]))
            return lo < p[0] < hi
        lo, hi = sorted((pa[1], pb[1]))
        return lo < p[1] < hi

    def _restore_delaunay(self, edges):
        stack = list(edges)
        guard = 0
        while stack:
            guard += 1
            if guard > 100000:  # pragma: no cover
                break
            u, w = stack.pop()
            hit = self._find_edge(u, w)
            if hit is None:
                continue
            t, e = hit
            if self.constrained[t][e]:
                continue
            t2 = self.neighbors[t][e]
            if t2 < 0:
                continue
            b = self.tris[t2][self._nb_pos(t2, t)]
            a0, b0, c0 = self._pts(t)
            if geom.incircle(a0, b0, c0, self.verts[b]) > 0:
                na, nb_ = self._flip(t, e)
                for pair in ((na, u), (u, nb_), (nb_, w), (w, na)):
                    stack.append(pair)

    # -- classification -----------------------------------------------------------

    def classify(self):
        n = len(self.tris)
        label = [-1] * n  # 0 = free, 1 = obstacle
        queue = deque()
        for t in range(n):
            if not self.alive[t]:
                continue
            for i in range(3):
                if self.neighbors[t][i] == -1 and label[t] == -1:
                    label[t] = 1 if self.constrained[t][i] else 0
                    queue.append(t)
        while queue:
            t = queue.popleft()
            for i in range(3):
                nb = self.neighbors[t][i]
                if nb < 0 or label[nb] != -1:
                    continue
                label[nb] = label[t] ^ (1 if self.constrained[t][i] else 0)
                queue.append(nb)
        return label

    # -- output ---------------------------------------------------------------------

    def finish(self):
        label = self.classify()
        remap = {}
        tris, nbs, cons, free = [], [], [], []
        for t in range(len(self.tris)):
            if self.alive[t]:
                remap[t] = len(tris)
                tris.append(tuple(self.tris[t]))
                cons.append(tuple(self.constrained[t]))
                free.append(label[t] == 0)
                nbs.append(self.neighbors[t])
        nbs = [tuple(remap[x] if x >= 0 else -1 for x in row) for row in nbs]
        return Triangulation(
            verts=list(self.verts),
            tris=tris,
            neighbors=nbs,
            constrained=cons,
            free=free,
            bounds=self.bounds,
        )


# ---------------------------------------------------------------------------
# public entry point
# ---------------------------------------------------------------------------

def _clean_polygon(poly, bounds_area):
    pts = [(float(x), float(y)) for x, y in poly]
    cleaned = []
    for p in pts:
        if cleaned and math.dist(p, cleaned[-1]) <= geom.SNAP_EPS:
            continue
        cleaned.append(p)
    while len(cleaned) > 1 and math.dist(cleaned[0], cleaned[-1]) <= geom.SNAP_EPS:
        cleaned.pop()
    if len(cleaned) < 3:
        raise DegenerateObstacle("obstacle has fewer than 3 distinct vertices")
    area = abs(geom.polygon_signed_area(cleaned))
    if area < MIN_AREA_FRACTION * bounds_area:
        raise DegenerateObstacle(f"obstacle area {area} below degeneracy threshold")
    if not geom.polygon_is_simple(cleaned):
        raise DegenerateObstacle("obstacle polygon is self-intersecting")
    return cleaned


def _validate_obstacles(bounds, obstacles):
    x0, y0, x1, y1 = bounds
    bounds_area = (x1 - x0) * (y1 - y0)
    polys = [_clean_polygon(p, bounds_area) for p in obstacles]
    for poly in polys:
        for (px, py) in poly:
            if not (x0 <= px <= x1 and y0 <= py <= y1):
                raise DegenerateObstacle(
                    f"obstacle vertex ({px}, {py}) outside workspace bounds")

    edges = []
    for oi, poly in enumerate(polys):
        n = len(poly)
        for i in range(n):
            edges.append((oi, poly[i], poly[(i + 1) % n]))
    if edges:
        a = np.array([e[1] for e in edges])
        b = np.array([e[2] for e in edges])
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        for i in range(len(edges)):
            oi, a1, b1 = edges[i]
            # bbox prefilter, exact test on the survivors
            cand = np.nonzero(
                (lo[i + 1:, 0] <= hi[i, 0]) & (hi[i + 1:, 0] >= lo[i, 0])
                & (lo[i + 1:, 1] <= hi[i, 1]) & (hi[i + 1:, 1] >= lo[i, 1]))[0]
            for j in cand + i + 1:
                oj, a2, b2 = edges[j]
                if oi == oj:
                    continue
                if geom.segments_cross(a1, b1, a2, b2):
                    raise OverlappingObstacles(
                        f"obstacles {oi} and {oj} have intersecting edges")
    return polys


def triangulate(bounds, obstacles) -> Triangulation:
    """CDT of the rectangle `bounds` with every obstacle edge constrained."""
    x0, y0, x1, y1 = (float(v) for v in bounds)
    if not (x0 < x1 and y0 < y1):
        raise ValueError(f"invalid bounds {bounds}")
    polys = _validate_obstacles((x0, y0, x1, y1), obstacles)

    builder = _Builder((x0, y0, x1, y1))
    ids = []
    for poly in polys:
        ids.append([builder.add_point(p) for p in poly])
    for ring in ids:
        n = len(ring)
        for i in range(n):
            builder.insert_constraint(ring[i], ring[(i + 1) % n])
    return builder.finish()
