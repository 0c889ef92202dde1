"""Barrier-guarded execution of a planned 2D corridor path for a disk robot.

A pure-pursuit controller tracks the polyline; each step the guard collects
the walls (non-portal edges) of the current and portal-adjacent corridor
cells, monitors the nearest few, and clamps forward speed so the wall
barrier h = dist - r cannot be driven negative. No QP is solved: the clamp
v <= gamma * h / a (a = unit-speed approach rate) is applied per wall.

With radius 0 the safe set is the whole free space and the barrier cannot be
violated, so the guard is exactly passive and the trajectory equals plain
pure-pursuit tracking.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import geom
from .cellgraph import CellGraph
from .errors import InfeasibleStart

MAX_MONITORED_WALLS = 4


@dataclass
class BarrierConfig:
    radius: float                 # disk robot radius, workspace units
    # binding range of the clamp is v_nom/gamma; the default keeps it a few
    # percent of the diagonal so open-space tracking is never slowed
    gamma: float = 25.0           # barrier gain, 1/s
    dt: float = 0.01              # control timestep, s
    v_nom: float = 1.0            # nominal speed, workspace-diagonals/s
    lookahead: float = None       # carrot distance; default from v_nom * dt
    max_steps: int = None

    def __post_init__(self):
        if self.radius < 0 or self.gamma <= 0 or self.dt <= 0 or self.v_nom <= 0:
            raise ValueError("radius >= 0 and gamma, dt, v_nom > 0 required")


@dataclass
class TrajectoryStep:
    t: float
    q: tuple
    v: float
    active_constraints: int
    h_min: float                  # over all corridor walls (measurement)


@dataclass
class Trajectory:
    steps: list[TrajectoryStep]
    reached: bool
    interventions: int            # steps where some clamp reduced the speed

    def min_barrier(self):
        return min(s.h_min for s in self.steps) if self.steps else math.inf

    def max_active_constraints(self):
        return max(s.active_constraints for s in self.steps) if self.steps else 0

    def to_dict(self):
        return {
            "reached": self.reached,
            "interventions": self.interventions,
            "steps": [
                {"t": s.t, "q": list(s.q), "v": s.v,
                 "active_constraints": s.active_constraints, "h_min": s.h_min}
                for s in self.steps
            ],
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")


def barrier_value(q, wall, r):
    """Signed clearance of the disk robot against one wall segment."""
    return geom.point_segment_distance(q, wall[0], wall[1]) - r


def corridor_walls(graph: CellGraph, corridor):
    """Per-cell wall segments: triangle edges that are not portals."""
    tri = graph.source
    out = []
    for c in corridor:
        t = graph.cells[c].ref
        walls = []
        for e in range(3):
            if tri.neighbors[t][e] == -1 or tri.constrained[t][e]:
                u, w = tri.tris[t][(e + 1) % 3], tri.tris[t][(e + 2) % 3]
                walls.append((tri.verts[u], tri.verts[w]))
        out.append(walls)
    return out


def _closest_point_on_segment(q, a, b):
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    if denom == 0.0:
        return a
    t = ((q[0] - ax) * dx + (q[1] - ay) * dy) / denom
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return (ax + t * dx, ay + t * dy)


def _project_progress(path, cum, q, s_hint):
    """Arc-length of the point on the polyline closest to q, searched
    forward from s_hint so progress never runs backwards."""
    best_s, best_d = s_hint, math.inf
    for i in range(len(path) - 1):
        if cum[i + 1] < s_hint - 1e-12:
            continue
        c = _closest_point_on_segment(q, path[i], path[i + 1])
        d = math.dist(q, c)
        s = cum[i] + math.dist(path[i], c)
        if s < s_hint:
            s = s_hint
        if d < best_d - 1e-15:
            best_d, best_s = d, s
    return best_s


def _point_at(path, cum, s):
    if s <= 0.0:
        return path[0]
    if s >= cum[-1]:
        return path[-1]
    for i in range(len(path) - 1):
        if cum[i + 1] >= s:
            seg = cum[i + 1] - cum[i]
            t = 0.0 if seg == 0.0 else (s - cum[i]) / seg
            return (path[i][0] + t * (path[i + 1][0] - path[i][0]),
                    path[i][1] + t * (path[i + 1][1] - path[i][1]))
    return path[-1]


def execute_guarded(path_solution, graph: CellGraph, config: BarrierConfig) -> Trajectory:
    """Track the path under the wall-clearance speed clamp.

    Raises InfeasibleStart if the initial pose already violates a monitored
    barrier. The returned trajectory logs, per step, the commanded speed,
    the number of active (speed-reducing) constraints and the measured
    minimum barrier over all corridor walls.
    """
    corridor = list(path_solution.corridor)
    walls_by_cell = corridor_walls(graph, corridor)
    all_walls = [w for ws in walls_by_cell for w in ws]
    path = [tuple(p) for p in path_solution.waypoints]
    cum = [0.0]
    for i in range(len(path) - 1):
        cum.append(cum[-1] + math.dist(path[i], path[i + 1]))

    diag = graph.diagonal
    v_nom = config.v_nom * diag
    lookahead = config.lookahead
    if lookahead is None:
        lookahead = max(4.0 * v_nom * config.dt, 0.02 * diag)
    arrive_tol = max(1.5 * v_nom * config.dt, 1e-9)
    max_steps = config.max_steps
    if max_steps is None:
        max_steps = int(4.0 * cum[-1] / (v_nom * config.dt)) + 4000

    q = path[0]
    q_g = path[-1]
    s = 0.0
    cell_idx = 0
    tri = graph.source
    steps = []
    interventions = 0
    reached = False

    def locate(idx, point):
        order = [idx, idx + 1, idx - 1, idx + 2]
        order += [i for i in range(len(corridor)) if i not in order]
        for i in order:
            if 0 <= i < len(corridor):
                t = graph.cells[corridor[i]].ref
                if geom.point_in_triangle(point, *tri.tri_points(t)):
                    return i
        return idx

    for step in range(max_steps):
        cell_idx = locate(cell_idx, q)
        candidates = list(walls_by_cell[cell_idx])
        if cell_idx > 0:
            candidates += walls_by_cell[cell_idx - 1]
        if cell_idx + 1 < len(corridor):
            candidates += walls_by_cell[cell_idx + 1]
        candidates.sort(key=lambda w: geom.point_segment_distance(q, w[0], w[1]))
        monitored = candidates[:MAX_MONITORED_WALLS]

        if step == 0 and config.radius > 0.0:
            h0 = min((barrier_value(q, w, config.radius) for w in monitored),
                     default=math.inf)
            if h0 < 0.0:
                raise InfeasibleStart(
                    f"start pose {q} violates wall clearance (h={h0:.6g})")

        carrot = _point_at(path, cum, s + lookahead)
        dx, dy = carrot[0] - q[0], carrot[1] - q[1]
        norm = math.hypot(dx, dy)
        if norm < 1e-15:
            dx, dy = q_g[0] - q[0], q_g[1] - q[1]
            norm = math.hypot(dx, dy)
            if norm < 1e-15:
                norm, dx = 1.0, 1.0
        ux, uy = dx / norm, dy / norm

        v = v_nom
        active = 0
        if config.radius > 0.0:  # barrier degenerates at r = 0: guard passive
            for wall in monitored:
                c = _closest_point_on_segment(q, *wall)
                dist = math.dist(q, c)
                h = dist - config.radius
                if dist <= 1e-15:
                    a = 1.0
                else:
                    a = -((q[0] - c[0]) * ux + (q[1] - c[1]) * uy) / dist
                if a > 1e-12:
                    bound = config.gamma * max(h, 0.0) / a
                    if bound < v_nom:
                        active += 1
                    if bound < v:
                        v = bound
        if active:
            interventions += 1

        h_min = min((barrier_value(q, w, config.radius) for w in all_walls),
                    default=math.inf)
        steps.append(TrajectoryStep(t=step * config.dt, q=q, v=v,
                                    active_constraints=active, h_min=h_min))

        if math.dist(q, q_g) <= arrive_tol:
            reached = True
            break

        q = (q[0] + ux * v * config.dt, q[1] + uy * v * config.dt)
        s = _project_progress(path, cum, q, s)

    return Trajectory(steps=steps, reached=reached, interventions=interventions)
