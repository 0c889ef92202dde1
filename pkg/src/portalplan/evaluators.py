"""Corridor evaluators: exact 2D string pulling and 3D portal-face sampling.

Both take an ordered cell sequence and return the shortest (2D: exact;
3D: sampled, refined) collision-free path threading the corridor's portals.
Paths stay inside the corridor's cell union by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geom
from .cellgraph import CellGraph
from .errors import MalformedCorridor

DEFAULT_FACE_SAMPLES = 16   # per portal face, a perfect square
DEFAULT_REFINE_ROUNDS = 3


@dataclass
class PathSolution:
    waypoints: list
    length: float
    corridor: tuple
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# 2D funnel
# ---------------------------------------------------------------------------

def funnel(portals, q_s, q_g):
    """Exact shortest path through ordered (left, right) portal pairs.

    `portals` lists each gate as seen walking the corridor: (left, right)
    endpoint tuples. Collinear cases are treated as inside the funnel, so
    degenerate zero-width gates do not insert spurious apexes.
    """
    lefts = [q_s] + [p[0] for p in portals] + [q_g]
    rights = [q_s] + [p[1] for p in portals] + [q_g]
    n = len(lefts)

    pts = [q_s]
    apex, left, right = q_s, q_s, q_s
    apex_i = left_i = right_i = 0
    i = 1
    while i < n:
        lp, rp = lefts[i], rights[i]
        # advance the right boundary
        if geom.orient2d(apex, right, rp) >= 0:
            if apex == right or geom.orient2d(apex, left, rp) <= 0:
                right, right_i = rp, i
            else:  # right chain crossed the left chain: emit left, restart
                if pts[-1] != left:
                    pts.append(left)
                apex, apex_i = left, left_i
                left, right = apex, apex
                left_i = right_i = apex_i
                i = apex_i + 1
                continue
        # advance the left boundary
        if geom.orient2d(apex, left, lp) <= 0:
            if apex == left or geom.orient2d(apex, right, lp) >= 0:
                left, left_i = lp, i
            else:
                if pts[-1] != right:
                    pts.append(right)
                apex, apex_i = right, right_i
                left, right = apex, apex
                left_i = right_i = apex_i
                i = apex_i + 1
                continue
        i += 1
    if pts[-1] != q_g:
        pts.append(q_g)
    return pts


def oriented_portals_2d(graph: CellGraph, corridor):
    """(left, right) endpoint pairs for each gate along the corridor.

    Orientation comes from the source triangle: its CCW-directed shared edge
    (u, w) leaves w on the walker's left when crossing into the next cell.
    """
    tri = graph.source
    out = []
    for a, b in zip(corridor[:-1], corridor[1:]):
        t = graph.cells[a].ref
        t_next = graph.cells[b].ref
        edge = None
        for e in range(3):
            if tri.neighbors[t][e] == t_next:
                u = tri.tris[t][(e + 1) % 3]
                w = tri.tris[t][(e + 2) % 3]
                edge = (tri.verts[w], tri.verts[u])  # (left, right)
                break
        if edge is None:
            raise MalformedCorridor(f"cells {a} and {b} share no portal")
        out.append(edge)
    return out


class FunnelEvaluator:
    """Exact corridor evaluation for 2D triangulations."""

    def __init__(self, graph: CellGraph):
        if graph.dim != 2:
            raise ValueError("FunnelEvaluator requires a 2D graph")
        self.graph = graph

    def __call__(self, corridor) -> PathSolution:
        corridor = tuple(corridor)
        q_s, q_g = self.graph.q_s, self.graph.q_g
        if len(corridor) == 1:
            pts = [q_s, q_g]
        else:
            gates = oriented_portals_2d(self.graph, corridor)
            pts = funnel(gates, q_s, q_g)
        return PathSolution(
            waypoints=pts,
            length=geom.polyline_length(pts),
            corridor=corridor,
            meta={"evaluator": "funnel"},
        )


# ---------------------------------------------------------------------------
# 3D layered DP over sampled portal faces
# ---------------------------------------------------------------------------

def _face_grid(face, n_side):
    u = np.linspace(face.u_range[0], face.u_range[1], n_side)
    v = np.linspace(face.v_range[0], face.v_range[1], n_side)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    pts = np.empty((n_side * n_side, 3))
    ua, va = [a for a in range(3) if a != face.axis]
    pts[:, face.axis] = face.coord
    pts[:, ua] = uu.ravel()
    pts[:, va] = vv.ravel()
    return pts


def _dp_shortest(layers):
    """Forward DP over point layers; returns (cost, waypoint list)."""
    prev_cost = np.zeros(1)
    back = []
    for k in range(1, len(layers)):
        d = np.linalg.norm(layers[k][None, :, :] - layers[k - 1][:, None, :],
                           axis=2)
        total = prev_cost[:, None] + d
        arg = total.argmin(axis=0)
        back.append(arg)
        prev_cost = total[arg, np.arange(total.shape[1])]
    idx = int(prev_cost.argmin())
    path = [layers[-1][idx]]
    for k in range(len(layers) - 2, -1, -1):
        idx = int(back[k][idx]) if k < len(back) else idx
        path.append(layers[k][idx])
    path.reverse()
    return float(prev_cost.min()), [tuple(p) for p in path]


class SampledFaceEvaluator:
    """3D corridor evaluation: grid sampling on portal faces, layered DP,
    then Gaussian re-sampling rounds around the incumbent crossing points."""

    def __init__(self, graph: CellGraph, n_samples=DEFAULT_FACE_SAMPLES,
                 refine_rounds=DEFAULT_REFINE_ROUNDS, rng_seed=0):
        if graph.dim != 3:
            raise ValueError("SampledFaceEvaluator requires a 3D graph")
        n_side = math.isqrt(n_samples)
        if n_side * n_side != n_samples or n_samples < 4:
            raise ValueError("n_samples must be a perfect square >= 4")
        if refine_rounds < 0:
            raise ValueError("refine_rounds must be >= 0")
        self.graph = graph
        self.n_samples = n_samples
        self.n_side = n_side
        self.refine_rounds = refine_rounds
        self.rng_seed = rng_seed

    def _faces(self, corridor):
        faces = []
        for a, b in zip(corridor[:-1], corridor[1:]):
            pid = self.graph.portal_between(a, b)
            if pid is None:
                raise MalformedCorridor(f"cells {a} and {b} share no portal")
            faces.append(self.graph.portals[pid].face)
        return faces

    def __call__(self, corridor) -> PathSolution:
        corridor = tuple(corridor)
        q_s = np.asarray(self.graph.q_s)
        q_g = np.asarray(self.graph.q_g)
        if len(corridor) == 1:
            pts = [tuple(q_s), tuple(q_g)]
            return PathSolution(waypoints=pts, length=float(np.linalg.norm(q_g - q_s)),
                                corridor=corridor,
                                meta={"evaluator": "face-dp", "samples": 0,
                                      "refine_rounds": 0})
        faces = self._faces(corridor)
        layers = [q_s[None, :]]
        layers += [_face_grid(f, self.n_side) for f in faces]
        layers.append(q_g[None, :])
        cost, path = _dp_shortest(layers)

        rng = np.random.default_rng((self.rng_seed, 0xFACE, *corridor))
        rounds_used = 0
        for r in range(self.refine_rounds):
            new_layers = [q_s[None, :]]
            for k, f in enumerate(faces):
                incumbent = np.asarray(path[k + 1])
                sigma = min(f.u_range[1] - f.u_range[0],
                            f.v_range[1] - f.v_range[0]) / 4.0 / (2.0 ** r)
                cand = np.repeat(incumbent[None, :], self.n_samples, axis=0)
                ua, va = [a for a in range(3) if a != f.axis]
                noise = rng.normal(0.0, sigma, (self.n_samples - 1, 2))
                cand[1:, ua] = np.clip(incumbent[ua] + noise[:, 0],
                                       f.u_range[0], f.u_range[1])
                cand[1:, va] = np.clip(incumbent[va] + noise[:, 1],
                                       f.v_range[0], f.v_range[1])
                new_layers.append(cand)
            new_layers.append(q_g[None, :])
            new_cost, new_path = _dp_shortest(new_layers)
            rounds_used += 1
            if new_cost <= cost:  # incumbent retained, so this always holds
                cost, path = new_cost, new_path
        return PathSolution(
            waypoints=path, length=cost, corridor=corridor,
            meta={"evaluator": "face-dp", "samples": self.n_samples,
                  "refine_rounds": rounds_used},
        )
