"""Two-phase corridor search over the cell graph.

Phase 1 enumerates k loopless shortest corridors under score-modulated edge
weights and evaluates each one. Phase 2 repeatedly restricts the portal set
to those whose best-case focal sum fits inside the current best path cost,
re-enumerates with a growing budget, and evaluates only unseen corridors.
"""

from __future__ import annotations

import heapq
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import geom
from .cellgraph import CellGraph
from .errors import NoCorridor, NonFiniteActivation, NoSolution
from .evaluators import PathSolution
from . import gnn

DEFAULT_K_2D = 8
DEFAULT_K_3D_GUIDED = 16
DEFAULT_K_3D_UNGUIDED = 32
DEFAULT_BETA = 3.0
DEFAULT_TIMEOUT_S = 10.0


def modulated_weight(d, score, beta):
    """Positive, continuous edge weight d * exp(-beta * score)."""
    return d * math.exp(-beta * score)


@dataclass
class EdgeWeighting:
    """Per-portal weights: centroid distance shrunk by scored confidence."""

    base: np.ndarray     # centroid distance per portal
    scores: np.ndarray   # in [0, 1]
    beta: float

    @classmethod
    def from_graph(cls, g: CellGraph, scores=None, beta=DEFAULT_BETA):
        base = np.array([g.centroid_distance(*p.cells) for p in g.portals])
        if scores is None:
            scores = np.zeros(len(g.portals))
        return cls(base=base, scores=np.asarray(scores, dtype=float), beta=beta)

    def values(self):
        return self.base * np.exp(-self.beta * self.scores)


@dataclass
class Corridor:
    cells: tuple
    cost: float


@dataclass
class PlanResult:
    solution: PathSolution | None
    cost: float
    phase: int
    trace: list                  # (elapsed_seconds, cost) per improvement
    counters: dict
    warnings: list = field(default_factory=list)
    scores: np.ndarray | None = None
    evaluated: list = field(default_factory=list)  # (cells, path length)


def _dijkstra(adj, wvals, src, dst, banned_nodes, banned_edges, allowed):
    """Deterministic shortest path; returns (cost, path tuple) or None."""
    n = len(adj)
    dist = [math.inf] * n
    parent = [-1] * n
    dist[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        if u == dst:
            break
        for v, pid in adj[u]:
            if allowed is not None and not allowed[pid]:
                continue
            if v in banned_nodes or (u, v) in banned_edges:
                continue
            nd = d + wvals[pid]
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    if not math.isfinite(dist[dst]):
        return None
    path = [dst]
    while path[-1] != src:
        path.append(parent[path[-1]])
    path.reverse()
    return dist[dst], tuple(path)


def yen_k_shortest(g: CellGraph, weighting: EdgeWeighting, k,
                   portal_filter=None) -> list[Corridor]:
    """Up to k loopless shortest corridors, nondecreasing cost.

    Equal-cost corridors are ordered by their cell-id sequence. The optional
    portal_filter is a boolean mask (or predicate on Portal) restricting
    which portals may be traversed.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    allowed = None
    if portal_filter is not None:
        if callable(portal_filter):
            allowed = np.array([bool(portal_filter(p)) for p in g.portals])
        else:
            allowed = np.asarray(portal_filter, dtype=bool)
    wvals = weighting.values()
    src, dst = g.start_cell, g.goal_cell

    first = _dijkstra(g.adjacency, wvals, src, dst, frozenset(), frozenset(),
                      allowed)
    if first is None:
        raise NoCorridor(f"goal cell {dst} unreachable from {src}")
    found = [first]
    seen = {first[1]}
    candidates = []  # heap of (cost, path)
    in_candidates = set()

    while len(found) < k:
        prev_cost, prev_path = found[-1]
        prefix_cost = 0.0
        for i in range(len(prev_path) - 1):
            spur = prev_path[i]
            root = prev_path[: i + 1]
            banned_edges = set()
            for c, p in found:
                if len(p) > i and p[: i + 1] == root:
                    banned_edges.add((spur, p[i + 1]))
            banned_nodes = frozenset(root[:-1])
            res = _dijkstra(g.adjacency, wvals, spur, dst, banned_nodes,
                            banned_edges, allowed)
            if res is not None:
                total = (prefix_cost + res[0], root[:-1] + res[1])
                if total[1] not in seen and total[1] not in in_candidates:
                    heapq.heappush(candidates, total)
                    in_candidates.add(total[1])
            pid = g.portal_between(prev_path[i], prev_path[i + 1])
            prefix_cost += wvals[pid]
        if not candidates:
            break
        nxt = heapq.heappop(candidates)
        in_candidates.discard(nxt[1])
        found.append(nxt)
        seen.add(nxt[1])

    # canonical cost: left-to-right portal weight sum, independent of the
    # spur bookkeeping above, so equal corridors always cost bit-equal
    out = []
    for _c, p in found:
        cost = 0.0
        for a, b in zip(p[:-1], p[1:]):
            cost += wvals[g.portal_between(a, b)]
        out.append(Corridor(cells=p, cost=cost))
    out.sort(key=lambda c: (c.cost, c.cells))
    return out


def informative_portal_mask(g: CellGraph, c_best) -> np.ndarray:
    """Portals whose minimum focal sum fits inside the current best cost.

    The focal sums are upper bounds resolved to the convex-minimisation
    tolerance, so the comparison carries that slack: a portal on an optimal
    path is never pruned.
    """
    if not g.portals:
        return np.zeros(0, dtype=bool)
    if g.dim == 2:
        a = np.array([p.segment[0] for p in g.portals])
        b = np.array([p.segment[1] for p in g.portals])
        sums = geom.batch_ellipse_min_segments(a, b, g.q_s, g.q_g)
    else:
        c0, du, dv = [], [], []
        for p in g.portals:
            c, u, v = p.face.corner_and_edges()
            c0.append(c)
            du.append(u)
            dv.append(v)
        sums = geom.batch_ellipse_min_rects(c0, du, dv, g.q_s, g.q_g)
    return sums <= c_best + geom.CONVEX_MIN_TOL


def plan(g: CellGraph, evaluator, weights=None, k=None, beta=DEFAULT_BETA,
         timeout=DEFAULT_TIMEOUT_S) -> PlanResult:
    """Two-phase corridor search; returns the best evaluated path.

    Phase 1: score portals (when weights are given), enumerate k corridors,
    evaluate all. Phase 2: filter portals against the shrinking best-cost
    ellipsoid and re-enumerate with budget k' (doubled on non-improving
    iterations up to 4k, which ends the loop). The timeout is checked
    between corridor evaluations only.
    """
    t0 = time.perf_counter()
    if k is None:
        k = DEFAULT_K_2D if g.dim == 2 else (
            DEFAULT_K_3D_GUIDED if weights is not None else DEFAULT_K_3D_UNGUIDED)

    warn_list = []
    scores = np.zeros(len(g.portals))
    if weights is not None:
        try:
            scores = gnn.score_portals(g, weights)
        except NonFiniteActivation as exc:
            warn_list.append(f"scorer failed, degrading to unscored: {exc}")
            warnings.warn(warn_list[-1])
            scores = np.zeros(len(g.portals))
    gnn.apply_scores(g, scores)
    weighting = EdgeWeighting.from_graph(g, scores=scores, beta=beta)

    counters = {
        "phase1_enumerated": 0, "phase1_evaluated": 0,
        "phase2_enumerated": 0, "phase2_evaluated": 0,
        "phase2_iterations": 0, "budget_exhausted": False,
        "timed_out": False,
    }
    best = None
    best_cost = math.inf
    best_phase = 0
    trace = []
    evaluated = set()
    evaluated_log = []

    def elapsed():
        return time.perf_counter() - t0

    # ---- phase 1 ----
    try:
        corridors = yen_k_shortest(g, weighting, k)
    except NoCorridor as exc:
        raise NoSolution(str(exc)) from exc
    counters["phase1_enumerated"] = len(corridors)
    for idx, cor in enumerate(corridors):
        if counters["phase1_evaluated"] and elapsed() >= timeout:
            counters["timed_out"] = True
            break
        sol = evaluator(cor.cells)
        evaluated.add(cor.cells)
        evaluated_log.append((cor.cells, sol.length))
        counters["phase1_evaluated"] += 1
        if sol.length < best_cost:
            best, best_cost, best_phase = sol, sol.length, 1
            sol.meta.update(phase=1, corridor_index=idx)
            trace.append((elapsed(), best_cost))
    counters["phase1_elapsed_s"] = elapsed()

    # ---- phase 2 ----
    k_prime = k
    while elapsed() < timeout and not counters["timed_out"]:
        counters["phase2_iterations"] += 1
        mask = informative_portal_mask(g, best_cost)
        try:
            corridors = yen_k_shortest(g, weighting, k_prime, portal_filter=mask)
        except NoCorridor:
            corridors = []
        counters["phase2_enumerated"] += len(corridors)
        improved = False
        for idx, cor in enumerate(corridors):
            if cor.cells in evaluated:
                continue
            if elapsed() >= timeout:
                counters["timed_out"] = True
                break
            sol = evaluator(cor.cells)
            evaluated.add(cor.cells)
            evaluated_log.append((cor.cells, sol.length))
            counters["phase2_evaluated"] += 1
            if sol.length < best_cost:
                best, best_cost, best_phase = sol, sol.length, 2
                sol.meta.update(phase=2, corridor_index=idx)
                trace.append((elapsed(), best_cost))
                improved = True
        if not improved:
            k_prime = min(2 * k_prime, 4 * k)
            if k_prime == 4 * k:
                counters["budget_exhausted"] = True
                break

    if best is None:
        raise NoSolution("no corridor could be evaluated before the timeout")
    return PlanResult(solution=best, cost=best_cost, phase=best_phase,
                      trace=trace, counters=counters, warnings=warn_list,
                      scores=scores, evaluated=evaluated_log)
