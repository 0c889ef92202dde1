import math

import numpy as np
import pytest

from portalplan.cellgraph import build_graph
from portalplan.decomp2d import triangulate
from portalplan.errors import NoCorridor, NoSolution
from portalplan.evaluators import FunnelEvaluator
from portalplan.scenarios import ScenarioSpec, generate, post_validate
from portalplan.search import (EdgeWeighting, informative_portal_mask,
                               modulated_weight, plan, yen_k_shortest)

from helpers import make_random_weights, synthetic_graph
from oracles import k_shortest_oracle


class TestModulatedWeight:
    def test_zero_score_recovers_base(self):
        assert modulated_weight(1.0, 0.0, 5.0) == 1.0

    def test_frozen_value(self):
        # 2 * e^-3, frozen from an independent evaluation
        assert modulated_weight(2.0, 1.0, 3.0) == \
            pytest.approx(0.09957413673572789, rel=1e-12)

    def test_beta_zero_disables_guidance(self):
        assert modulated_weight(1.0, 0.5, 0.0) == 1.0

    def test_positivity_and_continuity(self):
        rng = np.random.default_rng(0)
        d = rng.uniform(1e-6, 10.0, 100_000)
        s = rng.uniform(0.0, 1.0, 100_000)
        beta = rng.uniform(0.0, 10.0, 100_000)
        w = d * np.exp(-beta * s)
        assert (w > 0.0).all()
        # continuity in the score: small perturbation, small change
        eps = 1e-9
        w2 = d * np.exp(-beta * np.clip(s + eps, 0, 1))
        assert np.abs(w2 - w).max() <= 10.0 * 10.0 * eps + 1e-12


class TestYen:
    def test_same_cell_query(self):
        g = synthetic_graph(3, [(0, 1), (1, 2)], start=1, goal=1)
        out = yen_k_shortest(g, EdgeWeighting.from_graph(g), k=3)
        assert len(out) == 1
        assert out[0].cells == (1,)
        assert out[0].cost == 0.0

    def test_diamond_lexicographic_tie_break(self):
        # 0 -> {1, 2} -> 3 with symmetric geometry: both paths cost equal
        from portalplan.cellgraph import Cell, CellGraph, Portal
        cents = [(0.0, 0.0), (0.5, 0.4), (0.5, -0.4), (1.0, 0.0)]
        g = synthetic_graph(4, [(0, 1), (0, 2), (1, 3), (2, 3)])
        for c, pos in zip(g.cells, cents):
            c.centroid = pos
        out = yen_k_shortest(g, EdgeWeighting.from_graph(g), k=2)
        assert [c.cells for c in out] == [(0, 1, 3), (0, 2, 3)]
        assert out[0].cost == out[1].cost

    def test_unreachable_goal(self):
        g = synthetic_graph(4, [(0, 1), (2, 3)])
        with pytest.raises(NoCorridor):
            yen_k_shortest(g, EdgeWeighting.from_graph(g), k=2)

    def test_random_graphs_match_exhaustive_enumeration(self):
        rng = np.random.default_rng(1)
        for trial in range(120):
            n = int(rng.integers(4, 13))
            p_edge = 2.5 / n
            edges = [(i, j) for i in range(n) for j in range(i + 1, n)
                     if rng.random() < p_edge]
            g = synthetic_graph(n, edges, seed=trial)
            w = EdgeWeighting.from_graph(g)
            k = int(rng.integers(1, 7))
            expected = k_shortest_oracle(g, w.values(), k)
            if not expected:
                with pytest.raises(NoCorridor):
                    yen_k_shortest(g, w, k)
                continue
            got = yen_k_shortest(g, w, k)
            assert [c.cost for c in got] == [c for c, _ in expected]
            assert [c.cells for c in got] == [p for _, p in expected]

    def test_portal_filter_restricts(self):
        g = synthetic_graph(4, [(0, 1), (1, 3), (0, 2), (2, 3)])
        w = EdgeWeighting.from_graph(g)
        full = yen_k_shortest(g, w, k=4)
        assert len(full) == 2
        # ban the portal used by the best corridor
        best = full[0].cells
        banned_pid = g.portal_between(best[0], best[1])
        mask = np.ones(len(g.portals), dtype=bool)
        mask[banned_pid] = False
        restricted = yen_k_shortest(g, w, k=4, portal_filter=mask)
        assert len(restricted) == 1
        assert restricted[0].cells != best

    def test_beta_zero_matches_unscored_bitwise(self):
        g = synthetic_graph(10, [(i, j) for i in range(10)
                                 for j in range(i + 1, 10)
                                 if (i * 7 + j) % 3 == 0], seed=5)
        scores = np.random.default_rng(2).uniform(0, 1, len(g.portals))
        w_plain = EdgeWeighting.from_graph(g)
        w_zero = EdgeWeighting.from_graph(g, scores=scores, beta=0.0)
        a = yen_k_shortest(g, w_plain, k=5)
        b = yen_k_shortest(g, w_zero, k=5)
        assert [c.cells for c in a] == [c.cells for c in b]
        assert [c.cost for c in a] == [c.cost for c in b]


def planner_setup(family="forest", seed=0, qs=(0.05, 0.05), qg=(0.95, 0.95)):
    m = generate(ScenarioSpec(family=family, seed=seed))
    tri = triangulate(m.bounds, m.obstacles)
    g = build_graph(tri, qs, qg)
    return m, g, FunnelEvaluator(g)


class TestPlan:
    def test_same_cell_straight_segment(self):
        tri = triangulate((0, 0, 1, 1), [])
        g = build_graph(tri, (0.2, 0.1), (0.6, 0.1))
        res = plan(g, FunnelEvaluator(g), timeout=2.0)
        assert res.cost == pytest.approx(0.4, abs=1e-12)
        assert len(res.solution.waypoints) == 2

    def test_cost_lower_bound(self):
        for seed in range(5):
            m, g, ev = planner_setup(seed=seed)
            res = plan(g, ev, timeout=5.0)
            assert res.cost >= math.dist(g.q_s, g.q_g) - 1e-12

    def test_no_solution_when_disconnected(self):
        wall = [(0.45, 0.0), (0.55, 0.0), (0.55, 1.0), (0.45, 1.0)]
        tri = triangulate((0, 0, 1, 1), [wall])
        g = build_graph(tri, (0.2, 0.5), (0.8, 0.5))
        with pytest.raises(NoSolution):
            plan(g, FunnelEvaluator(g), timeout=1.0)

    def test_trace_strictly_decreasing_and_counters(self):
        for seed in (1, 3, 7):
            m, g, ev = planner_setup(family="labyrinth", seed=seed)
            res = plan(g, ev, k=6, timeout=10.0)
            costs = [c for _t, c in res.trace]
            assert all(a > b for a, b in zip(costs, costs[1:]))
            times = [t for t, _c in res.trace]
            assert all(a <= b for a, b in zip(times, times[1:]))
            # every corridor evaluated at most once
            total = res.counters["phase1_evaluated"] + res.counters["phase2_evaluated"]
            assert total <= res.counters["phase1_enumerated"] + \
                res.counters["phase2_enumerated"]
            assert res.counters["budget_exhausted"] or res.counters["timed_out"]

    def test_phase2_terminates_before_timeout_on_static_maps(self):
        m, g, ev = planner_setup(family="forest", seed=2)
        res = plan(g, ev, k=4, timeout=30.0)
        assert res.counters["budget_exhausted"]
        assert not res.counters["timed_out"]

    def test_final_path_portals_satisfy_ellipsoid(self):
        for seed in (0, 4):
            m, g, ev = planner_setup(family="labyrinth", seed=seed)
            res = plan(g, ev, timeout=10.0)
            mask = informative_portal_mask(g, res.cost)
            cells = res.solution.corridor
            for a, b in zip(cells[:-1], cells[1:]):
                assert mask[g.portal_between(a, b)]

    def test_guided_vs_unguided_same_weights_beta_zero(self):
        m, g, ev = planner_setup(family="forest", seed=5)
        w = make_random_weights("gcn2d", 11, 9, hidden=16, seed=0)
        res_guided = plan(g, ev, weights=w, beta=0.0, timeout=5.0)
        m2, g2, ev2 = planner_setup(family="forest", seed=5)
        res_plain = plan(g2, ev2, weights=None, timeout=5.0)
        assert res_guided.cost == res_plain.cost
        assert res_guided.solution.waypoints == res_plain.solution.waypoints
        assert res_guided.counters["phase1_enumerated"] == \
            res_plain.counters["phase1_enumerated"]

    def test_completeness_random_solvable_maps(self):
        solved = 0
        for seed in range(20):
            m, g, ev = planner_setup(family="forest", seed=seed)
            res = plan(g, ev, k=4, timeout=10.0)
            assert post_validate(res.solution.waypoints, m, 200) == 0
            solved += 1
        assert solved == 20

    def test_scorer_failure_degrades_gracefully(self):
        m, g, ev = planner_setup(family="forest", seed=6)
        w = make_random_weights("gcn2d", 11, 9, hidden=16, seed=0)
        w.tensors["edge_mlp.2.weight"] = w.tensors["edge_mlp.2.weight"] * np.nan
        with pytest.warns(UserWarning):
            res = plan(g, ev, weights=w, timeout=5.0)
        assert res.warnings
        assert np.all(res.scores == 0.0)
        assert res.solution is not None
