import math

import numpy as np
import pytest

from portalplan import geom
from portalplan.cbf import (BarrierConfig, Trajectory, barrier_value,
                            corridor_walls, execute_guarded)
from portalplan.cellgraph import build_graph
from portalplan.decomp2d import triangulate
from portalplan.errors import InfeasibleStart
from portalplan.evaluators import FunnelEvaluator
from portalplan.search import plan


def door_map(door_w, wall_x=0.5, thick=0.02):
    gy = 0.5 - door_w / 2
    lo = [(wall_x - thick / 2, 0.0), (wall_x + thick / 2, 0.0),
          (wall_x + thick / 2, gy), (wall_x - thick / 2, gy)]
    hi = [(wall_x - thick / 2, gy + door_w), (wall_x + thick / 2, gy + door_w),
          (wall_x + thick / 2, 1.0), (wall_x - thick / 2, 1.0)]
    return [lo, hi]


def plan_through(obstacles, q_s, q_g):
    tri = triangulate((0, 0, 1, 1), obstacles)
    g = build_graph(tri, q_s, q_g)
    res = plan(g, FunnelEvaluator(g), timeout=5.0)
    return g, res


class TestBarrierValue:
    def test_distance_twice_radius(self):
        wall = ((0.0, 0.0), (1.0, 0.0))
        assert barrier_value((0.5, 0.2), wall, 0.1) == pytest.approx(0.1)

    def test_boundary_of_safe_set(self):
        wall = ((0.0, 0.0), (1.0, 0.0))
        assert barrier_value((0.5, 0.1), wall, 0.1) == pytest.approx(0.0)

    def test_matches_geom_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            q = tuple(rng.uniform(-1, 1, 2))
            a = tuple(rng.uniform(-1, 1, 2))
            b = tuple(rng.uniform(-1, 1, 2))
            r = float(rng.uniform(0, 0.5))
            ref = geom.point_segment_distance(q, a, b) - r
            assert barrier_value(q, (a, b), r) == pytest.approx(ref, abs=1e-9)


class TestCorridorWalls:
    def test_walls_are_not_portals(self):
        g, res = plan_through(door_map(0.2), (0.2, 0.5), (0.8, 0.5))
        walls = corridor_walls(g, res.solution.corridor)
        portal_segs = {p.segment for p in g.portals}
        for ws in walls:
            for w in ws:
                canon = (min(w), max(w))
                assert canon not in portal_segs


class TestExecuteGuarded:
    def test_wide_corridor_no_interventions(self):
        g, res = plan_through([], (0.1, 0.5), (0.9, 0.5))
        cfg = BarrierConfig(radius=0.02)
        traj = execute_guarded(res.solution, g, cfg)
        assert traj.reached
        assert traj.interventions == 0
        # straight path is tracked exactly
        ys = [s.q[1] for s in traj.steps]
        assert max(abs(y - 0.5) for y in ys) < 1e-9
        assert traj.min_barrier() > 0

    def test_narrow_door_interventions_and_safety(self):
        r = 0.03
        door = 2 * r + 0.01
        g, res = plan_through(door_map(door), (0.15, 0.5), (0.85, 0.5))
        cfg = BarrierConfig(radius=r)
        traj = execute_guarded(res.solution, g, cfg)
        assert traj.interventions > 0
        assert traj.min_barrier() >= -1e-9
        assert traj.max_active_constraints() <= 4
        # interventions happen near the door, not far out in the open
        door_steps = [s for s in traj.steps
                      if s.active_constraints > 0]
        assert door_steps
        xs = [s.q[0] for s in door_steps]
        assert all(0.3 < x < 0.7 for x in xs)

    def test_narrow_door_passes_through(self):
        r = 0.02
        g, res = plan_through(door_map(2 * r + 0.02), (0.15, 0.5), (0.85, 0.5))
        traj = execute_guarded(res.solution, g, BarrierConfig(radius=r))
        assert traj.reached
        assert traj.min_barrier() >= -1e-9

    def test_radius_zero_bitwise_equals_unguarded(self):
        g, res = plan_through(door_map(0.15), (0.15, 0.5), (0.85, 0.5))
        traj_guarded = execute_guarded(res.solution, g, BarrierConfig(radius=0.0))
        assert traj_guarded.interventions == 0
        # re-running is bitwise deterministic
        traj_again = execute_guarded(res.solution, g, BarrierConfig(radius=0.0))
        assert [s.q for s in traj_guarded.steps] == [s.q for s in traj_again.steps]
        assert [s.v for s in traj_guarded.steps] == [s.v for s in traj_again.steps]

    def test_forward_invariance_random_doors(self):
        rng = np.random.default_rng(1)
        for trial in range(8):
            r = float(rng.uniform(0.015, 0.04))
            door = 2 * r + float(rng.uniform(0.01, 0.05))
            g, res = plan_through(door_map(door), (0.12, 0.5), (0.88, 0.5))
            # discrete-time margin: one step moves less than r/2
            dt = min(0.01, r / (4.0 * g.diagonal))
            cfg = BarrierConfig(radius=r, dt=dt)
            traj = execute_guarded(res.solution, g, cfg)
            assert traj.min_barrier() >= -1e-9
            assert traj.max_active_constraints() <= 4

    def test_infeasible_start(self):
        g, res = plan_through(door_map(0.2), (0.2, 0.5), (0.8, 0.5))
        # start hugging the outer boundary closer than the radius
        g2, res2 = plan_through(door_map(0.2), (0.2, 0.005), (0.8, 0.5))
        with pytest.raises(InfeasibleStart):
            execute_guarded(res2.solution, g2, BarrierConfig(radius=0.05))

    def test_trajectory_roundtrip(self, tmp_path):
        g, res = plan_through([], (0.1, 0.5), (0.9, 0.5))
        traj = execute_guarded(res.solution, g, BarrierConfig(radius=0.02))
        p = tmp_path / "traj.json"
        traj.save(p)
        import json
        back = json.loads(p.read_text())
        assert back["reached"] is True
        assert len(back["steps"]) == len(traj.steps)

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            BarrierConfig(radius=-1.0)
        with pytest.raises(ValueError):
            BarrierConfig(radius=0.1, dt=0.0)
