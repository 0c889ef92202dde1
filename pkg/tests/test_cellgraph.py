import json
import math

import numpy as np
import pytest

from portalplan import geom
from portalplan.cellgraph import (EDGE_DIM_2D, EDGE_DIM_3D, NODE_DIM_2D,
                                  NODE_DIM_3D, build_graph, graph_to_dict)
from portalplan.decomp2d import triangulate
from portalplan.decomp3d import slab_decompose
from portalplan.errors import GoalInObstacle, StartInObstacle
from portalplan.scenarios import ScenarioSpec, generate


def simple_graph():
    tri = triangulate((0, 0, 1, 1), [])
    return build_graph(tri, (0.1, 0.1), (0.9, 0.9))


class TestBuildGraph2D:
    def test_two_triangles_one_portal(self):
        g = simple_graph()
        assert g.n_cells == 2
        assert len(g.portals) == 1
        assert len(g.directed_edges()) == 2
        assert g.node_features.shape == (2, NODE_DIM_2D)
        assert g.edge_features.shape == (1, EDGE_DIM_2D)

    def test_start_goal_flags(self):
        g = simple_graph()
        assert g.node_features[g.start_cell, 7] == 1.0
        assert g.node_features[g.goal_cell, 8] == 1.0
        others = [i for i in range(g.n_cells) if i != g.start_cell]
        assert all(g.node_features[i, 7] == 0.0 for i in others)

    def test_portal_parallel_to_query_line_angle(self):
        # portal along the diagonal, query line parallel to it
        g_par = build_graph(triangulate((0, 0, 1, 1), []), (0.2, 0.1), (0.9, 0.8))
        theta = g_par.edge_features[0, 6]
        assert math.isclose(math.sin(theta), 0.0, abs_tol=1e-12)

    def test_in_obstacle_errors(self):
        hole = [(0.4, 0.4), (0.6, 0.4), (0.6, 0.6), (0.4, 0.6)]
        tri = triangulate((0, 0, 1, 1), [hole])
        with pytest.raises(StartInObstacle):
            build_graph(tri, (0.5, 0.5), (0.9, 0.9))
        with pytest.raises(GoalInObstacle):
            build_graph(tri, (0.1, 0.1), (0.5, 0.5))

    def test_clearance_single_edge_oracle(self):
        hole = [(0.4, 0.4), (0.6, 0.4), (0.6, 0.6), (0.4, 0.6)]
        tri = triangulate((0, 0, 1, 1), [hole])
        g = build_graph(tri, (0.1, 0.1), (0.9, 0.9))
        wall_segs = [(hole[i], hole[(i + 1) % 4]) for i in range(4)]
        x0, y0, x1, y1 = 0, 0, 1, 1
        boundary = [((x0, y0), (x1, y0)), ((x1, y0), (x1, y1)),
                    ((x1, y1), (x0, y1)), ((x0, y1), (x0, y0))]
        for c in g.cells:
            ref = min(geom.point_segment_distance(c.centroid, a, b)
                      for a, b in wall_segs + boundary)
            assert c.clearance == pytest.approx(ref, abs=1e-12)

    def test_empty_map_clearance_is_boundary_distance(self):
        g = simple_graph()
        for c in g.cells:
            x, y = c.centroid
            ref = min(x, y, 1 - x, 1 - y)
            assert c.clearance == pytest.approx(ref, abs=1e-12)

    def test_graph_connectivity_matches_decomposition(self):
        m = generate(ScenarioSpec(family="labyrinth", seed=3))
        tri = triangulate(m.bounds, m.obstacles)
        g = build_graph(tri, (0.05, 0.05), (0.95, 0.95))
        # BFS over the graph reaches the same cell set as a triangle flood fill
        seen = {g.start_cell}
        stack = [g.start_cell]
        while stack:
            for nb, _pid in g.adjacency[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        tri_seen = {g.cells[g.start_cell].ref}
        stack = [g.cells[g.start_cell].ref]
        while stack:
            t = stack.pop()
            for e in range(3):
                nb = tri.neighbors[t][e]
                if nb >= 0 and tri.free[nb] and not tri.constrained[t][e] \
                        and nb not in tri_seen:
                    tri_seen.add(nb)
                    stack.append(nb)
        assert {g.cells[c].ref for c in seen} == tri_seen

    def test_features_finite_fuzz(self):
        # fuzz across families and seeds: no NaN/Inf in any feature matrix
        count = 0
        for fam in ("forest", "labyrinth", "bottleneck2d", "multi_room"):
            for seed in range(12):
                m = generate(ScenarioSpec(family=fam, seed=seed))
                tri = triangulate(m.bounds, m.obstacles)
                g = build_graph(tri, (0.05, 0.05), (0.95, 0.95))
                assert np.isfinite(g.node_features).all()
                assert np.isfinite(g.edge_features).all()
                count += 1
        assert count == 48

    def test_aspect_ratio_at_least_one(self):
        m = generate(ScenarioSpec(family="forest", seed=2))
        tri = triangulate(m.bounds, m.obstacles)
        g = build_graph(tri, (0.05, 0.05), (0.95, 0.95))
        assert (g.node_features[:, 6] >= 1.0 - 1e-12).all()

    def test_theta_wrapped(self):
        m = generate(ScenarioSpec(family="forest", seed=6))
        tri = triangulate(m.bounds, m.obstacles)
        g = build_graph(tri, (0.05, 0.05), (0.95, 0.95))
        assert (np.abs(g.edge_features[:, 6]) <= math.pi + 1e-12).all()


class TestBuildGraph3D:
    def test_dims_and_flags(self):
        d = slab_decompose(((0, 0, 0), (1, 1, 1)),
                           [((0.4, 0.4, 0.4), (0.6, 0.6, 0.6))])
        g = build_graph(d, (0.05, 0.05, 0.05), (0.95, 0.95, 0.95))
        assert g.node_features.shape == (g.n_cells, NODE_DIM_3D)
        assert g.edge_features.shape == (len(g.portals), EDGE_DIM_3D)
        assert g.node_features[g.start_cell, 8] == 1.0
        assert g.node_features[g.goal_cell, 9] == 1.0
        assert np.isfinite(g.node_features).all()
        assert np.isfinite(g.edge_features).all()

    def test_normal_axis_one_hot(self):
        d = slab_decompose(((0, 0, 0), (1, 1, 1)),
                           [((0.4, 0.4, 0.4), (0.6, 0.6, 0.6))])
        g = build_graph(d, (0.05, 0.05, 0.05), (0.95, 0.95, 0.95))
        onehot = g.edge_features[:, 9:12]
        assert (onehot.sum(axis=1) == 1.0).all()
        for p in g.portals:
            assert onehot[p.id, p.face.axis] == 1.0

    def test_portal_twice_as_directed_edges(self):
        d = slab_decompose(((0, 0, 0), (1, 1, 1)),
                           [((0.4, 0.4, 0.4), (0.6, 0.6, 0.6))])
        g = build_graph(d, (0.05, 0.05, 0.05), (0.95, 0.95, 0.95))
        edges = g.directed_edges()
        assert len(edges) == 2 * len(g.portals)
        assert {(u, v) for u, v, _ in edges} == \
               {(v, u) for u, v, _ in edges}


class TestExport:
    def test_graph_to_dict_roundtrips_as_json(self):
        g = simple_graph()
        d = graph_to_dict(g)
        blob = json.dumps(d)
        back = json.loads(blob)
        assert back["dim"] == 2
        assert back["feature_packing"] == "2d-v1"
        assert len(back["node_features"]) == g.n_cells
        assert len(back["portals"]) == len(g.portals)
        assert back["node_features"] == g.node_features.tolist()
