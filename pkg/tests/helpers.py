"""Shared test utilities: weight factories and graph builders."""

import math

import numpy as np

from portalplan.cellgraph import (FEATURE_VERSION_2D, FEATURE_VERSION_3D,
                                  build_graph)
from portalplan.decomp2d import triangulate
from portalplan.decomp3d import slab_decompose
from portalplan.gnn import GnnWeights, expected_shapes


def make_header(arch, d_n, d_e, hidden=16, num_layers=3, heads=4):
    header = {
        "schema_version": 1,
        "arch": arch,
        "d_n": d_n,
        "d_e": d_e,
        "hidden": hidden,
        "num_layers": num_layers,
        "feature_packing": FEATURE_VERSION_2D if arch == "gcn2d"
        else FEATURE_VERSION_3D,
        "norm_eps": 1e-5,
        "residual": "post-activation-two-back",
        "canonical_direction": "centroid-lex",
    }
    if arch == "gatv2_3d":
        header["heads"] = heads
        header["leaky_relu_slope"] = 0.2
    return header


def make_random_weights(arch, d_n, d_e, hidden=16, num_layers=3, heads=4,
                        seed=0):
    header = make_header(arch, d_n, d_e, hidden, num_layers, heads)
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in expected_shapes(header).items():
        if name.endswith(".gamma"):
            arr = rng.uniform(0.8, 1.2, shape)
        elif name.endswith(".beta") or name.endswith(".mean"):
            arr = rng.normal(0.0, 0.1, shape)
        elif name.endswith(".var"):
            arr = rng.uniform(0.5, 1.5, shape)
        else:
            arr = rng.normal(0.0, 0.4, shape)
        tensors[name] = arr
    return GnnWeights(header=header, tensors=tensors)


def make_zero_weights(arch, d_n, d_e, hidden=16, num_layers=3, heads=4):
    header = make_header(arch, d_n, d_e, hidden, num_layers, heads)
    tensors = {name: np.zeros(shape)
               for name, shape in expected_shapes(header).items()}
    return GnnWeights(header=header, tensors=tensors)


def two_cell_graph_2d(qs=(0.1, 0.1), qg=(0.9, 0.9)):
    return build_graph(triangulate((0, 0, 1, 1), []), qs, qg)


def synthetic_graph(n, edge_pairs, seed=0, start=0, goal=None):
    """Abstract CellGraph for search tests: random centroids, given edges."""
    from portalplan.cellgraph import Cell, CellGraph, Portal

    rng = np.random.default_rng(seed)
    centroids = rng.uniform(0.0, 1.0, (n, 2))
    cells = [Cell(id=i, centroid=tuple(centroids[i]), measure=1.0,
                  aspect=1.0, clearance=0.1) for i in range(n)]
    portals = []
    adjacency = [[] for _ in range(n)]
    for (i, j) in sorted(set((min(a, b), max(a, b)) for a, b in edge_pairs)):
        if i == j:
            continue
        mid = tuple(0.5 * (centroids[i] + centroids[j]))
        a = tuple(centroids[i])
        b = tuple(centroids[j])
        pid = len(portals)
        portals.append(Portal(id=pid, cells=(i, j), midpoint=mid, size=1.0,
                              clearance=0.1, segment=(min(a, b), max(a, b))))
        adjacency[i].append((j, pid))
        adjacency[j].append((i, pid))
    for row in adjacency:
        row.sort()
    for c in cells:
        c.n_neighbors = len(adjacency[c.id])
    return CellGraph(
        dim=2, cells=cells, portals=portals, adjacency=adjacency,
        node_features=np.zeros((n, 11)),
        edge_features=np.zeros((len(portals), 9)),
        start_cell=start, goal_cell=n - 1 if goal is None else goal,
        q_s=tuple(centroids[start]),
        q_g=tuple(centroids[n - 1 if goal is None else goal]),
        diagonal=math.sqrt(2.0), feature_version="2d-v1")


def small_graph_3d():
    d = slab_decompose(((0, 0, 0), (1, 1, 1)),
                       [((0.4, 0.4, 0.4), (0.6, 0.6, 0.6))])
    return build_graph(d, (0.05, 0.05, 0.05), (0.95, 0.95, 0.95))
