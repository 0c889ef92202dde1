"""Workspace map containers and their JSON wire format.

2D maps: {"dim": 2, "bounds": [xmin, ymin, xmax, ymax],
          "obstacles": [{"polygon": [[x, y], ...]}, ...]}
3D maps: {"dim": 3, "bounds": {"min": [...], "max": [...]},
          "obstacles": [{"min": [...], "max": [...]}, ...]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import geom
from .errors import InvalidSpec


@dataclass
class Map2D:
    bounds: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    obstacles: list[list[tuple[float, float]]] = field(default_factory=list)

    @property
    def dim(self):
        return 2

    def diagonal(self):
        x0, y0, x1, y1 = self.bounds
        return math.hypot(x1 - x0, y1 - y0)

    def obstacle_edges(self):
        """All obstacle boundary edges as (m, 2, 2) arrays (a, b)."""
        a, b = [], []
        for poly in self.obstacles:
            n = len(poly)
            for i in range(n):
                a.append(poly[i])
                b.append(poly[(i + 1) % n])
        if not a:
            return np.zeros((0, 2)), np.zeros((0, 2))
        return np.asarray(a, dtype=float), np.asarray(b, dtype=float)

    def boundary_edges(self):
        x0, y0, x1, y1 = self.bounds
        corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        a = np.asarray(corners, dtype=float)
        b = np.asarray(corners[1:] + corners[:1], dtype=float)
        return a, b

    def point_in_obstacle(self, p, boundary=False):
        return any(geom.point_in_polygon(p, poly, boundary=boundary)
                   for poly in self.obstacles)

    def to_dict(self):
        return {
            "dim": 2,
            "bounds": list(self.bounds),
            "obstacles": [{"polygon": [list(v) for v in poly]}
                          for poly in self.obstacles],
        }


@dataclass
class Map3D:
    bounds: tuple[tuple[float, float, float], tuple[float, float, float]]  # (min, max)
    obstacles: list[tuple[tuple[float, float, float], tuple[float, float, float]]] = \
        field(default_factory=list)

    @property
    def dim(self):
        return 3

    def diagonal(self):
        lo, hi = self.bounds
        return math.dist(lo, hi)

    def point_in_obstacle(self, p, boundary=False):
        for lo, hi in self.obstacles:
            if boundary:
                inside = all(l <= x <= h for x, l, h in zip(p, lo, hi))
            else:
                inside = all(l < x < h for x, l, h in zip(p, lo, hi))
            if inside:
                return True
        return False

    def to_dict(self):
        return {
            "dim": 3,
            "bounds": {"min": list(self.bounds[0]), "max": list(self.bounds[1])},
            "obstacles": [{"min": list(lo), "max": list(hi)}
                          for lo, hi in self.obstacles],
        }


def map_from_dict(data):
    try:
        dim = data["dim"]
        if dim == 2:
            x0, y0, x1, y1 = data["bounds"]
            obstacles = [[tuple(map(float, v)) for v in o["polygon"]]
                         for o in data.get("obstacles", [])]
            return Map2D((float(x0), float(y0), float(x1), float(y1)), obstacles)
        if dim == 3:
            lo = tuple(map(float, data["bounds"]["min"]))
            hi = tuple(map(float, data["bounds"]["max"]))
            obstacles = [(tuple(map(float, o["min"])), tuple(map(float, o["max"])))
                         for o in data.get("obstacles", [])]
            return Map3D((lo, hi), obstacles)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSpec(f"malformed map JSON: {exc}") from exc
    raise InvalidSpec(f"unsupported map dim {data.get('dim')!r}")


def load_map(path):
    with open(path, "r", encoding="utf-8") as fh:
        return map_from_dict(json.load(fh))


def save_map(m, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(m.to_dict(), fh, indent=1)
        fh.write("\n")
