"""Low-level geometric primitives and predicates.

Pure functions on plain tuples / numpy arrays. The two triangulation
predicates (orientation, in-circle) are exact: a floating-point filter
resolves the generic case and near-degenerate inputs fall back to
arbitrary-precision rational arithmetic, so callers never observe an
inconsistent sign.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

# Snapping / dedup tolerance for input ingestion. Predicates never use it.
SNAP_EPS = 1e-12

# Absolute tolerance of the convex minimisation in ellipse_min_sum_*.
CONVEX_MIN_TOL = 1e-9

# Static error bounds of the float determinant evaluations; a result whose
# magnitude exceeds bound * permanent is certain, everything else re-runs
# exactly on rationals.
_ORIENT_BOUND = 3.3306690738754716e-16
_INCIRCLE_BOUND = 1.1102230246251565e-14


def orient2d(a, b, c):
    """Orientation of triangle abc: +1 counter-clockwise, -1 clockwise, 0 collinear."""
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    detsum = abs(detleft) + abs(detright)
    if abs(det) > _ORIENT_BOUND * detsum:
        return 1 if det > 0.0 else -1
    if detsum == 0.0:
        return 0
    return _orient2d_exact(a, b, c)


def _orient2d_exact(a, b, c):
    ax, ay = Fraction(a[0]), Fraction(a[1])
    bx, by = Fraction(b[0]), Fraction(b[1])
    cx, cy = Fraction(c[0]), Fraction(c[1])
    det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    if det > 0:
        return 1
    if det < 0:
        return -1
    return 0


def incircle(a, b, c, d):
    """+1 if d lies strictly inside the circumcircle of CCW triangle abc."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    bxcy, bycx = bdx * cdy, bdy * cdx
    cxay, cyax = cdx * ady, cdy * adx
    axby, aybx = adx * bdy, ady * bdx
    det = alift * (bxcy - bycx) + blift * (cxay - cyax) + clift * (axby - aybx)
    permanent = (alift * (abs(bxcy) + abs(bycx))
                 + blift * (abs(cxay) + abs(cyax))
                 + clift * (abs(axby) + abs(aybx)))
    if abs(det) > _INCIRCLE_BOUND * permanent:
        return 1 if det > 0.0 else -1
    if permanent == 0.0:
        return 0
    return _incircle_exact(a, b, c, d)


def _incircle_exact(a, b, c, d):
    dx, dy = Fraction(d[0]), Fraction(d[1])
    rows = []
    for p in (a, b, c):
        px, py = Fraction(p[0]) - dx, Fraction(p[1]) - dy
        rows.append((px, py, px * px + py * py))
    (ax, ay, al), (bx, by, bl), (cx, cy, cl) = rows
    det = al * (bx * cy - by * cx) + bl * (cx * ay - cy * ax) + cl * (ax * by - ay * bx)
    if det > 0:
        return 1
    if det < 0:
        return -1
    return 0


# -- distances ---------------------------------------------------------------

def point_segment_distance(p, a, b):
    """Euclidean distance from p to the closed segment ab (works in 2D and 3D)."""
    ab = [bb - aa for aa, bb in zip(a, b)]
    denom = sum(x * x for x in ab)
    if denom == 0.0:
        return math.dist(p, a)
    t = sum((pp - aa) * x for pp, aa, x in zip(p, a, ab)) / denom
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    q = [aa + t * x for aa, x in zip(a, ab)]
    return math.dist(p, q)


def points_to_segments_distance(points, seg_a, seg_b):
    """Min distance from each point to any of the segments (vectorised).

    points: (n, d); seg_a, seg_b: (m, d). Returns (n,) array.
    """
    points = np.asarray(points, dtype=float)
    seg_a = np.asarray(seg_a, dtype=float)
    seg_b = np.asarray(seg_b, dtype=float)
    if len(seg_a) == 0:
        return np.full(len(points), np.inf)
    ab = seg_b - seg_a                                   # (m, d)
    denom = np.einsum("md,md->m", ab, ab)
    denom = np.where(denom == 0.0, 1.0, denom)
    ap = points[:, None, :] - seg_a[None, :, :]          # (n, m, d)
    t = np.einsum("nmd,md->nm", ap, ab) / denom
    t = np.clip(t, 0.0, 1.0)
    closest = seg_a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = np.linalg.norm(points[:, None, :] - closest, axis=2)
    return d.min(axis=1)


def point_aabb_surface_distance(p, lo, hi):
    """Distance from p to the boundary surface of the box [lo, hi]."""
    inside = all(l <= x <= h for x, l, h in zip(p, lo, hi))
    if inside:
        return min(min(x - l, h - x) for x, l, h in zip(p, lo, hi))
    dd = 0.0
    for x, l, h in zip(p, lo, hi):
        if x < l:
            dd += (l - x) ** 2
        elif x > h:
            dd += (x - h) ** 2
    return math.sqrt(dd)


# -- segment relations -------------------------------------------------------

def point_on_segment(p, a, b):
    """True if p lies on the closed segment ab (exact)."""
    if orient2d(a, b, p) != 0:
        return False
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def segments_cross(p1, p2, p3, p4):
    """True if the interiors of segments p1p2 and p3p4 intersect.

    A crossing interior to both segments, or collinear overlap of positive
    length. Endpoint contacts (shared endpoints, T-junctions) do not count.
    """
    o1 = orient2d(p1, p2, p3)
    o2 = orient2d(p1, p2, p4)
    o3 = orient2d(p3, p4, p1)
    o4 = orient2d(p3, p4, p2)
    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        return True
    if o1 == 0 and o2 == 0:
        i = 0 if p1[0] != p2[0] else 1
        lo1, hi1 = sorted((p1[i], p2[i]))
        lo2, hi2 = sorted((p3[i], p4[i]))
        return min(hi1, hi2) > max(lo1, lo2)
    return False


def segments_properly_intersect(p1, p2, p3, p4):
    """True if segments p1p2 and p3p4 share more than a common endpoint.

    Counts proper crossings, endpoints interior to the other segment and
    collinear overlap of positive length. A shared endpoint alone (touching)
    does not count.
    """
    o1 = orient2d(p1, p2, p3)
    o2 = orient2d(p1, p2, p4)
    o3 = orient2d(p3, p4, p1)
    o4 = orient2d(p3, p4, p2)
    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        return True
    shared = {p1, p2} & {p3, p4}
    if o1 == o2 == 0:  # all collinear: overlap of positive length?
        i = 0 if p1[0] != p2[0] else 1
        lo1, hi1 = sorted((p1[i], p2[i]))
        lo2, hi2 = sorted((p3[i], p4[i]))
        return min(hi1, hi2) > max(lo1, lo2)
    for p, o in ((p3, o1), (p4, o2)):
        if o == 0 and p not in shared and point_on_segment(p, p1, p2):
            return True
    for p, o in ((p1, o3), (p2, o4)):
        if o == 0 and p not in shared and point_on_segment(p, p3, p4):
            return True
    return False


# -- polygons -----------------------------------------------------------------

def polygon_signed_area(pts):
    s = 0.0
    n = len(pts)
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def polygon_is_simple(pts):
    """No two non-adjacent edges intersect; adjacent edges meet only at the shared vertex."""
    n = len(pts)
    edges = [(pts[i], pts[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            a, b = edges[i]
            c, d = edges[j]
            adjacent = (j == i + 1) or (i == 0 and j == n - 1)
            if adjacent:
                if j == i + 1:
                    shared, pa, pd = b, a, d
                else:
                    shared, pa, pd = a, b, c
                # collinear neighbours folding back over each other (spike)
                if orient2d(pa, shared, pd) == 0:
                    dot = ((pa[0] - shared[0]) * (pd[0] - shared[0])
                           + (pa[1] - shared[1]) * (pd[1] - shared[1]))
                    if dot > 0:
                        return False
                continue
            if segments_properly_intersect(a, b, c, d):
                return False
            if {a, b} & {c, d}:
                return False  # repeated vertex
    return True


def point_in_polygon(p, pts, boundary=True):
    """Even-odd point-in-polygon test; exact on the boundary."""
    n = len(pts)
    for i in range(n):
        if point_on_segment(p, pts[i], pts[(i + 1) % n]):
            return boundary
    inside = False
    px, py = p
    for i in range(n):
        (x0, y0), (x1, y1) = pts[i], pts[(i + 1) % n]
        if (y0 > py) != (y1 > py):
            xi = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
            if px < xi:
                inside = not inside
    return inside


def point_in_triangle(p, a, b, c):
    """Boundary-inclusive containment in CCW triangle abc (exact)."""
    return (orient2d(a, b, p) >= 0
            and orient2d(b, c, p) >= 0
            and orient2d(c, a, p) >= 0)


# -- informed-ellipsoid support ------------------------------------------------

def _focal_sum(x, qs, qg):
    return math.dist(x, qs) + math.dist(x, qg)


def ellipse_min_sum_segment(a, b, qs, qg, tol=CONVEX_MIN_TOL):
    """Minimum over x on segment ab of ||x-qs|| + ||x-qg|| (ternary search).

    The objective is convex along the segment, so a ternary search resolves
    the minimum to absolute tolerance `tol`. Works in 2D and 3D.
    """
    length = math.dist(a, b)
    if length == 0.0:
        return _focal_sum(a, qs, qg)
    lo, hi = 0.0, 1.0
    point = lambda t: tuple(aa + t * (bb - aa) for aa, bb in zip(a, b))
    iters = _ternary_iterations(2.0 * length, tol)
    for _ in range(iters):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if _focal_sum(point(m1), qs, qg) <= _focal_sum(point(m2), qs, qg):
            hi = m2
        else:
            lo = m1
    candidates = (point(0.0), point(0.5 * (lo + hi)), point(1.0))
    return min(_focal_sum(x, qs, qg) for x in candidates)


def ellipse_min_sum_rect(c0, du, dv, qs, qg, tol=CONVEX_MIN_TOL):
    """Minimum of ||x-qs|| + ||x-qg|| over the rectangle c0 + s*du + t*dv, s,t in [0,1].

    Nested per-axis ternary search; the objective is jointly convex so the
    inner minimisation g(s) = min_t f(s, t) stays convex in s.
    """
    lu = math.dist((0.0,) * len(du), du)
    lv = math.dist((0.0,) * len(dv), dv)
    if lu == 0.0 and lv == 0.0:
        return _focal_sum(c0, qs, qg)

    def point(s, t):
        return tuple(c + s * u + t * v for c, u, v in zip(c0, du, dv))

    inner_iters = _ternary_iterations(2.0 * lv, tol * 0.25)

    def inner_min(s):
        lo, hi = 0.0, 1.0
        for _ in range(inner_iters):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            if _focal_sum(point(s, m1), qs, qg) <= _focal_sum(point(s, m2), qs, qg):
                hi = m2
            else:
                lo = m1
        return min(_focal_sum(point(s, t), qs, qg) for t in (0.0, 0.5 * (lo + hi), 1.0))

    lo, hi = 0.0, 1.0
    for _ in range(_ternary_iterations(2.0 * lu, tol * 0.5)):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if inner_min(m1) <= inner_min(m2):
            hi = m2
        else:
            lo = m1
    return min(inner_min(s) for s in (0.0, 0.5 * (lo + hi), 1.0))


def _ternary_iterations(lipschitz_span, tol):
    if lipschitz_span <= tol:
        return 8
    n = math.ceil(math.log(lipschitz_span / tol) / math.log(1.5))
    return max(8, min(n + 2, 160))


def batch_ellipse_min_segments(seg_a, seg_b, qs, qg, tol=CONVEX_MIN_TOL):
    """Vectorised ellipse_min_sum_segment over m segments. Returns (m,) array."""
    seg_a = np.asarray(seg_a, dtype=float)
    seg_b = np.asarray(seg_b, dtype=float)
    qs = np.asarray(qs, dtype=float)
    qg = np.asarray(qg, dtype=float)
    m = len(seg_a)
    if m == 0:
        return np.zeros(0)
    ab = seg_b - seg_a
    span = 2.0 * float(np.linalg.norm(ab, axis=1).max())

    def f(t):
        x = seg_a + t[:, None] * ab
        return np.linalg.norm(x - qs, axis=1) + np.linalg.norm(x - qg, axis=1)

    lo = np.zeros(m)
    hi = np.ones(m)
    for _ in range(_ternary_iterations(span, tol)):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        take_left = f(m1) <= f(m2)
        hi = np.where(take_left, m2, hi)
        lo = np.where(take_left, lo, m1)
    mid = 0.5 * (lo + hi)
    return np.minimum(np.minimum(f(np.zeros(m)), f(np.ones(m))), f(mid))


def batch_ellipse_min_rects(c0, du, dv, qs, qg, tol=CONVEX_MIN_TOL):
    """Vectorised ellipse_min_sum_rect over m rectangles. Returns (m,) array."""
    c0 = np.asarray(c0, dtype=float)
    du = np.asarray(du, dtype=float)
    dv = np.asarray(dv, dtype=float)
    qs = np.asarray(qs, dtype=float)
    qg = np.asarray(qg, dtype=float)
    m = len(c0)
    if m == 0:
        return np.zeros(0)
    span_u = 2.0 * float(np.linalg.norm(du, axis=1).max())
    span_v = 2.0 * float(np.linalg.norm(dv, axis=1).max())
    inner_iters = _ternary_iterations(span_v, tol * 0.25)

    def focal(x):
        return np.linalg.norm(x - qs, axis=1) + np.linalg.norm(x - qg, axis=1)

    def inner_min(s):
        base = c0 + s[:, None] * du
        lo = np.zeros(m)
        hi = np.ones(m)
        for _ in range(inner_iters):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            take_left = focal(base + m1[:, None] * dv) <= focal(base + m2[:, None] * dv)
            hi = np.where(take_left, m2, hi)
            lo = np.where(take_left, lo, m1)
        mid = 0.5 * (lo + hi)
        out = focal(base)
        out = np.minimum(out, focal(base + dv))
        out = np.minimum(out, focal(base + mid[:, None] * dv))
        return out

    lo = np.zeros(m)
    hi = np.ones(m)
    for _ in range(_ternary_iterations(span_u, tol * 0.5)):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        take_left = inner_min(m1) <= inner_min(m2)
        hi = np.where(take_left, m2, hi)
        lo = np.where(take_left, lo, m1)
    mid = 0.5 * (lo + hi)
    out = inner_min(np.zeros(m))
    out = np.minimum(out, inner_min(np.ones(m)))
    out = np.minimum(out, inner_min(mid))
    return out


def polyline_length(points):
    return sum(math.dist(points[i], points[i + 1]) for i in range(len(points) - 1))


def convex_hull(points):
    """Convex hull in CCW order (Andrew's monotone chain); collinear dropped."""
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) < 3:
        return pts

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and orient2d(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return lower[:-1] + upper[:-1]
