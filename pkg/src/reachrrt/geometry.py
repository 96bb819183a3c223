"""Planar geometry: convex hulls, clearances, goal regions, set distances.

Reachable sets live in full state space but collision and goal checks happen
on a 2-D (or 1-D, zero-padded) projection, so everything here is planar.
Obstacles are balls and axis-aligned boxes.  Clearances are signed where it
matters: a nonpositive clearance means contact or overlap.
"""

from dataclasses import dataclass

import numpy as np

# Cross products below this magnitude count as collinear; also the default
# slack for membership tests.
COLLINEAR_TOL = 1e-9
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Ball:
    """Disk obstacle."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.radius > 0:
            raise ValueError("obstacle ball radius must be positive")


@dataclass(frozen=True)
class AxisAlignedBox:
    """Axis-aligned rectangle obstacle."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or not np.all(hi > lo):
            raise ValueError("obstacle box needs lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def corners(self):
        (x0, y0), (x1, y1) = self.lo, self.hi
        return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])


@dataclass(frozen=True)
class GoalRegion:
    """Ball goal on a projection of the state."""

    projection: tuple
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "projection", tuple(int(i) for i in self.projection))
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.radius > 0:
            raise ValueError("goal radius must be positive")
        if self.center.shape != (len(self.projection),):
            raise ValueError("goal center dimension must match projection")


def goal_contains(goal, x, shrink=0.0):
    """True where the projected state lies in the goal ball shrunk by `shrink`.

    Accepts a single state or a batch (leading axes).  A shrink larger than
    the radius leaves an empty goal, so nothing is contained.
    """
    r = goal.radius - shrink
    x = np.asarray(x, dtype=float)
    p = x[..., list(goal.projection)] - goal.center
    d = np.sqrt((p * p).sum(axis=-1))
    if r < 0:
        return np.zeros(d.shape, dtype=bool) if d.ndim else False
    out = d <= r
    return out if d.ndim else bool(out)


@dataclass(frozen=True)
class ConvexHull2D:
    """Convex polygon with counterclockwise vertices.

    One or two vertices mark a degenerate hull (a point or a segment); those
    come up routinely, e.g. a singleton initial set or 1-D dynamics embedded
    in the plane, and every operation here accepts them.
    """

    vertices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))

    @property
    def degenerate(self):
        return len(self.vertices) < 3


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(points):
    """Convex hull of a planar point cloud (monotone chain).

    Collinear points along an edge are dropped, so the vertex list has no
    three collinear entries.  Duplicate input points are fine.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("expected an (n, 2) array of points")
    if len(pts) == 0:
        raise ValueError("hull of an empty point set is undefined")
    if not np.all(np.isfinite(pts)):
        raise ValueError("hull input must be finite")
    uniq = np.unique(pts, axis=0)  # lexicographically sorted, exact dedupe
    if len(uniq) <= 2:
        return ConvexHull2D(uniq)

    rows = [(float(p[0]), float(p[1])) for p in uniq]
    lower = []
    for p in rows:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= COLLINEAR_TOL:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(rows):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= COLLINEAR_TOL:
            upper.pop()
        upper.append(p)
    verts = lower[:-1] + upper[:-1]
    if len(verts) < 3:
        # everything within collinearity tolerance of one line
        return ConvexHull2D(np.array([rows[0], rows[-1]]))
    return ConvexHull2D(np.array(verts))


def _point_segments_distance(p, a, b):
    """Distances from point p to each segment a[i]--b[i]."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    ab = b - a
    denom = (ab * ab).sum(axis=1)
    t = ((p - a) * ab).sum(axis=1)
    t = np.where(denom > 0, t / np.where(denom > 0, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[:, None] * ab
    d = p - proj
    return np.sqrt((d * d).sum(axis=1))


def _hull_edges(hull):
    """Hull boundary as (starts, ends) segment arrays; a point maps to a
    zero-length segment."""
    v = hull.vertices
    if len(v) == 1:
        return v, v
    if len(v) == 2:
        return v[:1], v[1:]
    return v, np.roll(v, -1, axis=0)


def point_in_hull(hull, p, tol=DEFAULT_TOL):
    """Membership with slack: within signed distance `tol` of the hull."""
    p = np.asarray(p, dtype=float)
    v = hull.vertices
    if len(v) < 3:
        a, b = _hull_edges(hull)
        return bool(_point_segments_distance(p, a, b).min() <= tol)
    e = np.roll(v, -1, axis=0) - v
    w = p[None, :] - v
    cross = e[:, 0] * w[:, 1] - e[:, 1] * w[:, 0]
    lengths = np.sqrt((e * e).sum(axis=1))
    return bool(np.all(cross >= -tol * lengths))


def point_hull_distance(hull, p):
    """Euclidean distance from p to the hull (zero inside)."""
    p = np.asarray(p, dtype=float)
    v = hull.vertices
    if len(v) >= 3:
        e = np.roll(v, -1, axis=0) - v
        w = p[None, :] - v
        cross = e[:, 0] * w[:, 1] - e[:, 1] * w[:, 0]
        if np.all(cross >= 0.0):
            return 0.0
    a, b = _hull_edges(hull)
    return float(_point_segments_distance(p, a, b).min())


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, c):
    # assumes a, b, c collinear; is c within the bounding box of a--b
    return (
        min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
    )


def _segments_intersect(p1, p2, q1, q2):
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0) and d1 != 0 and d2 != 0) and (
        (d3 > 0) != (d4 > 0) and d3 != 0 and d4 != 0
    ):
        return True
    if d1 == 0 and _on_segment(q1, q2, p1):
        return True
    if d2 == 0 and _on_segment(q1, q2, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, q1):
        return True
    if d4 == 0 and _on_segment(p1, p2, q2):
        return True
    return False


def _segment_segment_distance(p1, p2, q1, q2):
    if _segments_intersect(p1, p2, q1, q2):
        return 0.0
    cands = [
        _point_segments_distance(np.asarray(p1), q1[None], q2[None])[0],
        _point_segments_distance(np.asarray(p2), q1[None], q2[None])[0],
        _point_segments_distance(np.asarray(q1), p1[None], p2[None])[0],
        _point_segments_distance(np.asarray(q2), p1[None], p2[None])[0],
    ]
    return float(min(cands))


def points_obstacle_clearance(pts, obstacle):
    """Signed clearance from each point to an obstacle; negative means inside."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if isinstance(obstacle, Ball):
        d = pts - obstacle.center
        return np.sqrt((d * d).sum(axis=1)) - obstacle.radius
    if isinstance(obstacle, AxisAlignedBox):
        q = np.maximum(obstacle.lo - pts, pts - obstacle.hi)
        outside = np.sqrt((np.maximum(q, 0.0) ** 2).sum(axis=1))
        inside = q.max(axis=1)  # <= 0 iff inside or on the boundary
        return np.where(inside > 0, outside, inside)
    raise TypeError(f"unsupported obstacle type {type(obstacle).__name__}")


def _project(axis, pts):
    s = pts @ axis if pts.ndim == 2 else np.array([pts @ axis])
    return s.min(), s.max()


def _sat_overlap(hull_pts, box_pts, axes):
    """Smallest projected overlap across axes, or None if separated."""
    best = np.inf
    for axis in axes:
        norm = float(np.hypot(axis[0], axis[1]))
        if norm == 0.0:
            continue
        lo_a, hi_a = _project(axis, hull_pts)
        lo_b, hi_b = _project(axis, box_pts)
        overlap = min(hi_a, hi_b) - max(lo_a, lo_b)
        if overlap < 0:
            return None
        best = min(best, overlap / norm)
    return best


def hull_obstacle_clearance(hull, obstacle):
    """Signed clearance between a hull and an obstacle.

    Positive when disjoint, and <= 0 exactly when they touch or overlap.  The
    negative branch is a penetration proxy (smallest separating-axis overlap
    for boxes, center depth for balls), good enough for reject decisions.
    """
    v = hull.vertices
    if isinstance(obstacle, Ball):
        return point_hull_distance(hull, obstacle.center) - obstacle.radius
    if not isinstance(obstacle, AxisAlignedBox):
        raise TypeError(f"unsupported obstacle type {type(obstacle).__name__}")
    if len(v) == 1:
        return float(points_obstacle_clearance(v, obstacle)[0])
    corners = obstacle.corners
    axes = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    a, b = _hull_edges(hull)
    for s, e in zip(a, b):
        d = e - s
        axes.append(np.array([-d[1], d[0]]))
    overlap = _sat_overlap(v, corners, axes)
    if overlap is not None:
        return -overlap
    box_edges = list(zip(corners, np.roll(corners, -1, axis=0)))
    best = np.inf
    for s, e in zip(a, b):
        for bs, be in box_edges:
            best = min(best, _segment_segment_distance(s, e, bs, be))
    return float(best)


def hausdorff_distance(a, b):
    """Hausdorff distance between two finite point sets of equal dimension."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("empty set has no Hausdorff distance")
    if a.shape[1] != b.shape[1]:
        raise ValueError("point sets must share a dimension")
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    forward = d2.min(axis=1).max()
    backward = d2.min(axis=0).max()
    return float(np.sqrt(max(forward, backward)))
