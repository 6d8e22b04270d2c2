"""Planar geometry shared by the analytic model and the scene simulator.

Everything lives in a frame with the base station at the origin. Angles are
radians; distances are meters. Scalar helpers return plain tuples, the
``*_np`` variants broadcast over numpy arrays and use NaN where the scalar
version would return ``None``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

TWO_PI = 2.0 * math.pi
ABS_TOL = 1e-9  # meters
ANG_TOL = 1e-12  # radians

Point = Tuple[float, float]


def wrap_angle(theta: float) -> float:
    """Map an angle onto [0, 2*pi)."""
    out = math.fmod(theta, TWO_PI)
    if out < 0.0:
        out += TWO_PI
    # fmod of tiny negatives can round up to exactly 2*pi
    return 0.0 if out >= TWO_PI else out


def angular_distance(a, b):
    """Smallest absolute difference between two angles, in [0, pi].

    Works on floats or numpy arrays.
    """
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % TWO_PI
    out = np.minimum(d, TWO_PI - d)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PolarPoint:
    theta: float
    d: float

    def __post_init__(self):
        if not self.d >= 0.0:
            raise ValueError(f"distance must be >= 0, got {self.d}")
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))
        object.__setattr__(self, "d", float(self.d))

    @classmethod
    def from_degrees(cls, theta_deg: float, d: float) -> "PolarPoint":
        return cls(math.radians(theta_deg), d)

    @classmethod
    def from_cartesian(cls, x: float, y: float) -> "PolarPoint":
        return cls(math.atan2(y, x), math.hypot(x, y))

    def to_cartesian(self) -> Point:
        return (self.d * math.cos(self.theta), self.d * math.sin(self.theta))


@dataclass(frozen=True)
class BeamSpec:
    """Sector beam: axis ``theta_j``, full width ``mu_j`` and linear gain."""

    theta_j: float
    mu_j: float
    gain_linear: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.mu_j < math.pi:
            raise ValueError(f"beam width must lie in (0, pi), got {self.mu_j}")
        if not self.gain_linear > 0.0:
            raise ValueError(f"beam gain must be > 0, got {self.gain_linear}")
        object.__setattr__(self, "theta_j", wrap_angle(float(self.theta_j)))

    @classmethod
    def from_degrees(cls, theta_deg: float, mu_deg: float, gain_dbi: float = 0.0) -> "BeamSpec":
        return cls(math.radians(theta_deg), math.radians(mu_deg), 10.0 ** (gain_dbi / 10.0))

    @property
    def half_width(self) -> float:
        return 0.5 * self.mu_j


def in_sector(theta, theta_j: float, mu_j: float):
    """Vectorized sector membership on the bare angles.

    A point sitting exactly on a sector edge is outside (see
    :func:`sector_contains`).
    """
    return angular_distance(theta, theta_j) < 0.5 * mu_j - ANG_TOL


def sector_contains(beam: BeamSpec, p: PolarPoint) -> bool:
    """True when ``p`` lies angularly inside the beam sector.

    Distance plays no role. The two bounding rays belong to neither side: a
    user exactly on a beam edge is treated as served only by reflection,
    which is how the neighbouring "border" beams are used in practice.
    """
    return bool(in_sector(p.theta, beam.theta_j, beam.mu_j))


@dataclass(frozen=True)
class MirrorLine:
    """Infinite line through ``anchor`` with direction angle ``alpha``."""

    anchor: Point
    alpha: float

    @property
    def direction(self) -> Point:
        return (math.cos(self.alpha), math.sin(self.alpha))


def mirror_xy(ax, ay, alpha, x, y):
    """Reflect points ``(x, y)`` across lines through ``(ax, ay)`` at angle ``alpha``.

    All arguments broadcast.
    """
    dx, dy = np.cos(alpha), np.sin(alpha)
    vx, vy = x - ax, y - ay
    proj = vx * dx + vy * dy
    return ax + 2.0 * proj * dx - vx, ay + 2.0 * proj * dy - vy


def mirror_point(line: MirrorLine, x: Point) -> Point:
    mx, my = mirror_xy(line.anchor[0], line.anchor[1], line.alpha, x[0], x[1])
    return (float(mx), float(my))


def ray_line_distance_np(theta, ax, ay, alpha):
    """Distance from the origin along ``theta`` to the line, NaN if never met.

    A ray parallel to the line yields 0 when the origin is on the line and NaN
    otherwise; intersections behind the origin (beyond ``ABS_TOL``) are NaN.
    """
    ux, uy = np.cos(theta), np.sin(theta)
    dx, dy = np.cos(alpha), np.sin(alpha)
    num = ax * dy - ay * dx  # cross(anchor, d)
    den = ux * dy - uy * dx  # cross(u, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = num / den
    parallel = np.abs(den) < 1e-15
    on_line = np.abs(num) <= ABS_TOL
    t = np.where(parallel, np.where(on_line, 0.0, np.nan), t)
    t = np.where(t < -ABS_TOL, np.nan, np.maximum(t, 0.0))
    return t


def ray_line_distance(theta: float, line: MirrorLine) -> Optional[float]:
    t = float(ray_line_distance_np(theta, line.anchor[0], line.anchor[1], line.alpha))
    return None if math.isnan(t) else t


@dataclass(frozen=True)
class OrientedRect:
    """Rectangle of side ``length`` along ``phi`` and ``width`` across it."""

    center: Point
    length: float
    width: float
    phi: float

    def __post_init__(self):
        if not (self.length > 0.0 and self.width > 0.0):
            raise ValueError("rectangle sides must be > 0")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "phi", float(self.phi) % math.pi)

    def corners(self) -> np.ndarray:
        """Corners in counter-clockwise order, shape (4, 2)."""
        return rect_corners(
            np.array([self.center[0]]), np.array([self.center[1]]),
            np.array([self.length]), np.array([self.width]), np.array([self.phi]),
        )[0]

    def edge(self, k: int) -> Tuple[Point, Point]:
        c = self.corners()
        a, b = c[k % 4], c[(k + 1) % 4]
        return (float(a[0]), float(a[1])), (float(b[0]), float(b[1]))

    def edges(self):
        return [self.edge(k) for k in range(4)]

    def contains(self, x: Point, strict: bool = False) -> bool:
        cx, cy = self.center
        c, s = math.cos(self.phi), math.sin(self.phi)
        lx = (x[0] - cx) * c + (x[1] - cy) * s
        ly = -(x[0] - cx) * s + (x[1] - cy) * c
        hl, hw = 0.5 * self.length, 0.5 * self.width
        if strict:
            return abs(lx) < hl - ABS_TOL and abs(ly) < hw - ABS_TOL
        return abs(lx) <= hl + ABS_TOL and abs(ly) <= hw + ABS_TOL


def rect_corners(cx, cy, length, width, phi) -> np.ndarray:
    """Corners of many rectangles, shape (n, 4, 2), counter-clockwise."""
    c, s = np.cos(phi), np.sin(phi)
    hl, hw = 0.5 * length, 0.5 * width
    local = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
    lx = local[None, :, 0] * hl[:, None]
    ly = local[None, :, 1] * hw[:, None]
    x = cx[:, None] + lx * c[:, None] - ly * s[:, None]
    y = cy[:, None] + lx * s[:, None] + ly * c[:, None]
    return np.stack([x, y], axis=-1)


def clip_segments_rects(ax, ay, bx, by, cx, cy, cos_phi, sin_phi, hl, hw):
    """Liang-Barsky clip of segments against rectangles.

    Segment arrays have shape (m,), rectangle arrays shape (n,). Returns
    ``(t_lo, t_hi, hit)`` each of shape (m, n), where the overlap of segment i
    with the closed rectangle j is the parameter interval ``[t_lo, t_hi]``
    along ``a + t (b - a)``. Rectangles are inflated by ``ABS_TOL``.
    """
    ax, ay, bx, by = (np.asarray(v, dtype=float)[:, None] for v in (ax, ay, bx, by))
    px, py = ax - cx, ay - cy
    dx, dy = bx - ax, by - ay
    # local frame: u along phi, v across
    pu = px * cos_phi + py * sin_phi
    pv = -px * sin_phi + py * cos_phi
    du = dx * cos_phi + dy * sin_phi
    dv = -dx * sin_phi + dy * cos_phi

    t_lo = np.zeros(np.broadcast_shapes(pu.shape, du.shape))
    t_hi = np.ones_like(t_lo)
    hit = np.ones(t_lo.shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for p, d, h in ((pu, du, hl + ABS_TOL), (pv, dv, hw + ABS_TOL)):
            flat = np.abs(d) < 1e-15
            t1 = (-h - p) / d
            t2 = (h - p) / d
            lo = np.where(flat, -np.inf, np.minimum(t1, t2))
            hi = np.where(flat, np.inf, np.maximum(t1, t2))
            hit &= ~(flat & (np.abs(p) > h))
            t_lo = np.maximum(t_lo, lo)
            t_hi = np.minimum(t_hi, hi)
    hit &= t_lo <= t_hi
    return t_lo, t_hi, hit


def segment_intersects_rect(a: Point, b: Point, r: OrientedRect) -> bool:
    """True when segment ab touches or crosses the closed rectangle.

    Endpoints lying on the boundary count as contact.
    """
    if a[0] == b[0] and a[1] == b[1]:
        raise ValueError("segment endpoints must differ")
    _, _, hit = clip_segments_rects(
        [a[0]], [a[1]], [b[0]], [b[1]],
        np.array([r.center[0]]), np.array([r.center[1]]),
        np.array([math.cos(r.phi)]), np.array([math.sin(r.phi)]),
        np.array([0.5 * r.length]), np.array([0.5 * r.width]),
    )
    return bool(hit[0, 0])


def first_edge_hit(
    origin: Point, theta: float, scene: Sequence[OrientedRect]
) -> Optional[Tuple[int, int, Point, float]]:
    """Nearest rectangle edge met by the ray from ``origin`` along ``theta``.

    Returns ``(rect_index, edge_index, hit_point, distance)`` or ``None``.
    Touching an edge endpoint counts as a hit; collinear overlaps do not.
    """
    if len(scene) == 0:
        return None
    corners = np.stack([r.corners() for r in scene])  # (n, 4, 2)
    e0 = corners
    e1 = np.roll(corners, -1, axis=1)
    ux, uy = math.cos(theta), math.sin(theta)
    ex, ey = e1[..., 0] - e0[..., 0], e1[..., 1] - e0[..., 1]
    wx, wy = e0[..., 0] - origin[0], e0[..., 1] - origin[1]
    den = ux * ey - uy * ex
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (wx * ey - wy * ex) / den
        s = (wx * uy - wy * ux) / den
    seg_len = np.hypot(ex, ey)
    tol_s = ABS_TOL / seg_len
    ok = (np.abs(den) > 1e-15) & (t > ABS_TOL) & (s >= -tol_s) & (s <= 1.0 + tol_s)
    if not ok.any():
        return None
    t = np.where(ok, t, np.inf)
    i, k = np.unravel_index(int(np.argmin(t)), t.shape)
    dist = float(t[i, k])
    hit = (origin[0] + dist * ux, origin[1] + dist * uy)
    return int(i), int(k), hit, dist
