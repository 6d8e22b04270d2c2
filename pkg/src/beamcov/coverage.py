"""Analytic beam coverage: direct LOS term plus the one-bounce reflection term.

The reflection term averages over the first building met along the beam
axis: its distance ``r`` follows :class:`~beamcov.env_stats.FirstObstacleDensity`
and the orientation ``alpha`` of the hit wall is uniform on [0, pi). For each
``(r, alpha)`` the user is mirrored across the wall line and the one-bounce
path is accepted when the image falls inside the sector, lies behind the
wall and is within range.

Quadrature
----------
The distance is integrated in ``s = exp(-beta r)``, which turns the
exponential density into a uniform weight on (0, 1] and removes any need to
truncate the range. In ``alpha`` the acceptance indicator switches at
closed-form angles (image crossing a sector edge or the range circle, wall
line through the BS or the user, and the LOS-branch switches), so each ``r``
row is split at those angles before applying a midpoint rule graded
towards the ends of each piece. The point
mass at ``r = 0`` is a separate 1-D ``alpha`` integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .env_stats import (
    EnvParams,
    blockage_params,
    los_after_reflection,
    p_los,
)
from .geometry import (
    BeamSpec,
    MirrorLine,
    PolarPoint,
    in_sector,
    mirror_point,
    mirror_xy,
    ray_line_distance,
    sector_contains,
)

SPEED_OF_LIGHT = 2.99792458e8


class RangeMode(str, Enum):
    PAPER = "paper"  # d0 / sigma
    FRIIS = "friis"  # d0 / sqrt(sigma)


@dataclass(frozen=True)
class RadioParams:
    p_t: float  # W
    g_u: float
    f: float  # Hz
    p_n: float  # W
    gamma: float
    sigma: float = 1.0

    def __post_init__(self):
        for name in ("p_t", "g_u", "f", "p_n", "gamma"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")
        if not self.sigma >= 1.0:
            raise ValueError(f"reflection loss must be >= 1 (linear), got {self.sigma}")

    @property
    def c(self) -> float:
        return SPEED_OF_LIGHT


@dataclass(frozen=True)
class QuadratureConfig:
    n_r: int = 256
    n_alpha: int = 256
    max_refinements: int = 6
    rel_tol: float = 1e-4
    abs_tol: float = 1e-12

    def __post_init__(self):
        if self.n_r < 1 or self.n_alpha < 16:
            raise ValueError("need n_r >= 1 and n_alpha >= 16")
        if self.max_refinements < 1:
            raise ValueError("max_refinements must be >= 1")


class QuadratureError(RuntimeError):
    """Raised when grid doubling stops short of the requested tolerance."""

    def __init__(self, estimates: Tuple[float, float], grid: Tuple[int, int]):
        self.estimates = estimates
        self.grid = grid
        super().__init__(
            f"reflected-beam quadrature did not converge at grid {grid}: "
            f"last estimates {estimates[0]!r}, {estimates[1]!r}"
        )


@dataclass(frozen=True)
class CoverageBreakdown:
    p_direct: float
    p_reflected: float
    p_total: float


def snr_direct(radio: RadioParams, beam: BeamSpec, d: float) -> float:
    """Free-space SNR at distance ``d`` on the beam."""
    if not d > 0.0:
        raise ValueError("distance must be > 0")
    num = radio.p_t * beam.gain_linear * radio.g_u * radio.c ** 2
    return num / ((4.0 * math.pi * d * radio.f) ** 2 * radio.p_n)


def threshold_distance_direct(radio: RadioParams, beam: BeamSpec) -> float:
    if math.isinf(radio.gamma):
        return 0.0
    scale = radio.c / (4.0 * math.pi * radio.f)
    return scale * math.sqrt(radio.p_t * beam.gain_linear * radio.g_u / (radio.gamma * radio.p_n))


def threshold_distance_reflected(
    radio: RadioParams, beam: BeamSpec, mode: RangeMode = RangeMode.PAPER
) -> float:
    d0 = threshold_distance_direct(radio, beam)
    mode = RangeMode(mode)
    if mode is RangeMode.PAPER:
        return d0 / radio.sigma
    return d0 / math.sqrt(radio.sigma)


def direct_coverage(radio: RadioParams, beam: BeamSpec, env: EnvParams, user: PolarPoint) -> float:
    if not user.d > 0.0:
        raise ValueError("user distance must be > 0")
    if not sector_contains(beam, user):
        return 0.0
    if user.d > threshold_distance_direct(radio, beam):
        return 0.0
    return p_los(blockage_params(env), user.d)


def virtual_user(
    user: PolarPoint, beam: BeamSpec, r: float, alpha: float
) -> Tuple[float, float, Optional[float]]:
    """Image of the user across the wall hit at distance ``r`` on the beam axis.

    Returns ``(theta_v, d_v, d_rv)`` where ``d_rv`` is the distance from the
    BS to the wall along ``theta_v`` (``None`` when that ray misses it).
    """
    if r < 0.0:
        raise ValueError("r must be >= 0")
    anchor = (r * math.cos(beam.theta_j), r * math.sin(beam.theta_j))
    line = MirrorLine(anchor, alpha)
    image = PolarPoint.from_cartesian(*mirror_point(line, user.to_cartesian()))
    return image.theta, image.d, ray_line_distance(image.theta, line)


def reflection_angle(theta_in, alpha):
    """Angle at the bounce point between the directions to the BS and to the user.

    ``theta_in`` is the incoming ray direction and ``alpha`` the wall line
    orientation. Normal incidence gives 0, grazing incidence gives pi.
    """
    delta = np.mod(np.asarray(alpha, dtype=float) - theta_in, math.pi)
    incidence = np.minimum(delta, math.pi - delta)  # acute angle ray/wall
    return math.pi - 2.0 * incidence


class _ReflectionProblem:
    """Geometry and weights of the reflection integral for one beam/user pair."""

    def __init__(self, radio, beam, env, user, mode):
        self.beam = beam
        self.theta_j = beam.theta_j
        self.mu_j = beam.mu_j
        self.ux, self.uy = user.to_cartesian()
        self.d0v = threshold_distance_reflected(radio, beam, mode)
        bp = blockage_params(env)
        self.beta, self.p = bp.beta, bp.p
        self.lam = env.lam
        self.m2_sum = env.mean_L2 + env.mean_W2

    # integrand ---------------------------------------------------------
    def integrand(self, r, alpha):
        """Acceptance indicator times wall-to-user LOS probability."""
        hx = r * math.cos(self.theta_j)
        hy = r * math.sin(self.theta_j)
        vx, vy = mirror_xy(hx, hy, alpha, self.ux, self.uy)
        d_v = np.hypot(vx, vy)
        theta_v = np.arctan2(vy, vx)
        # wall distance along theta_v: cross(H, dir) / cross(u_v, dir)
        dx, dy = np.cos(alpha), np.sin(alpha)
        num = hx * dy - hy * dx
        with np.errstate(divide="ignore", invalid="ignore"):
            d_rv = num * d_v / (vx * dy - vy * dx)
        d_rv = np.where(np.abs(num) <= 1e-12, 0.0, d_rv)
        ok = in_sector(theta_v, self.theta_j, self.mu_j)
        ok &= (d_rv >= 0.0) & (d_rv <= d_v) & (d_v <= self.d0v)
        d_ru = np.where(ok, d_v - d_rv, 0.0)
        psi = reflection_angle(self.theta_j, alpha)
        plos = los_after_reflection(self.beta, self.lam, self.m2_sum, r, d_ru, psi)
        return np.where(ok, plos, 0.0)

    # breakpoints in alpha -----------------------------------------------
    def breakpoints(self, r):
        """Sorted angles in [0, pi] where the integrand may jump or kink, end points included."""
        r = np.asarray(r, dtype=float)
        tj = self.theta_j
        hx, hy = r * math.cos(tj), r * math.sin(tj)
        wx, wy = self.ux - hx, self.uy - hy
        rho = np.hypot(wx, wy)
        omega = np.arctan2(wy, wx)
        cols = []

        # image on a sector edge ray: |t e_b - H| = rho
        for b in (tj - 0.5 * self.mu_j, tj + 0.5 * self.mu_j):
            k = r * math.cos(b - tj)
            disc = k * k - r * r + rho * rho
            root = np.sqrt(np.where(disc >= 0.0, disc, np.nan))
            for t in (k - root, k + root):
                px, py = t * math.cos(b), t * math.sin(b)
                chi = np.arctan2(py - hy, px - hx)
                cols.append(0.5 * (chi + omega))

        # wall line through the BS or through the user
        cols.append(np.full_like(r, tj))
        cols.append(omega)

        # image on the range circle |U'| = d0v
        if math.isfinite(self.d0v):
            with np.errstate(divide="ignore", invalid="ignore"):
                cosv = (self.d0v ** 2 - r * r - rho * rho) / (2.0 * rho * r)
            acos = np.arccos(np.where(np.abs(cosv) <= 1.0, cosv, np.nan))
            cols.append(0.5 * (tj + acos + omega))
            cols.append(0.5 * (tj - acos + omega))
        else:
            cols.extend([np.full_like(r, np.nan)] * 2)

        # psi = pi/2 and the cot-term switch q = beta r
        cols.append(np.full_like(r, tj + 0.25 * math.pi))
        cols.append(np.full_like(r, tj - 0.25 * math.pi))
        psi_q = np.arctan2(self.lam * self.m2_sum, 2.0 * self.beta * r)
        inc = 0.5 * (math.pi - psi_q)
        cols.append(tj + inc)
        cols.append(tj - inc)

        bps = np.mod(np.stack(cols, axis=-1), math.pi)
        bps = np.where(np.isfinite(bps), bps, 0.0)
        n = bps.shape[0]
        bps = np.concatenate([np.zeros((n, 1)), bps, np.full((n, 1), math.pi)], axis=1)
        return np.sort(bps, axis=1)

    def alpha_integral(self, r, n_alpha: int):
        """Graded midpoint rule of the integrand over alpha, one value per r.

        Nodes cluster at both ends of every piece: next to the
        wall-through-user angle the path length to the user varies steeply,
        and a uniform rule converges erratically there.
        """
        bps = self.breakpoints(r)
        lo, hi = bps[:, :-1], bps[:, 1:]
        width = hi - lo
        frac, weight = _graded_nodes(max(1, n_alpha // 16))
        alpha = lo[..., None] + width[..., None] * frac  # (n, pieces, m)
        vals = self.integrand(np.asarray(r, dtype=float)[:, None, None], alpha)
        return ((vals * weight).sum(axis=-1) * width).sum(axis=-1)

    # breakpoints in r ---------------------------------------------------
    def r_breakpoints(self) -> np.ndarray:
        """Wall distances where the alpha-integral has kinks or root-type cusps.

        These are the tangencies of the circle about the hit point through
        the user with the sector edge rays and with the range circle, plus
        the foot of the user on the beam axis.
        """
        a = self.ux * math.cos(self.theta_j) + self.uy * math.sin(self.theta_j)
        d2 = self.ux ** 2 + self.uy ** 2
        c2 = math.cos(0.5 * self.mu_j) ** 2
        out = [a]
        disc = a * a - d2 * c2
        if disc >= 0.0:
            out += [(a - math.sqrt(disc)) / c2, (a + math.sqrt(disc)) / c2]
        if math.isfinite(self.d0v) and self.d0v != a:
            out.append((self.d0v ** 2 - d2) / (2.0 * (self.d0v - a)))
        return np.array(sorted(r for r in out if 0.0 < r < math.inf))

    def estimate(self, n_r: int, n_alpha: int, chunk: int = 512) -> float:
        atom = -math.expm1(-self.p)
        total = 0.0
        if atom > 0.0:
            total += atom * float(self.alpha_integral(np.zeros(1), n_alpha)[0])
        if self.beta > 0.0:
            # s = exp(-beta r) turns the density into a uniform weight on (0, 1]
            cuts = np.exp(-self.beta * self.r_breakpoints())[::-1]
            edges = np.unique(np.concatenate([[0.0], cuts, [1.0]]))
            s_nodes, s_weights = [], []
            for lo, hi in zip(edges[:-1], edges[1:]):
                frac, weight = _graded_nodes(max(2, math.ceil(n_r * (hi - lo))))
                s_nodes.append(lo + (hi - lo) * frac)
                s_weights.append((hi - lo) * weight)
            s = np.concatenate(s_nodes)
            w = np.concatenate(s_weights)
            r = -np.log(s) / self.beta
            acc = 0.0
            for start in range(0, len(r), chunk):
                sl = slice(start, start + chunk)
                acc += float((self.alpha_integral(r[sl], n_alpha) * w[sl]).sum())
            total += math.exp(-self.p) * acc
        return total / math.pi


def _graded_nodes(m: int):
    """Midpoint nodes on [0, 1] pulled cubically towards both ends, with weights."""
    t = (np.arange(m) + 0.5) / m
    t3, u3 = t ** 3, (1.0 - t) ** 3
    frac = t3 / (t3 + u3)
    weight = (t * (1.0 - t)) ** 2 / (t3 + u3) ** 2
    # Normalised so coarse pieces still integrate constants exactly.
    return frac, weight / weight.sum()


def reflected_coverage_with_grid(
    radio: RadioParams,
    beam: BeamSpec,
    env: EnvParams,
    user: PolarPoint,
    quad: QuadratureConfig = QuadratureConfig(),
    mode: RangeMode = RangeMode.PAPER,
) -> Tuple[float, Optional[Tuple[int, int]]]:
    """Like :func:`reflected_coverage`, also returning the accepted ``(n_r, n_alpha)``.

    The grid is ``None`` when the value is zero by construction.
    """
    if not user.d > 0.0:
        raise ValueError("user distance must be > 0")
    if sector_contains(beam, user) or env.lam == 0.0:
        return 0.0, None
    problem = _ReflectionProblem(radio, beam, env, user, RangeMode(mode))
    if problem.d0v <= 0.0:
        return 0.0, None
    n_r, n_a = quad.n_r, quad.n_alpha
    prev = problem.estimate(n_r, n_a)
    for _ in range(quad.max_refinements):
        n_r, n_a = 2 * n_r, 2 * n_a
        cur = problem.estimate(n_r, n_a)
        if abs(cur - prev) <= max(quad.rel_tol * abs(cur), quad.abs_tol):
            return min(1.0, max(0.0, cur)), (n_r, n_a)
        last_two = (prev, cur)
        prev = cur
    raise QuadratureError(last_two, (n_r, n_a))


def reflected_coverage(
    radio: RadioParams,
    beam: BeamSpec,
    env: EnvParams,
    user: PolarPoint,
    quad: QuadratureConfig = QuadratureConfig(),
    mode: RangeMode = RangeMode.PAPER,
) -> float:
    """Probability that the user is served by a one-bounce reflection of ``beam``.

    Zero whenever the user already lies in the beam sector. The grid is
    doubled in both directions until two successive estimates agree to
    ``quad.rel_tol`` (or ``quad.abs_tol``).

    Raises:
        QuadratureError: tolerance not met after ``quad.max_refinements``
            doublings.
    """
    return reflected_coverage_with_grid(radio, beam, env, user, quad, mode)[0]


def total_coverage(
    radio: RadioParams,
    beam: BeamSpec,
    env: EnvParams,
    user: PolarPoint,
    quad: QuadratureConfig = QuadratureConfig(),
    mode: RangeMode = RangeMode.PAPER,
) -> CoverageBreakdown:
    p_dir = direct_coverage(radio, beam, env, user)
    p_ref = reflected_coverage(radio, beam, env, user, quad, mode)
    return CoverageBreakdown(p_dir, p_ref, p_dir + p_ref)
