"""Monte Carlo ground truth on explicit building drops.

Each drop is a PPP of oriented rectangles on a square centred on the BS.
Coverage is decided by exact geometry: the direct path is a segment test,
one-bounce paths are enumerated with the image method over every building
edge. A drop's RNG stream depends only on ``(base_seed, index)``, so
results do not depend on how drops are split across workers.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .coverage import (
    RadioParams,
    RangeMode,
    threshold_distance_direct,
    threshold_distance_reflected,
)
from .env_stats import EnvParams, Uniform
from .geometry import (
    ABS_TOL,
    BeamSpec,
    OrientedRect,
    PolarPoint,
    clip_segments_rects,
    in_sector,
    rect_corners,
)

# a blocker must overlap a path leg by more than this to count (meters)
_LEG_MARGIN = 1e-7


class PlacementPolicy(str, Enum):
    COUNT_BLOCKED = "count_blocked"
    REJECT_OVERLAP = "reject_overlap"


@dataclass(frozen=True)
class SimConfig:
    area_side: float = 500.0
    n_drops: int = 10_000
    base_seed: int = 0
    range_mode: RangeMode = RangeMode.PAPER
    placement_policy: PlacementPolicy = PlacementPolicy.COUNT_BLOCKED
    workers: int = 1

    def __post_init__(self):
        if not self.area_side > 0.0:
            raise ValueError("area_side must be > 0")
        if self.n_drops < 1:
            raise ValueError("n_drops must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0 <= self.base_seed < 2 ** 64:
            raise ValueError("base_seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "range_mode", RangeMode(self.range_mode))
        object.__setattr__(self, "placement_policy", PlacementPolicy(self.placement_policy))


@dataclass(frozen=True, eq=False)
class Scene:
    """One building drop. ``data`` rows are ``(cx, cy, length, width, phi)``."""

    data: np.ndarray
    base_seed: Optional[int] = None
    index: Optional[int] = None

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float).reshape(-1, 5)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    def __len__(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scene):
            return NotImplemented
        return (
            self.base_seed == other.base_seed
            and self.index == other.index
            and np.array_equal(self.data, other.data)
        )

    @classmethod
    def from_rects(cls, rects: Sequence[OrientedRect]) -> "Scene":
        rows = [(r.center[0], r.center[1], r.length, r.width, r.phi) for r in rects]
        return cls(np.array(rows, dtype=float).reshape(-1, 5))

    @property
    def rects(self) -> List[OrientedRect]:
        return [OrientedRect((cx, cy), l, w, phi) for cx, cy, l, w, phi in self.data]

    def dumps(self) -> str:
        buf = io.StringIO()
        if self.base_seed is not None:
            buf.write(f"# base_seed={self.base_seed} index={self.index}\n")
        for row in self.data:
            buf.write(" ".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def loads(cls, text: str) -> "Scene":
        rows, seed, index = [], None, None
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    key, _, val = tok.partition("=")
                    if key == "base_seed":
                        seed = int(val)
                    elif key == "index":
                        index = int(val)
                continue
            vals = [float(v) for v in line.split()]
            if len(vals) != 5:
                raise ValueError(f"expected 5 fields per rectangle, got {line!r}")
            rows.append(vals)
        return cls(np.array(rows, dtype=float).reshape(-1, 5), seed, index)


@dataclass(frozen=True)
class MCEstimate:
    p_hat: float
    stderr: float
    ci95: Tuple[float, float]
    n: int
    n_direct: int
    n_reflected: int

    @classmethod
    def from_counts(cls, n: int, n_direct: int, n_reflected: int) -> "MCEstimate":
        p = (n_direct + n_reflected) / n
        se = math.sqrt(p * (1.0 - p) / n)
        ci = (max(0.0, p - 1.959963984540054 * se), min(1.0, p + 1.959963984540054 * se))
        return cls(p, se, ci, n, n_direct, n_reflected)


@dataclass(frozen=True)
class CellEstimate:
    with_reflections: MCEstimate
    direct_only: MCEstimate


# -- scene generation ----------------------------------------------------

def _drop(env: EnvParams, cfg: SimConfig, index: int, attempt: int) -> np.ndarray:
    for law in (env.length, env.width):
        if not isinstance(law, Uniform):
            raise TypeError("scene sampling needs a samplable size law (Uniform)")
    key = [cfg.base_seed, index] if attempt == 0 else [cfg.base_seed, index, attempt]
    rng = np.random.default_rng(np.random.SeedSequence(key))
    half = 0.5 * cfg.area_side
    n = rng.poisson(env.lam * cfg.area_side ** 2)
    centers = rng.uniform(-half, half, (n, 2))
    phi = rng.uniform(0.0, math.pi, n)
    length = env.length.sample(rng, n)
    width = env.width.sample(rng, n)
    return np.column_stack([centers, length, width, phi])


def _strictly_inside(data: np.ndarray, x: float, y: float) -> np.ndarray:
    dx, dy = x - data[:, 0], y - data[:, 1]
    c, s = np.cos(data[:, 4]), np.sin(data[:, 4])
    lu = np.abs(dx * c + dy * s)
    lv = np.abs(-dx * s + dy * c)
    return (lu < 0.5 * data[:, 2] - ABS_TOL) & (lv < 0.5 * data[:, 3] - ABS_TOL)


def generate_scene(
    env: EnvParams,
    cfg: SimConfig,
    index: int,
    user: Optional[PolarPoint] = None,
    max_attempts: int = 10_000,
) -> Scene:
    """Draw drop ``index``. Under REJECT_OVERLAP the drop is redrawn from
    sub-seeds until no building strictly contains the BS or ``user``."""
    data = _drop(env, cfg, index, 0)
    if cfg.placement_policy is PlacementPolicy.REJECT_OVERLAP:
        pts = [(0.0, 0.0)] + ([user.to_cartesian()] if user is not None else [])
        attempt = 0
        while any(_strictly_inside(data, *pt).any() for pt in pts):
            attempt += 1
            if attempt >= max_attempts:
                raise RuntimeError(f"no admissible drop for index {index} in {max_attempts} attempts")
            data = _drop(env, cfg, index, attempt)
    return Scene(data, cfg.base_seed, index)


# -- exact path geometry -------------------------------------------------

@dataclass(frozen=True)
class _Rects:
    cx: np.ndarray
    cy: np.ndarray
    cos: np.ndarray
    sin: np.ndarray
    hl: np.ndarray
    hw: np.ndarray

    @classmethod
    def of(cls, scene: Scene) -> "_Rects":
        d = scene.data
        return cls(d[:, 0], d[:, 1], np.cos(d[:, 4]), np.sin(d[:, 4]), 0.5 * d[:, 2], 0.5 * d[:, 3])

    def clip(self, ax, ay, bx, by):
        return clip_segments_rects(ax, ay, bx, by, self.cx, self.cy, self.cos, self.sin, self.hl, self.hw)


def line_of_sight(scene: Scene, ux: float, uy: float) -> bool:
    """True when no building touches the closed segment BS -> (ux, uy)."""
    if len(scene) == 0:
        return True
    _, _, hit = _Rects.of(scene).clip([0.0], [0.0], [ux], [uy])
    return not hit.any()


def specular_paths(scene: Scene, ux: float, uy: float) -> Tuple[np.ndarray, np.ndarray]:
    """All unobstructed one-bounce paths BS -> wall -> user.

    Returns ``(theta_v, d_v)``: launch direction from the BS and total path
    length of each path, one entry per reflecting edge.
    """
    n = len(scene)
    if n == 0:
        return np.empty(0), np.empty(0)
    d = scene.data
    corners = rect_corners(d[:, 0], d[:, 1], d[:, 2], d[:, 3], d[:, 4])
    e0 = corners.reshape(-1, 2)
    e1 = np.roll(corners, -1, axis=1).reshape(-1, 2)
    owner = np.repeat(np.arange(n), 4)
    ex, ey = e1[:, 0] - e0[:, 0], e1[:, 1] - e0[:, 1]
    seg_len = np.hypot(ex, ey)
    nx, ny = ey / seg_len, -ex / seg_len  # outward normal of a CCW polygon

    # BS and user strictly outside the half-plane of the wall's own building
    s_bs = -(e0[:, 0] * nx + e0[:, 1] * ny)
    s_u = (ux - e0[:, 0]) * nx + (uy - e0[:, 1]) * ny
    keep = (s_bs > ABS_TOL) & (s_u > ABS_TOL)
    if not keep.any():
        return np.empty(0), np.empty(0)
    idx = np.nonzero(keep)[0]
    s_bs, s_u, nx, ny = s_bs[idx], s_u[idx], nx[idx], ny[idx]
    vx, vy = ux - 2.0 * s_u * nx, uy - 2.0 * s_u * ny  # image of the user
    t = s_bs / (s_bs + s_u)
    qx, qy = t * vx, t * vy
    along = ((qx - e0[idx, 0]) * ex[idx] + (qy - e0[idx, 1]) * ey[idx]) / seg_len[idx] ** 2
    tol = ABS_TOL / seg_len[idx]
    on_edge = (along >= -tol) & (along <= 1.0 + tol)
    if not on_edge.any():
        return np.empty(0), np.empty(0)
    sel = np.nonzero(on_edge)[0]
    idx, qx, qy, vx, vy = idx[sel], qx[sel], qy[sel], vx[sel], vy[sel]
    own = owner[idx]

    rects = _Rects.of(scene)
    others = own[:, None] != np.arange(n)[None, :]
    m = len(idx)
    zeros = np.zeros(m)
    # incoming leg: nothing may be entered before reaching the wall
    lo, _, hit = rects.clip(zeros, zeros, qx, qy)
    leg_in = np.hypot(qx, qy)
    blocked = (hit & others & (lo * leg_in[:, None] < leg_in[:, None] - _LEG_MARGIN)).any(axis=1)
    # outgoing leg: nothing may be crossed after leaving the wall
    _, hi, hit = rects.clip(qx, qy, np.full(m, ux), np.full(m, uy))
    leg_out = np.hypot(ux - qx, uy - qy)
    blocked |= (hit & others & (hi * leg_out[:, None] > _LEG_MARGIN)).any(axis=1)

    ok = ~blocked
    return np.arctan2(vy[ok], vx[ok]), np.hypot(vx[ok], vy[ok])


def direct_covered(scene: Scene, radio: RadioParams, beam: BeamSpec, user: PolarPoint) -> bool:
    if not in_sector(user.theta, beam.theta_j, beam.mu_j):
        return False
    if user.d > threshold_distance_direct(radio, beam):
        return False
    return line_of_sight(scene, *user.to_cartesian())


def reflected_covered(
    scene: Scene,
    radio: RadioParams,
    beam: BeamSpec,
    user: PolarPoint,
    range_mode: RangeMode = RangeMode.PAPER,
) -> bool:
    theta_v, d_v = specular_paths(scene, *user.to_cartesian())
    d0v = threshold_distance_reflected(radio, beam, range_mode)
    return bool((in_sector(theta_v, beam.theta_j, beam.mu_j) & (d_v <= d0v)).any())


# -- drop evaluation -----------------------------------------------------

def _evaluate_drops(args):
    env, radio, beams, user, cfg, start, stop = args
    ux, uy = user.to_cartesian()
    d0 = np.array([threshold_distance_direct(radio, b) for b in beams])
    d0v = np.array([threshold_distance_reflected(radio, b, cfg.range_mode) for b in beams])
    in_sec = np.array([bool(in_sector(user.theta, b.theta_j, b.mu_j)) for b in beams])
    direct_ok = in_sec & (user.d <= d0)
    n = stop - start
    direct = np.zeros((n, len(beams)), dtype=bool)
    reflected = np.zeros((n, len(beams)), dtype=bool)
    for k, index in enumerate(range(start, stop)):
        scene = generate_scene(env, cfg, index, user)
        if direct_ok.any() and line_of_sight(scene, ux, uy):
            direct[k] = direct_ok
        theta_v, d_v = specular_paths(scene, ux, uy)
        if theta_v.size:
            for j, b in enumerate(beams):
                reflected[k, j] = bool(
                    (in_sector(theta_v, b.theta_j, b.mu_j) & (d_v <= d0v[j])).any()
                )
    return direct, reflected


def drop_outcomes(
    env: EnvParams,
    radio: RadioParams,
    beams: Sequence[BeamSpec],
    user: PolarPoint,
    cfg: SimConfig,
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-drop, per-beam outcomes, each of shape ``(n_drops, n_beams)``.

    ``direct[i, j]``: beam j serves the user on the LOS path in drop i.
    ``reflected[i, j]``: some valid one-bounce path of beam j exists.
    Drop i sees the same buildings for every beam.
    """
    beams = list(beams)
    if not beams:
        raise ValueError("need at least one beam")
    n = cfg.n_drops
    if cfg.workers == 1 or n < 2 * cfg.workers:
        return _evaluate_drops((env, radio, beams, user, cfg, 0, n))
    bounds = np.linspace(0, n, 4 * cfg.workers + 1).astype(int)
    jobs = [(env, radio, beams, user, cfg, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        parts = list(pool.map(_evaluate_drops, jobs))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _estimates(direct: np.ndarray, reflected: np.ndarray) -> List[MCEstimate]:
    n = direct.shape[0]
    only_refl = reflected & ~direct
    return [
        MCEstimate.from_counts(n, int(direct[:, j].sum()), int(only_refl[:, j].sum()))
        for j in range(direct.shape[1])
    ]


def mc_coverage_many(env, radio, beams, user, cfg) -> List[MCEstimate]:
    """Per-beam estimates from one shared set of drops."""
    return _estimates(*drop_outcomes(env, radio, beams, user, cfg))


def mc_coverage(env: EnvParams, radio: RadioParams, beam: BeamSpec, user: PolarPoint, cfg: SimConfig) -> MCEstimate:
    """Coverage of one beam: direct path, else any one-bounce path."""
    return mc_coverage_many(env, radio, [beam], user, cfg)[0]


def mc_cell_coverage(
    env: EnvParams,
    radio: RadioParams,
    beams: Sequence[BeamSpec],
    user: PolarPoint,
    cfg: SimConfig,
) -> CellEstimate:
    """Probability that at least one beam of the set serves the user."""
    direct, reflected = drop_outcomes(env, radio, beams, user, cfg)
    any_direct = direct.any(axis=1)
    any_refl = reflected.any(axis=1) & ~any_direct
    n = direct.shape[0]
    return CellEstimate(
        with_reflections=MCEstimate.from_counts(n, int(any_direct.sum()), int(any_refl.sum())),
        direct_only=MCEstimate.from_counts(n, int(any_direct.sum()), 0),
    )
