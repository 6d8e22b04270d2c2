"""Blockage statistics of a Boolean field of randomly oriented rectangles.

Building centers follow a homogeneous PPP of density ``lam``; lengths and
widths are independent with known first and second moments and the
orientation is uniform on [0, pi). The number of buildings crossed by a
segment of length ``d`` is then Poisson with mean ``beta * d + p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self):
        if not 0.0 < self.low <= self.high:
            raise ValueError(f"need 0 < low <= high, got [{self.low}, {self.high}]")

    @property
    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    @property
    def second_moment(self) -> float:
        a, b = self.low, self.high
        return (a * a + a * b + b * b) / 3.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size)


@dataclass(frozen=True)
class Moments:
    """A size law known only through its first two moments.

    Enough for the analytic model; scenes cannot be sampled from it.
    """

    mean: float
    second_moment: float

    def __post_init__(self):
        if not self.mean > 0.0:
            raise ValueError("mean must be > 0")
        if self.second_moment < self.mean ** 2 * (1.0 - 1e-12):
            raise ValueError("second moment below mean**2")


SizeLaw = Union[Uniform, Moments]


@dataclass(frozen=True)
class EnvParams:
    lam: float
    length: SizeLaw = field(default_factory=lambda: Uniform(40.0, 60.0))
    width: SizeLaw = field(default_factory=lambda: Uniform(30.0, 50.0))

    def __post_init__(self):
        if not self.lam >= 0.0:
            raise ValueError(f"density must be >= 0, got {self.lam}")

    @property
    def mean_L(self) -> float:
        return self.length.mean

    @property
    def mean_W(self) -> float:
        return self.width.mean

    @property
    def mean_L2(self) -> float:
        return self.length.second_moment

    @property
    def mean_W2(self) -> float:
        return self.width.second_moment

    def with_density(self, lam: float) -> "EnvParams":
        return EnvParams(lam, self.length, self.width)


@dataclass(frozen=True)
class BlockageParams:
    beta: float  # 1/m
    p: float


def blockage_params(env: EnvParams) -> BlockageParams:
    beta = 2.0 * env.lam * (env.mean_L + env.mean_W) / math.pi
    p = env.lam * env.mean_L * env.mean_W
    return BlockageParams(beta, p)


def p_los(bp: BlockageParams, d):
    """Probability that no building touches a segment of length ``d``."""
    out = np.exp(-(bp.beta * np.asarray(d, dtype=float) + bp.p))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FirstObstacleDensity:
    """Law of the distance to the first building along a ray from the BS.

    A point mass at zero (the BS itself is inside a building) plus an
    exponential-type density for r > 0. With ``lam == 0`` the law is
    defective: no building is ever met and the total mass is 0.
    """

    beta: float
    p: float

    def atom_at_zero(self) -> float:
        return -math.expm1(-self.p)

    def continuous_part(self, r):
        r = np.asarray(r, dtype=float)
        out = np.where(r > 0.0, self.beta * np.exp(-(self.beta * r + self.p)), 0.0)
        return float(out) if out.ndim == 0 else out

    def cdf(self, r):
        r = np.asarray(r, dtype=float)
        out = np.where(r >= 0.0, -np.expm1(-(self.beta * r + self.p)), 0.0)
        return float(out) if out.ndim == 0 else out

    def total_mass(self) -> float:
        if self.beta > 0.0:
            return 1.0
        return self.atom_at_zero()


def first_obstacle_density(bp: BlockageParams) -> FirstObstacleDensity:
    return FirstObstacleDensity(bp.beta, bp.p)


def los_after_reflection(beta, lam, m2_sum, d_r, d_ru, psi):
    """Vectorized LOS probability between the reflecting wall and the user.

    ``m2_sum`` is E[L^2] + E[W^2]. ``psi`` is assumed to be in [0, pi]; no
    validation happens here.
    """
    d_r = np.asarray(d_r, dtype=float)
    d_ru = np.asarray(d_ru, dtype=float)
    psi = np.asarray(psi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        cot = np.cos(psi) / np.sin(psi)
        q = np.where(lam > 0.0, lam * cot * m2_sum / 2.0, 0.0)
    q = np.nan_to_num(q, nan=0.0)
    plain = -beta * d_ru
    with_q = plain + q
    # branches in log space; exp(+inf) never gets evaluated
    far = np.minimum(0.0, with_q)  # wall beyond the user distance
    near = np.minimum(-beta * (d_ru - d_r), with_q)
    acute = np.where(d_r >= d_ru, far, near)
    log_p = np.where(psi <= 0.5 * math.pi, acute, plain)
    out = np.clip(np.exp(log_p), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def p_los_after_reflection(bp: BlockageParams, env: EnvParams, d_r: float, d_ru: float, psi: float) -> float:
    """LOS probability of the wall-to-user leg of a one-bounce path.

    ``psi`` is the angle at the reflection point between the directions to
    the BS and to the user: near 0 the outgoing leg folds back over the
    already-clear incoming corridor, near pi it grazes away from it.
    """
    if not 0.0 <= psi <= math.pi:
        raise ValueError(f"psi must lie in [0, pi], got {psi}")
    if d_r < 0.0 or d_ru < 0.0:
        raise ValueError("distances must be >= 0")
    return los_after_reflection(bp.beta, env.lam, env.mean_L2 + env.mean_W2, d_r, d_ru, psi)
