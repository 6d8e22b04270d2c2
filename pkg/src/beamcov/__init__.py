"""Coverage probability of directional mm-wave beams among random rectangular buildings."""

from .coverage import (
    CoverageBreakdown,
    QuadratureConfig,
    QuadratureError,
    RadioParams,
    RangeMode,
    direct_coverage,
    reflected_coverage,
    total_coverage,
)
from .env_stats import BlockageParams, EnvParams, Moments, Uniform, blockage_params, p_los
from .geometry import BeamSpec, OrientedRect, PolarPoint
from .scene_sim import MCEstimate, PlacementPolicy, Scene, SimConfig, mc_cell_coverage, mc_coverage

__all__ = [
    "BeamSpec", "BlockageParams", "CoverageBreakdown", "EnvParams", "MCEstimate", "Moments",
    "OrientedRect", "PlacementPolicy", "PolarPoint", "QuadratureConfig", "QuadratureError",
    "RadioParams", "RangeMode", "Scene", "SimConfig", "Uniform", "blockage_params",
    "direct_coverage", "mc_cell_coverage", "mc_coverage", "p_los", "reflected_coverage",
    "total_coverage",
]
