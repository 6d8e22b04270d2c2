"""Experiment configuration: JSON files in engineering units, presets, merging.

Radio quantities are given in dB/dBm/dBi/GHz and angles in degrees; they are
converted to linear SI values and radians only when the domain objects are
built.
"""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from .coverage import QuadratureConfig, RadioParams, RangeMode
from .env_stats import EnvParams, Uniform
from .geometry import BeamSpec, PolarPoint
from .scene_sim import PlacementPolicy, SimConfig

CONFIG_ENV_VAR = "BEAMCOV_CONFIG"
PRESETS = ("fig3", "fig4", "fig5", "fig6")


class ConfigError(ValueError):
    pass


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def dbm_to_watts(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def _width_key(mu_deg: float) -> str:
    return f"{float(mu_deg):g}"


@dataclass
class RadioConfig:
    p_t_dbm: float = 30.0
    p_n_dbm: float = -85.0
    f_ghz: float = 30.0
    g_u_dbi: float = 1.0
    gamma_db: float = 0.0
    sigma_db: float = 3.0
    sigma_exact_half: bool = False
    gain_table_dbi: Dict[str, float] = field(default_factory=lambda: {"10": 36.0, "30": 12.0})

    def params(self) -> RadioParams:
        sigma = 2.0 if self.sigma_exact_half else db_to_linear(self.sigma_db)
        return RadioParams(
            p_t=dbm_to_watts(self.p_t_dbm),
            g_u=db_to_linear(self.g_u_dbi),
            f=self.f_ghz * 1e9,
            p_n=dbm_to_watts(self.p_n_dbm),
            gamma=db_to_linear(self.gamma_db),
            sigma=sigma,
        )

    def gain_dbi(self, mu_deg: float) -> float:
        try:
            return float(self.gain_table_dbi[_width_key(mu_deg)])
        except KeyError:
            raise ConfigError(
                f"no beamforming gain configured for width {mu_deg:g} deg; "
                f"add it to radio.gain_table_dbi (known: {sorted(self.gain_table_dbi)})"
            ) from None


@dataclass
class EnvConfig:
    lam: float = 2e-4
    length_m: List[float] = field(default_factory=lambda: [40.0, 60.0])
    width_m: List[float] = field(default_factory=lambda: [30.0, 50.0])
    lam_sweep: Optional[List[float]] = None

    def params(self, lam: Optional[float] = None) -> EnvParams:
        return EnvParams(
            self.lam if lam is None else lam,
            Uniform(*self.length_m),
            Uniform(*self.width_m),
        )

    def densities(self) -> List[float]:
        return list(self.lam_sweep) if self.lam_sweep else [self.lam]


@dataclass
class BeamsConfig:
    """Either an explicit ``[theta_deg, mu_deg]`` list or ``n`` equal beams tiling 360 deg."""

    list_deg: Optional[List[List[float]]] = None
    n: Optional[int] = None
    offset_deg: float = 0.0

    def angles_deg(self) -> List[List[float]]:
        if self.list_deg:
            return [[float(t), float(m)] for t, m in self.list_deg]
        if self.n:
            width = 360.0 / self.n
            return [[(self.offset_deg + k * width) % 360.0, width] for k in range(self.n)]
        raise ConfigError("beams block needs either list_deg or n")


@dataclass
class UsersConfig:
    """Either an explicit ``[theta_deg, d_m]`` list or a distance sweep at ``theta_deg``."""

    list_deg: Optional[List[List[float]]] = None
    theta_deg: float = 90.0
    d_start: Optional[float] = None
    d_stop: Optional[float] = None
    d_step: Optional[float] = None

    def positions(self) -> List[List[float]]:
        if self.list_deg:
            return [[float(t), float(d)] for t, d in self.list_deg]
        if None not in (self.d_start, self.d_stop, self.d_step):
            n = int(math.floor((self.d_stop - self.d_start) / self.d_step + 1e-9)) + 1
            return [[self.theta_deg, round(self.d_start + k * self.d_step, 9)] for k in range(n)]
        raise ConfigError("users block needs either list_deg or d_start/d_stop/d_step")


@dataclass
class OutputsConfig:
    path: Optional[str] = None
    format: str = "csv"


@dataclass
class CompareConfig:
    tol_direct: float = 0.02
    tol_reflected: float = 0.05
    tol_reflected_loose: float = 0.08
    narrow_width_deg: float = 10.0
    near_distance_m: float = 100.0
    n_sigma: float = 3.0


@dataclass
class ExperimentConfig:
    experiment: str = "custom"
    kind: str = "beams"  # "beams": per-beam table, "cell": any-beam cell coverage
    radio: RadioConfig = field(default_factory=RadioConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    beams: BeamsConfig = field(default_factory=lambda: BeamsConfig(list_deg=[[90.0, 10.0]]))
    users: UsersConfig = field(default_factory=lambda: UsersConfig(list_deg=[[90.0, 50.0]]))
    sim: SimConfig = field(default_factory=SimConfig)
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)
    outputs: OutputsConfig = field(default_factory=OutputsConfig)
    compare: CompareConfig = field(default_factory=CompareConfig)

    def __post_init__(self):
        if self.kind not in ("beams", "cell"):
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.outputs.format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.outputs.format!r}")

    # domain objects -----------------------------------------------------
    def beam_specs(self) -> List[BeamSpec]:
        return [
            BeamSpec.from_degrees(t, m, self.radio.gain_dbi(m))
            for t, m in self.beams.angles_deg()
        ]

    def user_points(self) -> List[PolarPoint]:
        return [PolarPoint.from_degrees(t, d) for t, d in self.users.positions()]

    # serialization ------------------------------------------------------
    def to_dict(self) -> Dict[str, Any]:
        return _plain(asdict(self))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        blocks = {
            "radio": RadioConfig, "env": EnvConfig, "beams": BeamsConfig,
            "users": UsersConfig, "sim": SimConfig, "quad": QuadratureConfig,
            "outputs": OutputsConfig, "compare": CompareConfig,
        }
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in data.items():
            if key in blocks:
                kwargs[key] = _build(blocks[key], value, key)
            else:
                kwargs[key] = value
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


def _plain(obj):
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _build(cls, value, name):
    if not isinstance(value, dict):
        raise ConfigError(f"block {name!r} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(value) - known
    if unknown:
        raise ConfigError(f"unknown keys in block {name!r}: {sorted(unknown)}")
    try:
        return cls(**value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"block {name!r}: {exc}") from exc


def merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dict merge; ``override`` wins on leaves."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


_REFLECTED_SET = [[90.0, 10.0], [95.0, 10.0], [105.0, 30.0]]


def preset(name: str) -> ExperimentConfig:
    """Configuration reproducing one of the four published figures."""
    if name == "fig3":
        return ExperimentConfig(
            experiment="fig3",
            beams=BeamsConfig(n=36),
            users=UsersConfig(list_deg=[[90.0, 50.0]]),
        )
    if name == "fig4":
        return ExperimentConfig(
            experiment="fig4",
            kind="cell",
            beams=BeamsConfig(n=36),
            users=UsersConfig(theta_deg=90.0, d_start=25.0, d_stop=200.0, d_step=25.0),
        )
    if name == "fig5":
        return ExperimentConfig(
            experiment="fig5",
            beams=BeamsConfig(list_deg=copy.deepcopy(_REFLECTED_SET)),
            users=UsersConfig(theta_deg=90.0, d_start=25.0, d_stop=200.0, d_step=25.0),
        )
    if name == "fig6":
        return ExperimentConfig(
            experiment="fig6",
            env=EnvConfig(lam_sweep=[round(k * 5e-5, 12) for k in range(21)]),
            beams=BeamsConfig(list_deg=copy.deepcopy(_REFLECTED_SET)),
            users=UsersConfig(list_deg=[[90.0, 50.0]]),
        )
    raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def load_config(path: Optional[str] = None, preset_name: Optional[str] = None) -> ExperimentConfig:
    """Resolve a configuration from a preset and/or a JSON file.

    The file (``path`` or ``$BEAMCOV_CONFIG``) may be partial; its keys are
    merged over the preset, or over the built-in defaults without one.
    """
    base = preset(preset_name).to_dict() if preset_name else ExperimentConfig().to_dict()
    path = path or os.environ.get(CONFIG_ENV_VAR) or None
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            override = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(override, dict):
            raise ConfigError(f"{path}: configuration must be a JSON object")
        base = merge(base, override)
    return ExperimentConfig.from_dict(base)
