"""Configuration management for tube-spectra runs."""

import copy
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import toml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core import curvature
from core.cross_section import CrossSection
from core.exceptions import CapabilityError, ConfigError, CurveError, DomainError
from core.geometry import CurveSpec
from core.surface import SurfaceStripSpec, gauss_from_preset
from core.sweep import Problem, SolverSettings, StripProblem, TubeProblem

logger = logging.getLogger(__name__)


class CurvatureEntry(BaseModel):
    """A curvature preset name with its keyword parameters."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant", "sine", "bump"] = "constant"
    params: Dict[str, float] = Field(default_factory=dict)


class CurveSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dim: int = Field(2, ge=2)
    length: float = Field(math.pi, gt=0)
    kind: Literal["constant", "sine", "bump", "sampled"] = "constant"
    params: Dict[str, float] = Field(default_factory=dict)
    higher: List[CurvatureEntry] = Field(default_factory=list)
    path: str = ""
    c_gamma: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _check_kind(self) -> "CurveSection":
        if self.kind == "sampled" and not self.path:
            raise ValueError("curve.path is required when curve.kind = 'sampled'")
        if self.kind != "sampled" and len(self.higher) > self.dim - 2:
            raise ValueError(
                f"{len(self.higher)} higher curvatures given for dim={self.dim} "
                f"(at most {self.dim - 2})"
            )
        return self


class CrossSectionSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["interval", "rectangle"] = "interval"
    sides: List[float] = Field(default_factory=lambda: [2.0])

    @field_validator("sides")
    @classmethod
    def _positive_sides(cls, sides: List[float]) -> List[float]:
        if not sides or any(b <= 0 for b in sides):
            raise ValueError("side lengths must be positive")
        return sides


class GridSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    s_count: int = Field(400, ge=8)
    t_count: List[int] = Field(default_factory=lambda: [60])
    rotation_refine: int = Field(1, ge=1)

    @field_validator("t_count")
    @classmethod
    def _at_least_eight(cls, counts: List[int]) -> List[int]:
        if not counts or any(m < 8 for m in counts):
            raise ValueError("every transverse grid size must be at least 8")
        return counts


class SolverSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(3, ge=1)
    tol: float = Field(1e-9, gt=0)
    e1_shift: Literal["analytic", "discrete"] = "analytic"
    sign_margin_factor: float = Field(20.0, gt=0)


class GaussEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant", "cos", "product"] = "constant"
    params: Dict[str, float] = Field(default_factory=dict)


class SurfaceSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    length: float = Field(math.pi, gt=0)
    kappa: CurvatureEntry = Field(default_factory=CurvatureEntry)
    gauss: GaussEntry = Field(default_factory=GaussEntry)
    derivative_method: Literal["variational", "spline"] = "variational"


class RunSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["spectrum", "sweep", "nodal", "validate"] = "sweep"
    problem: Literal["tube", "surface"] = "tube"
    epsilons: List[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])
    seed: int = Field(0, ge=0, lt=2**64)

    @field_validator("epsilons")
    @classmethod
    def _strictly_decreasing(cls, eps: List[float]) -> List[float]:
        if not eps:
            raise ValueError("at least one epsilon is required")
        if any(e <= 0 for e in eps):
            raise ValueError("epsilons must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilons must be strictly decreasing")
        return eps


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = "results"
    export_matrices: bool = False
    eigenfunction_tables: bool = True


class PerformanceSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_workers: int = Field(1, ge=1)


class LoggingSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = "INFO"
    file_path: str = ""
    max_file_size_mb: int = Field(10, ge=1)
    backup_count: int = Field(5, ge=0)
    console_output: bool = True
    colored: bool = True
    detailed_timing: bool = True


class RunConfig(BaseModel):
    """Validated view of a merged configuration."""

    model_config = ConfigDict(extra="forbid")

    run: RunSection = Field(default_factory=RunSection)
    curve: CurveSection = Field(default_factory=CurveSection)
    cross_section: CrossSectionSection = Field(default_factory=CrossSectionSection)
    grid: GridSection = Field(default_factory=GridSection)
    solver: SolverSection = Field(default_factory=SolverSection)
    surface: SurfaceSection = Field(default_factory=SurfaceSection)
    output: OutputSection = Field(default_factory=OutputSection)
    performance: PerformanceSection = Field(default_factory=PerformanceSection)
    logging: LoggingSection = Field(default_factory=LoggingSection)

    @model_validator(mode="after")
    def _check_layout(self) -> "RunConfig":
        if self.run.problem == "surface":
            if len(self.grid.t_count) != 1:
                raise ValueError("surface strips take a single transverse grid size")
            return self
        t_dim = self.curve.dim - 1
        if len(self.cross_section.sides) != t_dim:
            raise ValueError(
                f"cross_section.sides has {len(self.cross_section.sides)} entries, "
                f"dim={self.curve.dim} needs {t_dim}"
            )
        if (self.cross_section.kind == "interval") != (t_dim == 1):
            raise ValueError(
                f"cross_section.kind '{self.cross_section.kind}' does not fit dim={self.curve.dim}"
            )
        if len(self.grid.t_count) not in (1, t_dim):
            raise ValueError(f"grid.t_count needs 1 or {t_dim} entries")
        return self

    @property
    def t_counts(self) -> List[int]:
        if self.run.problem == "surface":
            return list(self.grid.t_count)
        t_dim = self.curve.dim - 1
        counts = self.grid.t_count
        return list(counts) * t_dim if len(counts) == 1 else list(counts)


def _diagnostics(exc: ValidationError) -> List[str]:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(part) for part in err["loc"]) or "config"
        lines.append(f"{loc}: {err['msg']}")
    return lines


class ConfigManager:
    """Manages configuration settings for tube-spectra runs."""

    DEFAULT_CONFIG: Dict[str, Any] = {
        "run": {
            "mode": "sweep",
            "problem": "tube",
            "epsilons": [0.2, 0.1, 0.05, 0.025],
            "seed": 0,
        },
        "curve": {
            "dim": 2,
            "length": math.pi,
            "kind": "constant",
            "params": {"value": 1.0},
            "higher": [],
            "path": "",
        },
        "cross_section": {
            "kind": "interval",
            "sides": [2.0],
        },
        "grid": {
            "s_count": 400,
            "t_count": [60],
            "rotation_refine": 1,
        },
        "solver": {
            "n": 3,
            "tol": 1e-9,
            "e1_shift": "analytic",
            "sign_margin_factor": 20.0,
        },
        "surface": {
            "length": math.pi,
            "kappa": {"kind": "constant", "params": {"value": 0.0}},
            "gauss": {"kind": "constant", "params": {"value": 1.0}},
            "derivative_method": "variational",
        },
        "output": {
            "directory": "results",
            "export_matrices": False,
            "eigenfunction_tables": True,
        },
        "performance": {
            "max_workers": 1,
        },
        "logging": {
            "level": "INFO",
            "file_path": "",
            "max_file_size_mb": 10,
            "backup_count": 5,
            "console_output": True,
            "colored": True,
            "detailed_timing": True,
        },
    }

    def __init__(self, config_path: Optional[Union[str, Path]] = None):
        """Initialize configuration manager.

        Args:
            config_path: Optional TOML file merged over the defaults. Without one the
                defaults are used as they are.
        """
        self.logger = logging.getLogger(__name__)
        self.config_path = Path(config_path).expanduser() if config_path else None
        self.config: Dict[str, Any] = copy.deepcopy(self.DEFAULT_CONFIG)
        self._load_config()

    def _load_config(self) -> None:
        """Load configuration from file; a missing or malformed file is a ConfigError."""
        if self.config_path is None:
            self.logger.info("Using default configuration")
            return
        if not self.config_path.is_file():
            raise ConfigError(f"configuration file not found: {self.config_path}")
        try:
            user_config = toml.load(self.config_path)
        except toml.TomlDecodeError as e:
            raise ConfigError(
                f"cannot parse {self.config_path}",
                [f"line {e.lineno}, column {e.colno}: {e.msg}"],
            ) from e
        except OSError as e:
            raise ConfigError(f"cannot read {self.config_path}: {e}") from e

        self._merge_config(self.config, user_config)
        self.logger.info(f"Configuration loaded from {self.config_path}")

    def _merge_config(self, target: Dict[str, Any], source: Dict[str, Any]) -> None:
        """Recursively merge source config into target config."""
        for key, value in source.items():
            if key in target and isinstance(target[key], dict) and isinstance(value, dict):
                self._merge_config(target[key], value)
            else:
                target[key] = value

    def _save_config(self, path: Optional[Path] = None) -> Path:
        """Save current configuration as TOML."""
        path = Path(path or self.config_path or "tube_spectra.toml").expanduser()
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            toml.dump(self.config, f)
        self.logger.debug(f"Configuration saved to {path}")
        return path

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value using dot notation (e.g. ``'solver.tol'``)."""
        try:
            value = self.config
            for k in key.split("."):
                value = value[k]
            return value
        except (KeyError, TypeError):
            return default

    def set(self, key: str, value: Any) -> None:
        """Set configuration value using dot notation."""
        keys = key.split(".")
        config = self.config
        for k in keys[:-1]:
            if k not in config:
                config[k] = {}
            config = config[k]
        config[keys[-1]] = value
        self.logger.debug(f"Configuration updated: {key} = {value}")

    def validated(self) -> RunConfig:
        """Validate the merged configuration; problems are reported as ConfigError."""
        try:
            return RunConfig.model_validate(self.config)
        except ValidationError as e:
            raise ConfigError("invalid configuration", _diagnostics(e)) from e

    def save(self, path: Optional[Path] = None) -> Path:
        """Save current configuration to file."""
        return self._save_config(path)


def _curve_from_config(cfg: CurveSection) -> CurveSpec:
    if cfg.kind == "sampled":
        kappas = curvature.load_sampled_csv(cfg.path)
        if len(kappas) != cfg.dim - 1:
            raise CurveError(
                f"{cfg.path} provides {len(kappas)} curvature columns, "
                f"dim={cfg.dim} needs {cfg.dim - 1}"
            )
        kappa1, higher = kappas[0], kappas[1:]
    else:
        kappa1 = curvature.from_preset(cfg.kind, **cfg.params)
        higher = [curvature.from_preset(e.kind, **e.params) for e in cfg.higher]
        higher += [curvature.constant(0.0)] * (cfg.dim - 2 - len(higher))
    return CurveSpec(cfg.dim, cfg.length, kappa1, tuple(higher), cfg.c_gamma)


def problem_from_config(cfg: RunConfig) -> Problem:
    """Build the tube or strip described by the configuration.

    Bad preset parameters surface as ConfigError so the CLI can report them as such.
    """
    try:
        if cfg.run.problem == "surface":
            s = cfg.surface
            spec = SurfaceStripSpec(
                length=s.length,
                kappa=curvature.from_preset(s.kappa.kind, **s.kappa.params),
                gauss=gauss_from_preset(s.gauss.kind, **s.gauss.params),
                epsilon=cfg.run.epsilons[0],
                derivative_method=s.derivative_method,
            )
            return StripProblem(spec)

        curve = _curve_from_config(cfg.curve)
        sides = tuple(cfg.cross_section.sides)
        if cfg.cross_section.kind == "interval":
            omega = CrossSection.interval(0.5 * sides[0])
        else:
            omega = CrossSection.rectangle(sides)
        return TubeProblem(curve, omega, cfg.grid.rotation_refine)
    except TypeError as e:
        raise ConfigError("invalid preset parameters", [str(e)]) from e
    except (CurveError, CapabilityError, DomainError, OSError) as e:
        raise ConfigError("cannot build the configured geometry", [str(e)]) from e


def settings_from_config(cfg: RunConfig) -> SolverSettings:
    return SolverSettings(
        n=cfg.solver.n,
        s_count=cfg.grid.s_count,
        t_counts=tuple(cfg.t_counts),
        tol=cfg.solver.tol,
        seed=cfg.run.seed,
        e1_shift=cfg.solver.e1_shift,
        max_workers=cfg.performance.max_workers,
        rotation_refine=cfg.grid.rotation_refine,
        sign_margin_factor=cfg.solver.sign_margin_factor,
    )
