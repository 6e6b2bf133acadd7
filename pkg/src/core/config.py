"""Run configuration for floquet-xxz"""

import configparser
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import List, Optional

import numpy as np

from core.basis import Boundary
from core.errors import BasisError, ConfigError

APP_NAME = "floquet-xxz"
APP_VERSION = "1.0.0"

EXPERIMENTS = (
    "sweep-r",
    "spectrum-entanglement",
    "dynamics",
    "sff",
    "verify-map",
    "charge-norm",
    "fpt-compare",
    "asym-sweep",
    "crossover",
    "thermalization",
    "sector-dims",
)
PROTOCOLS = ("square2", "asym", "cos2")
SWEEP_AXES = ("gamma_over_pi", "px", "p", "lambda_over_w1", "w0", "L")
INITIAL_STATES = ("vac", "z2", "z2bar", "afm")

# section -> accepted keys
_SECTIONS = {
    "run": ("experiment", "L", "bc", "k", "parity", "n_up", "output_dir", "threads", "seed", "log_level"),
    "drive": (
        "protocol", "lambda0", "w0", "w1", "T1", "gamma_over_pi", "x", "z1",
        "q", "p", "p_h", "detuning_sign", "w1_sign_flip", "tie_w0",
    ),
    "sweep": ("axis", "values", "start", "stop", "step", "n_bin"),
    "dynamics": (
        "initial_state", "n_max", "points_per_decade", "n0", "window",
        "threshold", "sff_points", "sff_n_max", "w0_window", "w0_spread",
    ),
    "verify": ("L_min", "L_max", "J", "level"),
}


def _parse_value(raw: str, kind):
    raw = raw.strip()
    if kind is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind is int:
        return int(float(raw)) if "e" in raw.lower() else int(raw)
    if kind is float:
        return float(raw)
    if kind == "floats":
        return [float(v) for v in raw.replace(";", ",").split(",") if v.strip()]
    return raw


_KINDS = {
    "L": int, "k": int, "n_up": int, "threads": int, "seed": int,
    "lambda0": float, "w0": float, "w1": float, "T1": float, "gamma_over_pi": float,
    "x": float, "z1": float, "q": int, "p": float, "p_h": int, "detuning_sign": int,
    "w1_sign_flip": bool, "tie_w0": bool,
    "values": "floats", "start": float, "stop": float, "step": float, "n_bin": int,
    "n_max": int, "points_per_decade": int, "n0": int, "window": int, "threshold": float,
    "sff_points": int, "sff_n_max": int, "w0_window": int, "w0_spread": float,
    "L_min": int, "L_max": int, "J": float,
}


@dataclass
class RunConfig:
    """Experiment configuration"""

    # Run
    experiment: str = "sweep-r"
    L: int = 14
    bc: str = "pbc"
    k: int = 0
    parity: str = "+1"
    n_up: Optional[int] = None
    output_dir: str = "results"
    threads: int = 1
    seed: int = 1234
    log_level: str = "INFO"

    # Drive
    protocol: str = "square2"
    lambda0: float = 20.0
    w0: float = 1.0
    w1: float = 1.0
    T1: Optional[float] = None
    gamma_over_pi: Optional[float] = 2.0
    x: Optional[float] = None
    z1: Optional[float] = None
    q: int = 3
    p: float = 0.5
    p_h: int = 1
    detuning_sign: int = -1
    w1_sign_flip: bool = False
    tie_w0: bool = True

    # Sweep
    axis: str = "gamma_over_pi"
    values: List[float] = field(default_factory=list)
    start: Optional[float] = None
    stop: Optional[float] = None
    step: Optional[float] = None
    n_bin: int = 50

    # Dynamics
    initial_state: str = "vac"
    n_max: int = 10**6
    points_per_decade: int = 10
    n0: int = 10**6
    window: int = 200
    threshold: float = 0.05
    sff_points: int = 200
    sff_n_max: int = 20000
    w0_window: int = 20
    w0_spread: float = 0.05

    # Verify
    L_min: int = 6
    L_max: int = 12
    J: float = 1.0
    level: str = "fast"

    def __post_init__(self):
        """Apply environment overrides and validate"""
        if os.getenv("FLOQUET_THREADS"):
            try:
                self.threads = int(os.getenv("FLOQUET_THREADS"))
            except ValueError:
                raise ConfigError(f"FLOQUET_THREADS must be an integer, got {os.getenv('FLOQUET_THREADS')!r}") from None
        self.output_dir = os.getenv("FLOQUET_OUTPUT_DIR", self.output_dir)
        self.validate()

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        """Parse an INI file with [run], [drive], [sweep], [dynamics], [verify] sections"""
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        parser = configparser.ConfigParser()
        parser.optionxform = str
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as e:
            raise ConfigError(f"Cannot parse {path}: {e}") from e

        values = {}
        for section in parser.sections():
            if section not in _SECTIONS:
                raise ConfigError(f"Unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in _SECTIONS[section]:
                    raise ConfigError(f"Unknown key {key!r} in [{section}]")
                try:
                    values[key] = _parse_value(raw, _KINDS.get(key, str))
                except ValueError as e:
                    raise ConfigError(f"Bad value for {section}.{key}: {e}") from e
        return cls(**values)

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"Unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"Unknown protocol {self.protocol!r}; choose from {', '.join(PROTOCOLS)}")
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"Unknown sweep axis {self.axis!r}")
        if self.initial_state not in INITIAL_STATES:
            raise ConfigError(f"Unknown initial state {self.initial_state!r}")
        if self.parity not in ("+1", "-1", "1", "none"):
            raise ConfigError(f"parity must be +1, -1 or none, got {self.parity!r}")
        try:
            Boundary.parse(self.bc)
        except BasisError as e:
            raise ConfigError(str(e)) from e
        if self.L < 2:
            raise ConfigError(f"L must be >= 2, got {self.L}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.lambda0 <= 0:
            raise ConfigError(f"lambda0 must be positive, got {self.lambda0}")
        if self.w0 < 0 or self.w1 < 0:
            raise ConfigError("w0 and w1 must be non-negative")
        if self.detuning_sign not in (1, -1):
            raise ConfigError(f"detuning_sign must be +1 or -1, got {self.detuning_sign}")
        if not 0 < self.p < 1:
            raise ConfigError(f"p must lie in (0, 1), got {self.p}")
        if self.window < 1 or self.n_bin < 1:
            raise ConfigError("window and n_bin must be >= 1")
        if self.level not in ("fast", "full"):
            raise ConfigError(f"verify level must be fast or full, got {self.level!r}")
        grid = self.sweep_values()
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise ConfigError(f"Sweep grid for {self.axis} must be strictly increasing")
        self.period()

    @property
    def boundary(self) -> Boundary:
        return Boundary.parse(self.bc)

    @property
    def parity_value(self) -> Optional[int]:
        return None if self.parity == "none" else int(self.parity)

    def sweep_values(self) -> np.ndarray:
        """Explicit values, or start..stop inclusive in steps of step"""
        if self.values:
            return np.asarray(self.values, dtype=float)
        if self.start is not None and self.stop is not None and self.step:
            if self.step <= 0 or self.stop < self.start:
                raise ConfigError("Sweep needs step > 0 and stop >= start")
            count = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
            return self.start + self.step * np.arange(count)
        return np.array([], dtype=float)

    def require_sweep(self) -> np.ndarray:
        grid = self.sweep_values()
        if grid.size == 0:
            raise ConfigError(f"Experiment {self.experiment} needs a non-empty [sweep] grid")
        return grid

    def period(self) -> float:
        """T1 given directly or derived from gamma_over_pi, x or z1"""
        if self.T1 is not None:
            if self.T1 <= 0:
                raise ConfigError(f"T1 must be positive, got {self.T1}")
            return self.T1
        if self.protocol == "square2" and self.gamma_over_pi is not None:
            return 2 * np.pi * self.gamma_over_pi / self.lambda0
        if self.protocol == "asym" and self.x is not None:
            return self.x * np.pi / self.lambda0
        if self.protocol == "cos2" and self.z1 is not None:
            return np.pi * self.z1 / self.lambda0
        raise ConfigError(f"Cannot determine T1 for protocol {self.protocol}: set T1 or its derived parameter")

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}
