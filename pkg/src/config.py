"""
CONTRARIAN-CASCADES Run Configuration
Defaults < flat JSON file < command-line flags, validated once at parse time.
"""

import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from bonus import BonusKind, BonusSpec
from payoff import ModelParams, PopularityMode

THREADS_ENV = "CONTRARIAN_THREADS"
OUTPUT_DIR_ENV = "CONTRARIAN_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "./contrarian_output"


class ConfigError(ValueError):
    """Invalid or unknown configuration value."""


def threads_from_env(default: int = 1) -> int:
    """Worker count for sweeps and ensembles from CONTRARIAN_THREADS."""
    raw = os.getenv(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if threads < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1, got {threads}")
    return threads


def output_dir_from_env() -> Path:
    return Path(os.getenv(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)


def expand_grid(spec: List[float]) -> np.ndarray:
    """
    Expand a [lo, hi, step] grid spec into an inclusive, rounded grid.

    Args:
        spec: Three numbers lo <= hi and step > 0

    Returns:
        Grid values rounded to 10 decimals
    """
    if len(spec) != 3:
        raise ConfigError(f"Grid spec must be [lo, hi, step], got {spec}")
    lo, hi, step = (float(v) for v in spec)
    if step <= 0 or hi < lo:
        raise ConfigError(f"Grid spec needs lo <= hi and step > 0, got {spec}")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 10)


@dataclass
class RunConfig:
    """
    Everything a CLI run needs.

    Defaults are the light-cost calibration (c = 0.6, F = 0.06) with beliefs
    on 0.02..0.98 and intensities on 0..1.2.
    """
    bonus_kind: str = BonusKind.PROPORTIONAL.value
    k: float = 0.0
    k_grid: List[float] = field(default_factory=lambda: [0.0, 1.2, 0.1])
    cost_c: float = 0.6
    cost_F: float = 0.06
    F_grid: List[float] = field(default_factory=lambda: [0.02, 0.06, 0.16])
    lambdas: List[float] = field(default_factory=lambda: [1.0, 0.5, 0.0])
    mu: float = 0.5
    p1: Optional[float] = None  # observed popularity of action 1; None uses mu
    mu_grid: List[float] = field(default_factory=lambda: [0.02, 0.98, 0.01])
    rho: float = 1.0
    rho_max: float = 50.0
    horizon: int = 50
    n_paths: int = 1000
    seed: int = 0
    popularity_mode: str = PopularityMode.PROXY_FROM_BELIEF.value
    tie_action: int = 1
    output: Optional[str] = None
    format: str = "csv"

    def __post_init__(self):
        self.validate()

    def validate(self):
        """Re-check every field; raises ConfigError naming the bad value."""
        try:
            BonusKind(self.bonus_kind)
            PopularityMode(self.popularity_mode)
        except ValueError as e:
            raise ConfigError(str(e))
        if self.k < 0:
            raise ConfigError(f"k must be >= 0, got {self.k}")
        if not (0.0 < self.mu < 1.0):
            raise ConfigError(f"mu must lie in (0, 1), got {self.mu}")
        if self.p1 is not None and not (0.0 <= self.p1 <= 1.0):
            raise ConfigError(f"p1 must lie in [0, 1], got {self.p1}")
        if self.rho <= 0:
            raise ConfigError(f"rho must be > 0, got {self.rho}")
        for lam in self.lambdas:
            if not (0.0 <= lam <= 1.0):
                raise ConfigError(f"lambda must lie in [0, 1], got {lam}")
        if any(F < 0 for F in self.F_grid):
            raise ConfigError(f"Fixed costs must be >= 0, got {self.F_grid}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if self.n_paths < 1:
            raise ConfigError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format}")

        k_values = expand_grid(self.k_grid)
        if np.any(k_values < 0):
            raise ConfigError(f"k grid must be non-negative, got {self.k_grid}")
        mu_values = expand_grid(self.mu_grid)
        if np.any((mu_values <= 0) | (mu_values >= 1)):
            raise ConfigError(f"Belief grid must lie inside (0, 1), got {self.mu_grid}")
        self.model_params()

    @property
    def k_values(self) -> np.ndarray:
        return expand_grid(self.k_grid)

    @property
    def mu_values(self) -> np.ndarray:
        return expand_grid(self.mu_grid)

    @property
    def output_dir(self) -> Path:
        return Path(self.output) if self.output else output_dir_from_env()

    def model_params(self, k: Optional[float] = None) -> ModelParams:
        try:
            return ModelParams(
                bonus=BonusSpec(BonusKind(self.bonus_kind), self.k if k is None else k),
                cost_c=self.cost_c,
                cost_F=self.cost_F,
                rho_max=self.rho_max,
                popularity_mode=PopularityMode(self.popularity_mode),
                tie_action=self.tie_action
            )
        except ValueError as e:
            raise ConfigError(str(e))

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"Unknown config keys: {unknown}")
        try:
            return cls(**values)
        except TypeError as e:
            raise ConfigError(str(e))

    def merged(self, overrides: Dict[str, Any]) -> "RunConfig":
        """Copy with every non-None override applied."""
        values = asdict(self)
        values.update({key: value for key, value in overrides.items() if value is not None})
        return RunConfig.from_dict(values)

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(config_path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Build a RunConfig from an optional JSON file plus flag overrides.

    Args:
        config_path: Flat JSON object with RunConfig keys
        overrides: Values from the command line (None means "not given")

    Returns:
        Validated RunConfig
    """
    values: Dict[str, Any] = {}
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"Config file does not exist: {config_path}")
        try:
            with open(path, 'r') as f:
                values = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file is not valid JSON: {e}")
        if not isinstance(values, dict):
            raise ConfigError("Config file must hold a flat JSON object")

    config = RunConfig.from_dict(values)
    return config.merged(overrides or {})


def save_config(config: RunConfig, output_path: Union[str, Path]) -> Path:
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, 'w') as f:
        json.dump(config.to_dict(), f, indent=2)
    return output_path


if __name__ == "__main__":
    config = load_config(overrides={'k': 0.4, 'cost_F': 0.16})
    print(json.dumps(config.to_dict(), indent=2))
    print("threads:", threads_from_env())
