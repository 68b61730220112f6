"""
Scenario configuration: a flat YAML file of ``key: value`` pairs, overridden by command-line
flags. Only ``rho_s`` (a 2x2 list) and ``bath_weights`` (a map ``m -> weight``) may be nested.
"""
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np
import yaml

from . import constants
from .aliases import PathOrStr
from .exceptions import ConfigurationError, InvalidStateError
from .model import (
    BlockDensity,
    CouplingProfile,
    build_couplings,
    excited_state,
    initial_block_state,
    polarized_weights,
    superposition_state,
)

NESTED_FIELDS = ("rho_s", "bath_weights")

# Flag and file spellings that differ from the field names.
ALIASES = {
    "alpha_ratio": "alpha0_over_omega0",
    "points": "n_points",
}


def _parse_complex(value: Any, field: str) -> complex:
    try:
        return complex(str(value).replace(" ", ""))
    except ValueError:
        raise ConfigurationError(f"'{field}' entry {value!r} is not a number")


def parse_methods(value: Any) -> Tuple[str, ...]:
    if isinstance(value, str):
        value = [part for part in value.split(",")]
    methods = tuple(str(method).strip() for method in value if str(method).strip())
    unknown = [method for method in methods if method not in constants.METHODS]
    if unknown:
        raise ConfigurationError(
            f"'methods' contains unknown method(s) {', '.join(unknown)}. "
            f"Choose from {', '.join(constants.METHODS)}."
        )
    return methods


def parse_window(value: Any) -> Optional[Tuple[float, float]]:
    if value is None:
        return None
    if isinstance(value, str):
        value = value.split(",")
    try:
        start, end = (float(part) for part in value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"'window' must be two numbers 'start,end', got {value!r}")
    return start, end


@dataclass(frozen=True)
class ScenarioConfig:
    n_bath: int = 10
    alpha0_over_omega0: float = 0.01
    omega0: float = constants.DEFAULT_OMEGA0
    k0: Optional[float] = None
    exponent: float = constants.DEFAULT_EXPONENT
    initial: str = "superposition"
    rho_s: Optional[Tuple[Tuple[complex, complex], Tuple[complex, complex]]] = None
    bath_weights: Optional[Tuple[Tuple[float, float], ...]] = None
    polarization: Optional[float] = None
    t_max: float = constants.DEFAULT_T_MAX
    n_points: int = constants.DEFAULT_POINTS
    methods: Tuple[str, ...] = ("exact", "tcl2")
    window: Optional[Tuple[float, float]] = None
    exact_cap: int = constants.EXACT_CAP
    enumeration_cap: int = constants.ENUMERATION_CAP

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "ScenarioConfig":
        return cls().merged(values)

    def merged(self, overrides: Mapping[str, Any]) -> "ScenarioConfig":
        """A copy with every non-``None`` entry of ``overrides`` applied, then validated."""
        return self._with(overrides).validate()

    def _with(self, overrides: Mapping[str, Any]) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(self)}
        changes: Dict[str, Any] = {}
        for key, value in overrides.items():
            if value is None:
                continue
            key = ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
            if key not in known:
                raise ConfigurationError(f"Unknown config field '{key}'")
            changes[key] = _coerce(key, value)
        return dataclasses.replace(self, **changes)

    def validate(self) -> "ScenarioConfig":
        if self.n_bath < 1:
            raise ConfigurationError(f"'n_bath' must be at least 1, got {self.n_bath}")
        for name in ("alpha0_over_omega0", "omega0", "exponent", "t_max"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigurationError(f"'{name}' must be positive, got {value!r}")
        if self.k0 is not None and self.k0 <= 0:
            raise ConfigurationError(f"'k0' must be positive, got {self.k0!r}")
        if self.n_points < 2:
            raise ConfigurationError(f"'n_points' must be at least 2, got {self.n_points}")
        if not self.methods:
            raise ConfigurationError("'methods' must name at least one method")
        if self.initial not in constants.INITIAL_STATES:
            raise ConfigurationError(
                f"'initial' must be one of {', '.join(constants.INITIAL_STATES)}, got '{self.initial}'"
            )
        if self.initial == "custom" and self.rho_s is None:
            raise ConfigurationError("'initial: custom' needs 'rho_s'")
        if self.initial == "polarized" and self.polarization is None:
            raise ConfigurationError("'initial: polarized' needs 'polarization'")
        if "exact" in self.methods and self.n_bath > self.exact_cap:
            raise ConfigurationError(
                f"'exact' requested with n_bath={self.n_bath} above the exact cap {self.exact_cap}"
            )
        if self.window is not None:
            start, end = self.window
            if not 0 <= start < end <= self.t_max:
                raise ConfigurationError(
                    f"'window' must satisfy 0 <= start < end <= t_max, got {self.window}"
                )
        return self

    @property
    def effective_window(self) -> Tuple[float, float]:
        return self.window if self.window is not None else (0.0, self.t_max)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_points)

    def build_profile(self) -> CouplingProfile:
        return build_couplings(
            self.n_bath,
            omega0=self.omega0,
            alpha0=self.alpha0_over_omega0 * self.omega0,
            k0=self.k0,
            exponent=self.exponent,
        )

    def build_initial(self) -> BlockDensity:
        try:
            if self.initial == "superposition":
                return initial_block_state(superposition_state(), "unpolarized", self.n_bath)
            if self.initial == "excited":
                return initial_block_state(excited_state(), "unpolarized", self.n_bath)
            if self.initial == "polarized":
                rho = np.array(self.rho_s, dtype=complex) if self.rho_s is not None else excited_state()
                return initial_block_state(
                    rho, polarized_weights(self.n_bath, self.polarization), self.n_bath
                )
            bath = dict(self.bath_weights) if self.bath_weights is not None else "unpolarized"
            return initial_block_state(np.array(self.rho_s, dtype=complex), bath, self.n_bath)
        except InvalidStateError as e:
            raise ConfigurationError(f"Invalid initial state for '{self.initial}': {e}")

    def describe(self) -> Dict[str, Any]:
        """JSON-friendly echo of the config."""
        echo = dataclasses.asdict(self)
        if self.rho_s is not None:
            echo["rho_s"] = [[str(value) for value in row] for row in self.rho_s]
        if self.bath_weights is not None:
            echo["bath_weights"] = {str(m): w for m, w in self.bath_weights}
        echo["methods"] = list(self.methods)
        echo["window"] = list(self.effective_window)
        return echo


def _coerce(key: str, value: Any) -> Any:
    try:
        if key in ("n_bath", "n_points", "exact_cap", "enumeration_cap"):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError()
            return int(value)
        if key in ("alpha0_over_omega0", "omega0", "k0", "exponent", "t_max", "polarization"):
            return float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"'{key}' has an invalid value {value!r}")
    if key == "initial":
        return str(value)
    if key == "methods":
        return parse_methods(value)
    if key == "window":
        return parse_window(value)
    if key == "rho_s":
        rows = list(value)
        if len(rows) != 2 or any(len(row) != 2 for row in rows):
            raise ConfigurationError("'rho_s' must be a 2x2 list")
        return tuple(tuple(_parse_complex(v, "rho_s") for v in row) for row in rows)
    if key == "bath_weights":
        if not isinstance(value, Mapping):
            raise ConfigurationError("'bath_weights' must map sector labels m to weights")
        try:
            return tuple(sorted((float(m), float(w)) for m, w in value.items()))
        except (TypeError, ValueError):
            raise ConfigurationError(f"'bath_weights' has non-numeric entries: {value!r}")
    return value


def read_config_file(path: PathOrStr) -> Dict[str, Any]:
    path = Path(path)
    try:
        with open(path) as f:
            values = yaml.safe_load(f)
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file '{path}': {e}")
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Config file '{path}' is not valid YAML: {e}")
    if values is None:
        return {}
    if not isinstance(values, dict):
        raise ConfigurationError(f"Config file '{path}' must hold key-value pairs")
    for key, value in values.items():
        if isinstance(value, (dict, list)) and key not in NESTED_FIELDS and key not in ("methods", "window"):
            raise ConfigurationError(f"Config field '{key}' in '{path}' must be a flat value")
    return values


def load_config(path: Optional[PathOrStr] = None, **overrides: Any) -> ScenarioConfig:
    """Defaults, then the file at ``path``, then ``overrides``; later sources win."""
    config = ScenarioConfig()
    if path is not None:
        config = config._with(read_config_file(path))
    return config._with(overrides).validate()
