from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from .det_hash import DetHashWithVersion, det_hash
from .exceptions import ConfigurationError, SolverError
from .model import BlockDensity, CouplingProfile
from .util import warn

POPULATION_SLACK = 1e-10


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """
    Coherence ``C(t)`` in the rotating frame of the central spin and population ``P_+(t)``
    on a shared time grid (units of ``1 / omega0``).
    """

    times: np.ndarray
    coherence: np.ndarray
    population: np.ndarray
    method: str
    fingerprint: str
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not (len(self.times) == len(self.coherence) == len(self.population)):
            raise SolverError(
                f"Trajectory '{self.method}' has mismatched lengths: "
                f"{len(self.times)} times, {len(self.coherence)} coherences, "
                f"{len(self.population)} populations"
            )

    @property
    def coherence_re(self) -> np.ndarray:
        return self.coherence.real

    @property
    def coherence_im(self) -> np.ndarray:
        return self.coherence.imag

    def __len__(self) -> int:
        return len(self.times)

    def validate(self, strict: bool = True) -> "TrajectoryRecord":
        low, high = self.population.min(initial=0.0), self.population.max(initial=1.0)
        if low < -POPULATION_SLACK or high > 1.0 + POPULATION_SLACK:
            message = (
                f"Population of '{self.method}' leaves [0, 1]: range [{low:.3g}, {high:.3g}]"
            )
            if strict:
                raise SolverError(message)
            warn(message)
        return self


def check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float).reshape(-1)
    if len(times) == 0:
        raise ConfigurationError("'times' must not be empty")
    if np.any(~np.isfinite(times)) or times.min() < 0:
        raise ConfigurationError("'times' must be finite and nonnegative")
    if np.any(np.diff(times) < 0):
        raise ConfigurationError("'times' must be sorted in ascending order")
    return times


class Solver(DetHashWithVersion, ABC):
    """
    Base class for the methods that turn a model and an initial block state into a
    :class:`TrajectoryRecord`.
    """

    NAME: str = ""
    VERSION: Optional[str] = "001"

    def __init__(self, *, version_override: Optional[str] = None):
        if version_override is not None:
            self.VERSION = version_override

    def det_hash_object(self) -> Any:
        return self.NAME, self.VERSION

    def fingerprint(self, profile: CouplingProfile, initial: BlockDensity) -> str:
        return det_hash((profile, initial))

    def check_supported(self, profile: CouplingProfile, initial: BlockDensity) -> None:
        """Raise if this solver cannot handle the model or initial state."""

    @abstractmethod
    def solve(
        self, profile: CouplingProfile, initial: BlockDensity, times: np.ndarray, **kwargs
    ) -> TrajectoryRecord:
        raise NotImplementedError()

    def record(
        self,
        profile: CouplingProfile,
        initial: BlockDensity,
        times: np.ndarray,
        coherence: np.ndarray,
        population: np.ndarray,
        **metadata,
    ) -> TrajectoryRecord:
        return TrajectoryRecord(
            times=times,
            coherence=np.asarray(coherence, dtype=complex),
            population=np.asarray(population, dtype=float),
            method=self.NAME,
            fingerprint=self.fingerprint(profile, initial),
            metadata={"solver_version": self.VERSION, **metadata},
        )
