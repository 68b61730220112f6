"""
TCL2 in the modified interaction picture, where the mean-field part ``4 A2 sigma_3 J3`` is moved
into the unperturbed Hamiltonian. Every correlation function collapses to a single line:

    f_m = B_+(m) exp(i Omega_+(m) tau),  Omega_+(m) =  omega0 + 4 A2 (m + 1/2),  B_+(m) = 4 A2^2 (N/2 - m)
    g_m = B_-(m) exp(i Omega_-(m) tau),  Omega_-(m) = -omega0 + 4 A2 (-m + 1/2), B_-(m) = 4 A2^2 (N/2 + m)

and the coherences pick up a commutator and a dephasing term proportional to ``A2^2 - A1^2``.
"""
from dataclasses import dataclass

import numpy as np

from .. import constants
from ..aliases import SectorLabel
from ..exceptions import UnsupportedStateError
from ..model import BlockDensity, CouplingProfile, sector_index, sector_labels, unpolarized_weights
from ..solver import Solver, TrajectoryRecord, check_times
from ..spectra import FrequencyComb, phi
from ..util import warn
from .tcl2 import (
    BlockTrajectory,
    _require_excited_blocks,
    block_coherence,
    integrate_block_equations,
)


@dataclass(frozen=True, eq=False)
class ModifiedPictureParams:
    n_bath: int
    omega0: float
    a1: float
    a2: float
    m_values: np.ndarray
    omega_plus: np.ndarray
    omega_minus: np.ndarray
    b_plus: np.ndarray
    b_minus: np.ndarray

    @property
    def beta(self) -> float:
        return 2.0 * np.sqrt(self.n_bath) * self.a2 / self.omega0

    @property
    def kappa(self) -> np.ndarray:
        """``(N^2 - 4 m^2) / (N - 1) (A2^2 - A1^2)``; zero for a single bath spin, where ``A1 = A2``."""
        if self.n_bath == 1:
            return np.zeros(len(self.m_values))
        return (
            (self.n_bath ** 2 - 4.0 * self.m_values ** 2)
            / (self.n_bath - 1)
            * (self.a2 ** 2 - self.a1 ** 2)
        )

    def _line(self, frequencies, weights, m: SectorLabel) -> FrequencyComb:
        index = int(round(m + self.n_bath / 2))
        if not 0 <= index <= self.n_bath:
            return FrequencyComb.empty()
        return FrequencyComb.single(frequencies[index], weights[index])

    def f(self, m: SectorLabel) -> FrequencyComb:
        return self._line(self.omega_plus, self.b_plus, m)

    def g(self, m: SectorLabel) -> FrequencyComb:
        return self._line(self.omega_minus, self.b_minus, m)

    def dephasing(self, m: SectorLabel) -> FrequencyComb:
        """Rotating-frame factor ``exp(-4i A2 m t)`` of the modified unperturbed Hamiltonian."""
        sector_index(self.n_bath, m)
        return FrequencyComb.single(-4.0 * self.a2 * m, 1.0)


def modified_params(profile: CouplingProfile) -> ModifiedPictureParams:
    n, a2 = profile.n_bath, profile.a2
    m = sector_labels(n).astype(float)
    return ModifiedPictureParams(
        n_bath=n,
        omega0=profile.omega0,
        a1=profile.a1,
        a2=a2,
        m_values=m,
        omega_plus=profile.omega0 + 4.0 * a2 * (m + 0.5),
        omega_minus=-profile.omega0 + 4.0 * a2 * (-m + 0.5),
        b_plus=4.0 * a2 ** 2 * (n / 2 - m),
        b_minus=4.0 * a2 ** 2 * (n / 2 + m),
    )


def lambda_coh_mod(params: ModifiedPictureParams, index: int, times: np.ndarray) -> np.ndarray:
    """
    ``4i A1 m t + 2 kappa_m t^2 + B_+ t^2 phi(Omega_+ t) + B_- t^2 phi(-Omega_- t)``, where
    ``t^2 phi(Omega t)`` is ``(1 - exp(i Omega t)) / Omega^2 + i t / Omega`` with its series near
    ``Omega t = 0``.
    """
    m = params.m_values[index]
    t2 = times * times
    return (
        4j * params.a1 * m * times
        + 2.0 * params.kappa[index] * t2
        + params.b_plus[index] * t2 * phi(params.omega_plus[index] * times)
        + params.b_minus[index] * t2 * phi(-params.omega_minus[index] * times)
    )


def lambda_pop_mod(params: ModifiedPictureParams, index: int, times: np.ndarray) -> np.ndarray:
    """``8 A2^2 (N + 1) (1 - cos(Omega_+ t)) / Omega_+^2``, written with ``sinc`` so ``Omega_+ = 0`` is regular."""
    x = params.omega_plus[index] * times
    return 4.0 * params.a2 ** 2 * (params.n_bath + 1) * times ** 2 * np.sinc(x / (2.0 * np.pi)) ** 2


def coherence_mod(
    params: ModifiedPictureParams, initial: BlockDensity, times
) -> np.ndarray:
    times = check_times(times)
    coherence = np.zeros(len(times), dtype=complex)
    for index, c0 in enumerate(initial.blocks[:, 0, 1]):
        if c0 != 0:
            coherence += c0 * np.exp(-lambda_coh_mod(params, index, times))
    return coherence


def population_mod(
    params: ModifiedPictureParams, initial: BlockDensity, times
) -> np.ndarray:
    """
    ``P_+(t) = sum_m P_m^+(0) [(N/2 + m + 1) / (N + 1) + (N/2 - m) / (N + 1) exp(-Lambda^pop_m)]``.
    """
    _require_excited_blocks(initial, "integrate_blocks_mod")
    times = check_times(times)
    n = params.n_bath
    population = np.zeros(len(times))
    for index, m in enumerate(params.m_values):
        weight = initial.blocks[index, 0, 0].real
        if weight == 0:
            continue
        stay = (n / 2 + m + 1) / (n + 1)
        decay = (n / 2 - m) / (n + 1)
        population += weight * (stay + decay * np.exp(-lambda_pop_mod(params, index, times)))
    return population


def population_large_n(profile: CouplingProfile, times) -> np.ndarray:
    """``1 - beta^2 [1 - exp(-2 N A2^2 t^2) cos(omega0 t)]``."""
    times = check_times(times)
    beta = profile.beta
    if beta > constants.LARGE_N_BETA_WARNING:
        warn(
            f"beta={beta:.3g} exceeds {constants.LARGE_N_BETA_WARNING}; "
            "the large-N population formula is unreliable here"
        )
    envelope = np.exp(-2.0 * profile.n_bath * profile.a2 ** 2 * times ** 2)
    return 1.0 - beta ** 2 * (1.0 - envelope * np.cos(profile.omega0 * times))


def integrate_blocks_mod(
    params: ModifiedPictureParams, initial: BlockDensity, times
) -> BlockTrajectory:
    """
    Block equations with the single-line combs plus the coherence terms
    ``4i m (A2 - A1) c_m - 4 kappa_m t c_m``.
    """
    if params.n_bath == 1:
        raise UnsupportedStateError(
            "The modified-picture master equation has a 1 / (N - 1) prefactor; N=1 is not supported"
        )
    shift = 4j * params.m_values * (params.a2 - params.a1)
    kappa = params.kappa
    return integrate_block_equations(
        [params.f(m) for m in params.m_values],
        [params.g(m) for m in params.m_values],
        initial,
        times,
        coherence_rate=lambda t: shift - 4.0 * kappa * t,
    )


class _ModifiedSolverBase(Solver):
    def _params(self, profile: CouplingProfile, initial: BlockDensity) -> ModifiedPictureParams:
        if initial.n_bath != profile.n_bath:
            raise UnsupportedStateError(
                f"Initial state has {initial.n_bath} bath spins, the model has {profile.n_bath}"
            )
        return modified_params(profile)


class ModifiedTcl2Solver(_ModifiedSolverBase):
    NAME = "tcl2mod"
    VERSION = "001"

    def solve(
        self, profile: CouplingProfile, initial: BlockDensity, times, **kwargs
    ) -> TrajectoryRecord:
        times = check_times(times)
        params = self._params(profile, initial)
        try:
            _require_excited_blocks(initial, "integrate_blocks_mod")
        except UnsupportedStateError:
            trajectory = integrate_blocks_mod(params, initial, times)
            return self.record(
                profile,
                initial,
                times,
                block_coherence(params, trajectory),
                trajectory.population(),
                source="ode",
            ).validate(strict=False)
        return self.record(
            profile,
            initial,
            times,
            coherence_mod(params, initial, times),
            population_mod(params, initial, times),
            source="closed_form",
        ).validate(strict=False)


class LargeNSolver(_ModifiedSolverBase):
    NAME = "largen"
    VERSION = "001"

    def check_supported(self, profile: CouplingProfile, initial: BlockDensity) -> None:
        self._params(profile, initial)
        unpolarized = unpolarized_weights(profile.n_bath)
        expected = np.zeros_like(initial.blocks)
        expected[:, 0, 0] = unpolarized
        if np.abs(initial.blocks - expected).max() > constants.TRACE_TOLERANCE:
            raise UnsupportedStateError(
                "The large-N population formula covers only the excited central spin with an "
                "unpolarized bath"
            )

    def solve(
        self, profile: CouplingProfile, initial: BlockDensity, times, **kwargs
    ) -> TrajectoryRecord:
        self.check_supported(profile, initial)
        times = check_times(times)
        # The excited state carries no coherence at any time.
        return self.record(
            profile,
            initial,
            times,
            np.zeros(len(times), dtype=complex),
            population_large_n(profile, times),
        ).validate(strict=False)
