"""
The central spin model: hyperfine couplings, bath sectors of fixed ``J3`` and block-form
initial states.

Energies are in units of ``omega0`` unless a caller passes something else. Bath spin ``k``
(``k = 1..N`` in the coupling profile) is bit ``k - 1`` of a configuration mask; a set bit
means the spin points up.
"""
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.special import comb
from scipy.stats import binom

from . import constants
from .aliases import SectorLabel
from .det_hash import CustomDetHash
from .exceptions import ConfigurationError, InvalidStateError, ResourceLimitError

BathChoice = Union[str, Mapping[SectorLabel, float]]


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _means(alphas: np.ndarray):
    if np.all(alphas == alphas[0]):
        return float(alphas[0]), float(alphas[0])
    n = len(alphas)
    a1 = math.fsum(alphas) / n
    a2 = math.sqrt(math.fsum(alphas * alphas) / n)
    return a1, a2


@dataclass(frozen=True, eq=False)
class CouplingProfile(CustomDetHash):
    n_bath: int
    omega0: float
    alpha0: float
    alphas: np.ndarray
    a1: float
    a2: float
    k0: Optional[float] = None
    exponent: Optional[float] = None

    def det_hash_object(self) -> Any:
        return (self.n_bath, self.omega0, self.alpha0, self.k0, self.exponent, self.alphas)

    @property
    def beta(self) -> float:
        return beta(self)

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.alphas == self.alphas[0]))

    def describe(self) -> Dict[str, Any]:
        return {
            "n_bath": self.n_bath,
            "omega0": self.omega0,
            "alpha0": self.alpha0,
            "k0": self.k0,
            "exponent": self.exponent,
            "a1": self.a1,
            "a2": self.a2,
            "beta": self.beta,
        }


def _require_positive(**values: float):
    for name, value in values.items():
        if value is None or not np.isfinite(value) or value <= 0:
            raise ConfigurationError(f"'{name}' must be a positive number, got {value!r}")


def build_couplings(
    n_bath: int,
    omega0: float = constants.DEFAULT_OMEGA0,
    alpha0: float = 0.01,
    k0: Optional[float] = None,
    exponent: float = constants.DEFAULT_EXPONENT,
) -> CouplingProfile:
    """
    Hyperfine constants ``alpha_k = alpha0 * exp(-(k / k0) ** exponent)`` for ``k = 1..N``.
    ``k0`` defaults to ``N / 2``.
    """
    if not isinstance(n_bath, (int, np.integer)) or n_bath < 1:
        raise ConfigurationError(f"'n_bath' must be a positive integer, got {n_bath!r}")
    if k0 is None:
        k0 = n_bath / 2
    _require_positive(omega0=omega0, alpha0=alpha0, k0=k0, exponent=exponent)
    k = np.arange(1, n_bath + 1, dtype=float)
    alphas = alpha0 * np.exp(-((k / k0) ** exponent))
    if np.any(alphas <= 0):
        raise ConfigurationError(
            f"Coupling profile underflows to zero (alpha0={alpha0}, k0={k0}, exponent={exponent})"
        )
    a1, a2 = _means(alphas)
    return CouplingProfile(
        n_bath=int(n_bath),
        omega0=float(omega0),
        alpha0=float(alpha0),
        alphas=_frozen(alphas),
        a1=a1,
        a2=a2,
        k0=float(k0),
        exponent=float(exponent),
    )


def uniform_couplings(
    n_bath: int, value: float, omega0: float = constants.DEFAULT_OMEGA0
) -> CouplingProfile:
    if not isinstance(n_bath, (int, np.integer)) or n_bath < 1:
        raise ConfigurationError(f"'n_bath' must be a positive integer, got {n_bath!r}")
    _require_positive(omega0=omega0, value=value)
    alphas = np.full(int(n_bath), float(value))
    return CouplingProfile(
        n_bath=int(n_bath),
        omega0=float(omega0),
        alpha0=float(value),
        alphas=_frozen(alphas),
        a1=float(value),
        a2=float(value),
    )


def custom_couplings(
    alphas: Sequence[float], omega0: float = constants.DEFAULT_OMEGA0
) -> CouplingProfile:
    alphas = np.array(alphas, dtype=float).reshape(-1)
    if len(alphas) < 1:
        raise ConfigurationError("'alphas' must contain at least one coupling")
    if np.any(~np.isfinite(alphas)) or np.any(alphas <= 0):
        raise ConfigurationError("'alphas' must all be positive and finite")
    _require_positive(omega0=omega0)
    a1, a2 = _means(alphas)
    return CouplingProfile(
        n_bath=len(alphas),
        omega0=float(omega0),
        alpha0=float(alphas.max()),
        alphas=_frozen(alphas),
        a1=a1,
        a2=a2,
    )


def beta(profile: CouplingProfile) -> float:
    """``beta = 2 sqrt(N) A2 / omega0``, the small parameter of the large-N population formula."""
    return 2.0 * math.sqrt(profile.n_bath) * profile.a2 / profile.omega0


def alpha0_for_beta(
    n_bath: int,
    target_beta: float,
    omega0: float = constants.DEFAULT_OMEGA0,
    k0: Optional[float] = None,
    exponent: float = constants.DEFAULT_EXPONENT,
) -> float:
    _require_positive(target_beta=target_beta)
    # A2 is linear in alpha0.
    unit = build_couplings(n_bath, omega0=omega0, alpha0=1.0, k0=k0, exponent=exponent)
    return target_beta / unit.beta


def state_space_dimension(n_bath: int) -> int:
    """Dimension of the real space of total density matrices, ``2^(2N+2) - 1``."""
    return 2 ** (2 * n_bath + 2) - 1


@dataclass(frozen=True, eq=False)
class SectorEntry:
    m: SectorLabel
    degeneracy: int
    configs: np.ndarray
    k3_values: np.ndarray


@dataclass(frozen=True, eq=False)
class SectorTable:
    n_bath: int
    sectors: List[SectorEntry]

    @property
    def m_values(self) -> np.ndarray:
        return np.array([entry.m for entry in self.sectors])

    @property
    def degeneracies(self) -> np.ndarray:
        return np.array([entry.degeneracy for entry in self.sectors], dtype=np.int64)

    def unpolarized_weights(self) -> np.ndarray:
        """Sector weights ``N_m / 2^N`` of the infinite temperature bath."""
        return self.degeneracies / float(2 ** self.n_bath)

    def index(self, m: SectorLabel) -> int:
        return sector_index(self.n_bath, m)

    def sector(self, m: SectorLabel) -> SectorEntry:
        return self.sectors[self.index(m)]

    def __iter__(self):
        return iter(self.sectors)

    def __len__(self) -> int:
        return len(self.sectors)


def sector_labels(n_bath: int) -> np.ndarray:
    """``m = -N/2, ..., N/2`` in steps of one."""
    return np.arange(n_bath + 1) - n_bath / 2


def sector_index(n_bath: int, m: SectorLabel) -> int:
    """Position of sector ``m`` in ascending order, i.e. the number of up spins ``N/2 + m``."""
    n_up = m + n_bath / 2
    index = int(round(n_up))
    if abs(n_up - index) > 1e-9 or index < 0 or index > n_bath:
        raise ConfigurationError(f"m={m!r} is not a sector label for N={n_bath}")
    return index


def config_bits(configs: np.ndarray, n_bath: int) -> np.ndarray:
    """``(len(configs), N)`` array of 0/1 spin states; column ``k - 1`` is bath spin ``k``."""
    return (configs[:, None] >> np.arange(n_bath)) & 1


def k3_of(configs: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """Eigenvalue ``(1/2) sum_k alpha_k s_k`` of ``K3`` on product configurations."""
    signs = 2 * config_bits(configs, len(alphas)) - 1
    return 0.5 * (signs @ alphas)


def build_sectors(
    profile: CouplingProfile, enumeration_cap: int = constants.ENUMERATION_CAP
) -> SectorTable:
    n_bath = profile.n_bath
    if n_bath > enumeration_cap:
        raise ResourceLimitError(
            f"N={n_bath} bath spins exceed the enumeration cap of {enumeration_cap} "
            f"(2^N configurations). Pass a larger 'enumeration_cap' to override."
        )
    masks = np.arange(2 ** n_bath, dtype=np.int64)
    n_up = config_bits(masks, n_bath).sum(axis=1)
    k3 = k3_of(masks, profile.alphas)
    sectors = []
    for count, m in enumerate(sector_labels(n_bath)):
        selected = n_up == count
        configs = masks[selected]
        sectors.append(
            SectorEntry(
                m=float(m),
                degeneracy=int(comb(n_bath, count, exact=True)),
                configs=_frozen(configs),
                k3_values=_frozen(k3[selected]),
            )
        )
    return SectorTable(n_bath=n_bath, sectors=sectors)


def excited_state() -> np.ndarray:
    return np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


def superposition_state() -> np.ndarray:
    """``(|+> + |->) / sqrt(2)``."""
    return 0.5 * np.ones((2, 2), dtype=complex)


def validate_density_matrix(rho: np.ndarray, name: str = "rho_s") -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise InvalidStateError(f"'{name}' must be a 2x2 matrix, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, rtol=0.0, atol=constants.HERMITIAN_TOLERANCE):
        raise InvalidStateError(f"'{name}' is not Hermitian")
    if abs(np.trace(rho) - 1.0) > constants.TRACE_TOLERANCE:
        raise InvalidStateError(f"'{name}' does not have unit trace (trace={np.trace(rho).real:.3g})")
    if np.linalg.eigvalsh(rho).min() < -constants.POSITIVITY_TOLERANCE:
        raise InvalidStateError(f"'{name}' is not positive semidefinite")
    return rho


@dataclass(frozen=True, eq=False)
class BlockDensity(CustomDetHash):
    """
    The family ``rho_m = Tr_B{Pi_m rho}`` of unnormalized 2x2 blocks, one per sector, stored
    as an ``(N + 1, 2, 2)`` array in ascending ``m``. Index 0 is ``|+>``, index 1 is ``|->``.
    """

    m_values: np.ndarray
    blocks: np.ndarray

    def det_hash_object(self) -> Any:
        return (self.m_values, self.blocks)

    @property
    def n_bath(self) -> int:
        return len(self.m_values) - 1

    def block(self, m: SectorLabel) -> np.ndarray:
        return self.blocks[sector_index(self.n_bath, m)]

    def trace(self) -> float:
        return float(np.trace(self.blocks, axis1=1, axis2=2).sum().real)

    def reduced_state(self) -> np.ndarray:
        return self.blocks.sum(axis=0)

    def coherence(self) -> complex:
        return complex(self.blocks[:, 0, 1].sum())

    def populations(self):
        rho_s = self.reduced_state()
        return float(rho_s[0, 0].real), float(rho_s[1, 1].real)

    def sector_populations(self):
        """``(P_m^+, P_m^-)`` as two arrays over ascending ``m``."""
        return self.blocks[:, 0, 0].real.copy(), self.blocks[:, 1, 1].real.copy()

    def sector_weights(self) -> np.ndarray:
        return np.trace(self.blocks, axis1=1, axis2=2).real

    def validate(self) -> "BlockDensity":
        hermitian_defect = np.abs(self.blocks - np.conj(np.swapaxes(self.blocks, 1, 2))).max()
        if hermitian_defect > constants.HERMITIAN_TOLERANCE:
            raise InvalidStateError(f"Blocks are not Hermitian (defect {hermitian_defect:.3g})")
        if abs(self.trace() - 1.0) > constants.TRACE_TOLERANCE:
            raise InvalidStateError(f"Blocks do not sum to unit trace (trace={self.trace():.15g})")
        if np.linalg.eigvalsh(self.reduced_state()).min() < -constants.POSITIVITY_TOLERANCE:
            raise InvalidStateError("Reduced state has a negative eigenvalue")
        return self


def _block_density(n_bath: int, blocks: np.ndarray) -> BlockDensity:
    return BlockDensity(
        m_values=_frozen(sector_labels(n_bath).astype(float)),
        blocks=_frozen(np.asarray(blocks, dtype=complex)),
    )


def unpolarized_weights(n_bath: int) -> np.ndarray:
    degeneracies = np.array([comb(n_bath, k, exact=True) for k in range(n_bath + 1)], dtype=float)
    return degeneracies / float(2 ** n_bath)


def polarized_weights(n_bath: int, polarization: float) -> Dict[SectorLabel, float]:
    """
    Sector weights of a bath whose spins are independently up with probability
    ``(1 + polarization) / 2``.
    """
    if not -1.0 < polarization < 1.0:
        raise ConfigurationError(f"'polarization' must lie in (-1, 1), got {polarization!r}")
    pmf = binom.pmf(np.arange(n_bath + 1), n_bath, 0.5 * (1.0 + polarization))
    pmf = pmf / pmf.sum()
    return {float(m): float(w) for m, w in zip(sector_labels(n_bath), pmf)}


def _weight_vector(n_bath: int, bath: BathChoice) -> np.ndarray:
    if isinstance(bath, str):
        if bath != "unpolarized":
            raise InvalidStateError(f"Unknown bath choice '{bath}'. Use 'unpolarized' or a weight map.")
        return unpolarized_weights(n_bath)
    weights = np.zeros(n_bath + 1)
    for m, weight in bath.items():
        try:
            index = sector_index(n_bath, float(m))
        except ConfigurationError as e:
            raise InvalidStateError(str(e))
        weight = float(weight)
        if not np.isfinite(weight) or weight < 0:
            raise InvalidStateError(f"Bath weight for m={m} must be nonnegative, got {weight!r}")
        weights[index] += weight
    if abs(weights.sum() - 1.0) > constants.TRACE_TOLERANCE:
        raise InvalidStateError(f"Bath weights must sum to 1, got {weights.sum():.15g}")
    return weights


def initial_block_state(rho_s: np.ndarray, bath: BathChoice, n_bath: int) -> BlockDensity:
    """
    ``rho_m(0) = w_m rho_S(0)`` with ``w_m = N_m / 2^N`` for the unpolarized bath or the given
    sector weights otherwise. Every such state is invariant under the correlated projection.
    """
    rho_s = validate_density_matrix(rho_s)
    weights = _weight_vector(n_bath, bath)
    return _block_density(n_bath, weights[:, None, None] * rho_s[None, :, :]).validate()


def correlated_block_state(blocks: Mapping[SectorLabel, np.ndarray], n_bath: int) -> BlockDensity:
    """
    General initial state ``sum_m rho_m (x) Pi_m / N_m`` with independent blocks; sectors that
    are not listed are empty.
    """
    array = np.zeros((n_bath + 1, 2, 2), dtype=complex)
    for m, block in blocks.items():
        try:
            index = sector_index(n_bath, float(m))
        except ConfigurationError as e:
            raise InvalidStateError(str(e))
        block = np.asarray(block, dtype=complex)
        if block.shape != (2, 2):
            raise InvalidStateError(f"Block for m={m} must be 2x2, got shape {block.shape}")
        if np.linalg.eigvalsh(0.5 * (block + block.conj().T)).min() < -constants.POSITIVITY_TOLERANCE:
            raise InvalidStateError(f"Block for m={m} is not positive semidefinite")
        array[index] = block
    return _block_density(n_bath, array).validate()
