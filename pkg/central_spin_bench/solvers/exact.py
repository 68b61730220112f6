"""
Numerically exact propagation of the full Hamiltonian

    H = (omega0 / 2) sigma_3 + 2 sigma_3 K3 + 2 (sigma_+ K_- + sigma_- K_+)

by one-time diagonalization of its blocks of fixed total ``sigma_3 / 2 + J3``.

A basis state is a pair (central spin, bath mask). The sector of ``|+, c>`` holds
``popcount(c) + 1`` up spins in total, the sector of ``|-, c>`` holds ``popcount(c)``.
"""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import scipy.linalg
from tqdm import tqdm

from .. import constants
from ..exceptions import ResourceLimitError, UnsupportedStateError
from ..model import BlockDensity, CouplingProfile, config_bits, k3_of
from ..solver import Solver, TrajectoryRecord, check_times
from ..util import time_chunks

DENSE_REFERENCE_CAP = 3


@dataclass(frozen=True, eq=False)
class SectorBlockHamiltonian:
    n_up: int
    total_sz: float
    up_masks: np.ndarray
    down_masks: np.ndarray
    matrix: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.energies)

    @property
    def up_rows(self) -> slice:
        return slice(0, len(self.up_masks))

    @property
    def down_rows(self) -> slice:
        return slice(len(self.up_masks), self.dimension)


@dataclass(frozen=True, eq=False)
class SectorHamiltonians:
    profile: CouplingProfile
    blocks: List[SectorBlockHamiltonian]
    # Row of |+, c> inside block popcount(c) + 1 and of |-, c> inside block popcount(c).
    up_position: np.ndarray
    down_position: np.ndarray
    popcounts: np.ndarray

    def __iter__(self):
        return iter(self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def __getitem__(self, n_up: int) -> SectorBlockHamiltonian:
        return self.blocks[n_up]


def _check_cap(profile: CouplingProfile, exact_cap: int):
    if profile.n_bath > exact_cap:
        raise ResourceLimitError(
            f"Exact propagation of N={profile.n_bath} bath spins exceeds the exact cap of "
            f"{exact_cap}. Pass a larger 'exact_cap' to override."
        )


def build_sector_hamiltonians(
    profile: CouplingProfile, exact_cap: int = constants.EXACT_CAP
) -> SectorHamiltonians:
    _check_cap(profile, exact_cap)
    n_bath, omega0, alphas = profile.n_bath, profile.omega0, profile.alphas
    masks = np.arange(2 ** n_bath, dtype=np.int64)
    bits = config_bits(masks, n_bath)
    popcounts = bits.sum(axis=1)
    k3 = k3_of(masks, alphas)

    up_position = np.zeros(len(masks), dtype=np.int64)
    down_position = np.zeros(len(masks), dtype=np.int64)
    blocks = []
    for n_up in range(n_bath + 2):
        up_masks = masks[popcounts == n_up - 1]
        down_masks = masks[popcounts == n_up]
        up_position[up_masks] = np.arange(len(up_masks))
        down_position[down_masks] = len(up_masks) + np.arange(len(down_masks))
        dimension = len(up_masks) + len(down_masks)

        matrix = np.zeros((dimension, dimension))
        diagonal = np.concatenate(
            [0.5 * omega0 + 2.0 * k3[up_masks], -0.5 * omega0 - 2.0 * k3[down_masks]]
        )
        matrix[np.diag_indices(dimension)] = diagonal
        # 2 alpha_k sigma_+ sigma_-^k takes |-, c> to |+, c - k> for every bath spin k up in c.
        down_bits = bits[down_masks]
        rows_c, spins = np.nonzero(down_bits)
        if len(rows_c):
            sources = down_masks[rows_c]
            targets = sources ^ (np.int64(1) << spins)
            row = up_position[targets]
            col = down_position[sources]
            matrix[row, col] = 2.0 * alphas[spins]
            matrix[col, row] = 2.0 * alphas[spins]

        energies, vectors = scipy.linalg.eigh(matrix)
        blocks.append(
            SectorBlockHamiltonian(
                n_up=n_up,
                total_sz=n_up - 0.5 * (n_bath + 1),
                up_masks=up_masks,
                down_masks=down_masks,
                matrix=matrix,
                energies=energies,
                vectors=vectors,
            )
        )
    return SectorHamiltonians(
        profile=profile,
        blocks=blocks,
        up_position=up_position,
        down_position=down_position,
        popcounts=popcounts,
    )


def _phases(energies: np.ndarray, times: np.ndarray) -> np.ndarray:
    return np.exp(-1j * np.outer(times, energies))


def _bilinear(m: np.ndarray, left: SectorBlockHamiltonian, right: SectorBlockHamiltonian, times):
    """``sum_ab m_ab exp(-i E_a t) exp(+i E'_b t)`` for every t."""
    out = np.zeros(len(times), dtype=complex)
    for chunk in time_chunks(times, m.size):
        u_left = _phases(left.energies, times[chunk])
        u_right = _phases(right.energies, times[chunk])
        out[chunk] = np.einsum("tb,tb->t", u_left @ m, np.conj(u_right))
    return out


def reduced_state_exact(
    hamiltonians: SectorHamiltonians,
    initial: BlockDensity,
    times: np.ndarray,
    progress: bool = False,
) -> np.ndarray:
    """
    ``rho_S(t)`` in the Schroedinger picture, shape ``(len(times), 2, 2)``.

    The initial state ``sum_m rho_m (x) Pi_m / N_m`` is the mixture of the pure product
    members ``|phi> (x) |c>``, ``phi`` running over the eigenvectors of ``rho_m / N_m``. Member
    outer products are accumulated per sector in the eigenbasis of the block Hamiltonian
    before propagation; the sum order is fixed by the sector order.
    """
    profile = hamiltonians.profile
    n_bath = profile.n_bath
    if initial.n_bath != n_bath:
        raise UnsupportedStateError(
            f"Initial state has {initial.n_bath} bath spins, the model has {n_bath}"
        )
    degeneracies = np.array([len(block.down_masks) for block in hamiltonians.blocks[:-1]])
    per_config = initial.blocks / degeneracies[:, None, None]

    times = check_times(times)
    rho = np.zeros((len(times), 2, 2), dtype=complex)
    for block in tqdm(hamiltonians.blocks, desc="Propagating sectors", disable=not progress):
        vectors = block.vectors
        y_up = vectors[block.up_rows]
        y_down = vectors[block.down_rows]
        # Populations: block-diagonal in total J3, diagonal in the product basis.
        weight_up = per_config[block.n_up - 1, 0, 0].real if block.n_up >= 1 else 0.0
        weight_down = per_config[block.n_up, 1, 1].real if block.n_up <= n_bath else 0.0
        projector_up = y_up.T @ y_up
        projector_down = y_down.T @ y_down
        state = weight_up * projector_up + weight_down * projector_down
        if state.any():
            rho[:, 0, 0] += _bilinear(projector_up * state, block, block, times)
            rho[:, 1, 1] += _bilinear(projector_down * state, block, block, times)

        # Coherence <+|rho_S|->: |+, c> lives in this block, |-, c> in the one below.
        if block.n_up >= 1 and len(block.up_masks):
            lower = hamiltonians.blocks[block.n_up - 1]
            off_diagonal = per_config[block.n_up - 1, 0, 1]
            if off_diagonal != 0:
                x_up = vectors[hamiltonians.up_position[block.up_masks]]
                x_down = lower.vectors[hamiltonians.down_position[block.up_masks]]
                overlap = x_up.T @ x_down
                rho[:, 0, 1] += _bilinear(off_diagonal * overlap * overlap, block, lower, times)
    rho[:, 0, 0] = rho[:, 0, 0].real
    rho[:, 1, 1] = rho[:, 1, 1].real
    rho[:, 1, 0] = np.conj(rho[:, 0, 1])
    return rho


def evolve_exact(
    profile: CouplingProfile,
    initial: BlockDensity,
    times,
    hamiltonians: Optional[SectorHamiltonians] = None,
    exact_cap: int = constants.EXACT_CAP,
    progress: bool = False,
) -> TrajectoryRecord:
    return ExactSolver(exact_cap=exact_cap).solve(
        profile, initial, times, hamiltonians=hamiltonians, progress=progress
    )


@dataclass(frozen=True, eq=False)
class MemberTrajectory:
    """
    Pure product member ``|phi> (x) |c>`` propagated in time. The ``|+>`` component of ``phi``
    evolves in ``upper`` and the ``|->`` component in ``lower``.
    """

    hamiltonians: SectorHamiltonians
    bath_mask: int
    times: np.ndarray
    upper: Optional[np.ndarray]
    lower: Optional[np.ndarray]

    def _blocks(self):
        n_up = int(self.hamiltonians.popcounts[self.bath_mask])
        return self.hamiltonians[n_up + 1], self.hamiltonians[n_up]

    def norm(self) -> np.ndarray:
        total = np.zeros(len(self.times))
        for amplitudes in (self.upper, self.lower):
            if amplitudes is not None:
                total += np.sum(np.abs(amplitudes) ** 2, axis=1)
        return np.sqrt(total)

    def energy(self) -> np.ndarray:
        total = np.zeros(len(self.times))
        for amplitudes, block in zip((self.upper, self.lower), self._blocks()):
            if amplitudes is not None:
                total += np.einsum("ta,ab,tb->t", np.conj(amplitudes), block.matrix, amplitudes).real
        return total

    def total_sz(self) -> np.ndarray:
        total = np.zeros(len(self.times))
        for amplitudes, block in zip((self.upper, self.lower), self._blocks()):
            if amplitudes is not None:
                total += block.total_sz * np.sum(np.abs(amplitudes) ** 2, axis=1)
        return total


def propagate_member(
    hamiltonians: SectorHamiltonians, central_state, bath_mask: int, times
) -> MemberTrajectory:
    central_state = np.asarray(central_state, dtype=complex).reshape(2)
    times = np.asarray(times, dtype=float).reshape(-1)
    n_up = int(hamiltonians.popcounts[bath_mask])
    upper_block, lower_block = hamiltonians[n_up + 1], hamiltonians[n_up]

    def evolve(block: SectorBlockHamiltonian, row: int, amplitude: complex):
        if amplitude == 0:
            return None
        coefficients = amplitude * block.vectors[row]
        return (_phases(block.energies, times) * coefficients[None, :]) @ block.vectors.T

    return MemberTrajectory(
        hamiltonians=hamiltonians,
        bath_mask=int(bath_mask),
        times=times,
        upper=evolve(upper_block, hamiltonians.up_position[bath_mask], central_state[0]),
        lower=evolve(lower_block, hamiltonians.down_position[bath_mask], central_state[1]),
    )


def _bath_operator(single: np.ndarray, spin: int, n_bath: int) -> np.ndarray:
    # Kronecker order (spin N, ..., spin 1) puts spin k on bit k - 1; per spin index 0 = down.
    factors = [single if k == spin else np.eye(2) for k in range(n_bath, 0, -1)]
    out = np.array([[1.0]])
    for factor in factors:
        out = np.kron(out, factor)
    return out


def dense_hamiltonian(profile: CouplingProfile) -> np.ndarray:
    """Full ``2^(N+1)`` Hamiltonian from Kronecker products; the central spin is the leading factor."""
    n_bath = profile.n_bath
    central_z = np.diag([1.0, -1.0])  # basis (+, -)
    central_plus = np.array([[0.0, 1.0], [0.0, 0.0]])
    bath_z = np.diag([-1.0, 1.0])  # basis (down, up)
    bath_plus = np.array([[0.0, 0.0], [1.0, 0.0]])
    identity = np.eye(2 ** n_bath)
    h = 0.5 * profile.omega0 * np.kron(central_z, identity)
    for spin, alpha in enumerate(profile.alphas, start=1):
        z_k = _bath_operator(bath_z, spin, n_bath)
        plus_k = _bath_operator(bath_plus, spin, n_bath)
        h = h + alpha * np.kron(central_z, z_k)
        h = h + 2.0 * alpha * (np.kron(central_plus, plus_k.T) + np.kron(central_plus.T, plus_k))
    return h


def dense_reference(profile: CouplingProfile, initial: BlockDensity, times) -> np.ndarray:
    """
    ``rho_S(t)`` from the matrix exponential of the full Hamiltonian acting on the full
    density matrix. Only for ``N <= 3``; used to cross-check :func:`reduced_state_exact`.
    """
    n_bath = profile.n_bath
    if n_bath > DENSE_REFERENCE_CAP:
        raise ResourceLimitError(
            f"The dense reference is limited to N <= {DENSE_REFERENCE_CAP}, got N={n_bath}"
        )
    size = 2 ** n_bath
    popcounts = config_bits(np.arange(size, dtype=np.int64), n_bath).sum(axis=1)
    degeneracies = np.bincount(popcounts, minlength=n_bath + 1)
    bath_diagonal = np.zeros((2, 2, size), dtype=complex)
    for mask in range(size):
        bath_diagonal[:, :, mask] = initial.blocks[popcounts[mask]] / degeneracies[popcounts[mask]]
    rho0 = np.zeros((2 * size, 2 * size), dtype=complex)
    for i in range(2):
        for j in range(2):
            rho0[i * size:(i + 1) * size, j * size:(j + 1) * size] = np.diag(bath_diagonal[i, j])

    h = dense_hamiltonian(profile)
    out = np.zeros((len(times), 2, 2), dtype=complex)
    for n, t in enumerate(np.asarray(times, dtype=float)):
        u = scipy.linalg.expm(-1j * h * t)
        rho_t = u @ rho0 @ u.conj().T
        for i in range(2):
            for j in range(2):
                out[n, i, j] = np.trace(rho_t[i * size:(i + 1) * size, j * size:(j + 1) * size])
    return out


class ExactSolver(Solver):
    NAME = "exact"
    VERSION = "001"

    def __init__(self, *, exact_cap: int = constants.EXACT_CAP, **kwargs):
        super().__init__(**kwargs)
        self.exact_cap = exact_cap

    def check_supported(self, profile: CouplingProfile, initial: BlockDensity) -> None:
        _check_cap(profile, self.exact_cap)

    def solve(
        self,
        profile: CouplingProfile,
        initial: BlockDensity,
        times,
        hamiltonians: Optional[SectorHamiltonians] = None,
        progress: bool = False,
        **kwargs,
    ) -> TrajectoryRecord:
        self.check_supported(profile, initial)
        times = check_times(times)
        if hamiltonians is None:
            hamiltonians = build_sector_hamiltonians(profile, exact_cap=self.exact_cap)
        rho = reduced_state_exact(hamiltonians, initial, times, progress=progress)
        coherence = np.exp(1j * profile.omega0 * times) * rho[:, 0, 1]
        return self.record(
            profile, initial, times, coherence, rho[:, 0, 0].real
        ).validate(strict=True)
