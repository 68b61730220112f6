import numpy as np
import pytest

from central_spin_bench.exceptions import ResourceLimitError
from central_spin_bench.model import (
    CouplingProfile,
    build_couplings,
    correlated_block_state,
    custom_couplings,
    excited_state,
    initial_block_state,
    superposition_state,
)
from central_spin_bench.solvers.exact import (
    ExactSolver,
    build_sector_hamiltonians,
    dense_hamiltonian,
    dense_reference,
    evolve_exact,
    propagate_member,
    reduced_state_exact,
)


def test_single_bath_spin_block():
    alpha = 0.1
    hamiltonians = build_sector_hamiltonians(custom_couplings([alpha]))
    expected = np.array([[0.5 - alpha, 2 * alpha], [2 * alpha, -0.5 - alpha]])
    np.testing.assert_allclose(hamiltonians[1].matrix, expected, atol=1e-15)
    assert hamiltonians[0].dimension == hamiltonians[2].dimension == 1
    assert hamiltonians[2].matrix[0, 0] == pytest.approx(0.5 + alpha)


def test_block_dimensions_cover_the_product_space():
    for n_bath in range(1, 7):
        hamiltonians = build_sector_hamiltonians(build_couplings(n_bath, alpha0=0.02))
        assert len(hamiltonians) == n_bath + 2
        assert sum(block.dimension for block in hamiltonians) == 2 ** (n_bath + 1)
        for block in hamiltonians:
            np.testing.assert_allclose(block.matrix, block.matrix.T, atol=0)


def test_blocks_match_dense_hamiltonian():
    profile = build_couplings(3, alpha0=0.07)
    hamiltonians = build_sector_hamiltonians(profile)
    blocks = np.concatenate([block.energies for block in hamiltonians])
    np.testing.assert_allclose(np.sort(blocks), np.linalg.eigvalsh(dense_hamiltonian(profile)), atol=1e-13)


def test_rabi_oscillation():
    alpha = 0.05
    profile = custom_couplings([alpha])
    initial = initial_block_state(excited_state(), "unpolarized", 1)
    times = np.linspace(0, 200, 401)
    record = ExactSolver().solve(profile, initial, times)
    rabi = np.sqrt(1 + 16 * alpha ** 2)
    expected = 0.5 + 0.5 * (1 - 16 * alpha ** 2 / rabi ** 2 * np.sin(0.5 * rabi * times) ** 2)
    np.testing.assert_allclose(record.population, expected, rtol=0, atol=1e-10)


def test_uncoupled_spin_keeps_its_coherence():
    profile = CouplingProfile(n_bath=3, omega0=1.0, alpha0=0.0, alphas=np.zeros(3), a1=0.0, a2=0.0)
    initial = initial_block_state(superposition_state(), "unpolarized", 3)
    record = ExactSolver().solve(profile, initial, np.linspace(0, 100, 51))
    np.testing.assert_allclose(record.coherence, 0.5, atol=1e-12)
    np.testing.assert_allclose(record.population, 0.5, atol=1e-12)


@pytest.mark.parametrize("n_bath", [1, 2, 3])
def test_matches_dense_reference(n_bath, rng):
    profile = custom_couplings(rng.uniform(0.02, 0.2, size=n_bath))
    blocks = {}
    for m in np.arange(n_bath + 1) - n_bath / 2:
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        blocks[m] = a @ a.conj().T
    total = sum(np.trace(b).real for b in blocks.values())
    initial = correlated_block_state({m: b / total for m, b in blocks.items()}, n_bath)
    times = np.linspace(0, 60, 31)
    hamiltonians = build_sector_hamiltonians(profile)
    np.testing.assert_allclose(
        reduced_state_exact(hamiltonians, initial, times),
        dense_reference(profile, initial, times),
        rtol=0,
        atol=1e-9,
    )


def test_initial_state_is_reproduced_in_wide_blocks(rng):
    n_bath = 4
    blocks = {}
    for m in np.arange(n_bath + 1) - n_bath / 2:
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        blocks[m] = a @ a.conj().T
    total = sum(np.trace(b).real for b in blocks.values())
    initial = correlated_block_state({m: b / total for m, b in blocks.items()}, n_bath)
    hamiltonians = build_sector_hamiltonians(build_couplings(n_bath, alpha0=0.05))
    assert max(block.dimension for block in hamiltonians) > 2
    rho = reduced_state_exact(hamiltonians, initial, np.array([0.0]))
    np.testing.assert_allclose(rho[0], initial.reduced_state(), atol=1e-12)


def test_single_bath_spin_population_matches_dense_reference():
    profile = custom_couplings([0.05])
    initial = initial_block_state(excited_state(), "unpolarized", 1)
    times = np.array([0.0, 1.0, 10.0])
    rho = reduced_state_exact(build_sector_hamiltonians(profile), initial, times)
    np.testing.assert_allclose(rho[:, 0, 0], dense_reference(profile, initial, times)[:, 0, 0], atol=1e-12)
    assert rho[0, 0, 0].real == pytest.approx(1.0)


def test_dense_reference_is_limited():
    profile = build_couplings(4, alpha0=0.01)
    with pytest.raises(ResourceLimitError):
        dense_reference(profile, initial_block_state(excited_state(), "unpolarized", 4), [0.0])


def test_reduced_state_stays_physical(small_profile, superposition_4):
    times = np.linspace(0, 500, 101)
    rho = reduced_state_exact(build_sector_hamiltonians(small_profile), superposition_4, times)
    np.testing.assert_allclose(np.trace(rho, axis1=1, axis2=2), 1.0, atol=1e-12)
    np.testing.assert_allclose(rho, np.conj(np.swapaxes(rho, 1, 2)), atol=1e-14)
    assert np.linalg.eigvalsh(rho).min() > -1e-12


def test_member_conserves_norm_energy_and_sz(small_profile):
    hamiltonians = build_sector_hamiltonians(small_profile)
    times = np.linspace(0, 300, 61)
    member = propagate_member(hamiltonians, np.array([0.6, 0.8j]), 0b0101, times)
    np.testing.assert_allclose(member.norm(), 1.0, atol=1e-12)
    np.testing.assert_allclose(member.energy(), member.energy()[0], atol=1e-12)
    np.testing.assert_allclose(member.total_sz(), member.total_sz()[0], atol=1e-12)


def test_block_propagator_is_a_group(small_profile):
    block = build_sector_hamiltonians(small_profile)[2]

    def propagator(t):
        return (block.vectors * np.exp(-1j * block.energies * t)) @ block.vectors.T

    np.testing.assert_allclose(propagator(30.0) @ propagator(45.5), propagator(75.5), atol=1e-12)
    np.testing.assert_allclose(propagator(12.0) @ propagator(12.0).conj().T, np.eye(block.dimension), atol=1e-12)


def test_exact_cap():
    profile = build_couplings(13, alpha0=0.01)
    initial = initial_block_state(excited_state(), "unpolarized", 13)
    with pytest.raises(ResourceLimitError, match="exact_cap"):
        ExactSolver().solve(profile, initial, [0.0, 1.0])
    with pytest.raises(ResourceLimitError):
        build_sector_hamiltonians(build_couplings(5, alpha0=0.01), exact_cap=4)


def test_record_and_fingerprint(small_profile, excited_4):
    times = np.linspace(0, 100, 11)
    first = evolve_exact(small_profile, excited_4, times)
    second = ExactSolver().solve(small_profile, excited_4, times)
    assert first.method == "exact"
    assert first.fingerprint == second.fingerprint
    assert first.population[0] == pytest.approx(1.0)
    assert first.metadata["solver_version"] == ExactSolver.VERSION
    other = build_couplings(4, alpha0=0.06)
    assert ExactSolver().solve(other, excited_4, times).fingerprint != first.fingerprint


def test_shared_hamiltonians_give_identical_records(small_profile, superposition_4):
    times = np.linspace(0, 50, 26)
    hamiltonians = build_sector_hamiltonians(small_profile)
    shared = ExactSolver().solve(small_profile, superposition_4, times, hamiltonians=hamiltonians)
    fresh = ExactSolver().solve(small_profile, superposition_4, times)
    assert np.array_equal(shared.coherence, fresh.coherence)
