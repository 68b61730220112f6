import numpy as np
import pytest

from central_spin_bench.exceptions import UnsupportedStateError
from central_spin_bench.model import (
    build_couplings,
    custom_couplings,
    excited_state,
    initial_block_state,
    polarized_weights,
    superposition_state,
    uniform_couplings,
)
from central_spin_bench.solvers import SOLVERS, make_solver
from central_spin_bench.solvers.modified import (
    LargeNSolver,
    ModifiedTcl2Solver,
    coherence_mod,
    integrate_blocks_mod,
    lambda_coh_mod,
    lambda_pop_mod,
    modified_params,
    population_large_n,
    population_mod,
)
from central_spin_bench.solvers.tcl2 import block_coherence, build_tcl2_model, integrate_blocks


@pytest.fixture
def params(small_profile):
    return modified_params(small_profile)


def test_line_identities(params):
    a2_squared = params.a2 ** 2
    n = params.n_bath
    np.testing.assert_allclose(params.omega_minus[1:], -params.omega_plus[:-1], atol=1e-15)
    np.testing.assert_allclose(params.b_plus[:-1] + params.b_minus[1:], 4 * a2_squared * (n + 1), rtol=1e-14)
    assert params.b_plus[-1] == 0 and params.b_minus[0] == 0
    assert params.f(n / 2 + 1).is_empty and params.g(-n / 2 - 1).is_empty


def test_kappa(params):
    assert np.all(params.kappa >= 0)
    assert params.kappa[0] == pytest.approx(0.0, abs=1e-18)
    uniform = modified_params(uniform_couplings(4, 0.02))
    np.testing.assert_array_equal(uniform.kappa, 0.0)
    assert np.all(modified_params(custom_couplings([0.03])).kappa == 0.0)


def test_exponents_vanish_at_zero(params):
    for index in range(len(params.m_values)):
        assert lambda_coh_mod(params, index, np.array([0.0]))[0] == 0
        assert lambda_pop_mod(params, index, np.array([0.0]))[0] == 0


def test_population_exponent_matches_cosine_form(params):
    times = np.linspace(0.1, 400, 200)
    for index in range(len(params.m_values)):
        omega = params.omega_plus[index]
        expected = 8 * params.a2 ** 2 * (params.n_bath + 1) * (1 - np.cos(omega * times)) / omega ** 2
        np.testing.assert_allclose(lambda_pop_mod(params, index, times), expected, rtol=1e-9, atol=1e-13)


def test_uniform_modified_equations_match_tcl2():
    profile = uniform_couplings(4, 0.03)
    initial = initial_block_state(superposition_state(), "unpolarized", 4)
    times = np.linspace(0, 200, 101)
    params = modified_params(profile)
    modified = integrate_blocks_mod(params, initial, times)
    model = build_tcl2_model(profile, initial)
    tcl2 = integrate_blocks(model, times)
    np.testing.assert_allclose(modified.blocks, tcl2.blocks, atol=1e-9)
    np.testing.assert_allclose(block_coherence(params, modified), block_coherence(model, tcl2), atol=1e-9)


def test_closed_form_coherence_matches_ode(params, superposition_4):
    times = np.linspace(0, 300, 151)
    trajectory = integrate_blocks_mod(params, superposition_4, times)
    np.testing.assert_allclose(
        coherence_mod(params, superposition_4, times), block_coherence(params, trajectory), atol=1e-7
    )


@pytest.mark.parametrize("polarization", [None, 0.3])
def test_closed_form_population_matches_ode(params, polarization):
    bath = "unpolarized" if polarization is None else polarized_weights(4, polarization)
    initial = initial_block_state(excited_state(), bath, 4)
    times = np.linspace(0, 300, 151)
    np.testing.assert_allclose(
        population_mod(params, initial, times),
        integrate_blocks_mod(params, initial, times).population(),
        atol=1e-7,
    )


def test_population_closed_form_needs_empty_lower_levels(params, superposition_4):
    with pytest.raises(UnsupportedStateError, match="integrate_blocks_mod"):
        population_mod(params, superposition_4, [0.0])


def test_single_bath_spin_has_no_modified_equations():
    params = modified_params(custom_couplings([0.05]))
    initial = initial_block_state(superposition_state(), "unpolarized", 1)
    with pytest.raises(UnsupportedStateError, match="N=1"):
        integrate_blocks_mod(params, initial, [0.0, 1.0])


def test_large_n_limits():
    profile = build_couplings(10, alpha0=0.01)
    times = np.array([0.0, 1e4])
    population = population_large_n(profile, times)
    assert population[0] == pytest.approx(1.0)
    assert population[1] == pytest.approx(1 - profile.beta ** 2, abs=1e-12)


def test_large_n_warns_for_large_beta(capsys):
    population_large_n(build_couplings(10, alpha0=0.2), [0.0, 1.0])
    assert "unreliable" in capsys.readouterr().err
    population_large_n(build_couplings(10, alpha0=0.01), [0.0, 1.0])
    assert capsys.readouterr().err == ""


def test_large_n_solver_only_takes_excited_unpolarized(small_profile, excited_4, superposition_4):
    record = LargeNSolver().solve(small_profile, excited_4, np.linspace(0, 10, 11))
    np.testing.assert_array_equal(record.coherence, 0.0)
    with pytest.raises(UnsupportedStateError):
        LargeNSolver().solve(small_profile, superposition_4, [0.0])


def test_modified_solver_routes_by_initial_state(small_profile, excited_4, superposition_4):
    times = np.linspace(0, 100, 51)
    assert ModifiedTcl2Solver().solve(small_profile, excited_4, times).metadata["source"] == "closed_form"
    assert ModifiedTcl2Solver().solve(small_profile, superposition_4, times).metadata["source"] == "ode"


def test_registry():
    assert sorted(SOLVERS) == ["exact", "largen", "tcl2", "tcl2mod"]
    assert make_solver("exact", exact_cap=4).exact_cap == 4
    assert make_solver("tcl2", workers=2).workers == 2
    assert isinstance(make_solver("tcl2mod"), ModifiedTcl2Solver)
