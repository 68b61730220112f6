import math

import numpy as np
import pytest

from central_spin_bench.exceptions import ConfigurationError, InvalidStateError, ResourceLimitError
from central_spin_bench.model import (
    alpha0_for_beta,
    build_couplings,
    build_sectors,
    config_bits,
    correlated_block_state,
    custom_couplings,
    excited_state,
    initial_block_state,
    k3_of,
    polarized_weights,
    sector_index,
    state_space_dimension,
    superposition_state,
    uniform_couplings,
    unpolarized_weights,
)


def test_profile_formula():
    profile = build_couplings(10, omega0=1.0, alpha0=0.01, k0=5.0, exponent=2.0)
    assert profile.alphas[0] == pytest.approx(0.01 * math.exp(-0.04), rel=1e-14)
    assert profile.alphas[0] == pytest.approx(0.0096079, rel=1e-5)
    assert np.all(np.diff(profile.alphas) < 0)


def test_beta_rounds_to_published_value():
    profile = build_couplings(10, alpha0=0.01)
    assert profile.k0 == 5.0
    assert round(profile.beta, 2) == 0.03


def test_means(rng):
    profile = custom_couplings(rng.uniform(0.01, 0.1, size=7))
    assert abs(profile.a1 - profile.alphas.mean()) <= 1e-14 * profile.a1
    assert abs(profile.a2 ** 2 - np.mean(profile.alphas ** 2)) <= 1e-14 * profile.a2 ** 2
    assert profile.a2 >= profile.a1 > 0


def test_uniform_means():
    profile = uniform_couplings(6, 0.02)
    assert profile.a1 == profile.a2 == 0.02
    assert profile.is_uniform


@pytest.mark.parametrize("field", ["omega0", "alpha0", "k0", "exponent"])
def test_non_positive_parameter_is_named(field):
    kwargs = {"omega0": 1.0, "alpha0": 0.01, "k0": 2.0, "exponent": 2.0}
    kwargs[field] = 0.0
    with pytest.raises(ConfigurationError, match=field):
        build_couplings(4, **kwargs)


def test_bad_bath_size():
    with pytest.raises(ConfigurationError, match="n_bath"):
        build_couplings(0)


def test_alpha0_for_beta():
    alpha0 = alpha0_for_beta(12, 0.03)
    assert build_couplings(12, alpha0=alpha0).beta == pytest.approx(0.03, rel=1e-12)


def test_state_space_dimension():
    assert state_space_dimension(10) == 4_194_303


def test_sector_degeneracies():
    sectors = build_sectors(build_couplings(4, alpha0=0.01))
    assert sectors.sector(0.0).degeneracy == 6
    assert list(sectors.degeneracies) == [1, 4, 6, 4, 1]
    assert build_sectors(build_couplings(10, alpha0=0.01)).degeneracies.sum() == 1024


def test_sector_completeness_and_k3():
    profile = build_couplings(7, alpha0=0.03)
    sectors = build_sectors(profile)
    masks = np.concatenate([entry.configs for entry in sectors])
    assert sorted(masks.tolist()) == list(range(2 ** 7))
    for entry in sectors:
        assert len(entry.configs) == entry.degeneracy
        assert np.all(config_bits(entry.configs, 7).sum(axis=1) == entry.m + 3.5)
        signs = 2 * config_bits(entry.configs, 7) - 1
        np.testing.assert_allclose(entry.k3_values, 0.5 * signs @ profile.alphas, rtol=0, atol=1e-15)


def test_odd_bath_uses_half_integer_labels():
    sectors = build_sectors(build_couplings(3, alpha0=0.01))
    assert list(sectors.m_values) == [-1.5, -0.5, 0.5, 1.5]
    with pytest.raises(ConfigurationError):
        sector_index(3, 1.0)


def test_uniform_k3_is_proportional_to_m():
    sectors = build_sectors(uniform_couplings(5, 0.04))
    for entry in sectors:
        np.testing.assert_allclose(entry.k3_values, 0.04 * entry.m, atol=1e-15)


def test_enumeration_cap():
    with pytest.raises(ResourceLimitError, match="enumeration_cap"):
        build_sectors(build_couplings(17, alpha0=0.01))
    assert len(build_sectors(build_couplings(5, alpha0=0.01), enumeration_cap=5)) == 6


def test_k3_of_single_spin():
    assert k3_of(np.array([0, 1]), np.array([0.3])).tolist() == [-0.15, 0.15]


def test_unpolarized_excited_state():
    initial = initial_block_state(excited_state(), "unpolarized", 10)
    assert np.trace(initial.block(5.0)).real == pytest.approx(1 / 1024)
    assert initial.trace() == pytest.approx(1.0, abs=1e-12)
    assert initial.populations() == pytest.approx((1.0, 0.0))


def test_superposition_state_normalized():
    initial = initial_block_state(superposition_state(), "unpolarized", 6)
    assert initial.trace() == pytest.approx(1.0, abs=1e-12)
    assert initial.coherence() == pytest.approx(0.5)
    np.testing.assert_allclose(initial.reduced_state(), 0.5 * np.ones((2, 2)), atol=1e-15)


def test_explicit_weights():
    initial = initial_block_state(superposition_state(), {0: 1.0}, 4)
    np.testing.assert_allclose(initial.block(0.0), superposition_state())
    for m in (-2.0, -1.0, 1.0, 2.0):
        assert np.all(initial.block(m) == 0)


def test_invalid_states():
    with pytest.raises(InvalidStateError):
        initial_block_state(np.array([[1.0, 0.0], [0.0, 1.0]]), "unpolarized", 3)
    with pytest.raises(InvalidStateError):
        initial_block_state(np.array([[1.2, 0.0], [0.0, -0.2]]), "unpolarized", 3)
    with pytest.raises(InvalidStateError):
        initial_block_state(excited_state(), {0.0: 0.4, 1.0: 0.4}, 2)
    with pytest.raises(InvalidStateError):
        initial_block_state(excited_state(), {0.0: 1.5, 1.0: -0.5}, 2)
    with pytest.raises(InvalidStateError):
        initial_block_state(excited_state(), {0.5: 1.0}, 2)


def test_polarized_weights():
    weights = polarized_weights(6, 0.0)
    np.testing.assert_allclose(list(weights.values()), unpolarized_weights(6), rtol=1e-12)
    up = polarized_weights(6, 0.5)
    assert sum(up.values()) == pytest.approx(1.0)
    assert up[3.0] > up[-3.0]
    with pytest.raises(ConfigurationError):
        polarized_weights(6, 1.0)


def test_correlated_state():
    blocks = {-0.5: 0.2 * np.eye(2), 0.5: np.array([[0.5, 0.1], [0.1, 0.1]])}
    initial = correlated_block_state(blocks, 1)
    plus, minus = initial.sector_populations()
    assert plus.tolist() == [0.2, 0.5]
    assert minus.tolist() == [0.2, 0.1]
    assert initial.coherence() == pytest.approx(0.1)
