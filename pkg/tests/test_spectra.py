import numpy as np
import pytest
from scipy.integrate import simpson

from central_spin_bench.constants import SERIES_THRESHOLD
from central_spin_bench.model import build_couplings, build_sectors, custom_couplings, uniform_couplings
from central_spin_bench.spectra import (
    FrequencyComb,
    build_spectra,
    canonical_lines,
    chi,
    dephasing_comb,
    double_time_integral,
    eval_comb,
    f_comb,
    g_comb,
    merge,
    phi,
    single_time_integral,
)


@pytest.fixture
def profile():
    return build_couplings(6, alpha0=0.04)


@pytest.fixture
def sectors(profile):
    return build_sectors(profile)


def test_edge_sectors_are_empty(profile, sectors):
    assert f_comb(3.0, profile, sectors).is_empty
    assert g_comb(-3.0, profile, sectors).is_empty
    assert eval_comb(f_comb(3.0, profile, sectors), 7.0) == 0


def test_comb_weights_at_zero(profile, sectors):
    a2_squared = profile.a2 ** 2
    for entry in sectors:
        f = f_comb(entry.m, profile, sectors)
        g = g_comb(entry.m, profile, sectors)
        assert np.all(f.weights.real >= 0) and np.all(f.weights.imag == 0)
        assert f.total_weight().real == pytest.approx(4 * a2_squared * (3 - entry.m), rel=1e-12, abs=1e-15)
        assert g.total_weight().real == pytest.approx(4 * a2_squared * (3 + entry.m), rel=1e-12, abs=1e-15)


def test_uniform_combs_collapse_to_one_line():
    c, n = 0.02, 5
    profile = uniform_couplings(n, c)
    sectors = build_sectors(profile)
    for entry in sectors:
        m = entry.m
        f = f_comb(m, profile, sectors)
        g = g_comb(m, profile, sectors)
        if m < n / 2:
            assert len(f) == 1
            assert f.omegas[0] == pytest.approx(1.0 + 4 * c * (m + 0.5), rel=1e-13)
            assert f.weights[0].real == pytest.approx(4 * c ** 2 * (n / 2 - m), rel=1e-12)
        if m > -n / 2:
            assert len(g) == 1
            assert g.omegas[0] == pytest.approx(-1.0 + 4 * c * (-m + 0.5), rel=1e-13)
            assert g.weights[0].real == pytest.approx(4 * c ** 2 * (n / 2 + m), rel=1e-12)


def test_dephasing_comb():
    profile = custom_couplings([0.03, 0.01])
    sectors = build_sectors(profile)
    comb = dephasing_comb(0.0, profile, sectors)
    t = np.linspace(0, 200, 41)
    np.testing.assert_allclose(eval_comb(comb, t), np.cos(2 * (0.03 - 0.01) * t), atol=1e-14)
    for entry in sectors:
        comb = dephasing_comb(entry.m, profile, sectors)
        assert comb(0.0) == pytest.approx(1.0)
        assert np.all(comb.weights.real > 0)


def test_uniform_dephasing_is_single_line():
    profile = uniform_couplings(4, 0.01)
    comb = dephasing_comb(1.0, profile, build_sectors(profile))
    assert comb.lines == [(pytest.approx(-0.04), pytest.approx(1.0))]


def test_eval_comb_examples():
    assert eval_comb(FrequencyComb.empty(), 3.0) == 0
    assert eval_comb(FrequencyComb.single(0.0, 1.0), 5.0) == pytest.approx(1.0)
    comb = FrequencyComb.from_lines([0.7, -0.7], [0.5, 0.5])
    t = np.linspace(-10, 10, 21)
    np.testing.assert_allclose(eval_comb(comb, t), np.cos(0.7 * t), atol=1e-15)


def test_canonicalization_merges_and_sorts():
    omegas, weights = canonical_lines([1.0, -2.0, 1.0 + 1e-14, 3.0], [1.0, 2.0, 3.0, 0.0])
    assert omegas.tolist() == pytest.approx([-2.0, 1.0])
    assert weights.tolist() == [2.0, 4.0]


def test_merging_does_not_change_values(rng):
    omegas = rng.uniform(-2, 2, size=8)
    weights = rng.normal(size=8) + 1j * rng.normal(size=8)
    split = FrequencyComb.from_lines(
        np.concatenate([omegas, omegas * (1 + 1e-13)]), np.concatenate([weights / 2, weights / 2])
    )
    whole = FrequencyComb.from_lines(omegas, weights)
    assert len(split) == len(whole)
    t = np.linspace(0, 100, 101)
    np.testing.assert_allclose(eval_comb(split, t), eval_comb(whole, t), rtol=0, atol=1e-10)


def test_comb_algebra():
    comb = FrequencyComb.from_lines([0.5, 1.5], [1.0 + 1.0j, 2.0])
    conjugate = comb.conjugate()
    t = np.linspace(0, 20, 11)
    np.testing.assert_allclose(eval_comb(conjugate, t), np.conj(eval_comb(comb, t)), atol=1e-14)
    np.testing.assert_allclose(eval_comb(comb.scaled(2j), t), 2j * eval_comb(comb, t), atol=1e-14)
    total = merge(comb, conjugate, FrequencyComb.empty())
    np.testing.assert_allclose(eval_comb(total, t), 2 * eval_comb(comb, t).real, atol=1e-13)
    assert (comb + FrequencyComb.empty()).lines == comb.lines


def test_double_integral_examples():
    assert double_time_integral(FrequencyComb.single(0.0, 1.0), 2.0) == pytest.approx(2.0)
    assert double_time_integral(FrequencyComb.empty(), 7.0) == 0
    assert single_time_integral(FrequencyComb.single(0.0, 1.0), 3.0) == pytest.approx(3.0)
    assert double_time_integral(FrequencyComb.single(0.3, 1.0), 0.0) == 0


def test_double_integral_matches_nested_quadrature():
    comb = FrequencyComb.single(0.37, 0.8 - 0.2j)
    for t in (0.1, 3.0, 40.0):
        # int_0^t dt1 int_0^t1 F = int_0^t (t - s) F(s) ds
        s = np.linspace(0, t, 20_001)
        reference = simpson((t - s) * comb(s), x=s)
        assert abs(double_time_integral(comb, t) - reference) <= 1e-8 * abs(reference)


def test_single_line_closed_forms():
    omega, weight, t = 0.9, 1.3, 4.2
    comb = FrequencyComb.single(omega, weight)
    expected = weight * (np.exp(1j * omega * t) - 1) / (1j * omega)
    assert single_time_integral(comb, t) == pytest.approx(expected, rel=1e-13)
    expected = weight * (np.exp(1j * omega * t) - 1 - 1j * omega * t) / (1j * omega) ** 2
    assert double_time_integral(comb, t) == pytest.approx(expected, rel=1e-12)


def test_derivatives_reproduce_lower_integrals(rng):
    comb = FrequencyComb.from_lines(rng.uniform(-1, 1, size=5), rng.normal(size=5) + 0j)
    h = 1e-4
    for t in (1.0, 5.0, 17.0):
        d_double = (double_time_integral(comb, t + h) - double_time_integral(comb, t - h)) / (2 * h)
        d_single = (single_time_integral(comb, t + h) - single_time_integral(comb, t - h)) / (2 * h)
        scale = max(abs(single_time_integral(comb, t)), 1.0)
        assert abs(d_double - single_time_integral(comb, t)) <= 1e-6 * scale
        assert abs(d_single - comb(t)) <= 1e-6 * max(abs(comb(t)), 1.0)


def test_series_switchover_is_smooth():
    for x in (SERIES_THRESHOLD * 0.9, SERIES_THRESHOLD * 1.1):
        assert abs(phi(np.array(x)) - (0.5 + 1j * x / 6 - x ** 2 / 24)) < 1e-11
        assert abs(chi(np.array(x)) - (1 + 1j * x / 2 - x ** 2 / 6)) < 1e-13
    below = phi(np.array(SERIES_THRESHOLD * (1 - 1e-9)))
    above = phi(np.array(SERIES_THRESHOLD * (1 + 1e-9)))
    assert abs(below - above) < 1e-11


def test_build_spectra_is_order_independent_of_workers():
    profile = build_couplings(6, alpha0=0.05)
    serial = build_spectra(profile)
    threaded = build_spectra(profile, workers=3)
    for m in serial.sectors.m_values:
        assert serial.f(m).lines == threaded.f(m).lines
        assert serial.g(m).lines == threaded.g(m).lines
        assert serial.dephasing(m).lines == threaded.dephasing(m).lines
    assert serial.f(4.0).is_empty and serial.g(-4.0).is_empty
