"""
Second-order TCL master equation for the correlated projection onto bath sectors.

With ``a_m = <+|rho_m|+>``, ``b_m = <-|rho_m|->`` and ``c_m = <+|rho_m|->`` in the interaction
picture and ``F_m``, ``G_m`` the single time integrals of ``f_m``, ``g_m``:

    da_m/dt = 2 Re G_{m+1} b_{m+1} - 2 Re F_m a_m
    db_m/dt = 2 Re F_{m-1} a_{m-1} - 2 Re G_m b_m
    dc_m/dt = -(F_m + conj(G_m)) c_m

Combs outside ``|m| <= N/2`` are empty. ``a_m + b_{m+1}`` is conserved.
"""
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from scipy.integrate import simpson, solve_ivp

from .. import constants
from ..aliases import SectorLabel
from ..exceptions import IntegratorError, UnsupportedStateError
from ..model import BlockDensity, CouplingProfile, _block_density
from ..solver import Solver, TrajectoryRecord, check_times
from ..spectra import (
    FrequencyComb,
    ModelSpectra,
    build_spectra,
    chi,
    double_time_integral,
    eval_comb,
    single_time_integral,
)
from ..util import ordered_map, warn


@dataclass(frozen=True, eq=False)
class Tcl2Model:
    spectra: ModelSpectra
    initial: BlockDensity

    @property
    def profile(self) -> CouplingProfile:
        return self.spectra.profile

    @property
    def n_bath(self) -> int:
        return self.profile.n_bath

    @property
    def m_values(self) -> np.ndarray:
        return self.initial.m_values

    def f(self, m: SectorLabel) -> FrequencyComb:
        return self.spectra.f(m)

    def g(self, m: SectorLabel) -> FrequencyComb:
        return self.spectra.g(m)

    def dephasing(self, m: SectorLabel) -> FrequencyComb:
        return self.spectra.dephasing(m)

    @property
    def max_frequency(self) -> float:
        return self.spectra.max_frequency


def build_tcl2_model(
    profile: CouplingProfile,
    initial: BlockDensity,
    spectra: Optional[ModelSpectra] = None,
    workers: Optional[int] = None,
) -> Tcl2Model:
    if initial.n_bath != profile.n_bath:
        raise UnsupportedStateError(
            f"Initial state has {initial.n_bath} bath spins, the model has {profile.n_bath}"
        )
    if spectra is None:
        spectra = build_spectra(profile, workers=workers)
    return Tcl2Model(spectra=spectra, initial=initial)


def lambda_coh(model: Tcl2Model, m: SectorLabel, t):
    return double_time_integral(model.f(m) + model.g(m).conjugate(), t)


def _population_comb(model, m: SectorLabel) -> FrequencyComb:
    return model.g(m + 1) + model.f(m)


def lambda_pop(model: Tcl2Model, m: SectorLabel, t):
    return 2.0 * np.real(double_time_integral(_population_comb(model, m), t))


def mu(model: Tcl2Model, m: SectorLabel, t):
    return 2.0 * np.real(single_time_integral(model.g(m + 1), t))


def coherence_tcl2(model: Tcl2Model, times, workers: Optional[int] = None) -> np.ndarray:
    """
    Rotating-frame coherence ``sum_m <exp(-4i K3 t)>_m c_m(0) exp(-Lambda^coh_m(t))``.
    The per-sector initial coherences make this valid for every block-form initial state.
    """
    times = check_times(times)
    c0 = model.initial.blocks[:, 0, 1]

    def term(index: int) -> np.ndarray:
        if c0[index] == 0:
            return np.zeros(len(times), dtype=complex)
        m = model.m_values[index]
        return c0[index] * eval_comb(model.dephasing(m), times) * np.exp(-lambda_coh(model, m, times))

    terms = ordered_map(term, list(range(len(c0))), workers=workers)
    return np.sum(terms, axis=0)


def _require_excited_blocks(initial: BlockDensity, integrator_hint: str):
    _, minus = initial.sector_populations()
    if np.any(np.abs(minus) > constants.TRACE_TOLERANCE):
        raise UnsupportedStateError(
            "The closed-form population needs P_-(0) = 0 in every sector. "
            f"Use {integrator_hint} for this initial state."
        )


def _subinterval_count(grid: np.ndarray, omega_max: float) -> int:
    longest = float(np.diff(grid).max(initial=0.0))
    count = int(np.ceil(longest * omega_max / constants.SIMPSON_STEP_FACTOR))
    count = max(2, count)
    return count + (count % 2)


def _interval_integrals(
    lam: Callable, rate: Callable, grid: np.ndarray, lam_grid: np.ndarray, n_sub: int
) -> np.ndarray:
    """``int_{t_i}^{t_{i+1}} exp(Lambda(s) - Lambda(t_{i+1})) mu(s) ds`` for every interval."""
    widths = np.diff(grid)
    s = grid[:-1, None] + widths[:, None] * np.linspace(0.0, 1.0, n_sub + 1)[None, :]
    integrand = np.exp(lam(s) - lam_grid[1:, None]) * rate(s)
    return simpson(integrand, axis=-1) * widths / n_sub


def _accumulate(decay: np.ndarray, pieces: np.ndarray) -> np.ndarray:
    integral = np.zeros(len(pieces) + 1)
    for i in range(len(pieces)):
        integral[i + 1] = decay[i] * integral[i] + pieces[i]
    return integral


def relaxation_integral(lam: Callable, rate: Callable, times: np.ndarray, omega_max: float):
    """
    ``I(t) = int_0^t exp(Lambda(s) - Lambda(t)) mu(s) ds`` on ``times``, by the stable recursion
    ``I_{i+1} = exp(Lambda_i - Lambda_{i+1}) I_i + (interval integral)``. The interval integrals
    use composite Simpson with ``h * omega_max <= 0.1`` and double the subintervals until
    successive results agree to the configured tolerance.
    """
    prepend = times[0] > 0
    grid = np.concatenate([[0.0], times]) if prepend else times
    lam_grid = lam(grid)
    if len(grid) == 1:
        return np.zeros(1), lam_grid

    decay = np.exp(lam_grid[:-1] - lam_grid[1:])
    n_sub = _subinterval_count(grid, omega_max)
    integral = _accumulate(decay, _interval_integrals(lam, rate, grid, lam_grid, n_sub))
    for _ in range(constants.SIMPSON_MAX_REFINEMENTS):
        n_sub *= 2
        refined = _accumulate(decay, _interval_integrals(lam, rate, grid, lam_grid, n_sub))
        change = np.abs(refined - integral).max()
        integral = refined
        if change < constants.SIMPSON_TOLERANCE:
            break
    else:
        warn(f"Simpson refinement stopped at {n_sub} subintervals without reaching the tolerance")

    if prepend:
        return integral[1:], lam_grid[1:]
    return integral, lam_grid


def _sector_population(model: Tcl2Model, index: int, times: np.ndarray) -> np.ndarray:
    weight = model.initial.blocks[index, 0, 0].real
    if weight == 0:
        return np.zeros(len(times))
    m = model.m_values[index]
    comb = _population_comb(model, m)
    feed = model.g(m + 1)
    if comb.is_empty:
        return np.full(len(times), weight)
    integral, lam = relaxation_integral(
        lambda s: 2.0 * np.real(double_time_integral(comb, s)),
        lambda s: 2.0 * np.real(single_time_integral(feed, s)),
        times,
        comb.max_frequency,
    )
    return weight * (np.exp(-lam) + integral)


def population_tcl2(model: Tcl2Model, times, workers: Optional[int] = None) -> np.ndarray:
    """
    ``P_+(t) = sum_m P_m^+(0) exp(-Lambda^pop_m) [1 + int_0^t exp(Lambda^pop_m) mu_m]``.

    Closed form of the population equations when no sector starts with ``P_m^- > 0``; the
    unpolarized excited state is the usual case.
    """
    _require_excited_blocks(model.initial, "integrate_blocks")
    times = check_times(times)
    terms = ordered_map(
        lambda index: _sector_population(model, index, times),
        list(range(len(model.m_values))),
        workers=workers,
    )
    return np.sum(terms, axis=0)


@dataclass(frozen=True, eq=False)
class BlockTrajectory:
    """Interaction-picture blocks ``rho_m(t)``, shape ``(len(times), N + 1, 2, 2)``."""

    times: np.ndarray
    m_values: np.ndarray
    blocks: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def at(self, i: int) -> BlockDensity:
        return _block_density(len(self.m_values) - 1, self.blocks[i])

    def sector_populations(self):
        return self.blocks[:, :, 0, 0].real, self.blocks[:, :, 1, 1].real

    def population(self) -> np.ndarray:
        return self.blocks[:, :, 0, 0].real.sum(axis=1)

    def traces(self) -> np.ndarray:
        return np.trace(self.blocks, axis1=2, axis2=3).real.sum(axis=1)

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.blocks - np.conj(np.swapaxes(self.blocks, 2, 3))).max())


class _StackedCombs:
    """All combs of one kind in flat arrays, so one RHS call is one vectorized kernel."""

    def __init__(self, combs: List[FrequencyComb]):
        self.size = len(combs)
        self.omegas = np.concatenate([c.omegas for c in combs]) if combs else np.zeros(0)
        self.weights = (
            np.concatenate([c.weights for c in combs]) if combs else np.zeros(0, dtype=complex)
        )
        self.segments = np.concatenate(
            [np.full(len(c), i, dtype=np.int64) for i, c in enumerate(combs)]
        ) if combs else np.zeros(0, dtype=np.int64)

    def single_integrals(self, t: float) -> np.ndarray:
        if len(self.omegas) == 0:
            return np.zeros(self.size, dtype=complex)
        values = self.weights * (t * chi(self.omegas * t))
        real = np.bincount(self.segments, weights=values.real, minlength=self.size)
        imag = np.bincount(self.segments, weights=values.imag, minlength=self.size)
        return real + 1j * imag


def integrate_block_equations(
    f_combs: List[FrequencyComb],
    g_combs: List[FrequencyComb],
    initial: BlockDensity,
    times,
    coherence_rate: Optional[Callable[[float], np.ndarray]] = None,
) -> BlockTrajectory:
    """
    Integrates the coupled block equations with combs indexed by ascending ``m``.
    ``coherence_rate(t)`` adds extra per-sector terms to ``dc_m / dt / c_m``.
    """
    times = check_times(times)
    size = len(initial.m_values)
    f_stack, g_stack = _StackedCombs(f_combs), _StackedCombs(g_combs)

    def rhs(t, y):
        a, b = y[:size], y[size:2 * size]
        c = y[2 * size:3 * size] + 1j * y[3 * size:]
        big_f = f_stack.single_integrals(t)
        big_g = g_stack.single_integrals(t)
        rate_f, rate_g = 2.0 * big_f.real, 2.0 * big_g.real

        da = -rate_f * a
        da[:-1] += rate_g[1:] * b[1:]
        db = -rate_g * b
        db[1:] += rate_f[:-1] * a[:-1]
        generator = -(big_f + np.conj(big_g))
        if coherence_rate is not None:
            generator = generator + coherence_rate(t)
        dc = generator * c
        return np.concatenate([da, db, dc.real, dc.imag])

    blocks0 = initial.blocks
    y0 = np.concatenate(
        [blocks0[:, 0, 0].real, blocks0[:, 1, 1].real, blocks0[:, 0, 1].real, blocks0[:, 0, 1].imag]
    )
    t_end = float(times[-1])
    if t_end == 0.0:
        states = np.repeat(y0[:, None], len(times), axis=1)
    else:
        solution = solve_ivp(
            rhs,
            (0.0, t_end),
            y0,
            method=constants.ODE_METHOD,
            t_eval=times,
            rtol=constants.ODE_RTOL,
            atol=constants.ODE_ATOL,
        )
        if not solution.success:
            reached = solution.t[-1] if len(solution.t) else 0.0
            raise IntegratorError(
                f"Block integration failed at t={reached:.6g} of {t_end:.6g} "
                f"after {solution.nfev} RHS evaluations: {solution.message}"
            )
        states = solution.y

    blocks = np.zeros((len(times), size, 2, 2), dtype=complex)
    blocks[:, :, 0, 0] = states[:size].T
    blocks[:, :, 1, 1] = states[size:2 * size].T
    blocks[:, :, 0, 1] = (states[2 * size:3 * size] + 1j * states[3 * size:]).T
    blocks[:, :, 1, 0] = np.conj(blocks[:, :, 0, 1])
    return BlockTrajectory(times=times, m_values=initial.m_values, blocks=blocks)


def integrate_blocks(model: Tcl2Model, times) -> BlockTrajectory:
    f_combs = [model.f(m) for m in model.m_values]
    g_combs = [model.g(m) for m in model.m_values]
    return integrate_block_equations(f_combs, g_combs, model.initial, times)


def block_coherence(dephasing_source, trajectory: BlockTrajectory) -> np.ndarray:
    """Rotating-frame coherence ``sum_m D_m(t) c_m(t)``; ``dephasing_source.dephasing(m)`` gives ``D_m``."""
    coherence = np.zeros(len(trajectory), dtype=complex)
    for index, m in enumerate(trajectory.m_values):
        c = trajectory.blocks[:, index, 0, 1]
        if np.any(c != 0):
            coherence += eval_comb(dephasing_source.dephasing(m), trajectory.times) * c
    return coherence


def block_record(model, trajectory: BlockTrajectory, solver: Optional[Solver] = None) -> TrajectoryRecord:
    solver = solver or Tcl2Solver()
    return solver.record(
        model.profile,
        model.initial,
        trajectory.times,
        block_coherence(model, trajectory),
        trajectory.population(),
        source="ode",
    )


def conservation_defect(trajectory: BlockTrajectory) -> float:
    """Largest drift of ``P_m^+ + P_{m+1}^-`` over all neighbouring sector pairs."""
    plus, minus = trajectory.sector_populations()
    pairs = plus[:, :-1] + minus[:, 1:]
    if pairs.size == 0:
        return 0.0
    return float(np.abs(pairs - pairs[0]).max())


class Tcl2Solver(Solver):
    NAME = "tcl2"
    VERSION = "001"

    def __init__(self, *, workers: Optional[int] = None, **kwargs):
        super().__init__(**kwargs)
        self.workers = workers

    def solve(
        self,
        profile: CouplingProfile,
        initial: BlockDensity,
        times,
        spectra: Optional[ModelSpectra] = None,
        **kwargs,
    ) -> TrajectoryRecord:
        times = check_times(times)
        model = build_tcl2_model(profile, initial, spectra=spectra, workers=self.workers)
        try:
            _require_excited_blocks(initial, "integrate_blocks")
        except UnsupportedStateError:
            return block_record(model, integrate_blocks(model, times), solver=self).validate(
                strict=False
            )
        coherence = coherence_tcl2(model, times, workers=self.workers)
        population = population_tcl2(model, times, workers=self.workers)
        return self.record(
            profile, initial, times, coherence, population, source="closed_form"
        ).validate(strict=False)
