"""
Bath correlation functions as frequency combs.

A comb is a finite sum ``F(tau) = sum_j w_j exp(i omega_j tau)``. The correlation functions
``f_m``, ``g_m`` and the dephasing average ``<exp(-4i K3 t)>_m`` are exactly of this form
on a finite bath, so their single and double time integrals have closed forms per line.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from . import constants
from .aliases import SectorLabel
from .model import CouplingProfile, SectorTable, build_sectors, config_bits, sector_index
from .util import ordered_map, time_chunks

TimeLike = Union[float, np.ndarray]


def canonical_lines(
    omegas: np.ndarray, weights: np.ndarray, rtol: float = constants.COMB_MERGE_RTOL
) -> Tuple[np.ndarray, np.ndarray]:
    """Sort lines by frequency and merge frequencies equal within ``rtol``; weights add."""
    omegas = np.asarray(omegas, dtype=float).reshape(-1)
    weights = np.asarray(weights, dtype=complex).reshape(-1)
    if len(omegas) == 0:
        return np.zeros(0), np.zeros(0, dtype=complex)
    order = np.argsort(omegas, kind="stable")
    omegas, weights = omegas[order], weights[order]
    tolerance = rtol * np.abs(omegas).max()
    starts = np.concatenate([[0], np.flatnonzero(np.diff(omegas) > tolerance) + 1])
    counts = np.diff(np.concatenate([starts, [len(omegas)]]))
    merged_omegas = np.add.reduceat(omegas, starts) / counts
    merged_weights = np.add.reduceat(weights, starts)
    keep = merged_weights != 0
    return merged_omegas[keep], merged_weights[keep]


@dataclass(frozen=True, eq=False)
class FrequencyComb:
    omegas: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_lines(cls, omegas, weights, rtol: float = constants.COMB_MERGE_RTOL) -> "FrequencyComb":
        omegas, weights = canonical_lines(omegas, weights, rtol=rtol)
        omegas.setflags(write=False)
        weights.setflags(write=False)
        return cls(omegas=omegas, weights=weights)

    @classmethod
    def empty(cls) -> "FrequencyComb":
        return cls.from_lines([], [])

    @classmethod
    def single(cls, omega: float, weight: complex) -> "FrequencyComb":
        return cls.from_lines([omega], [weight])

    @property
    def lines(self) -> List[Tuple[float, complex]]:
        return list(zip(self.omegas.tolist(), self.weights.tolist()))

    @property
    def is_empty(self) -> bool:
        return len(self.omegas) == 0

    @property
    def max_frequency(self) -> float:
        return float(np.abs(self.omegas).max()) if len(self.omegas) else 0.0

    def total_weight(self) -> complex:
        return complex(self.weights.sum())

    def conjugate(self) -> "FrequencyComb":
        return FrequencyComb.from_lines(-self.omegas, np.conj(self.weights))

    def scaled(self, factor: complex) -> "FrequencyComb":
        return FrequencyComb.from_lines(self.omegas, factor * self.weights)

    def __add__(self, other: "FrequencyComb") -> "FrequencyComb":
        return merge(self, other)

    def __len__(self) -> int:
        return len(self.omegas)

    def __call__(self, tau: TimeLike):
        return eval_comb(self, tau)


def merge(*combs: FrequencyComb) -> FrequencyComb:
    if not combs:
        return FrequencyComb.empty()
    return FrequencyComb.from_lines(
        np.concatenate([c.omegas for c in combs]), np.concatenate([c.weights for c in combs])
    )


def _line_sum(comb: FrequencyComb, t: TimeLike, kernel) -> TimeLike:
    t_array = np.asarray(t, dtype=float)
    flat = t_array.reshape(-1)
    out = np.zeros(flat.shape, dtype=complex)
    if not comb.is_empty:
        for chunk in time_chunks(flat, len(comb)):
            out[chunk] = kernel(flat[chunk, None], comb.omegas[None, :]) @ comb.weights
    if t_array.ndim == 0:
        return complex(out[0])
    return out.reshape(t_array.shape)


def _exp_kernel(t: np.ndarray, omega: np.ndarray) -> np.ndarray:
    return np.exp(1j * omega * t)


def _series(theta: np.ndarray, denominators) -> np.ndarray:
    # sum_n (i theta)^n / d_n
    x = 1j * theta
    total = np.zeros(np.shape(x), dtype=complex)
    power = np.ones(np.shape(x), dtype=complex)
    for d in denominators:
        total = total + power / d
        power = power * x
    return total


def chi(theta: np.ndarray) -> np.ndarray:
    """``(exp(i theta) - 1) / (i theta)``, stable through ``theta = 0``."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < constants.SERIES_THRESHOLD
    safe = np.where(small, 1.0, theta)
    direct = np.sin(safe) / safe + 1j * (2.0 * np.sin(0.5 * safe) ** 2) / safe
    return np.where(small, _series(theta, (1.0, 2.0, 6.0, 24.0)), direct)


def phi(theta: np.ndarray) -> np.ndarray:
    """``(exp(i theta) - 1 - i theta) / (i theta)^2``, stable through ``theta = 0``."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < constants.SERIES_THRESHOLD
    safe = np.where(small, 1.0, theta)
    direct = (2.0 * np.sin(0.5 * safe) ** 2) / safe ** 2 - 1j * (np.sin(safe) - safe) / safe ** 2
    return np.where(small, _series(theta, (2.0, 6.0, 24.0, 120.0)), direct)


def _single_kernel(t: np.ndarray, omega: np.ndarray) -> np.ndarray:
    return t * chi(omega * t)


def _double_kernel(t: np.ndarray, omega: np.ndarray) -> np.ndarray:
    return t * t * phi(omega * t)


def eval_comb(comb: FrequencyComb, tau: TimeLike) -> TimeLike:
    """``sum_j w_j exp(i omega_j tau)``."""
    return _line_sum(comb, tau, _exp_kernel)


def single_time_integral(comb: FrequencyComb, t: TimeLike) -> TimeLike:
    """``int_0^t F(tau) dtau``."""
    return _line_sum(comb, t, _single_kernel)


def double_time_integral(comb: FrequencyComb, t: TimeLike) -> TimeLike:
    """``int_0^t dt1 int_0^t1 dt2 F(t2)``."""
    return _line_sum(comb, t, _double_kernel)


def _sector_arrays(m: SectorLabel, profile: CouplingProfile, sectors: SectorTable):
    entry = sectors.sector(m)
    bits = config_bits(entry.configs, profile.n_bath)
    return entry, bits


def f_comb(m: SectorLabel, profile: CouplingProfile, sectors: SectorTable) -> FrequencyComb:
    """
    ``f_m(tau) = 4 sum_k alpha_k^2 <sigma_-^k sigma_+^k exp(i(omega0 + 4 K3 + 2 alpha_k) tau)>_m``.
    Only configurations with spin ``k`` down contribute.
    """
    entry, bits = _sector_arrays(m, profile, sectors)
    alphas = profile.alphas
    down = bits == 0
    omegas = profile.omega0 + 4.0 * entry.k3_values[:, None] + 2.0 * alphas[None, :]
    weights = np.broadcast_to(4.0 * alphas ** 2 / entry.degeneracy, bits.shape)
    return FrequencyComb.from_lines(omegas[down], weights[down])


def g_comb(m: SectorLabel, profile: CouplingProfile, sectors: SectorTable) -> FrequencyComb:
    """
    ``g_m(tau) = 4 sum_k alpha_k^2 <sigma_+^k sigma_-^k exp(i(-omega0 - 4 K3 + 2 alpha_k) tau)>_m``.
    """
    entry, bits = _sector_arrays(m, profile, sectors)
    alphas = profile.alphas
    up = bits == 1
    omegas = -profile.omega0 - 4.0 * entry.k3_values[:, None] + 2.0 * alphas[None, :]
    weights = np.broadcast_to(4.0 * alphas ** 2 / entry.degeneracy, bits.shape)
    return FrequencyComb.from_lines(omegas[up], weights[up])


def dephasing_comb(m: SectorLabel, profile: CouplingProfile, sectors: SectorTable) -> FrequencyComb:
    """``<exp(-4i K3 t)>_m`` as a comb in ``t``."""
    entry = sectors.sector(m)
    weights = np.full(entry.degeneracy, 1.0 / entry.degeneracy)
    return FrequencyComb.from_lines(-4.0 * entry.k3_values, weights)


@dataclass(frozen=True, eq=False)
class ModelSpectra:
    """
    All combs of one model, indexed by ascending ``m``. Out-of-range sectors (``m`` beyond
    ``+-N/2``) read as the empty comb.
    """

    profile: CouplingProfile
    sectors: SectorTable
    f_combs: List[FrequencyComb]
    g_combs: List[FrequencyComb]
    dephasing_combs: List[FrequencyComb]

    def _get(self, combs: List[FrequencyComb], index: int) -> FrequencyComb:
        if 0 <= index < len(combs):
            return combs[index]
        return FrequencyComb.empty()

    def f(self, m: SectorLabel) -> FrequencyComb:
        return self._get(self.f_combs, int(round(m + self.profile.n_bath / 2)))

    def g(self, m: SectorLabel) -> FrequencyComb:
        return self._get(self.g_combs, int(round(m + self.profile.n_bath / 2)))

    def dephasing(self, m: SectorLabel) -> FrequencyComb:
        return self.dephasing_combs[sector_index(self.profile.n_bath, m)]

    @property
    def max_frequency(self) -> float:
        return max(c.max_frequency for c in self.f_combs + self.g_combs)


def build_spectra(
    profile: CouplingProfile,
    sectors: Optional[SectorTable] = None,
    workers: Optional[int] = None,
) -> ModelSpectra:
    if sectors is None:
        sectors = build_sectors(profile)

    def build(m: SectorLabel):
        return (
            f_comb(m, profile, sectors),
            g_comb(m, profile, sectors),
            dephasing_comb(m, profile, sectors),
        )

    built = ordered_map(build, [entry.m for entry in sectors], workers=workers)
    f_combs, g_combs, dephasing_combs = (list(column) for column in zip(*built))
    return ModelSpectra(
        profile=profile,
        sectors=sectors,
        f_combs=f_combs,
        g_combs=g_combs,
        dephasing_combs=dephasing_combs,
    )
