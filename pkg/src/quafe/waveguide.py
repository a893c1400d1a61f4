"""Guided-mode dispersion of a rectangular dielectric waveguide.

The cross section is handled with the effective-index method: a symmetric
slab of thickness ``height`` confines the field vertically and its effective
permittivity becomes the core of a second slab of thickness ``width``.  Both
slab eigenvalue equations are solved by vectorised bisection.

Wave vectors are in 1/nm and photon energies (hbar*omega) in eV, so the vacuum
light line reads ``energy = hbar_c * k``.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from .core import CONSTANTS, ElectronBeam
from .errors import DomainError

__all__ = [
    "WaveguideSpec",
    "ModeBranch",
    "PhaseMatchPoint",
    "slab_effective_permittivity",
    "effective_permittivity",
    "solve_dispersion",
    "branch_energy",
    "phase_match",
    "decay_length",
    "dispersion_rows",
    "DEFAULT_K_GRID",
]

HBAR_C = CONSTANTS.hbar_c
POLARIZATIONS = ("quasi_te", "quasi_tm")

# spans the crossings of 60-200 keV electron lines with the lowest diamond modes
DEFAULT_K_GRID = np.linspace(1e-3, 5e-2, 400)

# samples closer than this (relative) to the vacuum light line are not
# distinguishable from radiation at the bisection tolerance
_LIGHT_LINE_GUARD = 1e-9


@dataclass(frozen=True)
class WaveguideSpec:
    permittivity: float
    width: float  # nm
    height: float  # nm
    max_modes: int = 4
    polarization: str = "quasi_te"

    def __post_init__(self):
        if not self.permittivity > 1:
            raise DomainError("permittivity must exceed 1")
        if not (self.width > 0 and self.height > 0):
            raise DomainError("waveguide width and height must be positive")
        if not 1 <= self.max_modes <= 16:
            raise DomainError("max_modes must lie in [1, 16]")
        if self.polarization not in POLARIZATIONS:
            raise DomainError(f"polarization must be one of {POLARIZATIONS}")


@dataclass(frozen=True)
class ModeBranch:
    """Sampled dispersion of one guided mode.

    ``solver``, when present, re-evaluates the branch energy at an arbitrary
    wave vector; otherwise the samples are linearly interpolated.
    """

    index: int
    k_parallel: np.ndarray
    energy: np.ndarray
    decay_length: np.ndarray
    solver: Optional[Callable[[float], float]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for name in ("k_parallel", "energy", "decay_length"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if len(self.k_parallel) == 0:
            raise DomainError("a mode branch needs at least one sample")

    @classmethod
    def from_samples(cls, index, k_parallel, energy, solver=None) -> "ModeBranch":
        k_parallel = np.asarray(k_parallel, dtype=float)
        energy = np.asarray(energy, dtype=float)
        return cls(index, k_parallel, energy, decay_length(k_parallel, energy), solver)

    def energy_at(self, k: float) -> float:
        if self.solver is not None:
            return float(self.solver(k))
        return float(np.interp(k, self.k_parallel, self.energy))


@dataclass(frozen=True)
class PhaseMatchPoint:
    mode_index: int
    k_parallel: float
    photon_energy: float
    decay_length: float
    multiple_crossings: bool = False


def decay_length(k_parallel, photon_energy):
    """Evanescent decay length ``(k**2 - (E/hbar c)**2)**-0.5`` in nm."""
    k = np.asarray(k_parallel, dtype=float)
    k0 = np.asarray(photon_energy, dtype=float) / HBAR_C
    kappa2 = (k - k0) * (k + k0)
    if np.any(~(kappa2 > 0)) or np.any(k <= 0):
        raise DomainError("point is on or above the vacuum light line (radiative, not guided)")
    out = 1.0 / np.sqrt(kappa2)
    return float(out) if out.ndim == 0 else out


def _bisect(fun, lo, hi, rtol=1e-15, maxiter=200):
    """Vectorised bisection; ``fun(lo) < 0 < fun(hi)`` elementwise."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        neg = fun(mid) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
        if np.all(hi - lo <= rtol * np.abs(hi)):
            break
    return 0.5 * (lo + hi)


def slab_effective_permittivity(k0, thickness, eps_core, eps_clad, order, tm=False):
    """Effective permittivity of guided mode ``order`` of a symmetric slab.

    ``k0`` is the vacuum wave number (1/nm); arrays broadcast.  Unguided
    entries come back as NaN.
    """
    k0, eps_core = np.broadcast_arrays(np.asarray(k0, float), np.asarray(eps_core, float))
    half = 0.5 * thickness
    with np.errstate(invalid="ignore"):
        v = half * k0 * np.sqrt(eps_core - eps_clad)
    guided = v > order * math.pi / 2
    ratio = eps_clad / eps_core if tm else np.ones_like(eps_core)
    v_safe = np.where(guided, v, (order + 1) * math.pi)
    lo = np.full_like(v_safe, order * math.pi / 2)
    hi = np.minimum((order + 1) * math.pi / 2, v_safe)

    def char_eq(u):
        w = np.sqrt(np.maximum(v_safe**2 - u**2, 0.0))
        t = np.tan(u) if order % 2 == 0 else -1.0 / np.tan(u)
        return ratio * u * t - w

    u = _bisect(char_eq, lo, hi)
    eps_eff = eps_core - (u / (half * np.where(k0 > 0, k0, 1.0))) ** 2
    return np.where(guided, eps_eff, np.nan)


def effective_permittivity(spec: WaveguideSpec, k0, p: int, q: int):
    """Effective permittivity of the (p, q) mode family at vacuum wave number ``k0``."""
    tm_first = spec.polarization == "quasi_tm"
    eps1 = slab_effective_permittivity(k0, spec.height, spec.permittivity, 1.0, p, tm=tm_first)
    eps1_core = np.where(np.isnan(eps1), 1.0, eps1)
    eps2 = slab_effective_permittivity(k0, spec.width, eps1_core, 1.0, q, tm=not tm_first)
    return np.where(np.isnan(eps1), np.nan, eps2)


def _family_energies(spec: WaveguideSpec, k, p: int, q: int):
    """Photon energy of family (p, q) at each wave vector; NaN where unguided."""
    k = np.asarray(k, dtype=float)

    def mismatch(k0):
        eps = effective_permittivity(spec, k0, p, q)
        n_eff = np.sqrt(np.where(np.isnan(eps), 1.0, eps))
        return n_eff * k0 - k

    hi = k.copy()
    ok = mismatch(hi) > 0
    lo = k / math.sqrt(spec.permittivity)
    k0 = _bisect(mismatch, lo, hi, rtol=1e-14)
    k0 = np.where(ok & (k - k0 > _LIGHT_LINE_GUARD * k), k0, np.nan)
    return HBAR_C * k0


def _families(max_modes: int):
    # a family with p + q >= max_modes has at least max_modes families below it
    return [(p, q) for p in range(max_modes) for q in range(max_modes) if p + q < max_modes]


def branch_energy(spec: WaveguideSpec, index: int, k) -> np.ndarray:
    """Energy of the ``index``-th lowest guided mode at wave vectors ``k``."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    energies = np.array([_family_energies(spec, k, p, q) for p, q in _families(spec.max_modes)])
    energies = np.sort(energies, axis=0)  # NaN sorts last
    return energies[index]


def solve_dispersion(spec: WaveguideSpec, k_grid: Sequence[float] = DEFAULT_K_GRID) -> list[ModeBranch]:
    """Sample the lowest ``spec.max_modes`` guided branches on ``k_grid``."""
    k = np.asarray(k_grid, dtype=float)
    if k.ndim != 1 or len(k) == 0 or np.any(k <= 0) or np.any(np.diff(k) <= 0):
        raise DomainError("k_grid must be a non-empty, strictly increasing positive sequence")
    return list(_solve_cached(spec, tuple(k.tolist())))


@functools.lru_cache(maxsize=32)
def _solve_cached(spec: WaveguideSpec, k_grid: tuple) -> tuple:
    k = np.array(k_grid)
    families = _families(spec.max_modes)
    energies = np.sort(np.array([_family_energies(spec, k, p, q) for p, q in families]), axis=0)
    branches = []
    for n in range(spec.max_modes):
        keep = np.isfinite(energies[n])
        if not keep.any():
            continue
        solver = _BranchSolver(spec, n)
        branches.append(ModeBranch.from_samples(len(branches), k[keep], energies[n][keep], solver))
    return tuple(branches)


def _slab_scalar(k0, thickness, eps_core, eps_clad, order, tm):
    half = 0.5 * thickness
    if eps_core <= eps_clad:
        return None
    v = half * k0 * math.sqrt(eps_core - eps_clad)
    if v <= order * math.pi / 2:
        return None
    ratio = eps_clad / eps_core if tm else 1.0
    lo = order * math.pi / 2
    hi = min((order + 1) * math.pi / 2, v)

    def char_eq(u):
        w = math.sqrt(max(v * v - u * u, 0.0))
        t = math.tan(u) if order % 2 == 0 else -1.0 / math.tan(u)
        return ratio * u * t - w

    # open interval: tan/cot are singular at the half-integer multiples of pi
    span = hi - lo
    u = optimize.brentq(char_eq, lo + 1e-15 * span, hi - 1e-15 * span, xtol=1e-300, rtol=1e-15)
    return eps_core - (u / (half * k0)) ** 2


def _family_energy_scalar(spec: WaveguideSpec, k: float, p: int, q: int) -> float:
    tm_first = spec.polarization == "quasi_tm"

    def mismatch(k0):
        eps1 = _slab_scalar(k0, spec.height, spec.permittivity, 1.0, p, tm_first)
        eps2 = None if eps1 is None else _slab_scalar(k0, spec.width, eps1, 1.0, q, not tm_first)
        return math.sqrt(eps2 if eps2 is not None else 1.0) * k0 - k

    if mismatch(k) <= 0:
        return math.nan
    k0 = optimize.brentq(mismatch, k / math.sqrt(spec.permittivity), k, xtol=1e-300, rtol=1e-14)
    if k - k0 <= _LIGHT_LINE_GUARD * k:
        return math.nan
    return HBAR_C * k0


@dataclass(frozen=True)
class _BranchSolver:
    """Scalar re-solve of the ``index``-th lowest branch at one wave vector."""

    spec: WaveguideSpec
    index: int

    def __call__(self, k: float) -> float:
        energies = sorted(
            (_family_energy_scalar(self.spec, k, p, q) for p, q in _families(self.spec.max_modes)),
            key=lambda e: math.inf if math.isnan(e) else e,
        )
        return energies[self.index]


def phase_match(branch: ModeBranch, beam: ElectronBeam) -> Optional[PhaseMatchPoint]:
    """Crossing of the electron line ``E = hbar k v`` with ``branch``.

    Returns None when the line does not cross the sampled branch.  When it
    crosses more than once the lowest-k crossing is returned and flagged.
    """
    slope = HBAR_C * beam.beta
    k = branch.k_parallel
    gap = branch.energy - slope * k
    sign = np.sign(gap)
    # each root is either an exact zero sample or a strict sign change between samples
    roots = [(i, True) for i in range(len(k)) if sign[i] == 0]
    roots += [(i, False) for i in range(len(k) - 1) if sign[i] * sign[i + 1] < 0]
    if not roots:
        return None
    roots.sort()
    first, on_sample = roots[0]
    multiple = len(roots) > 1
    if on_sample:
        k_root = float(k[first])
    else:
        def f(kk):
            return branch.energy_at(kk) - slope * kk

        k_root = optimize.brentq(f, k[first], k[first + 1], xtol=1e-300, rtol=1e-13, maxiter=500)
    if multiple:
        warnings.warn(f"electron line crosses mode {branch.index} more than once", RuntimeWarning)
    energy = slope * k_root
    return PhaseMatchPoint(branch.index, k_root, energy, decay_length(k_root, energy), multiple)


def dispersion_rows(branches: Sequence[ModeBranch]):
    """CSV rows ``(mode, k_parallel_per_nm, photon_energy_eV, decay_length_nm)``."""
    for b in branches:
        for k, e, lam in zip(b.k_parallel, b.energy, b.decay_length):
            yield b.index, float(k), float(e), float(lam)
