"""Physical constants, relativistic kinematics and the special functions used
throughout the package.

Units: energies in eV, lengths in nm, DC fields in V/nm.  With the field
expressed in V/nm the electron charge cancels from every energy ratio, so it is
never stored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "ElectronBeam",
    "lorentz_factors",
    "bessel_k1_scaled",
    "poisson_pmf",
    "poisson_log_pmf",
]


@dataclass(frozen=True)
class PhysicalConstants:
    electron_rest_energy: float = 510_998.95  # eV
    speed_of_light: float = 299_792_458.0  # m/s, only ever used in ratios
    hbar_c: float = 197.3269804  # eV nm

    def __post_init__(self):
        for name in ("electron_rest_energy", "speed_of_light", "hbar_c"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class ElectronBeam:
    """Monoenergetic electron: kinetic energy (eV), Lorentz factor and v/c."""

    kinetic_energy: float
    gamma: float
    beta: float

    @property
    def kinetic_energy_kev(self) -> float:
        return self.kinetic_energy / 1e3


def lorentz_factors(kinetic_energy: float, constants: PhysicalConstants = CONSTANTS) -> ElectronBeam:
    """Build an :class:`ElectronBeam` from its kinetic energy in eV."""
    if not kinetic_energy >= 0:
        raise DomainError(f"kinetic energy must be non-negative, got {kinetic_energy!r}")
    t = kinetic_energy / constants.electron_rest_energy  # gamma - 1, kept unrounded
    gamma = 1.0 + t
    # 1 - 1/gamma^2 = t (t + 2) / gamma^2 avoids cancellation at low energy
    beta = math.sqrt(t * (t + 2.0)) / gamma
    return ElectronBeam(float(kinetic_energy), gamma, beta)


def bessel_k1_scaled(theta):
    """Return ``exp(theta) * K1(theta)``.

    The unscaled K1 is never formed: at typical coupler parameters theta is
    of order 1e8, where exp(-theta) underflows.  Accepts scalars or arrays.
    """
    theta_arr = np.asarray(theta, dtype=float)
    if np.any(~(theta_arr > 0)):
        raise DomainError("theta must be strictly positive")
    out = special.k1e(theta_arr)
    return float(out) if out.ndim == 0 else out


def poisson_log_pmf(mean, n):
    mean = np.asarray(mean, dtype=float)
    n = np.asarray(n, dtype=float)
    if np.any(mean < 0):
        raise DomainError("Poisson mean must be non-negative")
    if np.any(n < 0):
        raise DomainError("photon number must be non-negative")
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = n * np.log(mean) - mean - special.gammaln(n + 1.0)
    # vacuum limit: mean 0 puts all weight on n = 0
    logp = np.where(mean == 0, np.where(n == 0, 0.0, -np.inf), logp)
    return float(logp) if logp.ndim == 0 else logp


def poisson_pmf(mean, n):
    """Poisson probability ``exp(-mean) mean**n / n!`` evaluated in log space."""
    out = np.exp(poisson_log_pmf(mean, n))
    return float(out) if np.ndim(out) == 0 else out
