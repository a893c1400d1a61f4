"""Electron-current readout of an optical phase.

For a two-arm interferometer whose arms couple to the same waveguide before
and after an optical phase shift, the kept-port probability is

    I = (1 + exp[-sum_n N_n (1 - cos p_n)] cos[phi_e + sum_n N_n sin p_n]) / 2

with ``p_n = phi_ell * omega_n / omega_0``.  ``oracle_current`` sums the same
quantity over the photon-number basis without using the closed form.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import optimize

from .errors import DomainError, TruncationError
from .fock import DEFAULT_TAIL_TOLERANCE, displace_vacuum, rule_cutoff

__all__ = [
    "current_closed_form",
    "current_from_mode_phases",
    "single_arm_closed_form",
    "oracle_current",
    "oracle_from_mode_phases",
    "effective_photon_number",
    "sensitivity_slope",
    "fringe_fwhm",
]


def _as_modes(mean_photons, freq_ratios):
    mean = np.atleast_1d(np.asarray(mean_photons, dtype=float))
    ratios = np.atleast_1d(np.asarray(freq_ratios, dtype=float))
    if mean.shape != ratios.shape:
        raise DomainError("need one frequency ratio per mode")
    if np.any(mean < 0):
        raise DomainError("mean photon numbers must be non-negative")
    return mean, ratios


def current_from_mode_phases(mean_photons, mode_phases, phi_e):
    """Kept-port current given the optical phase of every mode separately."""
    mean = np.atleast_1d(np.asarray(mean_photons, dtype=float))
    p = np.asarray(mode_phases, dtype=float)
    # trailing axis is the mode axis so phi grids broadcast
    decay = np.sum(mean * (1.0 - np.cos(p)), axis=-1)
    shift = np.sum(mean * np.sin(p), axis=-1)
    out = 0.5 * (1.0 + np.exp(-decay) * np.cos(np.asarray(phi_e) + shift))
    return float(out) if np.ndim(out) == 0 else out


def current_closed_form(mean_photons, freq_ratios, phi_e, phi_ell):
    """Normalised kept-port current; scalars or broadcastable arrays of phases."""
    mean, ratios = _as_modes(mean_photons, freq_ratios)
    phases = np.asarray(phi_ell, dtype=float)[..., None] * ratios
    return current_from_mode_phases(mean, phases, phi_e)


def single_arm_closed_form(mean_photons, freq_ratios, phi_e, phi_ell_prime):
    """Current of the single-arm layout (reference arm carries ``phi_e``).

    It is the two-arm expression with every mode phase replaced by
    ``pi - phi_ell_prime * omega_n/omega_0``.  For one mode, or for odd
    integer frequency ratios, this is the plain substitution
    ``phi_ell -> pi - phi_ell_prime``.
    """
    mean, ratios = _as_modes(mean_photons, freq_ratios)
    phases = math.pi - np.asarray(phi_ell_prime, dtype=float)[..., None] * ratios
    return current_from_mode_phases(mean, phases, phi_e)


def oracle_current(
    mean_photons,
    freq_ratios,
    phi_e: float,
    phi_ell: float,
    cutoffs: Sequence[int] | None = None,
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
) -> float:
    """Brute-force sum over the product number basis.

    The path-C amplitude of ``|{N_n}>`` is
    ``(exp(i phi_{N}) + 1)/2 * prod_n c_n(N_n)`` with coherent amplitudes
    ``c_n`` and ``phi_{N} = phi_e + phi_ell * sum_n N_n omega_n/omega_0``.
    """
    mean, ratios = _as_modes(mean_photons, freq_ratios)
    return oracle_from_mode_phases(mean, phi_ell * ratios, phi_e, cutoffs, tail_tolerance)


def oracle_from_mode_phases(
    mean_photons,
    mode_phases,
    phi_e: float,
    cutoffs: Sequence[int] | None = None,
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
    max_states: int = 20_000_000,
) -> float:
    """Number-basis sum with an independent optical phase per mode."""
    mean = np.atleast_1d(np.asarray(mean_photons, dtype=float))
    phases = np.atleast_1d(np.asarray(mode_phases, dtype=float))
    if mean.shape != phases.shape:
        raise DomainError("need one phase per mode")
    if cutoffs is None:
        cutoffs = [rule_cutoff(m) for m in mean]
    if math.prod(c + 1 for c in cutoffs) > max_states:
        raise TruncationError(
            f"dense oracle needs {math.prod(c + 1 for c in cutoffs)} basis states (limit {max_states})"
        )
    prob = np.array(1.0)
    phase = np.array(float(phi_e))
    for m, p, cut in zip(mean, phases, cutoffs):
        amp = displace_vacuum(math.sqrt(m), cut, tail_tolerance)
        prob = np.multiply.outer(prob, np.abs(amp) ** 2)
        phase = np.add.outer(phase, p * np.arange(cut + 1))
    weights = np.abs(np.exp(1j * phase) + 1.0) ** 2 / 4.0
    return float(np.sum(prob * weights))


def effective_photon_number(mean_photons, freq_ratios) -> float:
    """Frequency-weighted photon number ``sum_n N_n omega_n / omega_0``."""
    mean, ratios = _as_modes(mean_photons, freq_ratios)
    return float(np.sum(mean * ratios))


def sensitivity_slope(mean_photons, freq_ratios, phi_e: float) -> float:
    """``dI/dphi_ell`` at ``phi_ell = 0``."""
    return -0.5 * effective_photon_number(mean_photons, freq_ratios) * math.sin(phi_e)


def fringe_fwhm(mean_photons, freq_ratios, phi_e: float = math.pi / 2, samples: int = 20001) -> float:
    """Full width at half height of the current peak nearest ``phi_ell = 0``.

    The half level sits midway between the peak and the incoherent baseline
    1/2; edges are refined by root finding.
    """
    mean, ratios = _as_modes(mean_photons, freq_ratios)
    neff = max(effective_photon_number(mean, ratios), 1e-12)
    span = min(math.pi, 8.0 * math.pi / neff)
    grid = np.linspace(-span, span, samples)
    cur = current_closed_form(mean, ratios, phi_e, grid)
    interior = np.flatnonzero((cur[1:-1] >= cur[:-2]) & (cur[1:-1] >= cur[2:])) + 1
    if len(interior) == 0:
        raise DomainError("no current peak found near zero optical phase")
    i_peak = interior[np.argmin(np.abs(grid[interior]))]

    def f(x):
        return current_closed_form(mean, ratios, phi_e, x) - half

    peak = optimize.minimize_scalar(
        lambda x: -current_closed_form(mean, ratios, phi_e, x),
        bracket=(grid[i_peak - 1], grid[i_peak], grid[i_peak + 1]),
    ).x
    half = 0.5 * (current_closed_form(mean, ratios, phi_e, peak) + 0.5)
    left = i_peak
    while left > 0 and cur[left] >= half:
        left -= 1
    right = i_peak
    while right < samples - 1 and cur[right] >= half:
        right += 1
    if cur[left] >= half or cur[right] >= half:
        raise DomainError("peak does not fall below half height inside the scan window")
    x_left = optimize.brentq(f, grid[left], peak)
    x_right = optimize.brentq(f, peak, grid[right])
    return x_right - x_left
