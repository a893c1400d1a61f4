"""NOON-state generation probabilities and their optimisation over the
coupler length.

Mode 0 must carry ``N0`` photons.  The *pure* variants also require every
higher mode to stay empty; the *dressed* variants tolerate (and later filter)
those photons.  The *band* variants accept ``N0-2 .. N0+2`` photons in mode 0.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .core import poisson_log_pmf
from .errors import DomainError

__all__ = [
    "VARIANTS",
    "noon_probability",
    "optimize_length_scale",
    "golden_section_max",
    "generation_rate",
]

VARIANTS = ("pure_single", "pure_band", "dressed_single", "dressed_band")
BAND_HALF_WIDTH = 2


def _check(mean_photons, n0, variant):
    mean = np.atleast_1d(np.asarray(mean_photons, dtype=float))
    if np.any(mean < 0):
        raise DomainError("mean photon numbers must be non-negative")
    if n0 < 1 or int(n0) != n0:
        raise DomainError("target photon number must be a positive integer")
    if variant not in VARIANTS:
        raise DomainError(f"variant must be one of {VARIANTS}")
    return mean


def noon_probability(mean_photons: Sequence[float], n0: int, variant: str = "dressed_single") -> float:
    """Probability that one electron pass yields the requested mode-0 photon number.

    ``mean_photons[0]`` is the fundamental; band windows are clipped at zero
    photons.
    """
    mean = _check(mean_photons, n0, variant)
    if variant.endswith("band"):
        window = np.arange(max(n0 - BAND_HALF_WIDTH, 0), n0 + BAND_HALF_WIDTH + 1)
    else:
        window = np.array([n0])
    logp = poisson_log_pmf(mean[0], window)
    if variant.startswith("pure"):
        logp = logp - float(np.sum(mean[1:]))
    return float(np.sum(np.exp(logp)))


def golden_section_max(fun, lo: float, hi: float, xtol: float = 1e-10, maxiter: int = 500):
    """Maximise a unimodal function on ``[lo, hi]`` to absolute width ``xtol``;
    returns ``(x, f(x))``."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(maxiter):
        if b - a <= xtol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


def optimize_length_scale(base_mean_photons: Sequence[float], n0: int, variant: str = "dressed_single",
                          rtol: float = 1e-8):
    """Length multiplier ``s`` maximising :func:`noon_probability` of
    ``s * base_mean_photons``.

    Stationarity gives ``s = N0 / P_0`` for dressed_single and
    ``s = N0 / sum_n P_n`` for pure_single; the search is bracketed around
    these two candidates.
    """
    base = _check(base_mean_photons, n0, variant)
    if not base[0] > 0:
        raise DomainError("fundamental mode carries no photons; the length scale is undefined")
    s_dressed = n0 / base[0]
    s_pure = n0 / float(np.sum(base))
    lo, hi = 0.25 * min(s_dressed, s_pure), 4.0 * max(s_dressed, s_pure)

    def objective(s):
        return noon_probability(s * base, n0, variant)

    # in log s an absolute width is a relative tolerance on s
    x, _ = golden_section_max(lambda t: objective(math.exp(t)), math.log(lo), math.log(hi), xtol=rtol)
    s_star = math.exp(x)
    return s_star, objective(s_star)


def generation_rate(probability: float, beam_current: float, grating_factor: float = 1.0,
                    grating_passes: int = 2) -> float:
    """Heralded events per second for ``beam_current`` electrons per second.

    ``grating_factor`` is the per-pass transmission correction of the electron
    splitter and mixer gratings; it enters once per pass.
    """
    if not 0.0 <= probability <= 1.0:
        raise DomainError("probability must lie in [0, 1]")
    if beam_current < 0:
        raise DomainError("beam current must be non-negative")
    return probability * beam_current * grating_factor ** grating_passes
