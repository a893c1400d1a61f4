"""Truncated Fock-space linear algebra for the guided photon modes.

Convention: the electron-mode interaction is the displacement
``S(beta) = exp(-beta a + beta* a^dagger)``, so ``S(beta)|0>`` has number
amplitudes ``exp(-|beta|^2/2) (beta*)^N / sqrt(N!)``.  In the textbook
coherent-state label this is ``|alpha = beta*>``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .core import poisson_pmf
from .errors import DomainError, TruncationError

__all__ = [
    "DEFAULT_TAIL_TOLERANCE",
    "rule_cutoff",
    "poisson_tail",
    "ModeSpaceSpec",
    "PhotonicState",
    "displace_vacuum",
    "displacement_matrix",
    "compose_displacements",
    "output_cutoff",
    "unitarity_defect",
    "inverse_defect",
    "coherent_overlap",
    "number_distribution",
    "kl_divergence",
    "poisson_reference",
]

DEFAULT_TAIL_TOLERANCE = 1e-12


def rule_cutoff(mean: float) -> int:
    """Photon-number cutoff ``ceil(mean + 10 sqrt(mean + 1))``."""
    if mean < 0:
        raise DomainError("mean photon number must be non-negative")
    return int(math.ceil(mean + 10.0 * math.sqrt(mean + 1.0)))


def poisson_tail(mean: float, cutoff: int) -> float:
    """Probability mass of Poisson(mean) strictly above ``cutoff``."""
    return float(special.pdtrc(cutoff, mean))


def _check_cutoff(mean, cutoff, tolerance):
    tail = poisson_tail(mean, cutoff)
    if tail > tolerance:
        raise TruncationError(
            f"cutoff {cutoff} leaves Poisson({mean:.6g}) tail mass {tail:.3g} > {tolerance:.3g}"
        )


@dataclass(frozen=True)
class ModeSpaceSpec:
    cutoffs: tuple
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE

    @property
    def mode_count(self) -> int:
        return len(self.cutoffs)

    @property
    def shape(self) -> tuple:
        return tuple(c + 1 for c in self.cutoffs)

    @classmethod
    def for_means(cls, means: Sequence[float], tail_tolerance=DEFAULT_TAIL_TOLERANCE) -> "ModeSpaceSpec":
        return cls(tuple(rule_cutoff(m) for m in means), tail_tolerance)


@dataclass(frozen=True)
class PhotonicState:
    """Dense amplitudes over the product number basis; axis ``n`` is mode ``n``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        arr = np.array(self.amplitudes, dtype=complex)
        arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", arr)

    @classmethod
    def vacuum(cls, space: ModeSpaceSpec) -> "PhotonicState":
        amp = np.zeros(space.shape, dtype=complex)
        amp[(0,) * space.mode_count] = 1.0
        return cls(amp)

    @classmethod
    def product(cls, *mode_amplitudes) -> "PhotonicState":
        amp = np.array(1.0 + 0j)
        for vec in mode_amplitudes:
            amp = np.multiply.outer(amp, np.asarray(vec, dtype=complex))
        return cls(amp)

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def apply_mode_operator(self, mode: int, matrix) -> "PhotonicState":
        amp = np.moveaxis(self.amplitudes, mode, 0)
        out = np.tensordot(np.asarray(matrix), amp, axes=(1, 0))
        return PhotonicState(np.moveaxis(out, 0, mode))

    def to_json(self) -> str:
        """Debug dump: ``"n0,n1,..."`` basis label -> [re, im] for non-zero amplitudes."""
        flat = self.amplitudes.ravel()
        data = {
            ",".join(str(int(j)) for j in np.unravel_index(i, self.amplitudes.shape)): [float(v.real), float(v.imag)]
            for i, v in enumerate(flat)
            if v != 0
        }
        return json.dumps(data, indent=1)


def displace_vacuum(beta: complex, cutoff: int | None = None, tail_tolerance=DEFAULT_TAIL_TOLERANCE) -> np.ndarray:
    """Number amplitudes of ``S(beta)|0>`` for ``N = 0..cutoff``."""
    mean = abs(beta) ** 2
    if cutoff is None:
        cutoff = rule_cutoff(mean)
    _check_cutoff(mean, cutoff, tail_tolerance)
    n = np.arange(cutoff + 1)
    if beta == 0:
        out = np.zeros(cutoff + 1, dtype=complex)
        out[0] = 1.0
        return out
    bstar = np.conj(beta)
    # modulus in log space, phase separately: (beta*)^N overflows for large N
    log_mod = -0.5 * mean + n * math.log(abs(beta)) - 0.5 * special.gammaln(n + 1.0)
    return np.exp(log_mod) * np.exp(1j * n * np.angle(bstar))


def displacement_matrix(beta: complex, cutoff: int, tail_tolerance=DEFAULT_TAIL_TOLERANCE) -> np.ndarray:
    """Matrix elements ``<m|S(beta)|n>`` for ``m, n <= cutoff``.

    Closed form with ``alpha = conj(beta)`` and ``x = |beta|^2``: for
    ``m >= n`` the element is
    ``sqrt(n!/m!) alpha^(m-n) exp(-x/2) L_n^(m-n)(x)``, and for ``m < n``
    the same with ``-conj(alpha)``.  Prefactors are taken in log space.
    (Building columns by the ladder recurrence ``S|n> = (a^dagger - beta)
    S|n-1>/sqrt(n)`` is exact algebraically but loses all digits for
    ``|beta|^2 ~ 10`` and ``n ~ 40``.)

    The block is the exact restriction of the infinite operator, so it is
    unitary only on inputs whose images stay inside the cutoff.
    """
    _check_cutoff(abs(beta) ** 2, cutoff, tail_tolerance)
    dim = cutoff + 1
    if beta == 0:
        return np.eye(dim, dtype=complex)
    alpha = complex(np.conj(beta))
    x = abs(alpha) ** 2
    m = np.arange(dim)[:, None]
    n = np.arange(dim)[None, :]
    low = np.minimum(m, n)
    diff = np.abs(m - n)
    with np.errstate(over="raise", invalid="raise"):
        lag = special.eval_genlaguerre(low, diff, x)
        log_pre = 0.5 * (special.gammaln(low + 1.0) - special.gammaln(low + diff + 1.0)) \
            + diff * math.log(abs(alpha)) - 0.5 * x
        phase = np.where(m >= n, np.exp(1j * np.angle(alpha) * diff), np.exp(1j * np.angle(-alpha.conjugate()) * diff))
        return np.exp(log_pre) * phase * lag


def output_cutoff(beta: complex, input_cutoff: int) -> int:
    """Cutoff holding ``S(beta)|n>`` for every ``n <= input_cutoff``.

    Those images concentrate below ``(sqrt(n) + |beta|)^2``; the rule margin
    is applied on top of that.
    """
    return rule_cutoff((math.sqrt(input_cutoff) + abs(beta)) ** 2)


def unitarity_defect(beta: complex, input_cutoff: int | None = None) -> float:
    """``max |(S^dagger S - I)|`` over the rule-sized input block.

    Rows run up to :func:`output_cutoff`, so only the input block is
    truncated, never the images.
    """
    if input_cutoff is None:
        input_cutoff = rule_cutoff(abs(beta) ** 2)
    mat = displacement_matrix(beta, output_cutoff(beta, input_cutoff))
    block = mat.conj().T @ mat[:, : input_cutoff + 1]
    return float(np.max(np.abs(block[: input_cutoff + 1] - np.eye(input_cutoff + 1))))


def inverse_defect(beta: complex, input_cutoff: int | None = None) -> float:
    """``max |S(beta) S(-beta) - I|`` over the rule-sized input block."""
    if input_cutoff is None:
        input_cutoff = rule_cutoff(abs(beta) ** 2)
    out = output_cutoff(beta, input_cutoff)
    prod = displacement_matrix(beta, out) @ displacement_matrix(-beta, out)[:, : input_cutoff + 1]
    return float(np.max(np.abs(prod[: input_cutoff + 1] - np.eye(input_cutoff + 1))))


def compose_displacements(beta1: complex, beta2: complex):
    """``S(beta2) S(beta1) = exp(i phase) S(beta1 + beta2)``.

    Returns ``(beta1 + beta2, phase)`` with ``phase = Im(conj(beta2) beta1)``.
    """
    return complex(beta1 + beta2), float(np.imag(np.conj(beta2) * beta1))


def coherent_overlap(beta1: complex, beta2: complex) -> complex:
    """``<0|S(beta1)^dagger S(beta2)|0>`` without any truncation."""
    return complex(np.exp(-0.5 * abs(beta1) ** 2 - 0.5 * abs(beta2) ** 2 + beta1 * np.conj(beta2)))


def number_distribution(state, mode: int = 0) -> np.ndarray:
    """Marginal photon-number distribution of ``mode``; sums to the state norm."""
    amp = state.amplitudes if isinstance(state, PhotonicState) else np.asarray(state)
    prob = np.abs(amp) ** 2
    axes = tuple(i for i in range(prob.ndim) if i != mode)
    return prob.sum(axis=axes) if axes else prob


def kl_divergence(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def poisson_reference(mean: float, cutoff: int) -> np.ndarray:
    return poisson_pmf(mean, np.arange(cutoff + 1))
