import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from quafe.core import poisson_pmf
from quafe.errors import DomainError, TruncationError
from quafe.fock import (
    ModeSpaceSpec,
    PhotonicState,
    coherent_overlap,
    compose_displacements,
    displace_vacuum,
    displacement_matrix,
    inverse_defect,
    kl_divergence,
    number_distribution,
    poisson_reference,
    poisson_tail,
    rule_cutoff,
    unitarity_defect,
)


def expm_displacement(beta, dim, pad=200):
    """Dense oracle: exponentiate the generator on a padded space, keep the block."""
    a = np.diag(np.sqrt(np.arange(1, dim + pad)), 1)
    return expm(-beta * a + np.conj(beta) * a.T)[:dim, :dim]


betas = st.complex_numbers(max_magnitude=math.sqrt(10), allow_nan=False, allow_infinity=False)


def test_rule_cutoff():
    assert rule_cutoff(0.0) == 10
    assert rule_cutoff(40.0) == 105
    with pytest.raises(DomainError):
        rule_cutoff(-1.0)


def test_vacuum_displacement():
    amp = displace_vacuum(0.0, 5)
    assert amp[0] == 1 and np.all(amp[1:] == 0)
    assert np.array_equal(displacement_matrix(0.0, 6), np.eye(7))


def test_unit_mean():
    p = np.abs(displace_vacuum(1.0)) ** 2
    assert p[0] == pytest.approx(math.exp(-1), rel=1e-15)
    assert p[1] == pytest.approx(math.exp(-1), rel=1e-15)


def test_paper_scale_moments():
    p = np.abs(displace_vacuum(math.sqrt(40.0), 104)) ** 2
    n = np.arange(105)
    mean = np.sum(n * p)
    assert mean == pytest.approx(40.0, abs=1e-9)
    assert np.sum((n - mean) ** 2 * p) == pytest.approx(40.0, abs=1e-9)


def test_convention_sign():
    # S(beta)|0> carries (beta*)^N, i.e. the textbook label is conj(beta)
    beta = 0.3 + 0.4j
    amp = displace_vacuum(beta, 20)
    assert amp[1] / amp[0] == pytest.approx(np.conj(beta), rel=1e-14)


def test_truncation_error():
    with pytest.raises(TruncationError):
        displace_vacuum(math.sqrt(40.0), 50)
    with pytest.raises(TruncationError):
        displacement_matrix(math.sqrt(40.0), 50)


def test_poisson_tail():
    assert poisson_tail(1.0, 0) == pytest.approx(1 - math.exp(-1), rel=1e-14)


@pytest.mark.parametrize("beta", [0.7, 2.0, 1.5 - 2.2j, math.sqrt(10) * np.exp(0.4j)])
def test_matrix_against_expm(beta):
    dim = rule_cutoff(abs(beta) ** 2) + 1
    assert np.abs(displacement_matrix(beta, dim - 1) - expm_displacement(beta, dim)).max() < 1e-12


def test_column_zero_is_displaced_vacuum():
    beta = 1.2 - 0.3j
    assert np.allclose(displacement_matrix(beta, 30)[:, 0], displace_vacuum(beta, 30), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(betas)
def test_unitarity_on_input_block(beta):
    assert unitarity_defect(beta) < 1e-8


def test_inverse_pair():
    assert inverse_defect(2.0) < 1e-8
    total, phase = compose_displacements(1.5 + 0.5j, -(1.5 + 0.5j))
    assert total == 0 and phase == pytest.approx(0.0, abs=1e-15)


def test_real_pair_composes_without_phase():
    total, phase = compose_displacements(0.8, 0.8)
    assert total == 1.6 and phase == 0.0


@settings(max_examples=25, deadline=None)
@given(betas, betas)
def test_composition_against_matrices(b1, b2):
    total, phase = compose_displacements(b1, b2)
    # the intermediate sum must hold the images of the first 8 number states
    cut = rule_cutoff((math.sqrt(8) + abs(b1) + abs(b2)) ** 2)
    lhs = displacement_matrix(b2, cut) @ displacement_matrix(b1, cut)
    rhs = np.exp(1j * phase) * displacement_matrix(total, cut)
    assert np.abs(lhs[:8, :8] - rhs[:8, :8]).max() < 1e-10
    # vacuum expectation of the pair
    assert abs(lhs[0, 0]) ** 2 == pytest.approx(math.exp(-abs(b1 + b2) ** 2), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(betas, betas)
def test_overlap_against_vectors(b1, b2):
    cut = rule_cutoff(max(abs(b1), abs(b2)) ** 2)
    dense = np.vdot(displace_vacuum(b1, cut), displace_vacuum(b2, cut))
    assert coherent_overlap(b1, b2) == pytest.approx(dense, abs=1e-11)


def test_number_distribution_vacuum():
    space = ModeSpaceSpec((4, 3))
    state = PhotonicState.vacuum(space)
    assert np.array_equal(number_distribution(state, 0), [1, 0, 0, 0, 0])


@pytest.mark.parametrize("mean", [0.5, 4.0, 10.0, 40.0])
def test_poisson_statistics(mean):
    cut = rule_cutoff(mean)
    p = np.abs(displace_vacuum(math.sqrt(mean), cut)) ** 2
    q = poisson_reference(mean, cut)
    assert np.allclose(p, poisson_pmf(mean, np.arange(cut + 1)), rtol=1e-12)
    assert kl_divergence(p, q) < 1e-10


def test_two_mode_marginals_independent():
    a = displace_vacuum(1.0 + 0.5j, 20)
    b = displace_vacuum(-0.7, 20)
    state = PhotonicState.product(a, b)
    assert np.allclose(number_distribution(state, 0), np.abs(a) ** 2, atol=1e-15)
    assert np.allclose(number_distribution(state, 1), np.abs(b) ** 2, atol=1e-15)
    joint = np.abs(state.amplitudes) ** 2
    assert np.allclose(joint, np.outer(joint.sum(1), joint.sum(0)), atol=1e-15)


def test_apply_mode_operator_matches_product():
    b1, b2 = 0.6, 0.3j
    cut = rule_cutoff(1.0)
    space = ModeSpaceSpec((cut, cut))
    state = PhotonicState.vacuum(space)
    state = state.apply_mode_operator(0, displacement_matrix(b1, cut))
    state = state.apply_mode_operator(1, displacement_matrix(b2, cut))
    expected = np.outer(displace_vacuum(b1, cut), displace_vacuum(b2, cut))
    assert np.allclose(state.amplitudes, expected, atol=1e-15)
    assert state.norm2 == pytest.approx(1.0, abs=1e-10)


def test_state_is_immutable_and_dumps():
    state = PhotonicState.vacuum(ModeSpaceSpec((2,)))
    with pytest.raises(ValueError):
        state.amplitudes[0] = 2
    assert json.loads(state.to_json()) == {"0": [1.0, 0.0]}


def test_mode_space_for_means():
    assert ModeSpaceSpec.for_means([40.0, 1.0]).shape == (106, 17)
