import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from quafe.core import CONSTANTS, bessel_k1_scaled, lorentz_factors, poisson_log_pmf, poisson_pmf
from quafe.errors import DomainError


def test_rest_case():
    beam = lorentz_factors(0.0)
    assert beam.gamma == 1.0 and beam.beta == 0.0


def test_beta_200kev():
    assert lorentz_factors(200e3).beta == pytest.approx(0.6953, abs=5e-4)


def test_beta_100kev_against_mpmath():
    mpmath.mp.dps = 40
    gamma = 1 + mpmath.mpf(100e3) / mpmath.mpf(CONSTANTS.electron_rest_energy)
    expected = float(mpmath.sqrt(1 - 1 / gamma**2))
    beta = lorentz_factors(100e3).beta
    assert beta == pytest.approx(expected, rel=1e-14)
    assert abs(beta - 0.548) < 1e-3


def test_small_energy_keeps_precision():
    # beta^2 ~ 2 T / mc^2 for T << mc^2, where 1 - 1/gamma^2 would cancel badly
    beam = lorentz_factors(1e-6)
    assert beam.beta == pytest.approx(math.sqrt(2e-6 / CONSTANTS.electron_rest_energy), rel=1e-6)


def test_negative_energy_rejected():
    with pytest.raises(DomainError):
        lorentz_factors(-1.0)


@given(st.floats(0, 1e7), st.floats(0, 1e7))
def test_beta_monotone(a, b):
    if a < b:
        assert lorentz_factors(a).beta <= lorentz_factors(b).beta


@pytest.mark.parametrize("theta", [1e-3, 0.1, 1.0, 7.5, 100.0, 1e4, 4.7e8])
def test_k1_scaled_against_mpmath(theta):
    mpmath.mp.dps = 30
    expected = float(mpmath.besselk(1, theta) * mpmath.exp(theta))
    assert bessel_k1_scaled(theta) == pytest.approx(expected, rel=1e-13)


def test_k1_scaled_examples():
    assert bessel_k1_scaled(1.0) == pytest.approx(1.636154, abs=1e-6)
    # the two-term expansion itself is off by 15/(128 theta^2) ~ 1.2e-5 at theta = 100
    lead = math.sqrt(math.pi / 200)
    assert bessel_k1_scaled(100.0) == pytest.approx(lead * (1 + 3 / 800), rel=2e-5)
    assert bessel_k1_scaled(100.0) == pytest.approx(lead * (1 + 3 / 800 - 15 / 128e4), rel=2e-7)
    big = 1e12
    assert bessel_k1_scaled(big) * math.sqrt(big) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-11)


@pytest.mark.parametrize("theta", [0.0, -1.0])
def test_k1_domain(theta):
    with pytest.raises(DomainError):
        bessel_k1_scaled(theta)


def test_poisson_examples():
    assert poisson_pmf(0.0, 0) == 1.0
    assert poisson_pmf(0.0, 3) == 0.0
    assert poisson_pmf(1.0, 0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert poisson_pmf(20.0, 20) == pytest.approx(0.0888353173920848, rel=1e-13)
    with pytest.raises(DomainError):
        poisson_pmf(-1.0, 0)


def test_poisson_against_scipy_stats():
    n = np.arange(0, 400)
    for mean in (0.3, 4.0, 40.0, 250.0):
        assert np.allclose(poisson_pmf(mean, n), stats.poisson.pmf(n, mean), rtol=1e-11, atol=1e-300)
        assert np.allclose(poisson_log_pmf(mean, n[:50]), stats.poisson.logpmf(n[:50], mean), rtol=1e-12)


def test_poisson_large_mean_stays_finite():
    assert np.isfinite(poisson_pmf(1e4, 1e4))
    assert poisson_pmf(1e4, 1e4) == pytest.approx(1 / math.sqrt(2 * math.pi * 1e4), rel=1e-4)
