"""
Reading an optical phase with the electron current
==================================================

Both arms of an electron interferometer meet the same light, with an optical
phase shifter in between.  The kept-port current then oscillates as
cos(phi_e + N_eff * phi_ell): the electron sees the optical phase amplified
by the frequency-weighted photon number.
"""

import math

import numpy as np

from quafe import Coupling, current_closed_form, fringe_fwhm, run, sensitivity_slope, two_arm_sensor

coupling = Coupling((40.0, 55.71, 39.70, 37.77), (0.5058, 0.7351, 1.0164, 1.0612))
mean, ratios = coupling.mean_photons, coupling.freq_ratios

for phi in np.linspace(-0.01, 0.01, 5):
    engine = run(two_arm_sensor(coupling, math.pi / 2, phi)).current
    closed = current_closed_form(mean, ratios, math.pi / 2, phi)
    print(f"phi_ell = {phi:+.4f}: engine {engine:.6f}, closed form {closed:.6f}")

print("slope at phi_ell = 0:", sensitivity_slope(mean, ratios, math.pi / 2))

###############################################################################
# The central fringe narrows as the coupling grows.

unit = np.array(mean) / mean[0]
for n0 in (1, 5, 20):
    print(f"<N_0> = {n0:2d}: FWHM = {fringe_fwhm(n0 * unit, ratios):.4f} rad")
