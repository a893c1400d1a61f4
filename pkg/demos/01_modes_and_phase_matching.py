"""
Guided modes of a diamond waveguide
===================================

A rectangular diamond guide (permittivity 5.8, 600 nm by 800 nm) supports a
handful of guided modes in the near infrared.  An electron flying parallel to
it at speed v only exchanges energy with a mode where the mode's dispersion
curve meets the electron line E = hbar * v * k.
"""

import numpy as np

from quafe import WaveguideSpec, lorentz_factors, phase_match, solve_dispersion

spec = WaveguideSpec(permittivity=5.8, width=600.0, height=800.0, max_modes=4)
branches = solve_dispersion(spec)
print(f"{len(branches)} branches on a grid of {len(branches[0].k_parallel)} wave vectors")

# Sample each branch at a few wave vectors (1/nm).
for k in (0.005, 0.01, 0.02):
    row = "  ".join(f"{b.energy_at(k):.3f}" for b in branches)
    print(f"k = {k:.3f} /nm  ->  E = {row} eV")

###############################################################################
# Phase matching moves to lower photon energies as the electron speeds up,
# because a steeper electron line cuts each branch closer to the origin.

for kev in (60, 100, 150, 200):
    beam = lorentz_factors(kev * 1e3)
    points = [phase_match(b, beam) for b in branches]
    energies = "  ".join(f"{p.photon_energy:.3f}" for p in points)
    print(f"{kev:4d} keV (v = {beam.beta:.3f} c): {energies} eV")

###############################################################################
# Below about 50.7 keV the electron is slower than light inside diamond,
# c / sqrt(5.8), and no guided mode can keep up with it.

slow = lorentz_factors(50e3)
print("50 keV crossings:", [phase_match(b, slow) for b in branches])
print("decay lengths at 200 keV (nm):",
      np.round([phase_match(b, lorentz_factors(200e3)).decay_length for b in branches], 1))
