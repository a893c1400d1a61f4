"""
Heralding a NOON state with one electron
========================================

Split the electron, let each arm excite its own waveguide, recombine the arms
and measure how much energy the electron lost.  A loss of N0 photon quanta
with nothing left elsewhere projects the light onto (|N0,0> + |0,N0>)/sqrt(2).
"""

from quafe import Coupling, heralded_noon_state, noon_probability, noon_source, optimize_length_scale, run

for n0 in (1, 3, 10):
    report = run(noon_source(Coupling.single_mode(float(n0))))
    herald = heralded_noon_state(report, n0, ("wg1", "wg2"))
    print(f"N0 = {n0:2d}: P(herald) = {herald.probability:.4f}, weights = "
          f"{herald.weights[0]:.3f}/{herald.weights[1]:.3f}, "
          f"closed form x 1/2 = {0.5 * noon_probability([n0], n0, 'dressed_single'):.4f}")

###############################################################################
# With the calibrated four-mode coupling, the coupler length can be tuned for
# each target N0.  Tolerating photons in the higher modes (dressed) keeps the
# probability high; forbidding them (pure) costs a lot as N0 grows.

base = [40.0, 55.71, 39.70, 37.77]
for n0 in (1, 5, 10, 20):
    cells = []
    for variant in ("pure_single", "dressed_single", "dressed_band"):
        s, p = optimize_length_scale(base, n0, variant)
        cells.append(f"{variant} {p:.3g} (s = {s:.3f})")
    print(f"N0 = {n0:2d}: " + ", ".join(cells))
