"""
Circuits as text
================

The same circuits can be written in the ``.quafe`` language and lowered onto a
coupling profile.  Here the two-arm sensor is read from the shipped program.
"""

import math

from quafe import Coupling, lower, parse_source, pretty, run
from quafe.cli import builtin_source

source = builtin_source("fig4a")
ast = parse_source(source, "fig4a.quafe")
print(pretty(ast))

profiles = {"calibrated": Coupling.single_mode(4.0)}
circuit = lower(ast, profiles, {"phi_e": math.pi / 2, "phi_ell": 0.3})
print("elements:", [type(e).__name__ for e in circuit.elements])
print("current:", run(circuit).current)

###############################################################################
# Mistakes come back with a location.

try:
    parse_source("path e0\nsplit e0 -> a b\nmix a a -> c\ndetect c current\n", "typo.quafe")
except Exception as exc:
    print(exc)
