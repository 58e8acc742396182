"""Modulation-space norms of symbols and the direct seminorm ladder.

A symbol in S(1, g) has bounded norms and seminorms; the chirp
exp(i pi x xi) grows with the truncation domain on both sides.

Run: python3 demos/05_modulation_norms.py
"""

import math

from phasefield import constant_weight, euclidean, symbol_preset
from phasefield.modspace import direct_seminorm_ladder, symbol_norm_ladder
from phasefield.windows import WignerFamily

g, M = euclidean(), constant_weight()
phi = WignerFamily(g)
for name in ("const1", "sinsin", "chirp"):
    a = symbol_preset(name)
    norms, _ = symbol_norm_ladder(a, M, g, [0, 1, 2], math.inf, phi, extent=4.0, x_points=9)
    semi = direct_seminorm_ladder(a, M, g, k_max=2, extent=4.0, points=17)
    print(f"{name:>7s}: norms {', '.join(f'{v:.4g}' for v in norms.values())}; seminorms {semi}")
