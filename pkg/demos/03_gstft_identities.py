"""Geometric STFT: orthogonality and reconstruction.

Both identities are checked at default resolution; pass --refine to repeat
at doubled resolution (about a minute).

Run: python3 demos/03_gstft_identities.py [--refine]
"""

import sys

import numpy as np

from phasefield import euclidean
from phasefield.grids import SampledPhaseFunction
from phasefield.gstft import gaussian_on, identity_setup, orthogonality_check, product_integral, reconstruct

levels = (0, 1) if "--refine" in sys.argv else (0,)
for level in levels:
    grid, X, w, fam = identity_setup(euclidean(), level)
    f1 = gaussian_on(grid)
    f2 = SampledPhaseFunction.from_callable(
        grid, lambda P: np.exp(-np.pi * ((P[..., 0] - 0.5) ** 2 + (P[..., 1] + 0.3) ** 2) / 2.25)
        * np.exp(2j * np.pi * P[..., 0]))
    I = product_integral(fam, fam, grid.mesh())
    lhs, rhs = orthogonality_check(fam, fam, f1, f2, X, w, I=I)
    _, res = reconstruct(f1, fam, fam, X, w, I=I)
    print(f"level {level}: orthogonality rel err {abs(lhs - rhs) / abs(rhs):.2e}, "
          f"reconstruction residual {res:.2e}")
