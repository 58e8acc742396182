"""Windows and their Wigner transforms.

The Gaussian window has the closed-form Wigner transform
2^{1/2} exp(-2 pi (x^2 + xi^2)); the FFT route reproduces it to rounding.

Run: python3 demos/02_windows_wigner.py
"""

import numpy as np

from phasefield import euclidean
from phasefield.grids import Axis, SampledFunction1D
from phasefield.weyl import wigner
from phasefield.windows import WignerFamily, make_bump_family

ax = Axis(0.0, 8.0, 512)
chi = SampledFunction1D.from_callable(ax, lambda y: np.exp(-np.pi * y * y))
W = wigner(chi, chi)
P = W.grid.mesh()
exact = 2**0.5 * np.exp(-2 * np.pi * (P[..., 0] ** 2 + P[..., 1] ** 2))
print(f"max |W - closed form| = {np.max(np.abs(W.values - exact)):.2e}")

# confined families: translated Wigner windows and compactly supported bumps
g = euclidean()
fam = WignerFamily(g)
bump = make_bump_family(g, 1.0)
X = np.zeros(2)
Y = np.array([[0.0, 0.0], [0.5, 0.0], [2.0, 0.0]])
print("Wigner family at Y:", np.round(np.real(fam(X, Y)), 6))
print("bump family at Y:  ", np.round(np.real(bump(X, Y)), 6))
