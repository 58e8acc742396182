"""Weyl quantization and its Gabor matrix elements.

For a = 1 the matrix elements obey the Gaussian ambiguity law
|<pi(X) chi, pi(Xi) chi>| = 2^{-1/2} exp(-pi |X - Xi|^2 / 2). The direct
operator route and the Wigner route agree for any symbol.

Run: python3 demos/04_weyl_matrix_elements.py
"""

import numpy as np

from phasefield import symbol_parse, symbol_preset
from phasefield.weyl import matrix_elements_direct, matrix_elements_wigner
from phasefield.windows import Window1D

chi = Window1D.gaussian()
X = np.array([[0.0, 0.0], [1.0, -0.5], [2.0, 1.0]])
Xi = np.array([[0.5, 0.0], [1.0, 1.0], [-1.0, 1.0]])

one = symbol_preset("const1")
d = np.abs(matrix_elements_direct(one, X, Xi, chi))
law = 2**-0.5 * np.exp(-np.pi * np.sum((X - Xi) ** 2, -1) / 2)
print("a = 1 direct:", np.round(d, 8), " law:", np.round(law, 8))

a = symbol_parse("sin(x)*cos(xi) + exp(-x^2)")
d = np.abs(matrix_elements_direct(a, X, Xi, chi))
w = matrix_elements_wigner(a, X, Xi, chi)
print("parsed symbol, direct vs Wigner route:", np.round(d, 8), np.round(w, 8))
