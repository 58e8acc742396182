"""Hörmander metrics: weights, symplectic duals and structural checks.

Run: python3 demos/01_metrics.py
"""

import numpy as np

from phasefield import SampleSpec, check_axioms, s_rho_delta, sg
from phasefield.phase_space import ball_distance, det_symplectic

g = s_rho_delta(0.75, 0.25)
X = np.array([1.0, 20.0])
f, F = g.weights(X)
print(f"{g.preset_tag}: at X={X} the ball half-axes are f={float(f):.4f}, F={float(F):.4f}")

# the metric and its dual have reciprocal determinants
d, ds = det_symplectic(g, X)
print(f"|g_X| |g^sigma_X| = {d * ds:.15f}")

# distance from a metric ball to a point, measured in the dual metric
Y = X + np.array([3.0, 10.0])
print(f"g^sigma distance from U(X, 1/2) to Y: {ball_distance(g, X, 0.5, Y):.6g}")

# sampled verification of slow variation, temperance and the uncertainty principle
for rep in check_axioms(sg(), SampleSpec(n_points=256, n_pairs=512)):
    print(f"  sg {rep.axiom:<16s} passed={rep.passed}  worst={rep.worst_violation:.3g}")
