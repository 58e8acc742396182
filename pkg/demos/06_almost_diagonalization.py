"""Almost diagonalization: classify symbols by matrix-element decay.

Each verdict combines the decay of the metric-weighted matrix elements with
the direct seminorm ladder. Takes about a minute.

Run: python3 demos/06_almost_diagonalization.py
"""

from phasefield import constant_weight, euclidean, symbol_preset
from phasefield.diagnostics import classify, showcase_srd

g, M = euclidean(), constant_weight()
for name in ("const1", "sinsin", "chirp", "jb_xi"):
    rec = classify(symbol_preset(name), g, M, {"equivalence": False})
    print(f"{name:>7s}: {rec['verdict']}  (modulation side {rec['modulation_side']['verdict']}, "
          f"direct side {rec['direct_side']['verdict']})")

# S^0_{1/2,1/2}: the verdict does not depend on the cutoff
rep = showcase_srd(symbol_preset("sinsin"), 0.5, 0.5)
print("sinsin in S^0_{1/2,1/2}: with cutoff", rep.indicators["with_theta"],
      "/ without cutoff", rep.indicators["without_theta"])
