"""Phase-space analysis with Hörmander metrics.

Metrics and weights (:mod:`phasefield.phase_space`), confined window
families (:mod:`phasefield.windows`), the geometric short-time Fourier
transform (:mod:`phasefield.gstft`), modulation norms
(:mod:`phasefield.modspace`), Weyl matrix elements (:mod:`phasefield.weyl`)
and almost-diagonalization diagnostics (:mod:`phasefield.diagnostics`).
"""

__version__ = "0.1.0"

from .errors import ConvergenceError, DegenerateWindowError, GridError, PhasefieldError
from .phase_space import (AdmissibleWeight, HormanderMetric, SampleSpec, StructureReport, check_axioms,
                          constant_weight, euclidean, jb_xi_weight, metric_from_tag, s_rho_delta, sg,
                          shubin, weight_from_tag)
from .symbols import SymbolPreset, SymbolSyntaxError, symbol_parse, symbol_preset

__all__ = [
    "__version__",
    "AdmissibleWeight", "ConvergenceError", "DegenerateWindowError", "GridError", "HormanderMetric",
    "PhasefieldError", "SampleSpec", "StructureReport", "SymbolPreset", "SymbolSyntaxError",
    "check_axioms", "constant_weight", "euclidean", "jb_xi_weight", "metric_from_tag", "s_rho_delta",
    "sg", "shubin", "symbol_parse", "symbol_preset", "weight_from_tag",
]
