"""
Almost-diagonalization diagnostics.

The matrix-element field of a symbol is

    |<(Psi_mid(a theta_mid))^w pi(Q~^{1/2} X) chi, conj(pi(Q~^{1/2} Xi) chi)>|
        = |g_mid|^{1/2} |V_phi a(mid, D (Xi - X))|,

with ``mid = (X + Xi)/2`` and ``D = (f F)^{-1}`` for the split metrics used
here (``n = 1``). :func:`diag_field` evaluates the right side from local
transforms; :func:`keyidentity_crosscheck` evaluates the left side with
Weyl matrices and compares.

Class membership cannot be decided from finite data. :func:`decay_fit`
applies a documented rule (weighted sup ladder, fitted decay exponent and a
growth indicator) and labels the outcome ``consistent_in_class``,
``inconsistent`` or ``indeterminate``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .grids import PhaseGrid, sft_points
from .parallel import pmap
from .phase_space import s_rho_delta
from .symbols import evaluate_symbol
from .weyl import WeylMatrix, default_axis
from .windows import Window1D, make_wigner_family

SCHEMA_VERSION = "1"
N_LADDER = (0, 1, 2, 3, 4, 6, 8)
DIAG_PATCH_POINTS = 256
MODULUS_FLOOR = 1e-8

DEFAULT_THRESHOLDS = {
    "ladder_ratio": 10.0,
    "exponent_margin": 1.0,
    "growth_ratio": 1.5,
    "growth_N_max": 2,
    "fit_min_radius": 1.0,
    "fit_floor": 1e-12,
    "inner_fraction": 0.5,
    "min_annuli": 3,
}


# -- sampling ----------------------------------------------------------------

@dataclass(frozen=True)
class DiagSampleSpec:
    """Midpoints and offsets of the matrix-element field.

    Offsets are ``Xi - X = R (u_x f, u_xi F)`` at the midpoint, so the
    metric distance ``g_mid(X - Xi)`` is ``R^2``. ``layout="polar"`` uses
    ``n_directions`` angles times geometric ``radii``; ``layout="lattice"``
    uses a uniform ``lattice_points``-square lattice of ``(R u)`` over
    ``[-lattice_extent, lattice_extent]^2`` and records ``dX dXi`` weights.
    """

    mid_extent: float = 4.0
    mid_points: int = 9
    n_directions: int = 17
    radii: tuple = tuple(float(r) for r in np.geomspace(0.25, 6.0, 12))
    include_zero: bool = True
    layout: str = "polar"
    lattice_points: int = 48
    lattice_extent: float = 6.0

    def __post_init__(self):
        if self.layout not in ("polar", "lattice"):
            raise ValueError("layout must be polar or lattice")
        if self.mid_points < 1 or self.n_directions < 1:
            raise ValueError("sample counts must be positive")
        if any(r <= 0 for r in self.radii):
            raise ValueError("radii must be positive")

    def midpoints(self):
        ax = np.linspace(-self.mid_extent, self.mid_extent, self.mid_points) if self.mid_points > 1 \
            else np.zeros(1)
        return np.stack(np.meshgrid(ax, ax, indexing="ij"), -1).reshape(-1, 2)

    def mid_cell(self):
        if self.mid_points < 2:
            return 1.0
        return (2 * self.mid_extent / (self.mid_points - 1)) ** 2

    def offsets(self):
        """Normalized offsets ``Z = R u`` with their ``dZ`` weights (``None`` for polar)."""
        if self.layout == "lattice":
            m = self.lattice_points
            ax = (np.arange(m) - (m - 1) / 2) * (2 * self.lattice_extent / m)
            Z = np.stack(np.meshgrid(ax, ax, indexing="ij"), -1).reshape(-1, 2)
            return Z, np.full(len(Z), (2 * self.lattice_extent / m) ** 2)
        ang = 2 * np.pi * np.arange(self.n_directions) / self.n_directions
        u = np.stack([np.cos(ang), np.sin(ang)], -1)
        Z = (np.asarray(self.radii)[:, None, None] * u[None]).reshape(-1, 2)
        if self.include_zero:
            Z = np.vstack([np.zeros((1, 2)), Z])
        return Z, None

    def to_dict(self):
        return {"mid_extent": self.mid_extent, "mid_points": self.mid_points,
                "n_directions": self.n_directions, "radii": list(self.radii),
                "include_zero": self.include_zero, "layout": self.layout,
                "lattice_points": self.lattice_points, "lattice_extent": self.lattice_extent}


def sample_spec_from_dict(d):
    d = dict(d or {})
    if "radii" in d:
        d["radii"] = tuple(float(r) for r in d["radii"])
    return DiagSampleSpec(**d)


# -- the field ---------------------------------------------------------------

@dataclass
class DiagField:
    """Matrix-element samples ``(X, Xi, modulus, mid, gdist)``.

    Arrays are aligned along the first axis; ``weights`` holds ``dX dXi``
    quadrature weights for lattice layouts.
    """

    X: np.ndarray
    Xi: np.ndarray
    modulus: np.ndarray
    mid: np.ndarray
    gdist: np.ndarray
    weights: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        bad = ~np.isfinite(self.modulus)
        if np.any(bad):
            raise ConvergenceError("non-finite matrix-element modulus",
                                   {"non_finite_samples": int(np.sum(bad)), "samples": int(bad.size)})
        if np.any(self.gdist < 0):
            raise ValueError("metric distance must be non-negative")

    def __len__(self):
        return len(self.modulus)

    @property
    def samples(self):
        return [(self.X[i], self.Xi[i], float(self.modulus[i]), self.mid[i], float(self.gdist[i]))
                for i in range(len(self))]

    def rows(self):
        """CSV rows ``x, xi, y, eta, mid_x, mid_xi, gdist, modulus``."""
        return np.column_stack([self.X, self.Xi, self.mid, self.gdist, self.modulus])

    csv_header = ("x", "xi", "y", "eta", "mid_x", "mid_xi", "gdist", "modulus")


def diag_window(g, M, chi=None, theta_family="auto", theta_r=None):
    """Wigner family used by the field; ``theta_r`` defaults to ``min(r0, r_slow)``."""
    chi = Window1D.gaussian() if chi is None else chi
    return make_wigner_family(g, "identity", theta_family, chi, theta_r, M.r_slow)


def _transform_at(a, phi, m, Theta, points):
    grid = PhaseGrid.from_arrays(m, phi.extent(m), points)
    P = grid.mesh()
    b = evaluate_symbol(a, P) * np.conj(phi(m, P))
    return sft_points(b, grid, Theta, -1)


def diag_field(a, g, M, chi=None, theta_family="auto", sample_spec=None, points=DIAG_PATCH_POINTS,
               theta_r=None, phi=None, workers=1):
    """Matrix-element field from local transforms of ``a conj(phi_mid)``.

    Parameters
    ----------
    a : callable
        Symbol ``a(x, xi)``.
    g : HormanderMetric
    M : AdmissibleWeight
        Only its ``r_slow`` enters (through the cutoff radius).
    chi : Window1D, optional
        Gaussian by default.
    theta_family : {"auto", "cutoff", "none"}
    sample_spec : DiagSampleSpec, optional
    points : int
        Patch resolution per axis.
    workers : int
        Threads over midpoints; results do not depend on it.

    Raises
    ------
    DegenerateWindowError
        If ``W(chi, chi)(0) = 0``.
    """
    if g.n != 1:
        raise ValueError("diag_field is implemented for n = 1")
    spec = DiagSampleSpec() if sample_spec is None else sample_spec
    phi = diag_window(g, M, chi, theta_family, theta_r) if phi is None else phi
    mids = spec.midpoints()
    Z, dZ = spec.offsets()
    cell = spec.mid_cell()
    Xs, Xis, mods, ms, gd, ws = [], [], [], [], [], []

    def one(m):
        f, F = (float(v) for v in g.weights(m))
        V = Z * np.array([f, F])
        return f, F, V, _transform_at(a, phi, m, V / (f * F), points)

    for m, (f, F, V, vals) in zip(mids, pmap(one, mids, workers)):
        # |g_mid|^{1/2} = (f F)^{-1} for n = 1
        mods.append(np.abs(vals) / (f * F))
        Xs.append(m - 0.5 * V)
        Xis.append(m + 0.5 * V)
        ms.append(np.broadcast_to(m, V.shape))
        gd.append(np.sum(Z * Z, -1))
        if dZ is not None:
            ws.append(cell * f * F * dZ)
    meta = {"metric": g.preset_tag, "weight": getattr(M, "tag", "custom"),
            "window": dict(phi.metadata, kind="wigner"), "sample_spec": spec.to_dict(),
            "patch_points": int(points)}
    return DiagField(np.vstack(Xs), np.vstack(Xis), np.concatenate(mods), np.vstack(ms),
                     np.concatenate(gd), np.concatenate(ws) if ws else None, meta)


# -- operator routes -----------------------------------------------------------

OPERATOR_POINTS = 512
OPERATOR_SPACING = 1.0 / 32
CUTOFF_OVERSAMPLE = 4


def _op_axis(center, points=OPERATOR_POINTS, spacing=OPERATOR_SPACING):
    return default_axis(points, 0.5 * points * spacing, center)


def operator_route(a, g, phi, field_, points=OPERATOR_POINTS, spacing=OPERATOR_SPACING):
    """Operator side of the key identity for each sample of ``field_``.

    Per midpoint the rescaled symbol ``(a theta_mid)(f y, F eta)`` is
    quantized on a grid centred at ``mid_x / f`` and paired with
    time-frequency shifts of the window to ``(x / f, xi / F)``.
    """
    chi = phi.chi
    out = np.empty(len(field_))
    groups = _group_by_mid(field_.mid)
    for key, idx in groups.items():
        m = np.array(key)
        f, F = (float(v) for v in g.weights(m))

        def b(y, eta, m=m, f=f, F=F):
            P = np.stack(np.broadcast_arrays(f * np.asarray(y, float), F * np.asarray(eta, float)), -1)
            return evaluate_symbol(a, P) * phi.theta(m, P)

        axis = _op_axis(m[0] / f, points, spacing)
        op = WeylMatrix(b, axis, CUTOFF_OVERSAMPLE if phi.use_theta else 1)
        s = np.array([1.0 / f, 1.0 / F])
        out[idx] = _elements(op, chi, field_.X[idx] * s, field_.Xi[idx] * s)
    return out


def _elements(op, chi, X, Xi, dilation=1.0):
    """``|(op pi(X) w, conj(pi(Xi) w))|`` with ``w(t) = d^{-1/2} chi(t / d)`` evaluated exactly."""
    t = op.axis.nodes
    c = dilation**-0.5
    out = np.empty(len(X))
    for i in range(len(X)):
        u = c * np.exp(2j * np.pi * X[i, 1] * t) * chi((t - X[i, 0]) / dilation)
        v = c * np.exp(2j * np.pi * Xi[i, 1] * t) * chi((t - Xi[i, 0]) / dilation)
        out[i] = abs(np.vdot(v, op.matrix @ u) * op.axis.spacing)
    return out


def metaplectic_route(a, g, field_, chi=None, points=OPERATOR_POINTS, spacing=OPERATOR_SPACING):
    """``|<a^w pi(X) Phi_mid chi, conj(pi(Xi) Phi_mid chi)>|`` for symplectic metrics."""
    chi = Window1D.gaussian() if chi is None else chi
    out = np.empty(len(field_))
    for key, idx in _group_by_mid(field_.mid).items():
        m = np.array(key)
        f, F = (float(v) for v in g.weights(m))
        if abs(f * F - 1.0) > 1e-12:
            raise ValueError("metaplectic route needs a symplectic metric")
        axis = _op_axis(m[0], points, spacing)
        out[idx] = _elements(WeylMatrix(a, axis), chi, field_.X[idx], field_.Xi[idx], f)
    return out


def _group_by_mid(mid):
    groups = {}
    for i, m in enumerate(map(tuple, np.round(mid, 12))):
        groups.setdefault(m, []).append(i)
    return {k: np.array(v) for k, v in groups.items()}


def _max_rel(ref, other, floor=MODULUS_FLOOR):
    mask = ref > floor
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(other[mask] - ref[mask]) / ref[mask]))


def keyidentity_crosscheck(a, g, M, chi=None, theta_family="auto", sample_spec=None,
                           points=DIAG_PATCH_POINTS, return_fields=False, workers=1, field_=None):
    """Max relative gap between the operator and transform routes (modulus > 1e-8).

    A precomputed ``field_`` for the same window may be passed in.
    """
    phi = diag_window(g, M, chi, theta_family)
    fld = field_ if field_ is not None else diag_field(a, g, M, sample_spec=sample_spec, points=points,
                                                       phi=phi, workers=workers)
    op = operator_route(a, g, phi, fld)
    err = _max_rel(fld.modulus, op)
    if return_fields:
        return err, fld, op
    return err


def metaplectic_crosscheck(a, g, M, chi=None, sample_spec=None, points=DIAG_PATCH_POINTS):
    """Max relative gap between :func:`diag_field` (no cutoff) and the metaplectic route."""
    if not g.is_symplectic():
        raise ValueError("metaplectic route needs a symplectic metric")
    fld = diag_field(a, g, M, chi, "none", sample_spec, points)
    return _max_rel(fld.modulus, metaplectic_route(a, g, fld, chi))


# -- decay rule ----------------------------------------------------------------

@dataclass
class DecayReport:
    """Outcome of the decay rule.

    Attributes
    ----------
    N_ladder : list of int
    sup_estimates : list of float
        ``sup M(mid)^{-1} (1 + g_mid(X - Xi))^N modulus`` per ``N``.
    fitted_exponent : float or None
        Minus the slope of ``log`` annulus sup against ``log(1 + R)``.
    verdict : {"consistent_in_class", "inconsistent", "indeterminate"}
    caveats : list of str
    indicators : dict
        Ladder growth, growth indicator and calibration details.
    """

    N_ladder: list
    sup_estimates: list
    fitted_exponent: float | None
    verdict: str
    caveats: list
    indicators: dict = field(default_factory=dict)

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, "N_ladder": list(self.N_ladder),
                "sup_estimates": [float(v) for v in self.sup_estimates],
                "fitted_exponent": None if self.fitted_exponent is None else float(self.fitted_exponent),
                "verdict": self.verdict, "caveats": list(self.caveats),
                "indicators": _jsonable(self.indicators)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _weighted(field_, M):
    return field_.modulus / M(field_.mid)


def sup_ladder(field_, M, N_ladder=N_LADDER):
    """Weighted sups; shares its arithmetic with the ``p = inf`` membership norm."""
    base = _weighted(field_, M)
    return [float(np.max((1.0 + field_.gdist) ** N * base)) for N in N_ladder]


def _annuli(field_, base, th):
    R = np.sqrt(field_.gdist)
    keys = np.round(R, 10)
    radii = np.unique(keys[keys > 0])
    env = np.array([np.max(base[keys == r]) for r in radii])
    return radii, env


def _fit_exponent(radii, env, th):
    """Fitted exponent and the number of annuli it used."""
    if env.size == 0:
        return None, 0
    floor = th["fit_floor"] * float(np.max(env)) if np.max(env) > 0 else math.inf
    use = (radii >= th["fit_min_radius"]) & (env > floor)
    k = int(np.sum(use))
    if k < 2:
        return None, k
    A = np.column_stack([np.log1p(radii[use]), np.ones(k)])
    slope = np.linalg.lstsq(A, np.log(env[use]), rcond=None)[0][0]
    return float(-slope), k


def _growth_indicator(field_, base, N_ladder, th):
    ext = float(np.max(np.abs(field_.mid))) if len(field_) else 0.0
    inner = np.max(np.abs(field_.mid), -1) <= th["inner_fraction"] * ext + 1e-12
    G = 1.0
    for N in N_ladder:
        if N > th["growth_N_max"]:
            continue
        w = (1.0 + field_.gdist) ** N * base
        top, low = float(np.max(w)), float(np.max(w[inner]))
        if top > 0:
            G = max(G, top / low if low > 0 else math.inf)
    return G


def _decay_indicators(field_, M, N_ladder, th):
    base = _weighted(field_, M)
    sups = sup_ladder(field_, M, N_ladder)
    growth = 1.0
    for k in range(len(N_ladder) - 1):
        lo, hi = sups[k], sups[k + 1]
        if lo > 0:
            growth = max(growth, (hi / lo) ** (1.0 / (N_ladder[k + 1] - N_ladder[k])))
    radii, env = _annuli(field_, base, th)
    expo, used = _fit_exponent(radii, env, th)
    G = _growth_indicator(field_, base, N_ladder, th)
    decay_ok = (growth < th["ladder_ratio"] and expo is not None
                and expo >= max(N_ladder) + th["exponent_margin"])
    return {"sups": sups, "ladder_growth": growth, "fitted_exponent": expo, "annuli_used": used,
            "growth_indicator": G, "decay_ok": bool(decay_ok),
            "growth_ok": bool(G <= th["growth_ratio"]), "zero": bool(np.max(base) == 0.0)}


def decay_fit(field_, M, N_ladder=N_LADDER, thresholds=None, reference=None):
    """Apply the decay rule to a field.

    Parameters
    ----------
    field_ : DiagField
    M : AdmissibleWeight
    N_ladder : sequence of int
    thresholds : dict, optional
        Overrides of :data:`DEFAULT_THRESHOLDS`.
    reference : DiagField, optional
        Field of the symbol ``M`` itself for the same window. The decay
        indicators only count when the reference passes them; otherwise
        the verdict rests on the growth indicator alone.

    Notes
    -----
    ``consistent_in_class`` needs per-unit ladder growth below
    ``ladder_ratio``, a fitted exponent of at least ``max(N) +
    exponent_margin`` and a growth indicator at most ``growth_ratio``.
    """
    th = dict(DEFAULT_THRESHOLDS, **(thresholds or {}))
    N_ladder = [int(N) for N in N_ladder]
    ind = _decay_indicators(field_, M, N_ladder, th)
    caveats = ["finite-sample rule: verdicts are numerical consistency labels, not proofs",
               f"midpoints within |x|, |xi| <= {float(np.max(np.abs(field_.mid))):g}"]
    indicators = {k: ind[k] for k in ("ladder_growth", "annuli_used", "growth_indicator")}
    if ind["zero"]:
        caveats.append("zero field")
        return DecayReport(N_ladder, ind["sups"], None, "consistent_in_class", caveats, indicators)
    if ind["annuli_used"] < th["min_annuli"]:
        caveats.append(f"only {ind['annuli_used']} annuli above the noise floor")
        return DecayReport(N_ladder, ind["sups"], ind["fitted_exponent"], "indeterminate", caveats,
                           indicators)
    use_decay = True
    if reference is not None:
        ref = _decay_indicators(reference, M, N_ladder, th)
        indicators["reference"] = {k: ref[k] for k in ("ladder_growth", "fitted_exponent",
                                                      "growth_indicator", "decay_ok")}
        use_decay = ref["decay_ok"]
        if not use_decay:
            caveats.append("window decay too slow for the ladder: verdict uses the growth indicator only")
    ok = ind["growth_ok"] and (ind["decay_ok"] or not use_decay)
    indicators["decay_ok"] = ind["decay_ok"]
    indicators["growth_ok"] = ind["growth_ok"]
    indicators["decay_used"] = use_decay
    return DecayReport(N_ladder, ind["sups"], ind["fitted_exponent"],
                       "consistent_in_class" if ok else "inconsistent", caveats, indicators)


def weight_symbol(M):
    """``M`` viewed as a symbol ``(x, xi) -> M(x, xi)``."""
    return lambda x, xi: M(np.stack(np.broadcast_arrays(np.asarray(x, float), np.asarray(xi, float)), -1))


def calibrated_decay(a, g, M, chi=None, theta_family="auto", sample_spec=None, points=DIAG_PATCH_POINTS,
                     N_ladder=N_LADDER, thresholds=None, theta_r=None, workers=1):
    """Field of ``a`` and of the reference symbol ``M`` fed to :func:`decay_fit`."""
    phi = diag_window(g, M, chi, theta_family, theta_r)
    fld = diag_field(a, g, M, sample_spec=sample_spec, points=points, phi=phi, workers=workers)
    ref = diag_field(weight_symbol(M), g, M, sample_spec=sample_spec, points=points, phi=phi,
                     workers=workers)
    return decay_fit(fld, M, N_ladder, thresholds, ref), fld


# -- showcase ------------------------------------------------------------------

def showcase_srd(a, rho, delta, r=0.5, chi=None, sample_spec=None, points=DIAG_PATCH_POINTS,
                 N_ladder=N_LADDER, thresholds=None):
    """Decay rule for ``S^0_{rho, delta}`` with ``M = 1``.

    The cutoff radius is ``min(r0, r)``. For ``rho = delta`` the metric is
    symplectic and the rule runs with and without the cutoff; the report
    carries both verdicts and the main verdict is the cutoff-free one.

    Raises
    ------
    ValueError
        Unless ``0 <= delta <= rho <= 1`` and ``delta < 1``.
    """
    if not (0 <= delta <= rho <= 1 and delta < 1):
        raise ValueError("need 0 <= delta <= rho <= 1 and delta < 1")
    from .phase_space import constant_weight
    g = s_rho_delta(rho, delta)
    M = constant_weight()
    r_t = min(g.constants.r0, float(r))
    rep, _ = calibrated_decay(a, g, M, chi, "cutoff", sample_spec, points, N_ladder, thresholds, r_t)
    rep.indicators["theta_r"] = r_t
    if rho != delta:
        rep.indicators["with_theta"] = rep.verdict
        return rep
    free, _ = calibrated_decay(a, g, M, chi, "none", sample_spec, points, N_ladder, thresholds)
    free.indicators["with_theta"] = rep.verdict
    free.indicators["without_theta"] = free.verdict
    free.indicators["with_theta_report"] = rep.to_dict()
    free.indicators["theta_r"] = r_t
    if rep.verdict != free.verdict:
        free.caveats.append("with-cutoff and cutoff-free verdicts differ")
    return free


# -- modulation-space membership ------------------------------------------------

def modspace_membership(a, eta, p, g, chi=None, theta_family="auto", sample_spec=None,
                        points=DIAG_PATCH_POINTS, M=None, field_=None):
    """``L^p`` norm of ``|g_mid|^{-1/2 + 3/(2p)} eta(mid, D(Xi - X)) modulus``.

    For ``p < inf`` the sample spec must use the lattice layout, whose
    weights are the ``dX dXi`` measure. At ``p = inf`` with
    ``eta = u_{inf, N} / M`` the value equals the ``N`` entry of
    :func:`sup_ladder`.

    Returns
    -------
    value : float
    report : dict
    """
    from .phase_space import constant_weight
    M = constant_weight() if M is None else M
    p = float(p)
    if not p >= 1:
        raise ValueError("p must lie in [1, inf]")
    fld = diag_field(a, g, M, chi, theta_family, sample_spec, points) if field_ is None else field_
    if fld.weights is None and math.isfinite(p):
        raise ValueError("finite p needs a lattice sample spec")
    val = _membership_value(fld, eta, p, g)
    report = {"norm_kind": "membership", "p": "inf" if math.isinf(p) else p,
              "eta": getattr(eta, "tag", "custom"), "value": val, "samples": len(fld),
              "sample_spec": fld.meta.get("sample_spec")}
    return val, report


def _membership_value(fld, eta, p, g):
    f, F = g.weights(fld.mid)
    detg = 1.0 / (f * F) ** 2
    D = (fld.Xi - fld.X) / (f * F)[:, None]
    w = eta(fld.mid, D)
    if math.isinf(p):
        ex = -0.5
    else:
        ex = -0.5 + 1.5 / p
    vals = detg**ex * w * fld.modulus
    if math.isinf(p):
        return float(np.max(vals))
    return float(np.sum(vals**p * fld.weights) ** (1.0 / p))


def ladder_weight(g, N, M):
    """``u_{inf, N} / M`` expressed in the membership weight's variables.

    At ``D = D(Xi - X)``, ``|g_mid|^{1/2} (1 + g^sigma_mid(D))^N / M(mid)``
    multiplied by ``|g_mid|^{-1/2}`` gives the ladder weight; the product is
    formed in the same order as :func:`sup_ladder`.
    """
    from .modspace import UniformWeight

    def ev(X, Xi):
        return (1.0 + g.dual_eval(X, Xi)) ** N / M(X) * g.det(X) ** 0.5
    return UniformWeight(ev, M.r_slow, 2.0 * N, f"u_inf_{N}/M")


# -- classification -------------------------------------------------------------

CLASSIFY_DEFAULTS = {
    "window": {"kind": "wigner", "chi": "gaussian", "theta": "auto"},
    "ladder": list(N_LADDER),
    "thresholds": {},
    "sample_spec": {},
    "refine": 1,
    "norm_extent": 8.0,
    "norm_inner_extent": 4.0,
    "smoothness_ladder": [0, 1, 2, 3, 4, 6],
    "direct_k_max": 4,
    "equivalence": True,
}


def classify(a, g, M, config=None, workers=1):
    """Verdict record combining the modulation side and the direct side.

    Modulation side: :func:`decay_fit` on the matrix-element field and the
    growth of the ``p = inf`` modulation norm ladder between the inner and
    outer truncation windows. Direct side: growth of the direct seminorms
    over the same windows. The sides must agree; otherwise the verdict is
    ``indeterminate``.
    """
    from . import modspace as ms
    from .windows import window_from_spec

    unknown = set(config or {}) - set(CLASSIFY_DEFAULTS)
    if unknown:
        raise ValueError(f"unknown classify keys: {sorted(unknown)}")
    cfg = dict(CLASSIFY_DEFAULTS, **(config or {}))
    th = dict(DEFAULT_THRESHOLDS, **cfg["thresholds"])
    refine = int(cfg["refine"])
    win = dict(cfg["window"])
    if win.get("kind", "wigner") != "wigner":
        raise ValueError("the matrix-element field needs a wigner window")
    chi = window_from_spec(win.get("chi", "gaussian"))
    theta = win.get("theta", "auto")
    spec = sample_spec_from_dict(cfg["sample_spec"])
    rep, _ = calibrated_decay(a, g, M, chi, theta, spec, DIAG_PATCH_POINTS * refine, cfg["ladder"],
                              cfg["thresholds"], win.get("theta_r"), workers)

    ext, inner_ext = float(cfg["norm_extent"]), float(cfg["norm_inner_extent"])
    phi = diag_window(g, M, chi, theta, win.get("theta_r"))
    s_vals = list(cfg["smoothness_ladder"])
    outer, trs = ms.symbol_norm_ladder(a, M, g, s_vals, math.inf, phi, ext, ms.PATCH_POINTS * refine)
    inner, _ = ms.symbol_norm_ladder(a, M, g, s_vals, math.inf, phi,
                                     transforms=ms.restrict_transforms(trs, inner_ext))
    norm_growth = _ratio_max(outer, inner)
    mod_ok = rep.verdict == "consistent_in_class" and norm_growth <= th["growth_ratio"]
    mod_side = "indeterminate" if rep.verdict == "indeterminate" else (
        "consistent_in_class" if mod_ok else "inconsistent")

    kmax = int(cfg["direct_k_max"])
    pts = (ms.DIRECT_POINTS - 1) * refine + 1
    d_out = {k: ms.direct_symbol_seminorm(a, M, g, k, ext, pts) for k in range(kmax + 1)}
    pts_in = (ms.DIRECT_POINTS - 1) // 2 * refine + 1
    d_in = {k: ms.direct_symbol_seminorm(a, M, g, k, inner_ext, pts_in) for k in range(kmax + 1)}
    direct_growth = _ratio_max(d_out, d_in)
    direct_side = "consistent_in_class" if direct_growth <= th["growth_ratio"] else "inconsistent"

    verdict = mod_side if mod_side == direct_side else "indeterminate"
    record = {
        "schema_version": SCHEMA_VERSION,
        "verdict": verdict,
        "metric": g.preset_tag,
        "weight": getattr(M, "tag", "custom"),
        "modulation_side": {"verdict": mod_side, "decay_report": rep.to_dict(),
                            "norm_ladder_outer": outer, "norm_ladder_inner": inner,
                            "norm_growth": norm_growth},
        "direct_side": {"verdict": direct_side, "seminorms_outer": d_out, "seminorms_inner": d_in,
                        "growth": direct_growth},
        "thresholds": th,
        "refine": refine,
        "window_bounds": {"mid_extent": spec.mid_extent, "norm_extent": ext,
                          "norm_inner_extent": inner_ext},
    }
    if verdict == "indeterminate":
        record["diagnostics"] = {"disagreement": {"modulation_side": mod_side, "direct_side": direct_side}}
    if cfg["equivalence"]:
        record["window_equivalence"] = window_equivalence(a, g, M, phi, trs, ext)
    return _jsonable(record)


def _ratio_max(outer, inner):
    r = 1.0
    for k in outer:
        top, low = float(outer[k]), float(inner[k])
        if top > 0:
            r = max(r, top / low if low > 0 else math.inf)
    return r


def window_equivalence(a, g, M, phi, phi_transforms=None, extent=8.0, s=1, other=None, x_points=None):
    """Ratio of ``s``-th ``p = inf`` norms for the Wigner family and a second family.

    The second family defaults to the normalized bump of radius
    ``min(1, r0)``. Returns ``{"wigner", "bump", "ratio", "spread"}`` with
    spread the larger of ``ratio`` and ``1/ratio``.
    """
    from . import modspace as ms
    from .windows import make_bump_family

    other = make_bump_family(g, min(1.0, g.constants.r0)) if other is None else other
    xp = ms.NORM_X_POINTS if x_points is None else x_points
    v1, _ = ms.symbol_norm_ladder(a, M, g, [s], math.inf, phi, extent, transforms=phi_transforms,
                                  x_points=xp)
    v2, _ = ms.symbol_norm_ladder(a, M, g, [s], math.inf, other, extent, x_points=xp)
    a1, a2 = float(v1[s]), float(v2[s])
    if a1 == 0 and a2 == 0:
        return {"wigner": 0.0, "bump": 0.0, "ratio": 1.0, "spread": 1.0}
    ratio = a1 / a2 if a2 > 0 else math.inf
    spread = max(ratio, 1.0 / ratio) if ratio > 0 else math.inf
    return {"wigner": a1, "bump": a2, "ratio": ratio, "spread": spread}
