"""
Confined window families ``X -> phi_X`` on phase space.

A family is a vectorized two-argument callable ``phi(X, Y)``; ``X`` and
``Y`` are coordinate arrays with last axis ``2n`` that broadcast against
each other. Three kinds are provided:

``bump``
    ``theta0(r^-2 g_X(X - Y)) / I(Y)``, normalized so that the family
    integral is one.
``wigner``
    ``conj(theta_X(Y)) W(chi, chi)(Q~_X^{1/2} (Y - X))``.
``translate``
    ``phi(Y - X)`` for the euclidean metric.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import RectBivariateSpline, RegularGridInterpolator
from scipy.special import gamma

from .errors import DegenerateWindowError
from .grids import Axis, PhaseGrid, SampledFunction1D, SampledPhaseFunction
from .phase_space import HormanderMetric, SampleSpec, as_coords

INFINITE_ORDER = 2**31 - 1

# Gaussian-type windows are truncated where W(chi, chi) falls below
# exp(-2 pi 3^2) ~ 1e-25 of its peak, i.e. at three g_X-units.
GAUSSIAN_UNITS = 3.0


# -- cutoff profiles ---------------------------------------------------------

@dataclass(frozen=True)
class CutoffProfile:
    """Non-increasing profile equal to 1 on ``[0, 1/2]`` and 0 on ``[1, inf)``.

    ``smoothness_order`` is the number of continuous derivatives;
    :data:`INFINITE_ORDER` marks a ``C^infinity`` profile.
    """

    evaluator: Callable
    smoothness_order: int
    name: str

    def __call__(self, s):
        return self.evaluator(np.asarray(s, dtype=float))


def _psi(t):
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _exp_bump(s):
    s = np.asarray(s, dtype=float)
    a = _psi(1.0 - s)
    b = _psi(s - 0.5)
    den = a + b
    with np.errstate(invalid="ignore", divide="ignore"):
        v = np.where(den > 0, a / np.where(den > 0, den, 1.0), 0.0)
    return np.where(s <= 0.5, 1.0, np.where(s >= 1.0, 0.0, v))


def _poly_spline(s):
    s = np.asarray(s, dtype=float)
    t = np.clip(2.0 * s - 1.0, 0.0, 1.0)
    smooth = t**4 * (35.0 - 84.0 * t + 70.0 * t**2 - 20.0 * t**3)
    return 1.0 - smooth


def make_cutoff(transition="exp_bump"):
    """Cutoff profile with an ``exp_bump`` (C-infinity) or ``poly_spline`` (C^3) transition."""
    if transition == "exp_bump":
        return CutoffProfile(_exp_bump, INFINITE_ORDER, "exp_bump")
    if transition == "poly_spline":
        return CutoffProfile(_poly_spline, 3, "poly_spline")
    raise ValueError(f"unknown cutoff transition {transition!r}")


def theta_cutoff(g, r_tilde, X, Y, cutoff=None):
    """``theta_X(Y) = theta0(r~^-2 g_X(X - Y))``."""
    cutoff = make_cutoff() if cutoff is None else cutoff
    X = as_coords(X)
    Y = as_coords(Y)
    return cutoff(g.eval(X, X - Y) / r_tilde**2)


# -- windows on V -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Window1D:
    """Window ``chi`` on the line: closed-form Gaussian ``exp(-pi y^2)`` or sampled.

    Parameters
    ----------
    kind : {"analytic_gaussian", "sampled"}
    samples : SampledFunction1D, optional
        Required for the sampled kind.
    """

    kind: str = "analytic_gaussian"
    samples: SampledFunction1D | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in ("analytic_gaussian", "sampled"):
            raise ValueError("window kind must be analytic_gaussian or sampled")
        if self.kind == "sampled" and self.samples is None:
            raise ValueError("sampled window needs samples")

    @classmethod
    def gaussian(cls):
        return cls("analytic_gaussian")

    @classmethod
    def sampled(cls, samples):
        return cls("sampled", samples)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "analytic_gaussian":
            return np.exp(-np.pi * y * y).astype(complex)
        s = self.samples
        re = np.interp(y, s.nodes, s.values.real, left=0.0, right=0.0)
        im = np.interp(y, s.nodes, s.values.imag, left=0.0, right=0.0)
        return re + 1j * im

    def on_axis(self, axis):
        """Samples of the window on a 1-D grid (band-limited resampling for sampled windows)."""
        if self.kind == "analytic_gaussian":
            return SampledFunction1D(axis, self(axis.nodes))
        if self.samples.axis == axis:
            return self.samples
        from .weyl import resample
        return resample(self.samples, axis)

    def l2_norm_sq(self):
        if self.kind == "analytic_gaussian":
            return 2.0**-0.5
        return self.samples.l2_norm() ** 2

    def wigner_at_zero(self):
        """``W(chi, chi)(0) = 2 int chi(y) conj(chi(-y)) dy``."""
        if self.kind == "analytic_gaussian":
            return complex(2.0**0.5)
        s = self.samples
        flipped = self(-s.nodes)
        return complex(2.0 * np.sum(s.values * np.conj(flipped)) * s.axis.spacing)

    def wigner(self, P):
        """``W(chi, chi)`` at phase points ``P`` of shape ``(..., 2)``."""
        P = np.asarray(P, dtype=float)
        if self.kind == "analytic_gaussian":
            return (2.0**0.5) * np.exp(-2.0 * np.pi * np.sum(P * P, axis=-1)).astype(complex)
        table = self._wigner_table()
        x, xi = P[..., 0], P[..., 1]
        gx, gxi = table["x"], table["xi"]
        inside = (x >= gx[0]) & (x <= gx[-1]) & (xi >= gxi[0]) & (xi <= gxi[-1])
        xc = np.clip(x, gx[0], gx[-1])
        xic = np.clip(xi, gxi[0], gxi[-1])
        v = table["re"].ev(xc, xic) + 1j * table["im"].ev(xc, xic)
        return np.where(inside, v, 0.0)

    def _wigner_table(self):
        if "w" not in self._cache:
            from .weyl import wigner
            s = self.samples
            w = wigner(s, s)
            gx = w.grid.nodes(0)
            gxi = w.grid.nodes(1)
            self._cache["w"] = {
                "x": gx, "xi": gxi,
                "re": RectBivariateSpline(gx, gxi, w.values.real, kx=3, ky=3),
                "im": RectBivariateSpline(gx, gxi, w.values.imag, kx=3, ky=3),
            }
        return self._cache["w"]


def window_from_spec(spec):
    if spec in (None, "gaussian", "analytic_gaussian"):
        return Window1D.gaussian()
    raise ValueError(f"unknown window {spec!r}")


# -- families -----------------------------------------------------------------

def local_nodes(g, Y, half_units, m, lo=None, hi=None):
    """Midpoint quadrature nodes around ``Y`` in ``g_Y``-normalized coordinates.

    The box is ``[lo, hi]`` per axis in normalized units (default
    ``[-half_units, half_units]``).

    Returns
    -------
    X : ndarray, shape (m^{2n}, 2n)
    w : ndarray, shape (m^{2n},)
        Weights for ``dv_g(X) = |g_X|^{1/2} dX``.
    """
    Y = as_coords(Y)
    d = 2 * g.n
    lo = np.full(d, -half_units) if lo is None else np.asarray(lo, float)
    hi = np.full(d, half_units) if hi is None else np.asarray(hi, float)
    step = (hi - lo) / m
    axes = [lo[i] + (np.arange(m) + 0.5) * step[i] for i in range(d)]
    U = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
    root = g.root(Y)
    X = Y + U / root
    w = g.volume_density(X) * (np.prod(step) / np.prod(root))
    return X, w


def support_box(func, g, Y, half_units, m=24, rel=1e-18):
    """Tight normalized box containing the support of ``X -> func(X)`` near ``Y``.

    A coarse scan of ``[-H, H]^{2n}`` (``H = half_units``, enlarged while the
    support touches the scan boundary) locates the cells where
    ``|func| > rel * max|func|``; the box is widened by 1.5 coarse cells.
    """
    d = 2 * g.n
    Yc = as_coords(Y)
    H = half_units
    for _ in range(6):
        X, _ = local_nodes(g, Yc, H, m)
        v = np.abs(func(X))
        peak = v.max()
        if peak == 0:
            return np.full(d, -H), np.full(d, H)
        cell = 2.0 * H / m
        U = (X - Yc) * g.root(Yc)
        sel = U[v > rel * peak]
        lo = sel.min(axis=0) - 1.5 * cell
        hi = sel.max(axis=0) + 1.5 * cell
        if np.all(lo > -H) and np.all(hi < H):
            return lo, hi
        H *= 1.5
    return np.maximum(lo, -H), np.minimum(hi, H)


def local_quadrature(func, g, Y, half_units, m):
    """``int func(X) dv_g(X)`` over a tight box around ``Y`` (see :func:`support_box`)."""
    lo, hi = support_box(func, g, Y, half_units)
    X, w = local_nodes(g, Y, half_units, m, lo, hi)
    return np.sum(func(X) * w)


def _default_m(n):
    return 96 if n == 1 else 16


class ConfinedFamily:
    """Base class of window families.

    Attributes
    ----------
    kind : str
    metric : HormanderMetric
    r : float
        Confinement radius.
    support_units : float
        ``phi_X`` is zero (bump) or negligible (Gaussian tails) outside
        ``g_X(Y - X) <= support_units^2``.
    scale : complex
        Global multiplier, so that homogeneity is exact.
    metadata : dict
    """

    kind = "abstract"

    def __init__(self, metric, r, support_units, metadata=None):
        self.metric = metric
        self.r = float(r)
        self.support_units = float(support_units)
        self.scale = 1.0 + 0.0j
        self.metadata = dict(metadata or {})

    def __call__(self, X, Y):
        X = as_coords(X)
        Y = as_coords(Y)
        return self.scale * self._eval(X, Y)

    def _eval(self, X, Y):
        raise NotImplementedError

    def scaled(self, c):
        other = copy.copy(self)
        other.scale = self.scale * c
        return other

    def extent(self, X):
        """Per-axis half widths of the region where ``phi_X`` matters, shape ``(..., 2n)``."""
        return self.support_units / self.metric.root(as_coords(X))

    def box_units(self):
        """Half width, in ``g_Y`` units, of a box containing every ``X`` with ``phi_X(Y) != 0``."""
        return self.support_units * math.sqrt(self.metric.constants.C0) * 1.05

    def __repr__(self):
        return f"{type(self).__name__}(kind={self.kind!r}, metric={self.metric.preset_tag!r}, r={self.r})"


class BumpFamily(ConfinedFamily):
    """Normalized bump family ``theta0(r^-2 g_X(X - Y)) / I~(Y)``.

    ``I~`` is the family integral of the unnormalized bumps. It is constant
    for the euclidean metric and is otherwise tabulated lazily on a lattice
    in the coordinates the metric depends on, then interpolated cubically.
    """

    kind = "bump"
    TABLE_STEP = 0.05

    def __init__(self, g, r, cutoff=None, m=None):
        if not 0 < r <= g.constants.r0:
            raise ValueError(f"bump radius {r} exceeds the slow-variation radius r0={g.constants.r0}")
        cutoff = make_cutoff() if cutoff is None else cutoff
        super().__init__(g, r, r, {"cutoff": cutoff.name, "r": r})
        self.cutoff = cutoff
        self.m = _default_m(g.n) if m is None else int(m)
        self._table = None
        self._const = None

    def raw(self, X, Y):
        X = as_coords(X)
        Y = as_coords(Y)
        return self.cutoff(self.metric.eval(X, X - Y) / self.r**2)

    def _eval(self, X, Y):
        return self.raw(X, Y) / self.normalizer(Y)

    def raw_integral(self, Y, m=None):
        """``int theta0(r^-2 g_X(X - Y)) dv_g(X)`` by local quadrature at one point."""
        m = self.m if m is None else m
        return float(local_quadrature(lambda X: self.raw(X, Y), self.metric, Y, self.box_units(), m))

    def normalizer(self, Y):
        g = self.metric
        Y = as_coords(Y)
        if g.depends == "none":
            if self._const is None:
                n = g.n
                radial, _ = quad(lambda s: s ** (n - 1) * float(self.cutoff(s)), 0.0, 1.0,
                                 epsabs=1e-14, epsrel=1e-13, points=[0.5])
                self._const = np.pi**n / gamma(n) * radial * self.r ** (2 * n) * float(g.volume_density(np.zeros(2 * n)))
            return np.full(Y.shape[:-1], self._const)
        idx = {"x": slice(0, g.n), "xi": slice(g.n, 2 * g.n), "both": slice(0, 2 * g.n)}[g.depends]
        red = Y[..., idx]
        self._ensure_table(red)
        pts = red.reshape(-1, red.shape[-1])
        return self._table["interp"](pts).reshape(Y.shape[:-1])

    def _ensure_table(self, red):
        step = self.TABLE_STEP if red.shape[-1] == 1 else 5 * self.TABLE_STEP
        lo = np.floor(np.min(red.reshape(-1, red.shape[-1]), axis=0) / step) * step - 4 * step
        hi = np.ceil(np.max(red.reshape(-1, red.shape[-1]), axis=0) / step) * step + 4 * step
        t = self._table
        if t is not None and np.all(lo >= t["lo"]) and np.all(hi <= t["hi"]):
            return
        if t is not None:
            lo = np.minimum(lo, t["lo"])
            hi = np.maximum(hi, t["hi"])
        g = self.metric
        axes = [np.arange(int(round((b - a) / step)) + 1) * step + a for a, b in zip(lo, hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(axes))
        vals = np.empty(mesh.shape[0])
        for k, p in enumerate(mesh):
            Yp = np.zeros(2 * g.n)
            if g.depends == "x":
                Yp[: g.n] = p
            elif g.depends == "xi":
                Yp[g.n:] = p
            else:
                Yp[:] = p
            vals[k] = self.raw_integral(Yp)
        vals = vals.reshape([a.size for a in axes])
        interp = RegularGridInterpolator(axes, vals, method="cubic")
        self._table = {"lo": lo, "hi": hi, "interp": interp}


class WignerFamily(ConfinedFamily):
    """``phi_X(Y) = conj(theta_X(Y)) W(chi, chi)(Q~_X^{1/2}(Y - X))``.

    Parameters
    ----------
    g : HormanderMetric
    chi : Window1D
    theta : {"auto", "cutoff", "none"}
        ``auto`` drops the cutoff for symplectic metrics.
    theta_r : float, optional
        Cutoff radius; defaults to ``min(r0, r_slow)``.
    r_slow : float
        Slow-variation radius of the weight the family is paired with.
    """

    kind = "wigner"

    def __init__(self, g, chi=None, theta="auto", theta_r=None, r_slow=math.inf, cutoff=None):
        if g.n != 1:
            raise ValueError("wigner families are implemented for n = 1")
        chi = Window1D.gaussian() if chi is None else chi
        w0 = chi.wigner_at_zero()
        if abs(w0) < 1e-12:
            raise DegenerateWindowError("W(chi, chi)(0) vanishes; window is degenerate")
        r_t = min(g.constants.r0, r_slow) if theta_r is None else float(theta_r)
        if theta == "auto":
            use_theta = not g.is_symplectic()
        elif theta in ("cutoff", True):
            use_theta = True
        elif theta in ("none", None, False):
            use_theta = False
        else:
            raise ValueError("theta must be auto, cutoff or none")
        units = min(GAUSSIAN_UNITS, r_t) if use_theta else GAUSSIAN_UNITS
        super().__init__(g, r_t, units, {"chi": chi.kind, "theta": use_theta, "theta_r": r_t})
        self.chi = chi
        self.use_theta = use_theta
        self.cutoff = make_cutoff() if cutoff is None else cutoff

    def theta(self, X, Y):
        if not self.use_theta:
            return np.ones(np.broadcast_shapes(X.shape, Y.shape)[:-1])
        return theta_cutoff(self.metric, self.r, X, Y, self.cutoff)

    def _eval(self, X, Y):
        arg = self.metric.root(X) * (Y - X)
        return np.conj(self.theta(X, Y)) * self.chi.wigner(arg)


class TranslateFamily(ConfinedFamily):
    """``phi_X(Y) = phi(Y - X)`` on the euclidean metric.

    ``phi`` is a vectorized callable on ``(..., 2n)`` arrays or a
    :class:`SampledPhaseFunction` (cubic interpolation, zero outside).
    """

    kind = "translate"

    def __init__(self, g, phi, extent=None, r=1.0):
        if g.preset_tag != "euclidean":
            raise ValueError("translate families need the euclidean metric")
        if isinstance(phi, SampledPhaseFunction):
            grid = phi.grid
            axes = [grid.nodes(i) for i in range(2 * grid.n)]
            re = RegularGridInterpolator(axes, phi.values.real, method="cubic", bounds_error=False, fill_value=0.0)
            im = RegularGridInterpolator(axes, phi.values.imag, method="cubic", bounds_error=False, fill_value=0.0)
            func = lambda P: re(P.reshape(-1, P.shape[-1])).reshape(P.shape[:-1]) + 1j * im(
                P.reshape(-1, P.shape[-1])).reshape(P.shape[:-1])
            if extent is None:
                extent = float(np.max(np.abs(grid.center) + grid.half_width))
            self.sampled = phi
        else:
            func = phi
            self.sampled = None
        extent = 6.0 if extent is None else float(extent)
        super().__init__(g, r, extent, {"extent": extent})
        self.func = func

    def _eval(self, X, Y):
        return np.asarray(self.func(Y - X), dtype=complex)


def make_bump_family(g, r, theta0=None, m=None):
    """Normalized bump family of radius ``r`` (``0 < r <= r0``)."""
    return BumpFamily(g, r, theta0, m)


def make_translate_family(g, phi, extent=None):
    return TranslateFamily(g, phi, extent)


def make_wigner_family(g, L_tag="identity", theta_family="auto", chi=None, theta_r=None, r_slow=math.inf):
    """Wigner-based family; ``L_tag`` must select the standard inner product."""
    if L_tag not in ("identity", "standard", None):
        raise ValueError("only the standard inner product (identity L) is supported")
    return WignerFamily(g, chi, theta_family, theta_r, r_slow)


def family_from_spec(g, spec):
    """Build a family from a config mapping such as ``{"kind": "bump", "r": 0.5}``."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "bump":
        r = float(spec.pop("r", min(0.5, g.constants.r0)))
        cutoff = make_cutoff(spec.pop("cutoff", "exp_bump"))
        _reject(spec)
        return BumpFamily(g, r, cutoff)
    if kind == "wigner":
        chi = window_from_spec(spec.pop("chi", "gaussian"))
        theta = spec.pop("theta", "auto")
        theta_r = spec.pop("theta_r", None)
        _reject(spec)
        return WignerFamily(g, chi, theta, theta_r)
    if kind == "translate":
        width = float(spec.pop("width", 1.0))
        _reject(spec)
        n = g.n
        return TranslateFamily(g, lambda P: np.exp(-np.pi * np.sum(P * P, -1) / width**2), extent=6.0 * width)
    raise ValueError(f"unknown family kind {kind!r}")


def _reject(rest):
    if rest:
        raise ValueError(f"unknown window keys: {sorted(rest)}")


# -- seminorms and integrals ---------------------------------------------------

_STENCILS = {
    1: np.array([-0.5, 0.0, 0.5]),
    2: np.array([1.0, -2.0, 1.0]),
    3: np.array([-0.5, 1.0, 0.0, -1.0, 0.5]),
    4: np.array([1.0, -4.0, 6.0, -4.0, 1.0]),
}


def fd_step(order):
    """Finite-difference step (in metric units) for a derivative of the given order."""
    return 1e-3 if order <= 2 else 2e-2


def directional_derivative(func, P, T, order, h=None):
    """Central-difference ``d^order/dt^order func(P + t T)`` at ``t = 0``.

    ``func`` maps ``(..., 2n)`` arrays to values; ``P`` and ``T`` broadcast.
    """
    if order == 0:
        return func(P)
    h = fd_step(order) if h is None else h
    c = _STENCILS[order]
    half = (len(c) - 1) // 2
    acc = 0.0
    for j, cj in enumerate(c):
        if cj == 0.0:
            continue
        acc = acc + cj * func(P + (j - half) * h * T)
    return acc / h**order


def unit_directions(dim, count=8, seed=0x5EED):
    """Coordinate directions plus ``count`` fixed-seed random unit vectors."""
    rng = np.random.default_rng(seed)
    rand = rng.normal(size=(count, dim))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    return np.concatenate([np.eye(dim), rand])


def _as_points(Y, n):
    if isinstance(Y, PhaseGrid):
        return Y.points()
    return as_coords(Y).reshape(-1, 2 * n)


def confinement_seminorm(phi, k, X_samples, Y_grid, n_random=8):
    """Sampled confinement seminorm of order ``k``.

    ``max_X max_{l <= k} max_{Y, T} |phi_X^{(l)}(Y; T, .., T)| (1 + g^sigma_X(Y - U_{X,r}))^{k/2}``
    over ``g_X``-unit directions ``T`` (coordinate axes plus ``n_random``
    fixed random directions). Repeated directions under-approximate the sup
    over independent ``T_1..T_l``.
    """
    if not 0 <= k <= 4:
        raise ValueError("confinement seminorm implemented for 0 <= k <= 4")
    g = phi.metric
    n = g.n
    Xs = _as_points(X_samples, n)
    Ys = _as_points(Y_grid, n)
    dirs = unit_directions(2 * n, n_random)
    best = 0.0
    for X in Xs:
        wt = (1.0 + g.ball_distance_many(X, phi.r, Ys)) ** (k / 2.0)
        f = lambda P: phi(X, P)
        best = max(best, float(np.max(np.abs(f(Ys)) * wt)))
        root = g.root(X)
        for l in range(1, k + 1):
            for d in dirs:
                T = d / root
                D = directional_derivative(f, Ys, T, l)
                best = max(best, float(np.max(np.abs(D) * wt)))
    return best


def family_integral(phi, Y, m=None):
    """``I_phi(Y) = int phi_X(Y) dv_g(X)`` by local quadrature, one value per point."""
    g = phi.metric
    Ys = as_coords(Y)
    flat = Ys.reshape(-1, 2 * g.n)
    m = _default_m(g.n) if m is None else m
    out = np.empty(flat.shape[0], dtype=complex)
    for i, y in enumerate(flat):
        out[i] = local_quadrature(lambda X: phi(X, y), g, y, phi.box_units(), m)
    return out.reshape(Ys.shape[:-1])


def nondegeneracy_lower_bound(phi, Y_samples, X_grid=None, m=None):
    """``min_Y int |phi_X(Y)|^2 dv_g(X)`` over the sampled ``Y``.

    With ``X_grid`` the integral is a Riemann sum over that grid; otherwise a
    local quadrature around each ``Y`` is used.
    """
    g = phi.metric
    Ys = _as_points(Y_samples, g.n)
    vals = []
    if X_grid is not None:
        Xp = _as_points(X_grid, g.n)
        cell = X_grid.cell if isinstance(X_grid, PhaseGrid) else 1.0
        w = g.volume_density(Xp) * cell
        for y in Ys:
            vals.append(float(np.sum(np.abs(phi(Xp, y)) ** 2 * w)))
    else:
        m = _default_m(g.n) if m is None else m
        for y in Ys:
            vals.append(float(np.real(local_quadrature(lambda X: np.abs(phi(X, y)) ** 2, g, y, phi.box_units(), m))))
    return min(vals)


class MollifiedFamily(ConfinedFamily):
    """``psi~_X(Y) = int psi_Z(Y) phi_Z(X) dv_g(Z)`` with a bump family ``phi``."""

    kind = "bump"

    def __init__(self, psi, phi, m=None):
        g = psi.metric
        C0 = g.constants.C0
        r_new = math.sqrt(C0) * (psi.r + phi.r)
        super().__init__(g, r_new, r_new, {"mollified": True, "psi": repr(psi), "phi": repr(phi)})
        self.psi = psi
        self.phi = phi
        self.m = (32 if g.n == 1 else 10) if m is None else int(m)

    def _eval(self, X, Y):
        X, Y = np.broadcast_arrays(X, Y)
        shape = X.shape[:-1]
        Xf = X.reshape(-1, X.shape[-1])
        Yf = Y.reshape(-1, Y.shape[-1])
        out = np.empty(Xf.shape[0], dtype=complex)
        g = self.metric
        for i in range(Xf.shape[0]):
            Z, w = local_nodes(g, Xf[i], self.phi.box_units(), self.m)
            out[i] = np.sum(self.psi(Z, Yf[i]) * self.phi(Z, Xf[i]) * w)
        return out.reshape(shape)


def mollify_family(psi, phi, m=None):
    """Mollify ``psi`` by the compactly supported family ``phi``.

    Raises
    ------
    ValueError
        If ``phi`` is not a bump family, the metrics differ, or the mollified
        radius ``sqrt(C0) (r_psi + r_phi)`` exceeds ``r0``.
    """
    if phi.kind != "bump":
        raise ValueError("mollifier must be a compactly supported (bump) family")
    if psi.metric is not phi.metric:
        raise ValueError("families must share one metric")
    c = psi.metric.constants
    r_new = math.sqrt(c.C0) * (psi.r + phi.r)
    if r_new > c.r0:
        raise ValueError(f"mollified radius {r_new:.4g} exceeds r0 = {c.r0}")
    return MollifiedFamily(psi, phi, m)
