"""
Geometric short-time Fourier transform ``V_phi f(X, Xi) = F_sigma(f conj(phi_X))(Xi)``.

X-integrals use the measure ``dv_g = |g|^{1/2} dX``. Sample sets of ``X``
carry quadrature weights ``w_X``; for a uniform ``X`` grid these are
``|g_X|^{1/2}`` times the cell volume.

Outside its grid a sampled ``f`` is treated as zero, so window supports may
overhang the grid boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError
from .grids import (PhaseGrid, SampledPhaseFunction, sft_points, sub_grid,
                    symplectic_fourier, symplectic_fourier_array)
from .phase_space import as_coords
from .windows import BumpFamily, family_integral, local_quadrature, make_bump_family, make_cutoff


@dataclass(frozen=True, eq=False)
class GstftField:
    """Values ``V_phi f(X_i, Xi)`` on a Xi grid for sampled ``X_i``.

    Attributes
    ----------
    X_samples : ndarray, shape (m, 2n)
    Xi_grid : PhaseGrid
    values : ndarray, shape (m,) + Xi_grid.shape
    X_weights : ndarray, shape (m,), optional
        ``dv_g`` quadrature weights.
    """

    X_samples: np.ndarray
    Xi_grid: PhaseGrid
    values: np.ndarray
    X_weights: np.ndarray | None = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X_samples, dtype=float))
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (X.shape[0],) + self.Xi_grid.shape:
            raise GridError("field values do not match X samples and Xi grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "X_samples", X)
        object.__setattr__(self, "values", v)
        if self.X_weights is not None:
            w = np.asarray(self.X_weights, dtype=float)
            if w.shape != (X.shape[0],):
                raise GridError("one weight per X sample is required")
            object.__setattr__(self, "X_weights", w)

    def __mul__(self, c):
        return GstftField(self.X_samples, self.Xi_grid, self.values * c, self.X_weights)

    __rmul__ = __mul__

    def __add__(self, other):
        return GstftField(self.X_samples, self.Xi_grid, self.values + other.values, self.X_weights)

    def inner(self, other):
        """``(G, H)`` in ``L^2(W x W, dv_g dXi)``."""
        if self.X_weights is None:
            raise GridError("inner product needs X quadrature weights")
        s = np.sum(self.values * np.conj(other.values), axis=tuple(range(1, self.values.ndim)))
        return complex(np.sum(s * self.X_weights) * self.Xi_grid.cell)


def X_sample_grid(metric, half_width=7.5, points=33, center=None):
    """Uniform ``X`` lattice with ``dv_g`` weights.

    Returns
    -------
    X : ndarray, shape (points^{2n}, 2n)
    w : ndarray
    """
    n = metric.n
    c = np.zeros(2 * n) if center is None else np.asarray(center, float)
    axes = [np.linspace(ci - half_width, ci + half_width, points) for ci in c]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 2 * n)
    cell = np.prod([a[1] - a[0] for a in axes])
    return X, metric.volume_density(X) * cell


def _check_coverage(grid, X):
    inside = grid.contains(X)
    if not np.all(inside):
        bad = np.atleast_2d(X)[~np.atleast_1d(inside)][0]
        raise GridError(f"X sample {bad.tolist()} lies outside the function grid")


def _prepare_X(phi, X_samples, X_weights):
    if isinstance(X_samples, PhaseGrid):
        X = X_samples.points()
        w = phi.metric.volume_density(X) * X_samples.cell if X_weights is None else X_weights
        return X, w
    X = np.atleast_2d(as_coords(X_samples))
    return X, (None if X_weights is None else np.asarray(X_weights, float))


ESSENTIAL_REL = 1e-16


def essential_box(f, rel=ESSENTIAL_REL):
    """Coordinate box outside which ``|f| <= rel * max|f|``."""
    v = np.abs(f.values)
    peak = v.max()
    grid = f.grid
    if peak == 0:
        return grid.center, grid.center
    mask = v > rel * peak
    lo, hi = [], []
    for i in range(2 * grid.n):
        other = tuple(j for j in range(2 * grid.n) if j != i)
        hit = np.nonzero(np.any(mask, axis=other))[0]
        nodes = grid.nodes(i)
        lo.append(nodes[hit[0]])
        hi.append(nodes[hit[-1]])
    return np.array(lo), np.array(hi)


def _local_slices(f, families, X, box=None):
    """Yield windowed transforms on the sub-grid of each window support.

    The support box of the widest family is intersected with ``box`` (the
    essential support of ``f`` by default); X whose support misses it are
    skipped. Yields ``(i, [transform per family], Xi_grid, sub_grid, index)``.
    """
    grid = f.grid
    lo_f, hi_f = essential_box(f) if box is None else box
    for i, x in enumerate(X):
        ext = np.max([fam.extent(x) for fam in families], axis=0)
        lo = np.maximum(x - ext, lo_f)
        hi = np.minimum(x + ext, hi_f)
        if np.any(lo > hi):
            continue
        sub, idx = sub_grid(grid, lo, hi)
        P = sub.mesh()
        outs = []
        for fam in families:
            vals, xi_grid = symplectic_fourier_array(f.values[idx] * np.conj(fam(x, P)), sub)
            outs.append(vals)
        yield i, outs, xi_grid, sub, idx


def gstft(f, phi, X_samples, Xi_grid=None, X_weights=None):
    """``V_phi f`` at sampled ``X`` on a Xi grid.

    Parameters
    ----------
    f : SampledPhaseFunction
    phi : ConfinedFamily
    X_samples : array_like of shape (m, 2n) or PhaseGrid
    Xi_grid : PhaseGrid, optional
        Defaults to the Fourier dual of ``f.grid``; other grids are reached
        by direct trigonometric sums.
    X_weights : array_like, optional

    Raises
    ------
    GridError
        If some X lies outside the grid of ``f``.
    """
    X, w = _prepare_X(phi, X_samples, X_weights)
    _check_coverage(f.grid, X)
    Xi_grid = f.grid.fourier_dual() if Xi_grid is None else Xi_grid
    out = np.empty((X.shape[0],) + Xi_grid.shape, dtype=complex)
    for i, x in enumerate(X):
        prod = f.values * np.conj(phi(x, f.grid.mesh()))
        out[i], _ = symplectic_fourier_array(prod, f.grid, Xi_grid)
    return GstftField(X, Xi_grid, out, w)


def gstft_local(a, phi, X, Xi_points, points=256):
    """``V_phi a(X, Xi)`` for a callable ``a`` on a local grid around ``X``.

    The local grid covers the support box of ``phi_X``.
    """
    x = as_coords(X)
    ext = phi.extent(x)
    grid = PhaseGrid.from_arrays(x, ext, points)
    P = grid.mesh()
    n = phi.metric.n
    b = np.asarray(a(*[P[..., i] for i in range(2 * n)]) if n > 1 else a(P[..., 0], P[..., 1]),
                   dtype=complex) * np.conj(phi(x, P))
    return sft_points(b, grid, Xi_points, sign=-1)


def gstft_adjoint(G, phi, out_grid):
    """``V*_phi G(Y) = sum_X w_X phi_X(Y) F_sigma(G(X, .))(Y)``.

    Raises
    ------
    GridError
        If ``G`` has no X weights.
    """
    if G.X_weights is None:
        raise GridError("adjoint needs dv_g weights on the X samples")
    out = np.zeros(out_grid.shape, dtype=complex)
    Y = out_grid.mesh()
    for i, x in enumerate(G.X_samples):
        back, _ = symplectic_fourier_array(G.values[i], G.Xi_grid, out_grid)
        out += G.X_weights[i] * phi(x, Y) * back
    return SampledPhaseFunction(out_grid, out)


def product_integral(phi, psi, Y, m=None):
    """``I_{phi conj(psi)}(Y) = int phi_X(Y) conj(psi_X(Y)) dv_g(X)`` at grid points.

    Values are computed once per distinct coordinate the metric depends on
    and broadcast, so a full grid costs one quadrature per distinct key.
    """
    g = phi.metric
    Y = as_coords(Y)
    flat = Y.reshape(-1, 2 * g.n)
    idx = {"none": slice(0, 0), "x": slice(0, g.n), "xi": slice(g.n, 2 * g.n), "both": slice(0, 2 * g.n)}[g.depends]
    m = (96 if g.n == 1 else 16) if m is None else m
    keys, inverse = np.unique(np.round(flat[:, idx], 12), axis=0, return_inverse=True)
    half = max(phi.box_units(), psi.box_units())
    vals = np.empty(keys.shape[0], dtype=complex)
    for k, key in enumerate(keys):
        y = np.zeros(2 * g.n)
        y[idx] = key
        vals[k] = local_quadrature(lambda X: phi(X, y) * np.conj(psi(X, y)), g, y, half, m)
    return vals[inverse.ravel()].reshape(Y.shape[:-1])


def reconstruct(f, phi, psi, X_samples, X_weights=None, I=None):
    """``V*_phi V_psi f`` against ``I_{phi conj(psi)} f``.

    Each X slice is transformed on the smallest power-of-two sub-grid holding
    the window support and the essential support of ``f`` (values above
    1e-16 of the peak); forward and inverse transforms are exact inverses
    there, so the residual measures the X quadrature alone.

    Returns
    -------
    out : SampledPhaseFunction
    residual : float
        Relative L^2 difference from ``I f``.
    """
    X, w = _prepare_X(psi, X_samples, X_weights)
    if w is None:
        raise GridError("reconstruct needs dv_g weights on the X samples")
    _check_coverage(f.grid, X)
    acc = np.zeros(f.grid.shape, dtype=complex)
    for i, (vals,), xi_grid, sub, idx in _local_slices(f, [psi], X):
        back, _ = symplectic_fourier_array(vals, xi_grid, sub)
        acc[idx] += w[i] * phi(X[i], sub.mesh()) * back
    if I is None:
        I = product_integral(phi, psi, f.grid.mesh())
    ref = I * f.values
    den = np.sqrt(np.sum(np.abs(ref) ** 2))
    residual = 0.0 if den == 0 else float(np.sqrt(np.sum(np.abs(acc - ref) ** 2)) / den)
    return SampledPhaseFunction(f.grid, acc), residual


def orthogonality_check(phi, psi, f1, f2, X_samples, X_weights=None, I=None):
    """Both sides of ``(V_phi f1, V_psi f2) = (f1, I_{phi conj(psi)} f2)``.

    Returns
    -------
    lhs, rhs : complex
    """
    if not f1.grid.same_as(f2.grid):
        raise GridError("f1 and f2 must share a grid")
    X, w = _prepare_X(phi, X_samples, X_weights)
    if w is None:
        raise GridError("orthogonality needs dv_g weights on the X samples")
    _check_coverage(f1.grid, X)
    grid = f1.grid
    lo1, hi1 = essential_box(f1)
    lo2, hi2 = essential_box(f2)
    box = (np.maximum(lo1, lo2), np.minimum(hi1, hi2))
    lhs = 0.0 + 0.0j
    same = f1 is f2 and phi is psi
    fams = [phi] if same else [phi, psi]
    for i, outs, xg, sub, idx in _local_slices(f1, fams, X, box):
        v1 = outs[0]
        if same:
            v2 = v1
        else:
            P = sub.mesh()
            v2, _ = symplectic_fourier_array(f2.values[idx] * np.conj(psi(X[i], P)), sub)
        lhs += w[i] * np.sum(v1 * np.conj(v2)) * xg.cell
    if I is None:
        I = product_integral(phi, psi, grid.mesh())
    rhs = complex(np.sum(f1.values * np.conj(I * f2.values)) * grid.cell)
    return complex(lhs), rhs


def twisted_projection(G, phi, psi, eta, p, q, metric=None):
    """``V_psi V*_phi G`` on the X samples and Xi grid of ``G``, plus the mixed-norm ratio.

    The intermediate function lives on the Fourier dual of ``G.Xi_grid``.

    Returns
    -------
    field : GstftField
    ratio : float
        ``||V_psi V*_phi G|| / ||G||`` in ``L~^{p,q}_eta``; 0 when ``G = 0``.
    """
    from .modspace import MixedNormSpec, mixed_norm

    g = phi.metric if metric is None else metric
    ygrid = G.Xi_grid.fourier_dual(center=_grid_center_guess(G))
    h = gstft_adjoint(G, phi, ygrid)
    out = gstft(h, psi, G.X_samples, G.Xi_grid, G.X_weights)
    spec = MixedNormSpec(p, q)
    den = mixed_norm(G, eta, spec, g)
    if den == 0:
        return out, 0.0
    return out, float(mixed_norm(out, eta, spec, g) / den)


def _grid_center_guess(G):
    return np.zeros(G.Xi_grid.n * 2)


# -- default identity suite -------------------------------------------------------

IDENTITY_DEFAULTS = {"grid_points": 256, "grid_half_width": 8.0, "x_points": 33,
                     "x_half_width": 7.5, "radius": 4.0, "cutoff": "poly_spline"}


def identity_setup(metric, level=0, **overrides):
    """Grid, X samples and bump family for the orthogonality/reconstruction suite.

    ``level`` doubles grid points and halves the X spacing ``level`` times.
    """
    cfg = dict(IDENTITY_DEFAULTS, **overrides)
    pts = cfg["grid_points"] * 2**level
    xpts = (cfg["x_points"] - 1) * 2**level + 1
    grid = PhaseGrid.uniform(metric.n, cfg["grid_half_width"], pts)
    X, w = X_sample_grid(metric, cfg["x_half_width"], xpts)
    fam = make_bump_family(metric, min(cfg["radius"], metric.constants.r0), make_cutoff(cfg["cutoff"]))
    return grid, X, w, fam


def gaussian_on(grid, center=None, width=1.0):
    c = np.zeros(2 * grid.n) if center is None else np.asarray(center, float)
    return SampledPhaseFunction.from_callable(
        grid, lambda P: np.exp(-np.pi * np.sum((P - c) ** 2, -1) / width**2))


def selftest(metric=None, level=0):
    """Involution, Parseval, orthogonality and reconstruction checks; returns a dict."""
    from .phase_space import euclidean

    metric = euclidean() if metric is None else metric
    grid, X, w, fam = identity_setup(metric, level)
    f = gaussian_on(grid)
    Ff = symplectic_fourier(f)
    FFf = symplectic_fourier(Ff, grid)
    inv = float(np.max(np.abs(FFf.values - f.values)) / np.max(np.abs(f.values)))
    pars = abs(Ff.l2_norm() / f.l2_norm() - 1.0)
    self_dual = Ff.grid.same_as(grid)
    fixed = float(np.max(np.abs(Ff.values - f.values))) if self_dual else 0.0
    I = product_integral(fam, fam, grid.mesh())
    lhs, rhs = orthogonality_check(fam, fam, f, f, X, w, I=I)
    _, res = reconstruct(f, fam, fam, X, w, I=I)
    orth = abs(lhs - rhs) / abs(rhs)
    checks = {"involution": inv <= 1e-10, "parseval": pars <= 1e-10, "gaussian_fixed_point": fixed <= 1e-10,
              "orthogonality": orth <= 1e-3, "reconstruction": res <= 1e-3}
    return {"involution_error": inv, "parseval_error": pars, "fixed_point_error": fixed if self_dual else None,
            "orthogonality_error": orth, "reconstruction_residual": res,
            "checks": checks, "pass": all(checks.values())}
