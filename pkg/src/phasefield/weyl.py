"""
Weyl quantization, time-frequency shifts, Wigner transforms and dilations on ``V = R``.

Conventions
-----------
``pi(x, xi) u(t) = exp(2 pi i xi t) u(t - x)``.

``a^w u(x) = int int exp(2 pi i (x - y) xi) a((x + y)/2, xi) u(y) dy dxi``.

``W(u, v)(x, xi) = int u(x + y/2) conj(v(x - y/2)) exp(-2 pi i y xi) dy``,
so that ``(a^w u, v)_{L^2} = int a W(u, v)``.

The pairing ``<u, conj(v)>`` is the L^2 product ``int u conj(v)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy.interpolate import RegularGridInterpolator

from .errors import GridError
from .grids import (Axis, PhaseGrid, SampledFunction1D, SampledPhaseFunction, axis_dft,
                    axis_nudft, symplectic_fourier_array)
from .phase_space import as_coords


# -- band-limited interpolation ------------------------------------------------

def trig_eval(values, axis, points, ax=-1):
    """Trigonometric interpolant of grid samples evaluated at arbitrary ``points``.

    Exact at the nodes. Points outside ``[center - hw, center + hw)`` see the
    periodic extension, so inputs must decay at the grid boundary.
    """
    values = np.asarray(values, dtype=complex)
    spec = axis_dft(values, ax % values.ndim, axis, 0.0, -1)
    return axis_nudft(spec, ax % values.ndim, axis.reciprocal(0.0), np.asarray(points, float), +1)


def shift_eval(values, axis, x):
    """:func:`trig_eval` at the shifted nodes ``t_j - x`` via two FFTs."""
    values = np.asarray(values, dtype=complex)
    rec = axis.reciprocal(0.0)
    spec = axis_dft(values, 0, axis, 0.0, -1) * np.exp(-2j * np.pi * rec.nodes * x)
    return axis_dft(spec, 0, rec, axis.center, +1)


def resample(u, axis, outside_zero=True):
    """Resample a :class:`SampledFunction1D` onto ``axis`` by trigonometric interpolation."""
    src = u.axis
    pts = axis.nodes
    vals = trig_eval(u.values, src, pts)
    if outside_zero:
        lo = src.center - src.half_width
        hi = src.center + src.half_width
        vals = np.where((pts >= lo) & (pts < hi), vals, 0.0)
    return SampledFunction1D(axis, vals)


def upsample2(values, axis):
    """Samples on the half-step grid ``t_0 + m h/2``, ``m = 0 .. 2N-1``."""
    shifted = trig_eval(values, axis, axis.nodes + 0.5 * axis.spacing)
    out = np.empty(2 * axis.points, dtype=complex)
    out[0::2] = values
    out[1::2] = shifted
    return out


# -- time-frequency shifts -------------------------------------------------------

def tf_shift(X, chi):
    """``pi(X) chi`` on the grid of ``chi``.

    Raises
    ------
    GridError
        If the shift leaves the grid or the modulation reaches Nyquist.
    """
    x, xi = _split(X)
    ax = chi.axis
    if abs(x - ax.center) >= ax.half_width or abs(xi) >= 0.5 / ax.spacing:
        raise GridError(f"shift {(x, xi)} exceeds grid coverage")
    t = ax.nodes
    moved = shift_eval(chi.values, ax, x)
    return SampledFunction1D(ax, np.exp(2j * np.pi * xi * t) * moved)


def _split(X):
    c = as_coords(X).ravel()
    if c.size != 2:
        raise ValueError("weyl routines are implemented for n = 1")
    return float(c[0]), float(c[1])


# -- Wigner transform --------------------------------------------------------------

def wigner(chi1, chi2, out_grid=None):
    """Cross-Wigner transform ``W(chi1, chi2)`` on ``x_j x xi_m``.

    The ``x`` nodes are those of the input grid; the ``xi`` axis has spacing
    ``1/(N h)``. Half-step values come from band-limited upsampling, and the
    ``y``-integral is one FFT per ``x`` row.
    """
    ax = chi1.axis
    if chi2.axis != ax:
        raise GridError("wigner needs both windows on one grid")
    N, h = ax.points, ax.spacing
    H1 = np.concatenate([np.zeros(N), upsample2(chi1.values, ax), np.zeros(N)])
    H2 = np.concatenate([np.zeros(N), upsample2(chi2.values, ax), np.zeros(N)])
    j = np.arange(N)[:, None]
    k = (np.arange(N) - N // 2)[None, :]
    A = H1[N + 2 * j + k] * np.conj(H2[N + 2 * j - k])
    lag = Axis(0.0, ax.half_width, N)
    if out_grid is None:
        W = axis_dft(A, 1, lag, 0.0, -1)
        grid = PhaseGrid((ax, lag.reciprocal(0.0)))
        return SampledPhaseFunction(grid, W)
    if out_grid.axes[0] != ax:
        raise GridError("wigner output x-axis must equal the input grid")
    W = axis_nudft(A, 1, lag, out_grid.nodes(1), -1)
    return SampledPhaseFunction(out_grid, W)


# -- Weyl quantization ---------------------------------------------------------------

def weyl_symbol_grid(axis, oversample=1):
    """Grid a sampled symbol must live on to act on functions over ``axis``.

    ``x``: half-step nodes (``2N`` points, same center and range);
    ``xi``: ``2 N q`` points of spacing ``1/(2 N h q)`` for ``oversample = q``.
    """
    N, h, q = axis.points, axis.spacing, int(oversample)
    return PhaseGrid((Axis(axis.center, axis.half_width, 2 * N), Axis(0.0, 0.5 / h, 2 * N * q)))


class WeylMatrix:
    """Matrix of ``a^w`` on the grid ``axis``.

    Parameters
    ----------
    a : callable or SampledPhaseFunction
        ``a(x, xi)`` with broadcasting arrays, or samples on
        :func:`weyl_symbol_grid`.
    axis : Axis
    oversample : int
        Frequency refinement ``q``. The discrete kernel is periodic in the
        lag with period ``2 N h q``; symbols with slowly decaying kernels
        (sharp cutoffs) need ``q > 1``.

    Notes
    -----
    With ``p = j + k`` indexing the midpoint on the half-step grid and
    ``l = j - k``, ``A_jk = h K[p, l]`` where
    ``K[p, l] = dxi sum_m exp(2 pi i l h xi_m) a(x_p, xi_m)``.
    """

    def __init__(self, a, axis, oversample=1):
        self.axis = axis
        N, h, q = axis.points, axis.spacing, int(oversample)
        sg = weyl_symbol_grid(axis, q)
        if isinstance(a, SampledPhaseFunction):
            if not a.grid.same_as(sg):
                raise GridError("sampled symbol resolution does not match the function grid")
            vals = a.values
        else:
            xs = sg.nodes(0)
            xis = sg.nodes(1)
            vals = np.asarray(a(xs[:, None], xis[None, :]), dtype=complex)
            vals = np.broadcast_to(vals, sg.shape)
        L = 2 * N * q
        dxi = 1.0 / (L * h)
        lags = np.arange(L)
        # xi_m = (m - L/2) dxi, so exp(2 pi i l h xi_m) = (-1)^l exp(2 pi i l m / L)
        K = dxi * L * sfft.ifft(vals, axis=1) * np.where(lags % 2, -1.0, 1.0)[None, :]
        j = np.arange(N)[:, None]
        k = np.arange(N)[None, :]
        self.matrix = h * K[j + k, (j - k) % L]

    def apply(self, u):
        if u.axis != self.axis:
            raise GridError("function grid differs from the operator grid")
        return SampledFunction1D(self.axis, self.matrix @ u.values)

    def element(self, u, v):
        """``(a^w u, v)_{L^2}`` for sampled functions on the operator grid."""
        return complex(np.vdot(v.values, self.matrix @ u.values) * self.axis.spacing)


def weyl_apply(a, phi):
    """``a^w phi`` by direct quadrature of the Weyl kernel."""
    return WeylMatrix(a, phi.axis).apply(phi)


def default_axis(points=512, half_width=8.0, center=0.0):
    return Axis(center, half_width, points)


def _window_on(chi, axis):
    if isinstance(chi, SampledFunction1D):
        return chi if chi.axis == axis else resample(chi, axis)
    return chi.on_axis(axis)


def matrix_elements_direct(a, X, Xi, chi, axis=None, op=None):
    """Batch of ``<a^w pi(X) chi, conj(pi(Xi) chi)>`` with one operator matrix.

    ``X`` and ``Xi`` are arrays of shape ``(m, 2)``.
    """
    axis = default_axis() if axis is None else axis
    op = WeylMatrix(a, axis) if op is None else op
    c = _window_on(chi, axis)
    X = np.atleast_2d(as_coords(X))
    Xi = np.atleast_2d(as_coords(Xi))
    X, Xi = np.broadcast_arrays(X, Xi)
    out = np.empty(X.shape[0], dtype=complex)
    for i in range(X.shape[0]):
        out[i] = op.element(tf_shift(X[i], c), tf_shift(Xi[i], c))
    return out


def matrix_element_direct(a, X, Xi, chi, axis=None):
    """``<a^w pi(X) chi, conj(pi(Xi) chi)>`` by quadrature on a 1-D grid."""
    return complex(matrix_elements_direct(a, X, Xi, chi, axis)[0])


WIGNER_ROUTE_HALF_WIDTH = 3.5
WIGNER_ROUTE_POINTS = 256


def matrix_elements_wigner(a, X, Xi, chi, points=WIGNER_ROUTE_POINTS, half_width=WIGNER_ROUTE_HALF_WIDTH):
    """Moduli ``|int exp(-2 pi i [Y, X - Xi]) a(Y) W(chi, chi)(Y - mid) dY|`` for a batch.

    The integral runs over a local grid around ``mid = (X + Xi)/2``. Pairs
    sharing a midpoint share one weighted grid.
    """
    X = np.atleast_2d(as_coords(X))
    Xi = np.atleast_2d(as_coords(Xi))
    X, Xi = np.broadcast_arrays(X, Xi)
    mid = 0.5 * (X + Xi)
    D = X - Xi
    out = np.empty(X.shape[0])
    keys = {}
    for i, m in enumerate(map(tuple, np.round(mid, 14))):
        keys.setdefault(m, []).append(i)
    for m, idx in keys.items():
        grid = PhaseGrid.uniform(1, half_width, points, center=np.array(m))
        P = grid.mesh()
        b = np.asarray(a(P[..., 0], P[..., 1]), dtype=complex) * chi.wigner(P - np.array(m))
        for i in idx:
            out[i] = abs(_sft_point(b, grid, D[i]))
    return out


def _sft_point(b, grid, V):
    """``int exp(-2 pi i [Y, V]) b(Y) dY`` at one point ``V`` (separable sums)."""
    y = grid.nodes(0)
    eta = grid.nodes(1)
    # [Y, V] = eta * v_x - y * v_xi
    ey = np.exp(2j * np.pi * y * V[1])
    ee = np.exp(-2j * np.pi * eta * V[0])
    return complex(ey @ b @ ee * grid.cell)


def matrix_element_wigner(a, X, Xi, chi, **kw):
    """Wigner-route modulus of ``<a^w pi(X) chi, conj(pi(Xi) chi)>`` (phase dropped)."""
    return float(matrix_elements_wigner(a, X, Xi, chi, **kw)[0])


# -- metric rescalings ------------------------------------------------------------------

def scaling_op(g, X, direction, h, pairing=False):
    """``Psi_X h(y, eta) = h(f(X) y, F(X) eta)`` (``fwd``) or its inverse (``inv``).

    ``h`` is a callable ``h(y, eta)`` (composition is returned) or a
    :class:`SampledPhaseFunction` (separable trigonometric interpolation on
    the same grid). ``pairing`` multiplies by ``|det Q~_X|^{1/2} = (f F)^-n``
    for ``fwd`` and by its inverse for ``inv``.
    """
    f, F = (float(v) for v in g.weights(as_coords(X)))
    if direction == "fwd":
        sx, sxi, norm = f, F, (f * F) ** (-g.n)
    elif direction == "inv":
        sx, sxi, norm = 1.0 / f, 1.0 / F, (f * F) ** g.n
    else:
        raise ValueError("direction must be fwd or inv")
    c = norm if pairing else 1.0
    if callable(h) and not isinstance(h, SampledPhaseFunction):
        return lambda y, eta: c * h(sx * np.asarray(y), sxi * np.asarray(eta))
    grid = h.grid
    if grid.n != 1:
        raise ValueError("sampled scaling implemented for n = 1")
    v = trig_eval(h.values, grid.axes[0], sx * grid.nodes(0), ax=0)
    v = trig_eval(v, grid.axes[1], sxi * grid.nodes(1), ax=1)
    return SampledPhaseFunction(grid, c * v)


def metaplectic_dilation(g, X, chi):
    """``Phi_X chi(y) = f(X)^{-1/2} chi(y / f(X))`` for symplectic metrics (sign +).

    Raises
    ------
    ValueError
        If ``F(X) != 1/f(X)``.
    """
    f, F = (float(v) for v in g.weights(as_coords(X)))
    if abs(f * F - 1.0) > 1e-12:
        raise ValueError("metaplectic dilation needs a symplectic metric")
    ax = chi.axis
    vals = trig_eval(chi.values, ax, ax.nodes / f) * f**-0.5
    lo, hi = ax.center - ax.half_width, ax.center + ax.half_width
    t = ax.nodes / f
    vals = np.where((t >= lo) & (t < hi), vals, 0.0)
    return SampledFunction1D(ax, vals)


@dataclass
class MatrixElementSample:
    """One matrix-element record; ``value`` for the direct route, ``modulus`` always."""

    X: np.ndarray
    Xi: np.ndarray
    modulus: float
    route: str
    value: complex | None = None


def interpolated_symbol(sampled):
    """Callable ``a(x, xi)`` from samples on a phase grid (cubic, zero outside)."""
    grid = sampled.grid
    axes = [grid.nodes(0), grid.nodes(1)]
    re = RegularGridInterpolator(axes, sampled.values.real, method="cubic", bounds_error=False, fill_value=0.0)
    im = RegularGridInterpolator(axes, sampled.values.imag, method="cubic", bounds_error=False, fill_value=0.0)

    def a(x, xi):
        x, xi = np.broadcast_arrays(np.asarray(x, float), np.asarray(xi, float))
        P = np.stack([x.ravel(), xi.ravel()], -1)
        return (re(P) + 1j * im(P)).reshape(x.shape)
    return a
