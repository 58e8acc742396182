"""
Uniform tensor grids on phase space and on configuration space.

Axis convention: an axis with ``points = N`` and spacing ``h`` has nodes
``center + j' h`` for ``j' = -N/2 .. N/2 - 1``. This centered indexing makes
every grid FFT-compatible under periodic extension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .errors import GridError


def _is_pow2(k):
    return k >= 1 and (k & (k - 1)) == 0


@dataclass(frozen=True)
class Axis:
    """One grid axis: center, half width and number of points (power of two, >= 16)."""

    center: float
    half_width: float
    points: int

    def __post_init__(self):
        if not (isinstance(self.points, (int, np.integer)) and _is_pow2(int(self.points)) and self.points >= 16):
            raise GridError(f"grid points must be a power of two >= 16, got {self.points}")
        if not self.half_width > 0:
            raise GridError("grid half width must be positive")
        object.__setattr__(self, "points", int(self.points))
        object.__setattr__(self, "center", float(self.center))
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def spacing(self):
        return 2.0 * self.half_width / self.points

    @property
    def offsets(self):
        return np.arange(self.points) - self.points // 2

    @property
    def nodes(self):
        return self.center + self.offsets * self.spacing

    def reciprocal(self, center=0.0):
        """Axis of the discrete Fourier dual: spacing ``1/(N h)``, same point count."""
        return Axis(center, 0.5 / self.spacing, self.points)

    def contains(self, value, margin=0.0):
        lo = self.center - self.half_width
        hi = self.center + self.half_width - self.spacing
        return (value - margin >= lo - 1e-12) & (value + margin <= hi + 1e-12)


@dataclass(frozen=True)
class PhaseGrid:
    """Tensor grid on ``R^{2n}`` with axes ordered ``(x_1..x_n, xi_1..xi_n)``."""

    axes: tuple

    def __post_init__(self):
        axes = tuple(self.axes)
        if len(axes) == 0 or len(axes) % 2:
            raise GridError("phase grid needs an even number of axes")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def uniform(cls, n=1, half_width=8.0, points=256, center=None):
        center = np.zeros(2 * n) if center is None else np.asarray(center, float)
        return cls(tuple(Axis(c, half_width, points) for c in center))

    @classmethod
    def from_arrays(cls, center, half_width, points):
        center = np.atleast_1d(np.asarray(center, float))
        half_width = np.broadcast_to(np.asarray(half_width, float), center.shape)
        points = np.broadcast_to(np.asarray(points), center.shape)
        return cls(tuple(Axis(c, w, int(p)) for c, w, p in zip(center, half_width, points)))

    @property
    def n(self):
        return len(self.axes) // 2

    @property
    def shape(self):
        return tuple(a.points for a in self.axes)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def spacing(self):
        return np.array([a.spacing for a in self.axes])

    @property
    def center(self):
        return np.array([a.center for a in self.axes])

    @property
    def half_width(self):
        return np.array([a.half_width for a in self.axes])

    @property
    def cell(self):
        return float(np.prod(self.spacing))

    def nodes(self, i):
        return self.axes[i].nodes

    def mesh(self):
        """Coordinates of all nodes, shape ``shape + (2n,)``."""
        return np.stack(np.meshgrid(*[a.nodes for a in self.axes], indexing="ij"), axis=-1)

    def points(self):
        return self.mesh().reshape(-1, 2 * self.n)

    def fourier_dual(self, center=None):
        """Output grid of the symplectic Fourier transform of functions on this grid.

        Output ``x_i`` pairs with input ``xi_i`` and output ``xi_i`` with input ``x_i``.
        """
        n = self.n
        center = np.zeros(2 * n) if center is None else np.asarray(center, float)
        src = list(self.axes[n:]) + list(self.axes[:n])
        return PhaseGrid(tuple(a.reciprocal(c) for a, c in zip(src, center)))

    def contains(self, P, margin=None):
        """Boolean mask: points (with per-axis ``margin``) inside the grid box."""
        P = np.asarray(P, float)
        margin = np.zeros(2 * self.n) if margin is None else np.broadcast_to(margin, P.shape)
        ok = np.ones(P.shape[:-1], dtype=bool)
        for i, a in enumerate(self.axes):
            ok &= a.contains(P[..., i], margin[..., i])
        return ok

    def to_dict(self):
        return {"center": self.center.tolist(), "half_width": self.half_width.tolist(),
                "points": list(self.shape)}

    def same_as(self, other, tol=1e-12):
        return (self.shape == other.shape and np.allclose(self.center, other.center, atol=tol)
                and np.allclose(self.spacing, other.spacing, rtol=tol, atol=0))


@dataclass(frozen=True, eq=False)
class SampledPhaseFunction:
    """Complex samples of a function on a :class:`PhaseGrid`."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise GridError(f"values have shape {v.shape}, grid has {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("sampled values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid, func):
        """Sample ``func(P)`` with ``P`` of shape ``grid.shape + (2n,)``."""
        vals = np.broadcast_to(np.asarray(func(grid.mesh()), dtype=complex), grid.shape)
        return cls(grid, np.array(vals))

    def __mul__(self, c):
        return SampledPhaseFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def inner(self, other):
        """``(self, other)_{L^2} = int self * conj(other)``."""
        if not self.grid.same_as(other.grid):
            raise GridError("inner product needs identical grids")
        return complex(np.vdot(other.values, self.values) * self.grid.cell)

    def l2_norm(self):
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell))

    def boundary_ratio(self):
        """Max modulus on the grid boundary relative to the global max."""
        v = np.abs(self.values)
        peak = v.max()
        if peak == 0:
            return 0.0
        b = 0.0
        for ax in range(v.ndim):
            b = max(b, np.take(v, 0, axis=ax).max(), np.take(v, -1, axis=ax).max())
        return float(b / peak)


@dataclass(frozen=True, eq=False)
class SampledFunction1D:
    """Samples of a function on a uniform grid of the line ``V = R``."""

    axis: Axis
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.axis.points,):
            raise GridError("values do not match the 1-D grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("sampled values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, axis, func):
        return cls(axis, np.asarray(func(axis.nodes), dtype=complex) * np.ones(axis.points))

    @property
    def nodes(self):
        return self.axis.nodes

    def inner(self, other):
        """``<self, conj(other)>`` realized as the L^2 product ``int self * conj(other)``."""
        if self.axis != other.axis:
            raise GridError("inner product needs identical grids")
        return complex(np.vdot(other.values, self.values) * self.axis.spacing)

    def l2_norm(self):
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.axis.spacing))


# -- discrete Fourier kernels on centered grids ---------------------------

def axis_dft(a, axis, src, dst_center, sign):
    """``h sum_j a_j exp(sign 2 pi i u_k y_j)`` along one array axis.

    ``src`` is the input :class:`Axis`; the output nodes are
    ``u_k = dst_center + k'/(N h)``. Implemented with one FFT plus two
    diagonal phase corrections, so the map is exactly invertible.
    """
    N, h, c, d = src.points, src.spacing, src.center, dst_center
    jp = src.offsets
    shape = [1] * a.ndim
    shape[axis] = N
    pre = np.exp(sign * 2j * np.pi * d * jp * h).reshape(shape)
    post = (h * np.exp(sign * 2j * np.pi * (d * c + c * jp / (N * h)))).reshape(shape)
    b = sfft.ifftshift(a * pre, axes=axis)
    if sign < 0:
        b = sfft.fft(b, axis=axis)
    else:
        b = sfft.ifft(b, axis=axis) * N
    return sfft.fftshift(b, axes=axis) * post


def axis_nudft(a, axis, src, u, sign):
    """Same sum as :func:`axis_dft` at arbitrary output nodes ``u`` (matrix product)."""
    y = src.nodes
    mat = src.spacing * np.exp(sign * 2j * np.pi * np.outer(u, y))
    out = np.tensordot(a, mat, axes=([axis], [1]))
    return np.moveaxis(out, -1, axis)


def symplectic_fourier_array(values, grid, out_grid=None, batch_dims=0):
    """Symplectic Fourier transform of raw sample arrays.

    ``F_sigma f(x, xi) = int exp(-2 pi i (xi.y - x.eta)) f(y, eta) dy deta``,
    i.e. ``F_sigma f(x, xi) = fhat(xi, -x)``. Input ``x_i`` axes are
    transformed with kernel sign ``-1`` onto output ``xi_i``; input ``xi_i``
    axes with sign ``+1`` onto output ``x_i``; then the axis blocks are
    swapped. Leading ``batch_dims`` axes are carried through.

    Returns
    -------
    values : ndarray
    out_grid : PhaseGrid
    """
    n = grid.n
    if out_grid is None:
        out_grid = grid.fourier_dual()
    if out_grid.n != n:
        raise GridError("output grid dimension mismatch")
    b = batch_dims
    out = np.asarray(values, dtype=complex)
    for i in range(2 * n):
        src = grid.axes[i]
        if i < n:
            sign, dst = -1, out_grid.axes[n + i]
        else:
            sign, dst = +1, out_grid.axes[i - n]
        regular = dst.points == src.points and abs(dst.spacing * src.spacing * src.points - 1.0) < 1e-12
        if regular:
            out = axis_dft(out, b + i, src, dst.center, sign)
        else:
            out = axis_nudft(out, b + i, src, dst.nodes, sign)
    perm = list(range(b)) + [b + n + i for i in range(n)] + [b + i for i in range(n)]
    return out.transpose(perm), out_grid


def symplectic_fourier(f, out_grid=None):
    """Symplectic Fourier transform of a :class:`SampledPhaseFunction`.

    Parameters
    ----------
    f : SampledPhaseFunction
    out_grid : PhaseGrid, optional
        Defaults to :meth:`PhaseGrid.fourier_dual` (centered at the origin).
        Other grids are reached by a direct non-uniform sum per axis.

    Notes
    -----
    With coincident dual grids the discrete map is exactly involutive up to
    round-off: ``F_sigma(F_sigma f) = f`` when the second output grid is the
    original grid.
    """
    vals, og = symplectic_fourier_array(f.values, f.grid, out_grid)
    return SampledPhaseFunction(og, vals)


def sft_points(values, grid, V, sign=-1):
    """``int exp(sign 2 pi i [V, Y]) b(Y) dY`` at arbitrary points ``V`` of shape ``(m, 2n)``.

    Separable direct sums; ``[V, Y] = v_xi . y - eta . v_x``.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    n = grid.n
    b = np.asarray(values, dtype=complex)
    if n == 1:
        ey = np.exp(sign * 2j * np.pi * np.outer(V[:, 1], grid.nodes(0)))
        ee = np.exp(-sign * 2j * np.pi * np.outer(V[:, 0], grid.nodes(1)))
        return np.einsum("pk,pk->p", ey @ b, ee) * grid.cell
    out = np.empty(V.shape[0], dtype=complex)
    for p, v in enumerate(V):
        acc = b
        for i in range(2 * n):
            nodes = grid.nodes(i)
            freq = v[n + i] if i < n else -v[i - n]
            vec = np.exp(sign * 2j * np.pi * freq * nodes)
            acc = np.tensordot(acc, vec, axes=([0], [0]))
        out[p] = acc * grid.cell
    return out


def sub_grid(grid, lo, hi, min_points=16):
    """Power-of-two sub-grid of ``grid`` covering the box ``[lo, hi]`` (clipped to the grid).

    Returns
    -------
    sub : PhaseGrid
        Its nodes coincide with nodes of ``grid``.
    index : tuple of slice
    """
    axes, index = [], []
    for i, a in enumerate(grid.axes):
        N, h = a.points, a.spacing
        first = a.center - (N // 2) * h
        s = int(np.floor((lo[i] - first) / h))
        e = int(np.ceil((hi[i] - first) / h)) + 1
        s, e = max(s, 0), min(e, N)
        L = max(min_points, 1 << max(int(np.ceil(np.log2(max(e - s, 1)))), 0))
        L = min(L, N)
        s = min(max(s - (L - (e - s)) // 2, 0), N - L)
        axes.append(Axis(first + (s + L // 2) * h, 0.5 * L * h, L))
        index.append(slice(s, s + L))
    return PhaseGrid(tuple(axes)), tuple(index)
