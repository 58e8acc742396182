"""
Uniformly admissible weights, mixed norms and geometric modulation norms.

The mixed norm of a field ``G(X, Xi)`` with weight ``eta`` is

    ( sum_X w_X ( sum_Xi |G eta|^q dXi )^{p/q} )^{1/p}

with ``dv_g`` weights ``w_X``; an infinite exponent turns the matching sum
into a maximum over the samples.

Symbol norms are computed from local transforms: for each ``X`` the product
``a conj(phi_X)`` is sampled on a patch covering the window support and
transformed there, which is exact for the patch's reciprocal grid whatever
the growth of ``a`` outside the patch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grids import PhaseGrid, symplectic_fourier_array
from .phase_space import SampleSpec, StructureReport, _stable_fit, as_coords
from .symbols import evaluate_symbol
from .windows import directional_derivative, fd_step, unit_directions

NORM_EXTENT = 8.0
NORM_X_POINTS = 17
PATCH_POINTS = 128
SMOOTHNESS_LADDER = (0, 1, 2, 3, 4, 6)


@dataclass(frozen=True)
class UniformWeight:
    """Positive weight ``eta(X, Xi)`` with admissibility constants ``(r_slow, tau_temp)``."""

    evaluator: Callable
    r_slow: float
    tau_temp: float
    tag: str = "custom"

    def __call__(self, X, Xi):
        v = np.asarray(self.evaluator(as_coords(X), as_coords(Xi)), dtype=float)
        if np.any(~(v > 0)):
            raise ValueError("uniform weight must be positive on evaluated points")
        return v

    def __mul__(self, other):
        return UniformWeight(lambda X, Xi: self.evaluator(X, Xi) * other.evaluator(X, Xi),
                             min(self.r_slow, other.r_slow), self.tau_temp + other.tau_temp,
                             f"{self.tag}*{other.tag}")


def unit_weight():
    return UniformWeight(lambda X, Xi: np.ones(np.broadcast_shapes(X.shape, Xi.shape)[:-1]),
                         math.inf, 0.0, "one")


def u_weight(g, p, s, M=None):
    """``u_{p,s}(X, Xi) / M(X) = |g_X|^{(1 - 1/p)/2} (1 + g^sigma_X(Xi))^s / M(X)``."""
    e = 0.5 * (1.0 - (0.0 if math.isinf(p) else 1.0 / p))

    def ev(X, Xi):
        v = g.det(X) ** e * (1.0 + g.dual_eval(X, Xi)) ** s
        return v / M(X) if M is not None else v

    tau = s + 2 * g.n * g.N0 * e + (0.0 if M is None else M.N_temp)
    r = g.r0 if M is None else min(g.r0, M.r_slow)
    return UniformWeight(ev, r, tau, f"u:{p}:{s}" + ("" if M is None else f"/{M.tag}"))


def weight_to_uniform(M):
    """``(X, Xi) -> M(X)`` as a uniformly admissible weight."""
    return UniformWeight(lambda X, Xi: np.broadcast_to(M(X), np.broadcast_shapes(X.shape, Xi.shape)[:-1]),
                         M.r_slow, M.N_temp, M.tag)


def _stream(spec, salt):
    """Same box as ``spec`` with a decorrelated Halton stream."""
    return SampleSpec(spec.n_points, spec.extent, spec.n_pairs, spec.seed + salt)


def uniform_weight_check(eta, g, spec=None):
    """Fit the constant ``C~`` of the slow-variation and two temperance conditions.

    Returns one report; ``pass`` iff every fitted constant is range-stable.
    The slow-variation radius is ``min(eta.r_slow, r0)``.
    """
    spec = SampleSpec() if spec is None else spec
    n = g.n
    r = min(eta.r_slow, g.r0)
    X = spec.points(n)
    B = spec.ball(2 * n, X.shape[0], salt=31)
    Y = X + r * B / g.root(X)
    Xi = _stream(spec, 32).points(n)
    q = eta(Y, Xi) / eta(X, Xi)
    sv = np.maximum(q, 1.0 / q)
    rad = np.max(np.abs(np.concatenate([X, Xi], -1)), -1)
    c1, h1, s1 = _stable_fit(sv, rad, spec.extent)

    A, Bp = spec.pairs(n, salt=33)
    Z = SampleSpec(A.shape[0], spec.extent, spec.n_pairs, spec.seed + 34).points(n)
    shift = Bp - A
    temper = (1.0 + g.dual_eval(A, shift)) ** eta.tau_temp
    t1 = eta(A + shift, Z) / (eta(A, Z) * temper)
    t2 = eta(A, Z + shift) / (eta(A, Z) * temper)
    rad2 = np.max(np.abs(np.concatenate([A, Bp, Z], -1)), -1)
    c2, _, s2 = _stable_fit(t1, rad2, spec.extent)
    c3, _, s3 = _stable_fit(t2, rad2, spec.extent)
    fc = {"C_slow": c1, "C_temp_first": c2, "C_temp_second": c3, "C": max(c1, c2, c3),
          "r_slow": r, "tau": eta.tau_temp}
    return StructureReport("uniform_weight_admissibility", X.shape[0] + 2 * A.shape[0], fc, max(s1, s2, s3))


@dataclass(frozen=True)
class MixedNormSpec:
    """Exponents of ``L~^{p,q}``: outer ``p`` over ``X`` (``dv_g``), inner ``q`` over ``Xi``."""

    p: float
    q: float

    def __post_init__(self):
        for v in (self.p, self.q):
            if not (v >= 1):
                raise ValueError("mixed-norm exponents must lie in [1, inf]")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", float(self.q))


def _inner_norm(vals, q, cell, axes):
    a = np.abs(vals)
    if math.isinf(q):
        return np.max(a, axis=axes)
    return (np.sum(a**q, axis=axes) * cell) ** (1.0 / q)


def _outer_norm(inner, w, p):
    inner = np.asarray(inner, float)
    if math.isinf(p):
        return float(np.max(inner)) if inner.size else 0.0
    return float(np.sum(w * inner**p) ** (1.0 / p))


def mixed_norm(G, eta, spec, g=None):
    """``||G||`` in ``L~^{p,q}_eta(W x W, dv_g dXi)`` by quadrature on the field samples."""
    if not isinstance(spec, MixedNormSpec):
        spec = MixedNormSpec(*spec)
    if not math.isinf(spec.p) and G.X_weights is None:
        raise ValueError("finite outer exponent needs dv_g weights on the X samples")
    Xi = G.Xi_grid.mesh()
    axes = tuple(range(1, G.values.ndim))
    inner = np.empty(G.X_samples.shape[0])
    for i, X in enumerate(G.X_samples):
        wv = G.values[i] * (1.0 if eta is None else eta(X, Xi))
        inner[i] = _inner_norm(wv, spec.q, G.Xi_grid.cell, tuple(a - 1 for a in axes))
    return _outer_norm(inner, G.X_weights, spec.p)


# -- local transforms of symbols ---------------------------------------------

@dataclass
class LocalTransform:
    """``V_phi a(X, .)`` on the reciprocal grid of a patch around ``X``."""

    X: np.ndarray
    Xi_grid: PhaseGrid
    values: np.ndarray


def local_transform(a, phi, X, points=PATCH_POINTS):
    """Transform of ``a conj(phi_X)`` on a patch covering the support of ``phi_X``."""
    g = phi.metric
    x = as_coords(X).ravel()
    grid = PhaseGrid.from_arrays(x, phi.extent(x), points)
    P = grid.mesh()
    b = evaluate_symbol(a, P, g.n) * np.conj(phi(x, P))
    vals, xi_grid = symplectic_fourier_array(b, grid)
    return LocalTransform(x, xi_grid, vals)


def norm_samples(g, extent=NORM_EXTENT, points=NORM_X_POINTS):
    """Uniform ``X`` lattice over ``|x|, |xi| <= extent`` with ``dv_g`` weights."""
    n = g.n
    ax = np.linspace(-extent, extent, points)
    X = np.stack(np.meshgrid(*([ax] * (2 * n)), indexing="ij"), -1).reshape(-1, 2 * n)
    cell = (ax[1] - ax[0]) ** (2 * n) if points > 1 else 1.0
    return X, g.volume_density(X) * cell


def _transforms(a, phi, X, points):
    return [local_transform(a, phi, x, points) for x in X]


def modulation_norm(f, phi, eta, p, q, g=None, X_samples=None, X_weights=None,
                    points=PATCH_POINTS, extent=NORM_EXTENT):
    """``||V_phi f||`` in ``L~^{p,q}_eta`` over the truncation window.

    ``f`` is a symbol callable ``f(x, xi)``; ``X_samples`` default to the
    :func:`norm_samples` lattice.

    Raises
    ------
    DegenerateWindowError
        Propagated from window construction.
    """
    g = phi.metric if g is None else g
    if X_samples is None:
        X_samples, X_weights = norm_samples(g, extent)
    X = np.atleast_2d(as_coords(X_samples))
    tr = _transforms(f, phi, X, points)
    return _norm_from_transforms(tr, eta, MixedNormSpec(p, q), X_weights)


def _norm_from_transforms(tr, eta, spec, w):
    inner = np.empty(len(tr))
    for i, t in enumerate(tr):
        Xi = t.Xi_grid.mesh()
        vals = t.values * (1.0 if eta is None else eta(t.X, Xi))
        inner[i] = _inner_norm(vals, spec.q, t.Xi_grid.cell, tuple(range(vals.ndim)))
    if not math.isinf(spec.p) and w is None:
        raise ValueError("finite outer exponent needs dv_g weights")
    return _outer_norm(inner, w, spec.p)


def symbol_norm_ladder(a, M, g, s_values, p, phi, extent=NORM_EXTENT, points=PATCH_POINTS,
                       x_points=NORM_X_POINTS, transforms=None):
    """``M~^{inf,p}_{u_{p,s}/M}`` norms of ``a`` for each ``s`` in ``s_values``.

    The outer supremum runs over the lattice ``|x|, |xi| <= extent``.
    Returns ``(dict s -> value, transforms)`` so callers can reuse the
    transforms for other extents or exponents.
    """
    if transforms is None:
        X, _ = norm_samples(g, extent, x_points)
        transforms = _transforms(a, phi, X, points)
    out = {}
    for s in s_values:
        spec = MixedNormSpec(math.inf, p)
        out[s] = _norm_from_transforms(transforms, u_weight(g, p, s, M), spec, None)
    return out, transforms


def symbol_norm_truncation(a, M, g, s, p, phi, extent=NORM_EXTENT, points=PATCH_POINTS,
                           x_points=NORM_X_POINTS):
    """Finite-``s`` member ``||a||`` of ``M~^{inf,p}_{u_{p,s}/M}``; nondecreasing in ``s``."""
    if s < 0:
        raise ValueError("s must be non-negative")
    vals, _ = symbol_norm_ladder(a, M, g, [s], p, phi, extent, points, x_points)
    return vals[s]


def restrict_transforms(transforms, extent):
    """Transforms whose base point lies in ``|x|, |xi| <= extent``."""
    return [t for t in transforms if np.max(np.abs(t.X)) <= extent + 1e-12]


def holder_constant(transforms, g, p1, p2):
    """Largest per-``X`` constant of the Hoelder step ``(p1, s) -> (p2, s + n + 1)``.

    ``C_X = (sum_Xi (1 + g^sigma_X(Xi))^{-(n+1) p1 p2/(p2 - p1)} |g^sigma_X|^{1/2} dXi)^{(p2 - p1)/(p1 p2)}``
    evaluated on each transform's own grid, so the discrete inequality holds exactly.
    """
    if not p1 < p2:
        raise ValueError("need p1 < p2")
    n = g.n
    best = 0.0
    for t in transforms:
        Xi = t.Xi_grid.mesh()
        w = 1.0 + g.dual_eval(t.X, Xi)
        if math.isinf(p2):
            e, outer = (n + 1) * p1, 1.0 / p1
        else:
            e, outer = (n + 1) * p1 * p2 / (p2 - p1), (p2 - p1) / (p1 * p2)
        dual_det = 1.0 / float(g.det(t.X))
        integral = np.sum(w ** (-e)) * dual_det**0.5 * t.Xi_grid.cell
        best = max(best, float(integral**outer))
    return best


# -- direct seminorms ------------------------------------------------------------

DIRECT_POINTS = 65


def direct_symbol_seminorm(a, M, g, k, extent=NORM_EXTENT, points=DIRECT_POINTS, n_random=8):
    """``max_{l <= k} max_{X, T} |a^{(l)}(X; T, .., T)| / (M(X) prod g_X(T)^{1/2})``.

    ``X`` runs over a uniform lattice on ``|x|, |xi| <= extent``; ``T`` over
    ``g_X``-unit coordinate directions plus ``n_random`` fixed random ones.
    Derivatives are central differences with steps ``h`` in metric units.

    Raises
    ------
    ValueError
        If ``k > 4``.
    """
    if not 0 <= k <= 4:
        raise ValueError("direct seminorm implemented for 0 <= k <= 4")
    n = g.n
    ax = np.linspace(-extent, extent, points)
    X = np.stack(np.meshgrid(*([ax] * (2 * n)), indexing="ij"), -1).reshape(-1, 2 * n)
    Mx = M(X)
    root = g.root(X)
    dirs = unit_directions(2 * n, n_random)
    func = lambda P: evaluate_symbol(a, P, n)
    best = float(np.max(np.abs(func(X)) / Mx))
    for l in range(1, k + 1):
        for d in dirs:
            T = d / root
            D = directional_derivative(func, X, T, l, fd_step(l))
            best = max(best, float(np.max(np.abs(D) / Mx)))
    return best


def direct_seminorm_ladder(a, M, g, k_max=4, extent=NORM_EXTENT, points=DIRECT_POINTS):
    return {k: direct_symbol_seminorm(a, M, g, k, extent, points) for k in range(k_max + 1)}


def norm_report(kind, p, q, s, value, grid, truncation):
    """JSON-ready norm record."""
    return {"norm_kind": kind, "p": _num_out(p), "q": _num_out(q), "s": s, "value": value,
            "grid": grid, "truncation": truncation}


def _num_out(v):
    return "inf" if v is not None and math.isinf(v) else v
