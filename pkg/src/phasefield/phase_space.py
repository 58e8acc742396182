"""
Phase-space geometry on W = R^{2n}.

Coordinates are ordered ``(x_1..x_n, xi_1..xi_n)``. Every routine accepts
either :class:`PhasePoint` instances or float arrays whose last axis has
length ``2n``; array arguments broadcast against each other.

The metrics are of split form ``g_X = f(X)^-2 |dx|^2 + F(X)^-2 |dxi|^2``.
Their symplectic dual is ``g^sigma_X = F(X)^2 |dx|^2 + f(X)^2 |dxi|^2``,
which equals ``(f F)^2 g_X``; several vectorized routines exploit this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import linalg
from scipy.special import ndtri
from scipy.stats import qmc

from .errors import ConvergenceError

DEFAULT_SEED = 0x5EED

# Fit-stability factor for "finite fit" verdicts: a constant fitted on the
# full sample range may exceed the half-range fit by at most this factor.
STABILITY_FACTOR = 4.0

# Round-off allowance for exact (pointwise) inequality checks.
EXACT_TOL = 1e-12


def japanese_bracket(v):
    """Return ``(1 + |v|^2)^{1/2}`` reduced over the last axis."""
    v = np.asarray(v, dtype=float)
    return np.sqrt(1.0 + np.sum(v * v, axis=-1))


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """A point ``X = (x, xi)`` of phase space.

    Parameters
    ----------
    x, xi : array_like
        Position and frequency vectors of equal length ``n >= 1``.
    """

    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.array(self.x, dtype=float))
        xi = np.atleast_1d(np.array(self.xi, dtype=float))
        if x.ndim != 1 or x.shape != xi.shape or x.size == 0:
            raise ValueError("x and xi must be 1-D vectors of equal length >= 1")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xi))):
            raise ValueError("phase point entries must be finite")
        x.setflags(write=False)
        xi.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    @property
    def n(self):
        return self.x.size

    @property
    def coords(self):
        return np.concatenate([self.x, self.xi])

    @classmethod
    def from_coords(cls, coords):
        c = np.asarray(coords, dtype=float).ravel()
        if c.size % 2:
            raise ValueError("coordinate vector must have even length")
        n = c.size // 2
        return cls(c[:n], c[n:])

    def __repr__(self):
        return f"PhasePoint(x={self.x.tolist()}, xi={self.xi.tolist()})"


def as_coords(X):
    """Coordinates of a point or of a batch of points as a float array."""
    if isinstance(X, PhasePoint):
        return X.coords
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] % 2:
        raise ValueError("phase coordinates need an even-length last axis")
    return arr


def sigma_matrix(n):
    """Matrix of ``sigma(x, xi) = (xi, -x)``, so that ``[X, Y] = <sigma X, Y>``."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def symplectic_form(X, Y):
    """Symplectic form ``[X, Y] = <xi, y> - <eta, x>``.

    Raises
    ------
    ValueError
        If the two arguments have different dimensions.
    """
    X = as_coords(X)
    Y = as_coords(Y)
    if X.shape[-1] != Y.shape[-1]:
        raise ValueError("dimension mismatch in symplectic_form")
    n = X.shape[-1] // 2
    return np.sum(X[..., n:] * Y[..., :n] - Y[..., n:] * X[..., :n], axis=-1)


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """Positive-definite quadratic form on W given by its symmetric matrix."""

    mat: np.ndarray

    def __post_init__(self):
        m = np.array(self.mat, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise ValueError("quadratic form needs an even square matrix")
        scale = max(np.max(np.abs(m)), np.finfo(float).tiny)
        if np.max(np.abs(m - m.T)) > 1e-12 * scale:
            raise ValueError("matrix is not symmetric within 1e-12")
        m = 0.5 * (m + m.T)
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError as exc:
            raise ValueError("matrix is not positive-definite") from exc
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def n(self):
        return self.mat.shape[0] // 2

    def __call__(self, T):
        T = as_coords(T)
        return np.einsum("...i,ij,...j->...", T, self.mat, T)

    @property
    def det(self):
        return float(np.linalg.det(self.mat))

    def dual(self):
        """Symplectic dual ``tsigma Q^-1 sigma``."""
        s = sigma_matrix(self.n)
        try:
            inv = np.linalg.inv(self.mat)
        except np.linalg.LinAlgError as exc:
            raise ValueError("singular quadratic form") from exc
        return QuadraticForm(s.T @ inv @ s)


@dataclass(frozen=True)
class MetricConstants:
    """Structure constants ``(C0, r0, N0)`` of a metric."""

    C0: float
    r0: float
    N0: float
    provenance: str = "asserted"

    def __post_init__(self):
        if not (self.C0 >= 1.0 and self.r0 > 0.0 and self.N0 >= 0.0):
            raise ValueError("structure constants need C0 >= 1, r0 > 0, N0 >= 0")
        if self.provenance not in ("asserted", "fitted"):
            raise ValueError("provenance must be 'asserted' or 'fitted'")


class HormanderMetric:
    """Split Hörmander metric ``g_X = f^-2 |dx|^2 + F^-2 |dxi|^2``.

    Parameters
    ----------
    n : int
        Half dimension of phase space.
    f, F : callable
        Vectorized maps from coordinate arrays ``(..., 2n)`` to positive
        arrays ``(...)``.
    preset_tag : str
        Canonical registry tag.
    r0, N0 : float
        Slow-variation radius and temperance exponent from preset metadata.
    C0 : float, optional
        Asserted slow-variation/temperance constant. When omitted it is
        fitted on first access of :attr:`constants`.
    depends : {"none", "x", "xi", "both"}
        Which coordinate blocks ``f`` and ``F`` depend on; used by caches.
    """

    def __init__(self, n, f, F, preset_tag, r0, N0, C0=None, depends="both"):
        if n < 1:
            raise ValueError("n must be >= 1")
        if depends not in ("none", "x", "xi", "both"):
            raise ValueError("depends must be one of none, x, xi, both")
        self.n = int(n)
        self._f = f
        self._F = F
        self.preset_tag = preset_tag
        self.r0 = float(r0)
        self.N0 = float(N0)
        self.depends = depends
        self._constants = None
        if C0 is not None:
            self._constants = MetricConstants(float(C0), self.r0, self.N0, "asserted")

    def __repr__(self):
        return f"HormanderMetric({self.preset_tag!r}, n={self.n})"

    # -- pointwise data -------------------------------------------------
    def weights(self, P):
        """Return ``(f(P), F(P))`` as arrays broadcast to ``P.shape[:-1]``."""
        P = as_coords(P)
        self._check_dim(P)
        shape = P.shape[:-1]
        f = np.broadcast_to(np.asarray(self._f(P), dtype=float), shape)
        F = np.broadcast_to(np.asarray(self._F(P), dtype=float), shape)
        if np.any(~(f > 0)) or np.any(~(F > 0)) or not (np.all(np.isfinite(f)) and np.all(np.isfinite(F))):
            raise ValueError("metric weights f, F must be positive and finite")
        return f, F

    def _check_dim(self, P):
        if P.shape[-1] != 2 * self.n:
            raise ValueError(f"expected phase coordinates of length {2 * self.n}")

    def diag(self, P):
        """Diagonal of the matrix of ``g_P``, shape ``(..., 2n)``."""
        f, F = self.weights(P)
        n = self.n
        return np.concatenate(
            [np.repeat(f[..., None] ** -2, n, -1), np.repeat(F[..., None] ** -2, n, -1)], -1
        )

    def dual_diag(self, P):
        """Diagonal of the matrix of ``g^sigma_P``."""
        f, F = self.weights(P)
        n = self.n
        return np.concatenate(
            [np.repeat(F[..., None] ** 2, n, -1), np.repeat(f[..., None] ** 2, n, -1)], -1
        )

    def root(self, P):
        """Diagonal of ``Q~^{1/2} = diag(1/f, 1/F)``; ``g_P(T) = |root * T|^2``."""
        return np.sqrt(self.diag(P))

    def eval(self, P, T):
        """``g_P(T)``, vectorized."""
        return np.sum(self.diag(P) * np.square(as_coords(T)), axis=-1)

    def dual_eval(self, P, T):
        """``g^sigma_P(T)``, vectorized."""
        return np.sum(self.dual_diag(P) * np.square(as_coords(T)), axis=-1)

    def det(self, P):
        """``|g_P| = (f F)^{-2n}``, vectorized."""
        f, F = self.weights(P)
        return (f * F) ** (-2.0 * self.n)

    def volume_density(self, P):
        """Density ``|g_P|^{1/2}`` of ``dv_g`` against Lebesgue measure."""
        f, F = self.weights(P)
        return (f * F) ** (-float(self.n))

    def matrix(self, P):
        P = as_coords(P)
        if P.ndim != 1:
            raise ValueError("matrix() expects a single point")
        return QuadraticForm(np.diag(self.diag(P)))

    def is_symplectic(self, P=None):
        """True when ``F = 1/f`` on the given (or default sampled) points."""
        if P is None:
            P = SampleSpec(n_points=256).points(self.n)
        f, F = self.weights(P)
        return bool(np.all(np.abs(f * F - 1.0) <= 1e-12))

    # -- structure constants --------------------------------------------
    @property
    def constants(self):
        if self._constants is None:
            reports = check_axioms(self, SampleSpec(), _for_constants=True)
            fitted = {r.axiom: r.fitted_constants for r in reports}
            C0 = max(
                1.0,
                fitted["slow_variation"]["C_fit"],
                fitted["temperance"]["C_fit"],
            )
            self._constants = MetricConstants(C0, self.r0, self.N0, "fitted")
        return self._constants

    # -- vectorized ball distances --------------------------------------
    def ball_distance_many(self, X, r, Y, dual_at=None):
        """Vectorized ``g^sigma_P(Y - U_{X,r})`` with ``P = dual_at`` (default X).

        In ``g_X``-normalized coordinates the dual form is diagonal, so the
        secular equation is solved with diagonal data only.
        """
        X = as_coords(X)
        Y = as_coords(Y)
        d = Y - X
        P = X if dual_at is None else as_coords(dual_at)
        rootx = self.root(X)
        c = rootx * d
        lam = self.dual_diag(P) / np.square(rootx)
        lam, c = np.broadcast_arrays(lam, c)
        return secular_value(lam, c, r)


def secular_value(lam, c, r, tol=1e-10, maxiter=200, return_point=False):
    """Minimize ``sum lam_i (c_i - u_i)^2`` over ``|u| <= r``, batched.

    Parameters
    ----------
    lam : ndarray, shape (..., k)
        Positive generalized eigenvalues.
    c : ndarray, shape (..., k)
        Target point in coordinates where the constraint is the unit ball
        scaled by ``r``.
    r : float
        Ball radius, positive.

    Returns
    -------
    value : ndarray, shape (...)
    u : ndarray, shape (..., k)
        Minimizer, only when ``return_point`` is set.

    Notes
    -----
    The minimizer is ``u_i = lam_i c_i / (lam_i + mu)`` with the multiplier
    ``mu >= 0`` fixed by ``|u| = r``. Newton steps on
    ``psi(mu) = 1/r - 1/|u(mu)|`` are safeguarded by a bisection bracket.
    """
    if not r > 0:
        raise ValueError("ball radius must be positive")
    lam = np.asarray(lam, dtype=float)
    c = np.asarray(c, dtype=float)
    lam, c = np.broadcast_arrays(lam, c)
    shape = lam.shape[:-1]
    lam2 = lam.reshape(-1, lam.shape[-1])
    c2 = c.reshape(-1, c.shape[-1])
    value = np.zeros(lam2.shape[0])
    u_out = c2.copy()
    outside = np.sum(c2 * c2, axis=-1) > r * r
    if np.any(outside):
        L = lam2[outside]
        C = c2[outside]
        nc = np.sqrt(np.sum(C * C, axis=-1))
        lo = np.zeros(L.shape[0])
        hi = L.max(axis=-1) * nc / r
        mu = lo.copy()
        done = np.zeros(L.shape[0], dtype=bool)
        for it in range(maxiter):
            den = L + mu[:, None]
            u = L * C / den
            nu = np.sqrt(np.sum(u * u, axis=-1))
            psi = 1.0 / r - 1.0 / nu
            lo = np.where(psi > 0, mu, lo)
            hi = np.where(psi <= 0, mu, hi)
            dpsi = -np.sum(L * L * C * C / den**3, axis=-1) / nu**3
            with np.errstate(divide="ignore", invalid="ignore"):
                mu_new = mu - psi / dpsi
            bad = ~((mu_new > lo) & (mu_new < hi)) | ~np.isfinite(mu_new)
            mu_new = np.where(bad, 0.5 * (lo + hi), mu_new)
            mu_new = np.where(psi == 0, mu, mu_new)
            step = np.abs(mu_new - mu)
            done = step <= tol * np.maximum(1.0, mu)
            mu = mu_new
            if np.all(done):
                break
        else:
            raise ConvergenceError(
                "secular equation did not converge",
                {"iterations": maxiter, "max_step": float(np.max(step)),
                 "unconverged": int(np.sum(~done))},
            )
        den = L + mu[:, None]
        value[outside] = np.sum(L * (mu[:, None] * C / den) ** 2, axis=-1)
        u_out[outside] = L * C / den
    value = value.reshape(shape)
    if return_point:
        return value, u_out.reshape(c.shape)
    return value


def ellipsoid_projection(Q, S, d, r, tol=1e-10, maxiter=200):
    """Closest point of ``{w : w^T Q w <= r^2}`` to ``d`` in the ``S``-norm.

    Parameters
    ----------
    Q, S : ndarray, shape (m, m)
        Symmetric positive-definite matrices (constraint and objective).
    d : ndarray, shape (m,)
    r : float

    Returns
    -------
    value : float
        ``min (d - w)^T S (d - w)``.
    w : ndarray
        The minimizer.
    """
    Q = np.asarray(Q, dtype=float)
    S = np.asarray(S, dtype=float)
    d = np.asarray(d, dtype=float)
    if not r > 0:
        raise ValueError("ball radius must be positive")
    if d @ Q @ d <= r * r:
        return 0.0, d.copy()
    lam, V = linalg.eigh(S, Q)
    c = V.T @ Q @ d
    value, u = secular_value(lam, c, r, tol=tol, maxiter=maxiter, return_point=True)
    return float(value), V @ u


# -- registries and presets ----------------------------------------------

def _xi(P, n):
    return P[..., n:]


def _x(P, n):
    return P[..., :n]


def euclidean(n=1, r0=4.0):
    """Constant metric ``|dx|^2 + |dxi|^2``; any ``r0`` is admissible."""
    one = lambda P: np.ones(P.shape[:-1])
    return HormanderMetric(n, one, one, "euclidean", r0=r0, N0=0.0, C0=1.0, depends="none")


def s_rho_delta(rho, delta, n=1):
    """Metric of the ``S^m_{rho,delta}`` calculus: ``f = <xi>^-delta``, ``F = <xi>^rho``."""
    rho = float(rho)
    delta = float(delta)
    if not (0 <= delta <= rho <= 1 and delta < 1):
        raise ValueError("s_rho_delta needs 0 <= delta <= rho <= 1 and delta < 1")
    f = lambda P: japanese_bracket(_xi(P, n)) ** (-delta)
    F = lambda P: japanese_bracket(_xi(P, n)) ** rho
    depends = "none" if rho == 0 and delta == 0 else "xi"
    N0 = max(rho, delta) / (1.0 - delta)
    return HormanderMetric(n, f, F, f"srd:{_fmt(rho)}:{_fmt(delta)}", r0=0.5, N0=N0, depends=depends)


def shubin(rho, n=1):
    """Shubin metric ``<X>^{-2 rho} |dX|^2``: ``f = F = (1+|x|^2+|xi|^2)^{rho/2}``."""
    rho = float(rho)
    if not 0 < rho <= 1:
        raise ValueError("shubin needs 0 < rho <= 1")
    f = lambda P: japanese_bracket(P) ** rho
    return HormanderMetric(n, f, f, f"shubin:{_fmt(rho)}", r0=0.5, N0=rho, depends="both")


def sg(n=1):
    """SG metric ``<x>^-2 |dx|^2 + <xi>^-2 |dxi|^2``."""
    f = lambda P: japanese_bracket(_x(P, n))
    F = lambda P: japanese_bracket(_xi(P, n))
    return HormanderMetric(n, f, F, "sg", r0=0.5, N0=1.0, depends="both")


def _fmt(v):
    return format(float(v), "g")


def _num(text):
    return float(Fraction(text.strip()))


def metric_from_tag(tag, n=1):
    """Build a preset metric from ``euclidean``, ``srd:rho:delta``, ``shubin:rho`` or ``sg``."""
    parts = str(tag).strip().split(":")
    name = parts[0].lower()
    try:
        if name == "euclidean" and len(parts) == 1:
            return euclidean(n)
        if name == "srd" and len(parts) == 3:
            return s_rho_delta(_num(parts[1]), _num(parts[2]), n)
        if name == "shubin" and len(parts) == 2:
            return shubin(_num(parts[1]), n)
        if name == "sg" and len(parts) == 1:
            return sg(n)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad metric tag {tag!r}: {exc}") from exc
    raise ValueError(f"unknown metric tag {tag!r}")


# -- scalar API -----------------------------------------------------------

def eval_metric(g, X, T):
    """``g_X(T) = f(X)^-2 |T_x|^2 + F(X)^-2 |T_xi|^2``."""
    return g.eval(as_coords(X), as_coords(T))


def dual_metric(g, X):
    """Matrix of ``g^sigma_X`` computed as ``tsigma Q_X^-1 sigma``."""
    return g.matrix(X).dual()


def det_symplectic(g, X):
    """Return ``(|g_X|, |g^sigma_X|)`` as determinants in the standard basis."""
    Q = g.matrix(X)
    return Q.det, Q.dual().det


def ball_distance(g, X, r, Y, dual_at=None):
    """``inf { g^sigma_P(Y - Z) : g_X(Z - X) <= r^2 }`` with ``P = dual_at or X``.

    Uses a generalized eigen-decomposition of the two forms and the
    secular equation on the ellipsoid boundary.

    Raises
    ------
    ValueError
        If ``r <= 0``.
    ConvergenceError
        If the secular solver needs more than 200 iterations.
    """
    if not r > 0:
        raise ValueError("ball radius must be positive")
    Xc = as_coords(X)
    Q = g.matrix(Xc).mat
    S = dual_metric(g, Xc if dual_at is None else as_coords(dual_at)).mat
    value, _ = ellipsoid_projection(Q, S, as_coords(Y) - Xc, r)
    return value


def ball_ball_distance(g, X, rX, Yc, rY, tol=1e-8, maxiter=100):
    """``inf { g^sigma_X(Z' - Z) : Z in U_{X,rX}, Z' in U_{Yc,rY} }``.

    Alternating projections between the two ellipsoids in the
    ``g^sigma_X``-norm; each projection is a secular-equation solve.
    """
    if not (rX > 0 and rY > 0):
        raise ValueError("ball radii must be positive")
    Xc = as_coords(X)
    Yv = as_coords(Yc)
    QX = g.matrix(Xc).mat
    QY = g.matrix(Yv).mat
    S = dual_metric(g, Xc).mat
    z = Xc.copy()
    prev = np.inf
    for it in range(maxiter):
        _, wy = ellipsoid_projection(QY, S, z - Yv, rY)
        zp = Yv + wy
        _, wx = ellipsoid_projection(QX, S, zp - Xc, rX)
        z_new = Xc + wx
        diff = zp - z_new
        value = float(diff @ S @ diff)
        moved = float(np.sqrt((z_new - z) @ S @ (z_new - z)))
        z = z_new
        if value <= tol * tol or (abs(prev - value) <= tol * max(1.0, value) and moved <= math.sqrt(tol)):
            return max(value, 0.0) if value > tol * tol else 0.0
        prev = value
    raise ConvergenceError(
        "alternating projections did not converge",
        {"iterations": maxiter, "last_value": prev},
    )


# -- sampling ---------------------------------------------------------------

@dataclass(frozen=True)
class SampleSpec:
    """Deterministic low-discrepancy sample set over ``|x|, |xi| <= extent``."""

    n_points: int = 1024
    extent: float = 10.0
    n_pairs: int = 4096
    seed: int = DEFAULT_SEED

    def points(self, n, count=None, extent=None):
        count = self.n_points if count is None else count
        extent = self.extent if extent is None else extent
        u = qmc.Halton(d=2 * n, scramble=True, seed=self.seed).random(count)
        return (2.0 * u - 1.0) * extent

    def ball(self, dim, count, salt=1):
        """Low-discrepancy points filling the closed unit ball of R^dim."""
        u = qmc.Halton(d=dim + 1, scramble=True, seed=self.seed + salt).random(count)
        z = ndtri(np.clip(u[:, :dim], 1e-12, 1 - 1e-12))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        return z * u[:, dim:] ** (1.0 / dim)

    def sphere(self, dim, count, salt=2):
        u = qmc.Halton(d=dim, scramble=True, seed=self.seed + salt).random(count)
        z = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
        return z / np.linalg.norm(z, axis=1, keepdims=True)

    def pairs(self, n, salt=3):
        """Independent point pairs ``(X, Y)`` over the sample box."""
        u = qmc.Halton(d=4 * n, scramble=True, seed=self.seed + salt).random(self.n_pairs)
        u = (2.0 * u - 1.0) * self.extent
        return u[:, : 2 * n], u[:, 2 * n:]


@dataclass
class StructureReport:
    """Outcome of a sampled structural check; ``pass`` iff ``worst_violation <= 0``."""

    axiom: str
    sample_count: int
    fitted_constants: dict
    worst_violation: float

    @property
    def passed(self):
        return bool(self.worst_violation <= 0)

    def to_dict(self):
        return {
            "axiom": self.axiom,
            "sample_count": self.sample_count,
            "fitted_constants": self.fitted_constants,
            "worst_violation": self.worst_violation,
            "pass": self.passed,
        }


def _box_radius(*arrays):
    return np.max(np.stack([np.max(np.abs(a), axis=-1) for a in arrays]), axis=0)


def _stable_fit(values, radius, extent):
    """Fitted constant, its half-range counterpart, and stability slack."""
    values = np.asarray(values, dtype=float)
    full = float(np.max(values))
    inner = radius <= 0.5 * extent
    half = float(np.max(values[inner])) if np.any(inner) else full
    if not np.isfinite(full):
        return full, half, math.inf
    growth = full / half if half > 0 else (1.0 if full == 0 else math.inf)
    slack = math.log(max(growth, 1e-300)) - math.log(STABILITY_FACTOR)
    return full, half, slack


def _ratio_sup(g, X, Y):
    """``sup_T (g_X(T)/g_Y(T))^{+-1}``, exact for diagonal forms."""
    q = g.diag(X) / g.diag(Y)
    return np.maximum(np.max(q, axis=-1), 1.0 / np.min(q, axis=-1))


def _near_pairs(g, spec, radius, salt):
    X = spec.points(g.n)
    B = spec.ball(2 * g.n, X.shape[0], salt=salt)
    Y = X + radius * B / g.root(X)
    return X, Y


def check_axioms(g, spec=None, _for_constants=False):
    """Sampled checks of the uncertainty principle, slow variation and temperance.

    Uncertainty is checked exactly per point; slow variation and temperance
    fit the smallest constant over the sampled pairs (``r0``, ``N0`` taken
    from preset metadata). A fit counts as finite when the full-range value
    stays within :data:`STABILITY_FACTOR` of the half-range value.
    """
    spec = SampleSpec() if spec is None else spec
    n = g.n
    reports = []

    P = spec.points(n)
    ratio = np.max(g.diag(P) / g.dual_diag(P), axis=-1)
    worst = float(np.max(ratio) - 1.0 - EXACT_TOL)
    reports.append(StructureReport("uncertainty", P.shape[0], {"max_ratio": float(np.max(ratio))}, worst))

    X, Y = _near_pairs(g, spec, g.r0, salt=11)
    sv = _ratio_sup(g, X, Y)
    full, half, slack = _stable_fit(sv, _box_radius(X), spec.extent)
    fc = {"C_fit": full, "C_half_range": half, "r0": g.r0}
    if not _for_constants and g._constants is not None and g._constants.provenance == "asserted":
        slack = max(slack, full - g._constants.C0 - EXACT_TOL)
        fc["C_asserted"] = g._constants.C0
    reports.append(StructureReport("slow_variation", X.shape[0], fc, slack))

    Xa, Ya = spec.pairs(n)
    Xn, Yn = _near_pairs(g, spec, 4.0 * g.r0, salt=12)
    X = np.concatenate([Xa, Xn])
    Y = np.concatenate([Ya, Yn])
    tv = _ratio_sup(g, X, Y) / (1.0 + g.dual_eval(X, X - Y)) ** g.N0
    full, half, slack = _stable_fit(tv, _box_radius(X, Y), spec.extent)
    fc = {"C_fit": full, "C_half_range": half, "N0": g.N0}
    if not _for_constants and g._constants is not None and g._constants.provenance == "asserted":
        slack = max(slack, full - g._constants.C0 - EXACT_TOL)
        fc["C_asserted"] = g._constants.C0
    reports.append(StructureReport("temperance", X.shape[0], fc, slack))
    return reports


@dataclass(frozen=True)
class AdmissibleWeight:
    """Weight ``M`` with slow-variation radius ``r_slow`` and temperance exponent ``N_temp``."""

    M: Callable
    r_slow: float
    N_temp: float
    tag: str = "custom"

    def __call__(self, P):
        vals = np.asarray(self.M(as_coords(P)), dtype=float)
        if np.any(~(vals > 0)):
            raise ValueError("weight must be positive on evaluated points")
        return vals


def constant_weight(value=1.0):
    return AdmissibleWeight(lambda P: np.full(P.shape[:-1], float(value)), math.inf, 0.0, "const")


def jb_xi_weight(m=1.0, n=1):
    """``M(x, xi) = <xi>^m``."""
    m = float(m)
    return AdmissibleWeight(lambda P: japanese_bracket(P[..., n:]) ** m, 0.5, abs(m), f"jb_xi:{_fmt(m)}")


def weight_from_tag(tag, n=1):
    parts = str(tag).strip().split(":")
    name = parts[0].lower()
    try:
        if name in ("const", "one", "1") and len(parts) <= 2:
            return constant_weight(_num(parts[1]) if len(parts) == 2 else 1.0)
        if name == "jb_xi" and len(parts) <= 2:
            return jb_xi_weight(_num(parts[1]) if len(parts) == 2 else 1.0, n)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad weight tag {tag!r}: {exc}") from exc
    raise ValueError(f"unknown weight tag {tag!r}")


def check_weight(M, g, spec=None):
    """Fit the admissibility constants of ``M`` over sampled pairs."""
    spec = SampleSpec() if spec is None else spec
    n = g.n
    r = min(M.r_slow, 10.0 * g.r0)
    X, Y = _near_pairs(g, spec, r, salt=21)
    q = M(X) / M(Y)
    sv = np.maximum(q, 1.0 / q)
    c_sv, h_sv, s_sv = _stable_fit(sv, _box_radius(X), spec.extent)
    Xa, Ya = spec.pairs(n)
    q = M(Xa) / M(Ya)
    tv = np.maximum(q, 1.0 / q) / (1.0 + g.dual_eval(Xa, Xa - Ya)) ** M.N_temp
    c_t, h_t, s_t = _stable_fit(tv, _box_radius(Xa, Ya), spec.extent)
    fc = {"C_slow": c_sv, "C_temp": c_t, "C": max(c_sv, c_t),
          "C_temp_half_range": h_t, "r_slow": r, "N_temp": M.N_temp}
    return StructureReport("weight_admissibility", X.shape[0] + Xa.shape[0], fc, max(s_sv, s_t))


def lemma_inequality_suite(g, r, spec=None, integral_points=201):
    """Sampled evaluation of the metric inequalities (p-1)..(p-7).

    Each report records the smallest constant making the inequality hold on
    the samples (``C_fit``), the constant stated in terms of ``C0, N0``
    (``C_stated``), and passes when the fit is finite in the sense of
    :func:`check_axioms`. The integral bound is a quadrature estimate.
    """
    spec = SampleSpec() if spec is None else spec
    consts = g.constants
    if not 0 < r <= consts.r0:
        raise ValueError("lemma inequalities need 0 < r <= r0")
    C0, N0, n = consts.C0, consts.N0, g.n
    reports = []

    Xa, Ya = spec.pairs(n)
    Xn, Yn = _near_pairs(g, spec, 3.0 * r, salt=31)
    X = np.concatenate([Xa, Xn])
    Y = np.concatenate([Ya, Yn])
    rad = _box_radius(X, Y)
    d = g.ball_distance_many(X, r, Y)

    def add(name, lhs, base, stated, hard=False):
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(base > 0, lhs / base, np.where(lhs > 0, np.inf, 0.0))
        full, half, slack = _stable_fit(q, rad, spec.extent)
        if hard:
            slack = full - stated - EXACT_TOL
        reports.append(StructureReport(name, int(q.size), {
            "C_fit": full, "C_half_range": half, "C_stated": stated,
            "within_stated": bool(full <= stated * (1 + 1e-12))}, slack))

    add("lemma_p1", _ratio_sup(g, X, Y), (1 + d) ** N0, C0 ** (N0 + 2))
    add("lemma_p2", 1 + g.eval(Y, X - Y), 2 * (1 + r * r) * (1 + d) ** (N0 + 1), C0 ** (N0 + 2))
    dY = g.ball_distance_many(X, r, Y, dual_at=Y)
    add("lemma_p3", dY, d * (1 + d) ** N0, C0 ** (N0 + 2))

    est = _p31_integral(g, r, N0, spec, integral_points)
    reports.append(StructureReport("lemma_p3_1", est["points"], est, -1.0 if np.isfinite(est["value"]) and est["tail_fraction"] < 0.1 else 1.0))

    P = spec.points(n)
    dg = g.det(P)
    dgs = 1.0 / np.prod(g.dual_diag(P) ** -1, axis=-1)
    worst = float(max(np.max(dg - 1), np.max(1 - dgs), np.max(np.abs(dg * dgs - 1)))) - 1e-12
    reports.append(StructureReport("lemma_p4", P.shape[0], {"max_det_g": float(np.max(dg)),
                                                            "min_det_gsigma": float(np.min(dgs))}, worst))

    Xs, Ys = _near_pairs(g, spec, consts.r0, salt=32)
    q = g.det(Xs) / g.det(Ys)
    add_rad = rad
    rad = _box_radius(Xs)
    add("lemma_p5", np.maximum(q, 1 / q), np.ones_like(q), C0 ** (2 * n))
    rad = add_rad
    q = g.det(X) / g.det(Y)
    add("lemma_p6", np.maximum(q, 1 / q), (1 + d) ** (2 * n * N0), C0 ** (2 * n * N0 + 4 * n))

    nrm = np.linalg.norm(P, axis=-1)
    w = (1 + nrm) ** (4 * n * N0)
    vals = np.maximum(dgs / w, w ** -1 / dg)
    full, half, slack = _stable_fit(vals, _box_radius(P), spec.extent)
    reports.append(StructureReport("lemma_p7", P.shape[0], {"C_fit": full, "C_half_range": half}, slack))
    return reports


def _p31_integral(g, r, N0, spec, m):
    """Quadrature of ``int (1 + g^sigma_X(Y - U_{X,r}))^-e dv_g(X)`` for a few Y."""
    n = g.n
    e = (N0 + 1) * (n + 1) + n * N0
    L = spec.extent
    axis = np.linspace(-L, L, m)
    h = axis[1] - axis[0]
    mesh = np.stack(np.meshgrid(*([axis] * (2 * n)), indexing="ij"), -1).reshape(-1, 2 * n)
    Ys = [np.zeros(2 * n), np.full(2 * n, 0.25 * L), np.concatenate([np.zeros(n), np.full(n, 0.3 * L)])]
    best, tail = 0.0, 0.0
    inner = np.max(np.abs(mesh), axis=-1) <= 0.5 * L
    for Yv in Ys:
        d = g.ball_distance_many(mesh, r, Yv[None, :])
        integrand = (1 + d) ** (-e) * g.volume_density(mesh) * h ** (2 * n)
        total = float(np.sum(integrand))
        if total > best:
            best = total
            tail = 1.0 - float(np.sum(integrand[inner])) / total
    return {"value": best, "exponent": e, "tail_fraction": tail, "points": int(mesh.shape[0] * len(Ys))}
