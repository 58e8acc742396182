"""
Command-line front end.

    pf <subcommand> --config <path> [--out <dir>] [--seed <u64>] [--workers <k>]

Each run writes ``<subcommand>.json`` (schema-versioned report carrying
the config hash and library version), ``<subcommand>.csv`` and
``<subcommand>_plot.py`` into the output directory.

Exit codes: 0 success, 1 a self-check failed, 2 configuration error,
3 numerical divergence (a diagnostics report is written).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as pio
from .errors import ConvergenceError, GridError, PhasefieldError
from .parallel import resolve_workers

SCHEMA_VERSION = "1"
DEFAULT_SEED = 0x5EED
SUBCOMMANDS = ("check-metric", "windows", "gstft", "norms", "weyl", "diag", "classify")


class ConfigError(Exception):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


class Divergence(Exception):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


# -- config ----------------------------------------------------------------------

COMMON_KEYS = {"schema_version", "seed", "output", "metric", "weight"}

SUB_KEYS = {
    "check-metric": {"samples", "lemma_r"},
    "windows": {"window", "seminorm_orders", "x_samples", "y_points"},
    "gstft": {"grid"},
    "norms": {"symbol", "window", "s_values", "p", "extent", "patch_points", "direct_k_max"},
    "weyl": {"symbol", "battery"},
    "diag": {"symbol", "window", "sample_spec", "ladder", "thresholds", "patch_points", "crosscheck"},
    "classify": {"symbol", "window", "sample_spec", "ladder", "thresholds", "refine", "equivalence"},
}

REQUIRED = {
    "check-metric": ("metric",),
    "windows": ("metric", "window"),
    "gstft": (),
    "norms": ("symbol",),
    "weyl": (),
    "diag": ("symbol", "window"),
    "classify": ("symbol",),
}

NESTED_KEYS = {
    "output": {"dir"},
    "samples": {"n_points", "extent", "n_pairs"},
    "grid": {"level", "points", "half_width", "x_points", "x_half_width"},
    "battery": {"count", "extent", "max_offset"},
    "sample_spec": {"mid_extent", "mid_points", "n_directions", "radii", "include_zero", "layout",
                    "lattice_points", "lattice_extent"},
}


def load_config(path, subcommand):
    """Parse and validate a JSON config.

    Raises
    ------
    ConfigError
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"invalid JSON at line {exc.lineno} column {exc.colno}") from None
    return validate_config(cfg, subcommand)


def validate_config(cfg, subcommand):
    if not isinstance(cfg, dict):
        raise ConfigError("<document>", "top level must be an object")
    allowed = COMMON_KEYS | SUB_KEYS[subcommand]
    for key in sorted(cfg):
        if key not in allowed:
            raise ConfigError(key, f"unknown key for {subcommand}")
    for key in REQUIRED[subcommand]:
        if key not in cfg:
            raise ConfigError(key, "missing")
    ver = cfg.get("schema_version", SCHEMA_VERSION)
    if str(ver) != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {ver!r}")
    for key, sub in NESTED_KEYS.items():
        if key in cfg:
            if not isinstance(cfg[key], dict):
                raise ConfigError(key, "must be an object")
            for k in sorted(cfg[key]):
                if k not in sub:
                    raise ConfigError(f"{key}.{k}", "unknown key")
    if "seed" in cfg:
        _seed(cfg["seed"], "seed")
    out = dict(cfg)
    out["schema_version"] = SCHEMA_VERSION
    out.setdefault("seed", DEFAULT_SEED)
    return out


def _seed(v, field):
    if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < 2**64:
        raise ConfigError(field, "must be an unsigned 64-bit integer")
    return v


def _num(cfg, key, default, kind=float, lo=None):
    v = cfg.get(key, default)
    try:
        if kind is int:
            if isinstance(v, bool) or not isinstance(v, int):
                raise TypeError
        elif kind is float:
            if v in ("inf", "Infinity"):
                v = math.inf
            if isinstance(v, bool):
                raise TypeError
            v = float(v)
    except (TypeError, ValueError):
        raise ConfigError(key, f"must be {'an integer' if kind is int else 'a number'}") from None
    if lo is not None and not v >= lo:
        raise ConfigError(key, f"must be >= {lo}")
    return v


def _build(field, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError, PhasefieldError) as exc:
        raise ConfigError(field, str(exc).splitlines()[0]) from None


def _metric(cfg):
    from .phase_space import metric_from_tag
    v = cfg.get("metric", "euclidean")
    if not isinstance(v, str):
        raise ConfigError("metric", "must be a tag string such as 'euclidean' or 'srd:1/4:1/4'")
    return _build("metric", metric_from_tag, v)


def _weight(cfg):
    from .phase_space import weight_from_tag
    v = cfg.get("weight", "const")
    if not isinstance(v, str):
        raise ConfigError("weight", "must be a tag string such as 'const' or 'jb_xi:1'")
    return _build("weight", weight_from_tag, v)


def _symbol(cfg):
    from .symbols import symbol_from_spec
    return _build("symbol", symbol_from_spec, cfg["symbol"])


def _wigner_window(cfg, required):
    from .windows import window_from_spec
    spec = cfg.get("window")
    if spec is None:
        if required:
            raise ConfigError("window", "missing")
        spec = {"kind": "wigner"}
    if not isinstance(spec, dict):
        raise ConfigError("window", "must be an object")
    unknown = sorted(set(spec) - {"kind", "chi", "theta", "theta_r"})
    if unknown:
        raise ConfigError(f"window.{unknown[0]}", "unknown key")
    if spec.get("kind", "wigner") != "wigner":
        raise ConfigError("window.kind", "this subcommand needs a wigner window")
    if spec.get("theta", "auto") not in ("auto", "cutoff", "none"):
        raise ConfigError("window.theta", "must be auto, cutoff or none")
    chi = _build("window.chi", window_from_spec, spec.get("chi", "gaussian"))
    theta_r = spec.get("theta_r")
    if theta_r is not None:
        theta_r = _num(spec, "theta_r", None, float, 0.0)
        if theta_r <= 0:
            raise ConfigError("window.theta_r", "must be positive")
    return {"kind": "wigner", "chi": spec.get("chi", "gaussian"), "theta": spec.get("theta", "auto"),
            "theta_r": theta_r}, chi


def _ladder(cfg):
    v = cfg.get("ladder", [0, 1, 2, 3, 4, 6, 8])
    if not isinstance(v, list) or len(v) < 2 or any(isinstance(N, bool) or not isinstance(N, int) or N < 0
                                                       for N in v) or sorted(set(v)) != v:
        raise ConfigError("ladder", "must be an increasing list of at least two non-negative integers")
    return v


def _thresholds(cfg):
    from .diagnostics import DEFAULT_THRESHOLDS
    v = cfg.get("thresholds", {})
    if not isinstance(v, dict):
        raise ConfigError("thresholds", "must be an object")
    for k in sorted(v):
        if k not in DEFAULT_THRESHOLDS:
            raise ConfigError(f"thresholds.{k}", "unknown key")
        _num(v, k, None, float)
    return {k: float(x) for k, x in v.items()}


def _sample_spec(cfg):
    from .diagnostics import sample_spec_from_dict
    return _build("sample_spec", sample_spec_from_dict, cfg.get("sample_spec", {}))


# -- subcommands ------------------------------------------------------------------

def _check_metric(cfg, ctx):
    from .phase_space import SampleSpec, check_axioms, check_weight, lemma_inequality_suite
    g, M = _metric(cfg), _weight(cfg)
    s = cfg.get("samples", {})
    spec = SampleSpec(_num(s, "n_points", 1024, int, 1), _num(s, "extent", 10.0, float, 0.0),
                      _num(s, "n_pairs", 4096, int, 1), ctx["seed"])
    reports = [r.to_dict() for r in check_axioms(g, spec)]
    reports.append(check_weight(M, g, spec).to_dict())
    r = cfg.get("lemma_r", g.constants.r0)
    r = _num({"lemma_r": r}, "lemma_r", None, float, 0.0)
    if not 0 < r <= g.constants.r0:
        raise ConfigError("lemma_r", f"must lie in (0, r0 = {g.constants.r0}]")
    reports += [x.to_dict() for x in lemma_inequality_suite(g, r, spec)]
    ok = all(x["pass"] for x in reports)
    rows = [[x["axiom"], x["sample_count"], x["worst_violation"], x["pass"]] for x in reports]
    results = {"metric": g.preset_tag, "constants": dataclasses.asdict(g.constants), "reports": reports,
               "all_pass": ok}
    return results, (("axiom", "sample_count", "worst_violation", "pass"), rows), \
        ("axiom", "worst_violation", "sampled structural checks", False), 0 if ok else 1


def _windows(cfg, ctx):
    from .grids import PhaseGrid
    from .windows import confinement_seminorm, family_from_spec, nondegeneracy_lower_bound
    g = _metric(cfg)
    spec = cfg["window"]
    if not isinstance(spec, dict):
        raise ConfigError("window", "must be an object")
    phi = _build("window", family_from_spec, g, spec)
    orders = cfg.get("seminorm_orders", [0, 1, 2])
    if not isinstance(orders, list) or any(isinstance(k, bool) or not isinstance(k, int) or not 0 <= k <= 4
                                           for k in orders):
        raise ConfigError("seminorm_orders", "must be a list of integers in [0, 4]")
    nx = _num(cfg, "x_samples", 3, int, 1)
    ny = _num(cfg, "y_points", 32, int, 16)
    if ny & (ny - 1):
        raise ConfigError("y_points", "must be a power of two")
    ax = np.linspace(-2.0, 2.0, nx) if nx > 1 else np.zeros(1)
    Xs = np.stack(np.meshgrid(ax, ax, indexing="ij"), -1).reshape(-1, 2)
    semis = []
    for k in orders:
        vals = []
        for X in Xs:
            grid = PhaseGrid.from_arrays(X, 1.25 * phi.extent(X), ny)
            vals.append(confinement_seminorm(phi, k, X[None], grid))
        semis.append(max(vals))
    Yax = np.linspace(-2.0, 2.0, 5)
    Ys = np.stack(np.meshgrid(Yax, Yax, indexing="ij"), -1).reshape(-1, 2)
    lower = nondegeneracy_lower_bound(phi, Ys)
    results = {"family": repr(phi), "seminorms": {str(k): v for k, v in zip(orders, semis)},
               "nondegeneracy_lower_bound": lower, "nondegenerate": bool(lower > 0)}
    rows = [[k, v] for k, v in zip(orders, semis)]
    return results, (("order", "seminorm"), rows), ("order", "seminorm", "confinement seminorms", True), 0


def _gstft(cfg, ctx):
    from .gstft import X_sample_grid, gaussian_on, gstft, gstft_adjoint, product_integral, selftest
    from .grids import PhaseGrid
    from .windows import make_bump_family
    g = _metric(cfg)
    gr = cfg.get("grid", {})
    level = _num(gr, "level", 0, int, 0)
    if ctx["selftest"]:
        res = selftest(g, level)
        rows = [[k, res[_SELFTEST_KEYS[k]], bool(v)] for k, v in res["checks"].items()]
        return res, (("check", "value", "pass"), rows), ("check", "value", "identity checks", True), \
            0 if res["pass"] else 1
    pts = _num(gr, "points", 64, int, 8)
    hw = _num(gr, "half_width", 8.0, float, 0.0)
    xp = _num(gr, "x_points", 17, int, 2)
    xhw = _num(gr, "x_half_width", 6.0, float, 0.0)
    grid = PhaseGrid.uniform(g.n, hw, pts)
    f = gaussian_on(grid)
    fam = make_bump_family(g, min(4.0, g.constants.r0))
    X, w = X_sample_grid(g, xhw, xp)
    G = gstft(f, fam, X, None, w)
    back = gstft_adjoint(G, fam, grid)
    I = product_integral(fam, fam, grid.mesh())
    resid = float(np.linalg.norm(back.values - I * f.values) / np.linalg.norm(I * f.values))
    ctx["extra"]["gstft_field.pfgf"] = pio.field_bytes(G)
    energy = np.sum(np.abs(G.values) ** 2, axis=(1, 2)) * G.Xi_grid.cell
    rows = [[x[0], x[1], e] for x, e in zip(X, energy)]
    results = {"grid": {"points": pts, "half_width": hw}, "x_samples": int(len(X)),
               "field_energy": float(np.sum(energy * w)), "reconstruction_residual": resid,
               "container": "gstft_field.pfgf"}
    return results, (("x", "xi", "energy"), rows), ("x", "energy", "local transform energy", True), 0


_SELFTEST_KEYS = {"involution": "involution_error", "parseval": "parseval_error",
                  "gaussian_fixed_point": "fixed_point_error", "orthogonality": "orthogonality_error",
                  "reconstruction": "reconstruction_residual"}


def _norms(cfg, ctx):
    from . import modspace as ms
    from .diagnostics import diag_window
    g, M, a = _metric(cfg), _weight(cfg), _symbol(cfg)
    win, chi = _wigner_window(cfg, False)
    s_vals = cfg.get("s_values", list(ms.SMOOTHNESS_LADDER))
    if not isinstance(s_vals, list) or not s_vals or any(isinstance(s, bool) or not isinstance(s, (int, float))
                                                         or s < 0 for s in s_vals):
        raise ConfigError("s_values", "must be a non-empty list of non-negative numbers")
    p = _num(cfg, "p", math.inf, float, 1.0)
    ext = _num(cfg, "extent", ms.NORM_EXTENT, float, 0.0)
    pts = _num(cfg, "patch_points", ms.PATCH_POINTS, int, 8)
    kmax = _num(cfg, "direct_k_max", 4, int, 0)
    if kmax > 4:
        raise ConfigError("direct_k_max", "must be at most 4")
    phi = _build("window", diag_window, g, M, chi, win["theta"], win["theta_r"])
    ladder, _ = ms.symbol_norm_ladder(a, M, g, s_vals, p, phi, ext, pts)
    trunc = {"extent": ext, "x_points": ms.NORM_X_POINTS}
    grid = {"patch_points": pts}
    reps = [ms.norm_report("modulation", math.inf, p, s, v, grid, trunc) for s, v in ladder.items()]
    direct = ms.direct_seminorm_ladder(a, M, g, kmax, ext)
    reps += [ms.norm_report("direct", None, None, k, v, {"points": ms.DIRECT_POINTS}, trunc)
             for k, v in direct.items()]
    rows = [[r["norm_kind"], r["s"], r["value"]] for r in reps]
    return {"norms": reps}, (("norm_kind", "index", "value"), rows), \
        ("index", "value", "norm ladders", True, "norm_kind"), 0


def _weyl(cfg, ctx):
    from .symbols import symbol_from_spec
    from .weyl import MatrixElementSample, matrix_elements_direct, matrix_elements_wigner
    from .windows import Window1D
    g = _metric(cfg)
    if g.preset_tag != "euclidean":
        raise ConfigError("metric", "the matrix-element battery uses the euclidean metric")
    a = _build("symbol", symbol_from_spec, cfg.get("symbol", "const1"))
    b = cfg.get("battery", {})
    count = _num(b, "count", 200, int, 1)
    ext = _num(b, "extent", 3.0, float, 0.0)
    off = _num(b, "max_offset", 2.0, float, 0.0)
    rng = np.random.default_rng(ctx["seed"])
    X = rng.uniform(-ext, ext, (count, 2))
    Xi = X + rng.uniform(-off, off, (count, 2))
    chi = Window1D.gaussian()
    d = matrix_elements_direct(a, X, Xi, chi)
    w = matrix_elements_wigner(a, X, Xi, chi)
    mod = np.abs(d)
    mask = mod > 1e-8
    rel = float(np.max(np.abs(mod[mask] - w[mask]) / mod[mask])) if np.any(mask) else 0.0
    samples = [MatrixElementSample(X[i], Xi[i], float(mod[i]), "direct", d[i]) for i in range(count)]
    samples += [MatrixElementSample(X[i], Xi[i], float(w[i]), "wigner") for i in range(count)]
    results = {"symbol": getattr(a, "name", "custom"), "count": count, "route_max_rel_err": rel}
    if getattr(a, "name", None) == "const1":
        law = 2**-0.5 * np.exp(-np.pi * np.sum((X - Xi) ** 2, -1) / 2)
        results["ambiguity_law_max_abs_err"] = float(np.max(np.abs(mod - law)))
    rows = [[*s.X, *s.Xi, s.modulus, s.route] for s in samples]
    return results, (("x", "xi", "y", "eta", "modulus", "route"), rows), \
        ("x", "modulus", "matrix-element moduli", True, "route"), 0


def _diag(cfg, ctx):
    from .diagnostics import DIAG_PATCH_POINTS, decay_fit, diag_field, diag_window, weight_symbol
    g, M, a = _metric(cfg), _weight(cfg), _symbol(cfg)
    win, chi = _wigner_window(cfg, True)
    spec = _sample_spec(cfg)
    ladder, th = _ladder(cfg), _thresholds(cfg)
    pts = _num(cfg, "patch_points", DIAG_PATCH_POINTS, int, 16)
    cross = cfg.get("crosscheck", True)
    if not isinstance(cross, bool):
        raise ConfigError("crosscheck", "must be true or false")
    phi = _build("window", diag_window, g, M, chi, win["theta"], win["theta_r"])
    W = ctx["workers"]
    fld = diag_field(a, g, M, sample_spec=spec, points=pts, phi=phi, workers=W)
    ref = diag_field(weight_symbol(M), g, M, sample_spec=spec, points=pts, phi=phi, workers=W)
    rep = decay_fit(fld, M, ladder, th, ref)
    results = {"decay_report": rep.to_dict(), "samples": len(fld), "field_meta": fld.meta}
    if cross:
        results["keyidentity_max_rel_err"] = _cross_with_phi(a, g, phi, fld)
    _guard_finite(results)
    return results, (fld.csv_header, fld.rows().tolist()), ("gdist", "modulus", "matrix-element field", True), 0


def _cross_with_phi(a, g, phi, fld):
    from .diagnostics import _max_rel, operator_route
    return _max_rel(fld.modulus, operator_route(a, g, phi, fld))


def _classify(cfg, ctx):
    from .diagnostics import classify
    g, M, a = _metric(cfg), _weight(cfg), _symbol(cfg)
    win, _ = _wigner_window(cfg, False)
    conf = {"window": {k: v for k, v in win.items() if v is not None}, "ladder": _ladder(cfg),
            "thresholds": _thresholds(cfg), "sample_spec": cfg.get("sample_spec", {}),
            "refine": _num(cfg, "refine", 1, int, 1), "equivalence": cfg.get("equivalence", True)}
    if not isinstance(conf["equivalence"], bool):
        raise ConfigError("equivalence", "must be true or false")
    _sample_spec(cfg)
    rec = classify(a, g, M, conf, ctx["workers"])
    _guard_finite({k: rec[k] for k in ("modulation_side",)}, allow_inf=True)
    rep = rec["modulation_side"]["decay_report"]
    rows = [["sup_N", N, v] for N, v in zip(rep["N_ladder"], rep["sup_estimates"])]
    rows += [["norm_outer_s", s, v] for s, v in rec["modulation_side"]["norm_ladder_outer"].items()]
    rows += [["direct_outer_k", k, v] for k, v in rec["direct_side"]["seminorms_outer"].items()]
    rec["symbol"] = getattr(a, "name", "custom")
    return rec, (("quantity", "index", "value"), rows), ("index", "value", "classification ladders", True,
                                                         "quantity"), 0


def _guard_finite(obj, allow_inf=False):
    """Raise :class:`Divergence` on NaN (and on infinities unless allowed)."""
    bad = []

    def walk(o, path):
        if isinstance(o, dict):
            for k, v in o.items():
                walk(v, f"{path}.{k}" if path else str(k))
        elif isinstance(o, (list, tuple)):
            for i, v in enumerate(o):
                walk(v, f"{path}[{i}]")
        elif isinstance(o, (float, np.floating)):
            if math.isnan(o) or (math.isinf(o) and not allow_inf):
                bad.append(path)
    walk(obj, "")
    if bad:
        raise Divergence("non-finite result", {"fields": bad})


HANDLERS = {"check-metric": _check_metric, "windows": _windows, "gstft": _gstft, "norms": _norms,
            "weyl": _weyl, "diag": _diag, "classify": _classify}


# -- driver ---------------------------------------------------------------------

def _parser():
    p = argparse.ArgumentParser(prog="pf", description="phase-space diagnostics for symbol classes")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", default="pf-out", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (default from config, 0x5EED)")
    p.add_argument("--workers", type=int, default=1, help="worker threads; PF_WORKERS overrides")
    p.add_argument("--selftest", action="store_true", help="gstft: run the identity suite")
    return p


def _envelope(sub, cfg, status, results):
    return {"schema_version": SCHEMA_VERSION, "subcommand": sub, "library_version": __version__,
            "config_hash": pio.config_hash(cfg), "seed": cfg["seed"], "status": status, "results": results}


def run(subcommand, config, out_dir, workers=1, selftest=False):
    """Execute one subcommand on a validated config; returns the exit code."""
    out = Path(out_dir)
    ctx = {"seed": config["seed"], "workers": workers, "selftest": selftest, "extra": {}}
    stem = subcommand.replace("-", "_")
    try:
        with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
            results, (header, rows), plot, code = HANDLERS[subcommand](config, ctx)
    except ConfigError:
        raise
    except GridError as exc:
        raise ConfigError("grid", str(exc)) from None
    except (ConvergenceError, FloatingPointError, Divergence) as exc:
        diag = dict(getattr(exc, "diagnostics", None) or {})
        diag["error"] = str(exc)
        pio.write_json(out / f"{stem}.diagnostics.json", _envelope(subcommand, config, "diverged", diag))
        print(f"pf: numerical divergence: {exc}", file=sys.stderr)
        return 3
    if selftest and subcommand == "gstft":
        results = dict(results, selftest=True)
    csv_name = f"{stem}.csv"
    pio.write_csv(out / csv_name, header, rows)
    x, y, title, logy, *grp = plot
    pio.write_plot_script(out / f"{stem}_plot.py", csv_name, x, y, title, logy, grp[0] if grp else None)
    for name, data in ctx["extra"].items():
        pio.atomic_write_bytes(out / name, data)
    status = "ok" if code == 0 else "failed"
    pio.write_json(out / f"{stem}.json", _envelope(subcommand, config, status, results))
    return code


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.subcommand)
        if args.seed is not None:
            cfg["seed"] = _seed(args.seed, "--seed")
        if cfg.get("output", {}).get("dir") and args.out == "pf-out":
            args.out = cfg["output"]["dir"]
        try:
            workers = resolve_workers(args.workers)
        except ValueError as exc:
            raise ConfigError("PF_WORKERS", str(exc)) from None
        if args.selftest and args.subcommand != "gstft":
            raise ConfigError("--selftest", "only valid for gstft")
        return run(args.subcommand, cfg, args.out, workers, args.selftest)
    except ConfigError as exc:
        print(f"pf: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
