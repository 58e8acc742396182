"""
Symbols on phase space and a safe expression parser.

A symbol is a callable ``a(x, xi)`` on broadcasting arrays. For ``n = 1``
the arguments are the two coordinate arrays; for ``n > 1`` they are the
``(..., n)`` position and frequency blocks.

Expressions use ``x``, ``xi``, ``i``, ``pi``, numbers, ``+ - * /``, powers
(``^`` or ``**``) and the functions ``sin``, ``cos``, ``exp`` and ``jb``
(the Japanese bracket ``(1 + t^2)^{1/2}``).
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import PhasefieldError


class SymbolSyntaxError(PhasefieldError, ValueError):
    """Parse failure with a 0-based character ``position``."""

    def __init__(self, message, expr, position):
        self.expr = expr
        self.position = int(position)
        caret = " " * self.position + "^"
        super().__init__(f"{message} at position {self.position}\n  {expr}\n  {caret}")

    def to_dict(self):
        return {"error": "syntax", "message": str(self).splitlines()[0], "position": self.position,
                "expression": self.expr}


def _jb(t):
    t = np.asarray(t)
    return np.sqrt(1.0 + np.abs(t) ** 2)


def _power(base, expo):
    """Real power where it is defined, complex power elsewhere (``0 ** t`` stays finite)."""
    base = np.asarray(base)
    expo = np.asarray(expo)
    if np.iscomplexobj(base) or np.iscomplexobj(expo):
        b = base.astype(complex)
        e = expo.astype(complex)
        return np.where(b == 0, np.where(e.real > 0, 0.0, np.inf), np.power(np.where(b == 0, 1.0, b), e))
    real_ok = (base >= 0) | (expo == np.round(expo))
    with np.errstate(all="ignore"):
        r = np.power(np.where(real_ok, base, 1.0).astype(float), expo)
        c = np.power(base.astype(complex), expo)
        c = np.where(base == 0, 0.0, c)
    return np.where(real_ok, r, c)


_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "jb": _jb}
_CONSTS = {"i": 1j, "pi": np.pi}
_VARS = ("x", "xi")
_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply, ast.Div: np.divide,
           ast.Pow: np.power}


def _compile(node, expr):
    """Turn a whitelisted AST into a closure ``env -> value``."""
    pos = getattr(node, "col_offset", 0)
    if isinstance(node, ast.Expression):
        return _compile(node.body, expr)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise SymbolSyntaxError("only numeric literals are allowed", expr, pos)
        v = float(node.value)
        return lambda env: v
    if isinstance(node, ast.Name):
        if node.id in _VARS:
            name = node.id
            return lambda env: env[name]
        if node.id in _CONSTS:
            v = _CONSTS[node.id]
            return lambda env: v
        raise SymbolSyntaxError(f"unknown name {node.id!r}", expr, pos)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        inner = _compile(node.operand, expr)
        if isinstance(node.op, ast.USub):
            return lambda env: -inner(env)
        return inner
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        lhs = _compile(node.left, expr)
        rhs = _compile(node.right, expr)
        if op is np.power:
            return lambda env: _power(lhs(env), rhs(env))
        return lambda env: op(lhs(env), rhs(env))
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise SymbolSyntaxError("unknown function", expr, pos)
        if len(node.args) != 1 or node.keywords:
            raise SymbolSyntaxError(f"{node.func.id} takes exactly one argument", expr, pos)
        fn = _FUNCS[node.func.id]
        arg = _compile(node.args[0], expr)
        return lambda env: fn(arg(env))
    raise SymbolSyntaxError(f"unsupported construct {type(node).__name__}", expr, pos)


@dataclass(frozen=True, eq=False)
class SymbolPreset:
    """Named symbol with its expected class membership in a context ``(M, g)``.

    Attributes
    ----------
    name : str
    evaluator : callable
        ``a(x, xi)``.
    class_expectation : {"in", "out", "unknown"}
    context : dict
        Metric and weight tags the expectation refers to.
    """

    name: str
    evaluator: Callable
    class_expectation: str = "unknown"
    context: dict = field(default_factory=dict)
    expression: str | None = None

    def __call__(self, x, xi):
        return self.evaluator(x, xi)


def symbol_parse(expr, name=None):
    """Compile an expression over ``x`` and ``xi`` into a :class:`SymbolPreset`.

    Raises
    ------
    SymbolSyntaxError
        With the offending position.
    """
    text = str(expr)
    if not text.strip():
        raise SymbolSyntaxError("empty expression", text, 0)
    # ``^`` is exponentiation; rewrite it so it binds tighter than ``*``
    src, where = [], []
    for k, ch in enumerate(text):
        if ch == "^":
            src.append("**")
            where += [k, k]
        else:
            src.append(ch)
            where.append(k)
    src = "".join(src)
    where.append(len(text))
    orig = lambda off: where[min(max(off, 0), len(where) - 1)]
    lead = len(src) - len(src.lstrip())
    try:
        tree = ast.parse(src.strip(), mode="eval")
    except SyntaxError as exc:
        raise SymbolSyntaxError("syntax error", text, orig((exc.offset or 1) - 1 + lead)) from None
    try:
        fn = _compile(tree, src)
    except SymbolSyntaxError as exc:
        raise SymbolSyntaxError(str(exc).splitlines()[0].rsplit(" at position", 1)[0], text,
                                orig(exc.position + lead)) from None

    def evaluator(x, xi):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        shape = np.broadcast_shapes(x.shape, xi.shape)
        with np.errstate(all="ignore"):
            out = np.asarray(fn({"x": x, "xi": xi}), dtype=complex)
        return np.broadcast_to(out, shape).copy()

    return SymbolPreset(name or text, evaluator, "unknown", {}, text)


def evaluate_symbol(a, P, n=1):
    """Values of the symbol ``a`` at phase points ``P`` of shape ``(..., 2n)``."""
    P = np.asarray(P, dtype=float)
    if n == 1:
        v = a(P[..., 0], P[..., 1])
    else:
        v = a(P[..., :n], P[..., n:])
    return np.broadcast_to(np.asarray(v, dtype=complex), P.shape[:-1])


_EUCLID = {"metric": "euclidean", "weight": "const"}

_PRESET_TABLE = {
    "const1": ("1", "in"),
    "sinsin": ("sin(x)*sin(xi)", "in"),
    "chirp": ("exp(i*pi*x*xi)", "out"),
    "jb_xi": ("jb(xi)", "out"),
    "gauss": ("exp(-pi*(x^2 + xi^2))", "in"),
}


def symbol_preset(name):
    """Built-in battery entry by name; expectations refer to the euclidean metric with ``M = 1``."""
    if name not in _PRESET_TABLE:
        raise ValueError(f"unknown symbol preset {name!r}; known: {sorted(_PRESET_TABLE)}")
    expr, expect = _PRESET_TABLE[name]
    parsed = symbol_parse(expr, name)
    return SymbolPreset(name, parsed.evaluator, expect, dict(_EUCLID), expr)


def preset_names():
    return sorted(_PRESET_TABLE)


def symbol_from_spec(spec):
    """Symbol from a config value: a preset name or ``{"expr": "..."}``."""
    if isinstance(spec, str):
        if spec in _PRESET_TABLE:
            return symbol_preset(spec)
        return symbol_parse(spec)
    if isinstance(spec, dict):
        rest = dict(spec)
        if "preset" in rest:
            name = rest.pop("preset")
            if rest:
                raise ValueError(f"unknown symbol keys: {sorted(rest)}")
            return symbol_preset(name)
        if "expr" in rest:
            expr = rest.pop("expr")
            nm = rest.pop("name", None)
            if rest:
                raise ValueError(f"unknown symbol keys: {sorted(rest)}")
            return symbol_parse(expr, nm)
    raise ValueError("symbol must be a preset name, an expression or {'expr': ...}")
