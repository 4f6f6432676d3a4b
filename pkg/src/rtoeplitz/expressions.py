"""A small, safe arithmetic language for radial parts and bounded symbols.

Expressions are parsed with :mod:`ast` and only a whitelist of nodes is
accepted: numbers, the variables ``r1..rn`` (radii), ``t1..tn`` (squared
radii), ``z1..zn`` (complex coordinates), ``pi``, ``i`` (imaginary unit),
the operators ``+ - * / ^ **`` and the functions

    exp log sqrt sin cos abs conj re im

``^`` means power, as in the usual math notation.
"""

from __future__ import annotations

import ast
import re
from typing import Callable

import numpy as np

FUNCTIONS = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "abs": np.abs,
    "conj": np.conj,
    "re": np.real,
    "im": np.imag,
}
CONSTANTS = {"pi": np.pi, "i": 1j}
_VAR = re.compile(r"([rtz])(\d+)$")
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


class ExpressionError(ValueError):
    pass


class _Compiler:
    def __init__(self, n: int, allowed: str):
        self.n = n
        self.allowed = allowed
        self.uses: set[str] = set()

    def visit(self, node) -> Callable:
        if isinstance(node, ast.Expression):
            return self.visit(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
            v = node.value
            return lambda env: v
        if isinstance(node, ast.Name):
            return self._name(node.id)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op = _BINOPS[type(node.op)]
            a, b = self.visit(node.left), self.visit(node.right)
            if isinstance(node.op, ast.Pow):
                return lambda env: _power(a(env), b(env))
            return lambda env: op(a(env), b(env))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            a = self.visit(node.operand)
            sign = -1 if isinstance(node.op, ast.USub) else 1
            return lambda env: sign * a(env)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
            name = node.func.id
            if name not in FUNCTIONS or len(node.args) != 1:
                raise ExpressionError(f"unknown function or wrong arity: {name}")
            f = FUNCTIONS[name]
            a = self.visit(node.args[0])
            return lambda env: f(a(env))
        raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")

    def _name(self, name: str) -> Callable:
        if name in CONSTANTS:
            v = CONSTANTS[name]
            return lambda env: v
        m = _VAR.match(name)
        if not m:
            raise ExpressionError(f"unknown name {name!r}")
        kind, j = m.group(1), int(m.group(2))
        if not 1 <= j <= self.n:
            raise ExpressionError(f"variable {name} out of range for n={self.n}")
        if kind not in self.allowed:
            raise ExpressionError(f"variable {name} not allowed here (use {', '.join(self.allowed)})")
        self.uses.add(kind)
        return lambda env: env[kind][:, j - 1]


def _power(a, b):
    a = np.asarray(a)
    if a.dtype.kind in "iub":
        a = a.astype(float)
    fractional = np.any(np.asarray(b) != np.round(np.real(b)))
    if np.isrealobj(a) and fractional and np.any(a < 0):
        a = a.astype(complex)  # principal branch
    return np.power(a, b)


def compile_expression(text: str, n: int, allowed: str = "rtz") -> Callable[[np.ndarray], np.ndarray]:
    """Compile ``text`` into ``f(points) -> values``.

    With ``allowed`` containing ``z`` the points are complex coordinates
    ``(N, n)``; otherwise they are radii.  Radii and squared radii are derived
    from the points as needed.
    """
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    comp = _Compiler(n, allowed)
    body = comp.visit(tree)
    complex_input = "z" in allowed

    def f(points):
        pts = np.atleast_2d(np.asarray(points, dtype=complex if complex_input else float))
        env = {}
        r = np.abs(pts) if complex_input else pts
        env["r"] = r
        env["t"] = r * r
        if complex_input:
            env["z"] = pts
        out = body(env)
        return np.broadcast_to(np.asarray(out, dtype=complex), (len(pts),)).copy()

    f.expression = text
    return f
