"""A small analytic expression grammar for scenario files.

Scenario JSON describes frame seeds, metric coefficients and windows as
strings like ``"exp(2*t1*sin(x)) * (2 + sin(x))"``.  The grammar admits
+, -, *, /, **, the functions sin/cos/exp/sqrt/log, numeric constants,
coordinates and named parameters.  Compiled expressions evaluate on
:class:`~mixedcurv.jets.Jet` inputs, so every scenario-defined field carries
exact first and second derivatives.
"""

from __future__ import annotations

import ast

import numpy as np

from .jets import Jet

__all__ = ["ScenarioParseError", "compile_expression", "coordinate_names"]


class ScenarioParseError(ValueError):
    """Raised when a scenario file or expression does not parse."""


_FUNCS = {
    "sin": (lambda a: a.sin(), np.sin),
    "cos": (lambda a: a.cos(), np.cos),
    "exp": (lambda a: a.exp(), np.exp),
    "sqrt": (lambda a: a.sqrt(), np.sqrt),
    "log": (lambda a: a.log(), np.log),
}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
}


def coordinate_names(n):
    """Accepted spellings per axis: x,y,z(,w) plus x1..xn."""
    letters = ["x", "y", "z", "w"]
    names = []
    for m in range(n):
        spellings = [f"x{m + 1}"]
        if m < len(letters):
            spellings.append(letters[m])
        names.append(spellings)
    return names


def compile_expression(src, n, param_names=()):
    """Compile ``src`` to a callable ``f(coords, params) -> Jet | float``.

    ``coords`` is the coordinate jet of shape (n,); ``params`` maps parameter
    names to floats.
    """
    try:
        tree = ast.parse(str(src), mode="eval")
    except SyntaxError as exc:
        raise ScenarioParseError(f"cannot parse expression {src!r}: {exc}") from exc

    axis_of = {}
    for m, spellings in enumerate(coordinate_names(n)):
        for s in spellings:
            axis_of[s] = m
    params = set(param_names)

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ScenarioParseError(f"operator not allowed in {src!r}")
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.UAdd, ast.USub)):
                raise ScenarioParseError(f"operator not allowed in {src!r}")
            check(node.operand)
        elif isinstance(node, ast.Call):
            if (
                not isinstance(node.func, ast.Name)
                or node.func.id not in _FUNCS
                or len(node.args) != 1
                or node.keywords
            ):
                raise ScenarioParseError(f"function not allowed in {src!r}")
            check(node.args[0])
        elif isinstance(node, ast.Name):
            if node.id not in axis_of and node.id not in params and node.id != "pi":
                raise ScenarioParseError(
                    f"unknown name {node.id!r} in expression {src!r}"
                )
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)):
                raise ScenarioParseError(f"non-numeric constant in {src!r}")
        else:
            raise ScenarioParseError(
                f"construct {type(node).__name__} not allowed in {src!r}"
            )

    check(tree)

    def evaluate(coords, param_values=None):
        param_values = param_values or {}

        def ev(node):
            if isinstance(node, ast.Expression):
                return ev(node.body)
            if isinstance(node, ast.BinOp):
                return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
            if isinstance(node, ast.UnaryOp):
                val = ev(node.operand)
                return -val if isinstance(node.op, ast.USub) else val
            if isinstance(node, ast.Call):
                arg = ev(node.args[0])
                jet_fn, np_fn = _FUNCS[node.func.id]
                return jet_fn(arg) if isinstance(arg, Jet) else np_fn(arg)
            if isinstance(node, ast.Name):
                if node.id == "pi":
                    return np.pi
                if node.id in axis_of:
                    return coords[axis_of[node.id]]
                return float(param_values[node.id])
            if isinstance(node, ast.Constant):
                return float(node.value)
            raise AssertionError("unreachable: node validated at compile time")

        return ev(tree)

    evaluate.source = str(src)
    return evaluate
