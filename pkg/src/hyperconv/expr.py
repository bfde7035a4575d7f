"""Tiny arithmetic expression language for custom Sturm-Liouville functions.

Expressions use the single variable ``x``, numbers, ``+ - * / ^`` and the
functions ``sinh cosh exp log pow``.  They compile to numpy-vectorized
callables.  Parsing is delegated to :mod:`ast` after mapping ``^`` to
``**``; only whitelisted node types are accepted.
"""
from __future__ import annotations

import ast
import operator
from typing import Callable

import numpy as np

from .errors import ModelFileError

_FUNCTIONS = {
    "sinh": np.sinh,
    "cosh": np.cosh,
    "exp": np.exp,
    "log": np.log,
    "pow": np.power,
}

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: np.power,
}

_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def _build(node: ast.AST) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(node, ast.Expression):
        return _build(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        value = float(node.value)
        return lambda x: np.full_like(x, value, dtype=float)
    if isinstance(node, ast.Name):
        if node.id != "x":
            raise ModelFileError(f"unknown variable {node.id!r} (only 'x' is allowed)")
        return lambda x: x
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _build(node.left), _build(node.right)
        return lambda x: op(left(x), right(x))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        op = _UNARY[type(node.op)]
        inner = _build(node.operand)
        return lambda x: op(inner(x))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = node.func.id
        if name not in _FUNCTIONS or node.keywords:
            raise ModelFileError(f"unsupported function {name!r}")
        arity = 2 if name == "pow" else 1
        if len(node.args) != arity:
            raise ModelFileError(f"{name} takes {arity} argument(s)")
        fn = _FUNCTIONS[name]
        args = [_build(a) for a in node.args]
        return lambda x: fn(*(a(x) for a in args))
    raise ModelFileError(f"unsupported syntax in expression: {ast.dump(node)}")


def compile_expression(text: str) -> Callable[[np.ndarray], np.ndarray]:
    """Compile ``text`` into a function of a float array ``x``."""
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ModelFileError(f"cannot parse expression {text!r}: {exc.msg}") from None
    body = _build(tree)

    def fn(x):
        arr = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return body(arr)

    return fn
