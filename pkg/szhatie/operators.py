"""Differential operators with symbolic coefficients."""

from __future__ import annotations

import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Callable, Mapping, Sequence, Union

import numpy as np
import numpy.typing as npt
import sympy

from .spaces import Coordinates, TestFunction

logger = logging.getLogger(__name__)

X, THETA, PHI, R = sympy.symbols("x theta phi r", real=True)
LINE = (X,)
DISC = (THETA, PHI)
POLAR = (R, PHI)

Order = tuple[int, ...]
Scalar = Union[int, Fraction, complex, sympy.Expr]


class SingularPoint(RuntimeError):
    """Raised when a coefficient is evaluated at one of its singularities."""


def rational(value: Union[int, Fraction]) -> sympy.Rational:
    value = Fraction(value)
    return sympy.Rational(value.numerator, value.denominator)


def _sympify(value: Scalar) -> sympy.Expr:
    if isinstance(value, Fraction):
        return rational(value)
    return sympy.sympify(value)


def _differentiate(expr: sympy.Expr, variables: Sequence[sympy.Symbol], order: Order) -> sympy.Expr:
    spec = [(var, n) for var, n in zip(variables, order) if n]
    if not spec:
        return expr
    return sympy.diff(expr, *spec)


@dataclass(frozen=True)
class DiffOp:
    """Σ c_α(p) ∂^α with coefficients in the given variables.

    ``terms`` is sorted by multi-index and never holds a structurally zero
    coefficient.
    """

    variables: tuple[sympy.Symbol, ...]
    terms: tuple[tuple[Order, sympy.Expr], ...]

    @classmethod
    def from_mapping(
        cls, variables: Sequence[sympy.Symbol], mapping: Mapping[Order, Scalar]
    ) -> DiffOp:
        terms = []
        for order in sorted(mapping):
            expr = _sympify(mapping[order])
            if expr == 0:
                continue
            if len(order) != len(variables):
                raise ValueError("Derivative order does not match the variables")
            terms.append((tuple(order), expr))
        return cls(tuple(variables), tuple(terms))

    @classmethod
    def zero(cls, variables: Sequence[sympy.Symbol]) -> DiffOp:
        return cls(tuple(variables), ())

    @classmethod
    def multiplication(cls, coefficient: Scalar, variables: Sequence[sympy.Symbol]) -> DiffOp:
        return cls.from_mapping(variables, {(0,) * len(variables): coefficient})

    @classmethod
    def partial(
        cls, order: Order, variables: Sequence[sympy.Symbol], coefficient: Scalar = 1
    ) -> DiffOp:
        return cls.from_mapping(variables, {tuple(order): coefficient})

    @property
    def dimension(self) -> int:
        return len(self.variables)

    @property
    def order(self) -> int:
        return max((sum(order) for order, _ in self.terms), default=0)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, order: Order) -> sympy.Expr:
        for term_order, expr in self.terms:
            if term_order == tuple(order):
                return expr
        return sympy.Integer(0)

    def _check_compatible(self, other: DiffOp) -> None:
        if self.variables != other.variables:
            raise ValueError("Operators act on different variables")

    def __add__(self, other: DiffOp) -> DiffOp:
        self._check_compatible(other)
        merged: dict[Order, Any] = defaultdict(lambda: sympy.Integer(0))
        for order, expr in self.terms + other.terms:
            merged[order] += expr
        return DiffOp.from_mapping(self.variables, merged)

    def __neg__(self) -> DiffOp:
        return DiffOp(self.variables, tuple((order, -expr) for order, expr in self.terms))

    def __sub__(self, other: DiffOp) -> DiffOp:
        return self + (-other)

    def __mul__(self, scalar: Scalar) -> DiffOp:
        factor = _sympify(scalar)
        return DiffOp.from_mapping(
            self.variables, {order: factor * expr for order, expr in self.terms}
        )

    __rmul__ = __mul__

    def __matmul__(self, other: DiffOp) -> DiffOp:
        """Composition ``self ∘ other``, expanded with the Leibniz rule."""

        self._check_compatible(other)
        result: dict[Order, Any] = defaultdict(lambda: sympy.Integer(0))
        for alpha, a in self.terms:
            for beta, b in other.terms:
                for gamma in itertools.product(*(range(k + 1) for k in alpha)):
                    rest = tuple(al - g for al, g in zip(alpha, gamma))
                    db = _differentiate(b, self.variables, rest)
                    if db == 0:
                        continue
                    weight = math.prod(math.comb(al, g) for al, g in zip(alpha, gamma))
                    order = tuple(bb + g for bb, g in zip(beta, gamma))
                    result[order] += weight * a * db
        return DiffOp.from_mapping(self.variables, result)

    def commutator(self, other: DiffOp) -> DiffOp:
        return (self @ other) - (other @ self)

    @cached_property
    def _compiled(self) -> tuple[tuple[Order, Callable[..., Any]], ...]:
        return tuple(
            (order, sympy.lambdify(self.variables, expr, modules="numpy"))
            for order, expr in self.terms
        )

    def evaluate(self, f: TestFunction, *coords: npt.ArrayLike) -> np.ndarray:
        """Pointwise Σ c_α(p) (∂^α f)(p)."""

        arrays = tuple(np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in coords)))
        shape = arrays[0].shape
        total = np.zeros(shape, dtype=complex)
        for (order, fn), (_, expr) in zip(self._compiled, self.terms):
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                coefficient = np.broadcast_to(np.asarray(fn(*arrays), dtype=complex), shape)
            if not np.all(np.isfinite(coefficient)):
                raise SingularPoint(f"Coefficient {expr} is singular on the evaluation grid")
            total = total + coefficient * f.derivative(order, *arrays)
        return total

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for order, expr in self.terms:
            derivative = "".join(
                f"d{var}" + (f"^{n}" if n > 1 else "")
                for var, n in zip(self.variables, order)
                if n
            )
            parts.append(f"({expr})" + (f"*{derivative}" if derivative else ""))
        return " + ".join(parts)


def apply(op: DiffOp, f: TestFunction) -> TestFunction:
    """``op f`` as a test function; its derivatives are ``(∂^δ ∘ op) f``."""

    if op.dimension != f.dimension:
        raise ValueError("Operator and function dimensions differ")
    composed: dict[Order, DiffOp] = {}

    def derivative(order: tuple[int, ...], coords: Coordinates) -> np.ndarray:
        if order not in composed:
            if any(order):
                composed[order] = DiffOp.partial(order, op.variables) @ op
            else:
                composed[order] = op
        return composed[order].evaluate(f, *coords)

    return TestFunction(
        dimension=f.dimension,
        derivative_fn=derivative,
        support=f.support,
        label=f"op({f.label})",
    )


def combine(
    vector: Sequence[Union[int, Fraction]], operators: Sequence[DiffOp]
) -> DiffOp:
    """Σ v_i operators[i]."""

    total = DiffOp.zero(operators[0].variables)
    for coefficient, op in zip(vector, operators):
        if coefficient:
            total = total + op * rational(coefficient)
    return total


__all__ = [
    "DISC",
    "DiffOp",
    "LINE",
    "PHI",
    "POLAR",
    "R",
    "SingularPoint",
    "THETA",
    "X",
    "apply",
    "combine",
    "rational",
]
