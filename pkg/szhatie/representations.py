"""Differential-operator realizations of the contraction families and their limits."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np
import sympy

from .algebra import (
    CASE_IDS,
    ContractionEdge,
    InvalidFamilyParameter,
    LieAlgebra3,
    UnknownCase,
    contraction_edge,
    family,
)
from .operators import DISC, LINE, PHI, POLAR, R, THETA, X, DiffOp, combine, rational
from .spaces import (
    BoundaryClass,
    Coordinates,
    Domain,
    Embedding,
    EmbeddingKind,
    FunctionSpace,
    Measure,
    MeasureKind,
    TestFunction,
    spherical_probe,
)
from .special import DomainError, bessel_j

logger = logging.getLogger(__name__)

ParamValue = Union[Fraction, int, str, float]


class InvalidParam(ValueError):
    """Raised when a parameter is missing, unknown or outside its range."""


class ScheduleKind(str, Enum):
    CONTINUOUS = "continuous"
    SEQUENTIAL_L = "sequential-l"
    SEQUENTIAL_N = "sequential-n"


def as_param(value: ParamValue) -> Fraction:
    if isinstance(value, float):
        return Fraction(repr(value))
    try:
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InvalidParam(f"Cannot read parameter value {value!r}") from exc


# --------------------------------------------------------------------------
# Parameters

# Constants each case accepts, with defaults.
CASE_PARAMETERS: dict[str, dict[str, Fraction]] = {
    "ea-to-h": {"A": Fraction(1)},
    "iso2-to-h": {"A": Fraction(1)},
    "g-lambda-to-h": {"A": Fraction(1), "lambda": Fraction(1, 2)},
    "l-lambda-to-h": {"A": Fraction(1), "lambda": Fraction(1, 2)},
    "c-to-h": {"A": Fraction(1)},
    "c-to-g1": {"a": Fraction(1), "b": Fraction(1)},
    "su2-to-iso2": {"R": Fraction(1)},
    "sl2-to-iso2": {"r": Fraction(1)},
    "sl2-to-h": {"A": Fraction(1)},
    "sl2-to-iso11": {"b": Fraction(1, 4), "sign": Fraction(1)},
}


@dataclass(frozen=True)
class ParamPath:
    """Case constants plus the ε-dependent parameters derived from them."""

    case_id: str
    constants: Mapping[str, Fraction]

    def __getitem__(self, name: str) -> Fraction:
        return self.constants[name]

    def at(self, eps: Fraction) -> dict[str, Fraction]:
        eps = as_param(eps)
        if eps <= 0:
            raise InvalidParam("eps must be positive")
        c = dict(self.constants)
        if self.case_id == "ea-to-h":
            c.update(a=c["A"] / eps, b=-c["A"] / eps)
        elif self.case_id == "iso2-to-h":
            c.update(r1=c["A"] / eps, r2=Fraction(0))
        elif self.case_id == "g-lambda-to-h":
            a = c["A"] / (eps * (1 - c["lambda"]))
            c.update(a=a, b=-a)
        elif self.case_id == "l-lambda-to-h":
            c.update(a=Fraction(0), b=c["A"] / eps)
        elif self.case_id == "c-to-h":
            c.update(a=c["A"] / eps, b=Fraction(0))
        elif self.case_id == "c-to-g1":
            c.update(b_eps=c["b"] / eps)
        elif self.case_id == "sl2-to-iso2":
            c.update(r_eps=-c["r"] / eps)
        elif self.case_id == "sl2-to-h":
            c.update(r_eps=c["A"] / eps)
        elif self.case_id == "su2-to-iso2":
            c.update(l=c["R"] / eps)
        elif self.case_id == "sl2-to-iso11":
            c.update(n_squared=4 * c["b"] / eps)
        return c

    def to_json(self) -> dict[str, str]:
        return {name: str(value) for name, value in sorted(self.constants.items())}


def case_parameters(case_id: str, overrides: Optional[Mapping[str, ParamValue]] = None) -> ParamPath:
    if case_id not in CASE_PARAMETERS:
        raise UnknownCase(f"Unknown contraction case '{case_id}'")
    constants = dict(CASE_PARAMETERS[case_id])
    for name, value in (overrides or {}).items():
        if value is None:
            continue
        if name not in constants:
            raise InvalidParam(f"Case {case_id} has no parameter '{name}'")
        constants[name] = as_param(value)
    _validate(case_id, constants)
    return ParamPath(case_id, constants)


def _validate(case_id: str, c: Mapping[str, Fraction]) -> None:
    if "A" in c and c["A"] == 0:
        raise InvalidParam("A must be nonzero")
    if case_id == "g-lambda-to-h" and c["lambda"] in (0, 1):
        raise InvalidParam("g(lambda) -> h requires lambda not in {0, 1}")
    if case_id == "l-lambda-to-h" and c["lambda"] == 0:
        raise InvalidParam("l(lambda) -> h requires lambda != 0")
    if case_id == "su2-to-iso2" and c["R"] <= 0:
        raise InvalidParam("R must be positive")
    if case_id == "sl2-to-iso2" and c["r"] == 0:
        raise InvalidParam("r must be nonzero")
    if case_id == "sl2-to-iso11":
        if c["b"] <= 0:
            raise InvalidParam("b must be positive")
        if c["sign"] not in (1, -1):
            raise InvalidParam("sign must be +1 or -1")


# --------------------------------------------------------------------------
# Realizations


@dataclass(frozen=True)
class RepRealization:
    algebra: LieAlgebra3
    space: FunctionSpace
    assign: tuple[DiffOp, DiffOp, DiffOp]
    label: str = ""

    @property
    def variables(self) -> tuple[sympy.Symbol, ...]:
        return self.assign[0].variables

    def operator(self, vector: Sequence[Union[int, Fraction]]) -> DiffOp:
        return combine(vector, self.assign)


def _line(*coefficients: Any) -> tuple[DiffOp, ...]:
    return tuple(DiffOp.from_mapping(LINE, c) for c in coefficients)


_I = sympy.I
_REAL_LINE = FunctionSpace(Domain.real_line())
_HALF_LINE = FunctionSpace(Domain.half_line(), Measure(MeasureKind.LOGARITHMIC))


def _heisenberg(A: Fraction) -> RepRealization:
    a = rational(A)
    assign = _line({(0,): _I * a}, {(0,): _I * a * X}, {(1,): 1})
    return RepRealization(family("h"), _REAL_LINE, assign, f"eta_h(A={A})")  # type: ignore[arg-type]


def _iso2_line(r1: Fraction, r2: Fraction, eps: Fraction, space: FunctionSpace) -> RepRealization:
    e, p, q = rational(eps), rational(r1), rational(r2)
    assign = _line(
        {(0,): _I * (p * sympy.sin(e * X) + q * sympy.cos(e * X))},
        {(0,): _I * (p * sympy.cos(e * X) - q * sympy.sin(e * X))},
        {(1,): 1 / e},
    )
    return RepRealization(family("l", 0), space, assign, f"rho_iso2(r1={r1},r2={r2},eps={eps})")  # type: ignore[arg-type]


def _principal_series(
    r: Fraction, shift: Fraction, eps: Fraction, space: FunctionSpace
) -> RepRealization:
    """sl2 principal series with s = i r + shift on the ε-rescaled circle."""

    e = rational(eps)
    s = _I * rational(r) + rational(shift)
    assign = _line(
        {(0,): -s * sympy.cos(e * X), (1,): sympy.sin(e * X) / e},
        {(0,): s * sympy.sin(e * X), (1,): sympy.cos(e * X) / e},
        {(1,): -1 / e},
    )
    return RepRealization(family("sl2"), space, assign, f"rho_sl2(r={r},shift={shift},eps={eps})")  # type: ignore[arg-type]


def _kirillov(n: int, sign: int) -> RepRealization:
    """Discrete series on L^2((0, ∞), dx/x); sign -1 is the conjugate branch."""

    c = rational(Fraction(n * n - 1, 4))
    rho_x = {(0,): sign * _I * X}
    rho_y = {(0,): sign * (-_I * c / X), (2,): sign * _I * X}
    rho_h = {(1,): 2 * X}
    half = sympy.Rational(1, 2)
    assign = _line(
        {order: half * (rho_x.get(order, 0) + rho_y.get(order, 0)) for order in ((0,), (2,))},
        {(1,): X},
        {order: half * (rho_y.get(order, 0) - rho_x.get(order, 0)) for order in ((0,), (2,))},
    )
    return RepRealization(family("sl2"), _HALF_LINE, assign, f"kirillov(n={n},sign={sign:+d})")  # type: ignore[arg-type]


def _su2_disc(eps: Fraction, degree: int) -> RepRealization:
    e = rational(eps)
    cot = sympy.cos(e * THETA) / sympy.sin(e * THETA)
    assign = (
        DiffOp.from_mapping(DISC, {(1, 0): sympy.sin(PHI) / e, (0, 1): cot * sympy.cos(PHI)}),
        DiffOp.from_mapping(DISC, {(1, 0): -sympy.cos(PHI) / e, (0, 1): cot * sympy.sin(PHI)}),
        DiffOp.from_mapping(DISC, {(0, 1): -1}),
    )
    space = FunctionSpace(Domain.deformed_disc(float(eps)), Measure.sphere(degree, float(eps)))
    return RepRealization(family("su2"), space, assign, f"rho_su2(l={degree},eps={eps})")


def _iso2_polar() -> RepRealization:
    assign = (
        DiffOp.from_mapping(POLAR, {(1, 0): -sympy.cos(PHI), (0, 1): sympy.sin(PHI) / R}),
        DiffOp.from_mapping(POLAR, {(1, 0): -sympy.sin(PHI), (0, 1): -sympy.cos(PHI) / R}),
        DiffOp.from_mapping(POLAR, {(0, 1): -1}),
    )
    space = FunctionSpace(Domain.polar_plane(), Measure(MeasureKind.POLAR))
    return RepRealization(family("l", 0), space, assign, "eta_iso2")


def _interval_space(eps: Fraction) -> FunctionSpace:
    half_width = math.pi / float(eps)
    return FunctionSpace(
        Domain.symmetric_interval(half_width),
        boundary_class=BoundaryClass.VANISHING_DERIVATIVES,
    )


_CIRCLE = FunctionSpace(Domain.symmetric_interval(math.pi))


def _require_case(case_id: str) -> None:
    if case_id not in CASE_IDS:
        raise UnknownCase(f"Unknown contraction case '{case_id}'")


def _su2_degree(params: ParamPath, eps: Fraction, index: Optional[int]) -> int:
    if index is not None:
        if index < 1:
            raise InvalidParam("Degree l must be positive")
        return int(index)
    degree = params.at(eps)["l"]
    if degree.denominator != 1 or degree < 1:
        raise InvalidParam(f"R/eps = {degree} is not a positive integer degree")
    return int(degree)


def _kirillov_index(params: ParamPath, eps: Fraction, index: Optional[int]) -> int:
    if index is not None:
        if index < 2:
            raise InvalidParam("Kirillov index n must be at least 2")
        return int(index)
    n_squared = params.at(eps)["n_squared"]
    n = math.isqrt(int(n_squared)) if n_squared.denominator == 1 else 0
    if n < 2 or n * n != n_squared:
        raise InvalidParam(f"4b/eps = {n_squared} is not the square of an integer n >= 2")
    return n


def realize(
    case_id: str, params: ParamPath, eps: ParamValue, index: Optional[int] = None
) -> RepRealization:
    """Family member ρ_ε of a case, already intertwined into its printed form.

    ``index`` is the degree l (su2) or the discrete-series index n (Kirillov);
    it defaults to the value determined by ``eps``.
    """

    _require_case(case_id)
    eps = as_param(eps)
    p = params.at(eps)
    e = rational(eps)
    if case_id == "ea-to-h":
        assign = _line(
            {(0,): _I * rational(p["b"]) * sympy.exp(-e * X)},
            {(0,): _I * rational(p["a"])},
            {(1,): -1 / e},
        )
        return RepRealization(family("ea"), _REAL_LINE, assign, f"rho_ea(eps={eps})")  # type: ignore[arg-type]
    if case_id == "iso2-to-h":
        return _iso2_line(p["r1"], p["r2"], eps, _interval_space(eps))
    if case_id == "g-lambda-to-h":
        lam = rational(p["lambda"])
        assign = _line(
            {(0,): _I * rational(p["a"]) * sympy.exp(e * X)},
            {(0,): _I * rational(p["b"]) * sympy.exp(lam * e * X)},
            {(1,): 1 / e},
        )
        return RepRealization(family("g", p["lambda"]), _REAL_LINE, assign, f"rho_g(eps={eps})")  # type: ignore[arg-type]
    if case_id == "l-lambda-to-h":
        lam = rational(p["lambda"])
        a, b = rational(p["a"]), rational(p["b"])
        growth = sympy.exp(lam * e * X)
        assign = _line(
            {(0,): _I * growth * (a * sympy.cos(e * X) + b * sympy.sin(e * X))},
            {(0,): _I * growth * (-a * sympy.sin(e * X) + b * sympy.cos(e * X))},
            {(1,): 1 / e},
        )
        return RepRealization(family("l", p["lambda"]), _REAL_LINE, assign, f"rho_l(eps={eps})")  # type: ignore[arg-type]
    if case_id == "c-to-h":
        a, b = rational(p["a"]), rational(p["b"])
        assign = _line(
            {(0,): _I * a * sympy.exp(e * X)},
            {(0,): _I * (a * e * X + b) * sympy.exp(e * X)},
            {(1,): 1 / e},
        )
        return RepRealization(family("c"), _REAL_LINE, assign, f"rho_c(eps={eps})")  # type: ignore[arg-type]
    if case_id == "c-to-g1":
        a, b = rational(p["a"]), rational(p["b_eps"])
        assign = _line(
            {(0,): _I * a * sympy.exp(X)},
            {(0,): _I * (a * X + b) * sympy.exp(X)},
            {(1,): 1},
        )
        return RepRealization(family("c"), _REAL_LINE, assign, f"rho_c(b/eps, eps={eps})")  # type: ignore[arg-type]
    if case_id == "su2-to-iso2":
        return _su2_disc(eps, _su2_degree(params, eps, index))
    if case_id == "sl2-to-iso2":
        return _principal_series(p["r_eps"], Fraction(1, 2), Fraction(1), _CIRCLE)
    if case_id == "sl2-to-h":
        return _principal_series(p["r_eps"], Fraction(-1, 2), eps, _interval_space(eps))
    return _kirillov(_kirillov_index(params, eps, index), int(p["sign"]))


def limit_representation(case_id: str, params: ParamPath) -> RepRealization:
    """The target representation η of a case."""

    _require_case(case_id)
    if case_id in ("ea-to-h", "iso2-to-h", "g-lambda-to-h", "l-lambda-to-h", "c-to-h", "sl2-to-h"):
        return _heisenberg(params["A"])
    if case_id == "c-to-g1":
        a, b = rational(params["a"]), rational(params["b"])
        assign = _line({(0,): _I * a * sympy.exp(X)}, {(0,): _I * b * sympy.exp(X)}, {(1,): 1})
        return RepRealization(family("g", 1), _REAL_LINE, assign, "rho_g1")  # type: ignore[arg-type]
    if case_id == "su2-to-iso2":
        return _iso2_polar()
    if case_id == "sl2-to-iso2":
        return _iso2_line(Fraction(0), params["r"], Fraction(1), _CIRCLE)
    sign = int(params["sign"])
    b = rational(sign * params["b"])
    assign = _line({(0,): sign * _I * X}, {(0,): -_I * b / X}, {(1,): X})
    return RepRealization(family("g", -1), _HALF_LINE, assign, f"rho_iso11(sign={sign:+d})")  # type: ignore[arg-type]


def commutator_residual(
    rep: RepRealization, probes: Sequence[TestFunction], grid: Coordinates
) -> float:
    """max |([ρ(X_i), ρ(X_j)] - ρ([X_i, X_j])) f| over pairs, probes and grid points."""

    worst = 0.0
    for i, j in itertools.combinations(range(3), 2):
        defect = rep.assign[i].commutator(rep.assign[j]) - rep.operator(rep.algebra.structure[i][j])
        if defect.is_zero:
            continue
        for probe in probes:
            values = defect.evaluate(probe, *grid)
            worst = max(worst, float(np.max(np.abs(values))))
    logger.debug("Невязка коммутаторов %s: %.3e", rep.label, worst)
    return worst


# --------------------------------------------------------------------------
# Ladder actions


Ladder = dict[int, complex]


def _generator_index(generator: Union[int, str]) -> int:
    names = {"X1": 0, "X2": 1, "X3": 2}
    if isinstance(generator, str):
        if generator not in names:
            raise DomainError(f"Unknown generator '{generator}'")
        return names[generator]
    if generator not in (0, 1, 2):
        raise DomainError(f"Unknown generator index {generator}")
    return generator


def su2_ladder(l: int, m: int, generator: Union[int, str]) -> Ladder:
    """Coefficients of ρ(X_k) χ^m_l on the basis χ^{m'}_l."""

    if l < 0 or abs(m) > l:
        raise DomainError(f"Invalid degree/order pair l={l}, m={m}")
    k = _generator_index(generator)
    if k == 2:
        return {m: 1j * m}
    down = math.sqrt((l + m) * (l - m + 1))
    up = math.sqrt((l - m) * (l + m + 1))
    result: Ladder = {}
    if k == 0:
        if down:
            result[m - 1] = 0.5 * down
        if up:
            result[m + 1] = -0.5 * up
    else:
        if down:
            result[m - 1] = -0.5j * down
        if up:
            result[m + 1] = -0.5j * up
    return result


def iso2_ladder(radius: float, m: int, generator: Union[int, str]) -> Ladder:
    """Coefficients of η(X_k) B_m on the basis B_{m'}."""

    if radius == 0:
        raise DomainError("R must be nonzero")
    k = _generator_index(generator)
    half = float(radius) / 2.0
    if k == 0:
        return {m - 1: -1j * half, m + 1: -1j * half}
    if k == 1:
        return {m + 1: -half, m - 1: half}
    return {m: -1j * m}


def ladder_consistency_residual(
    l: int, eps: ParamValue, grid: Coordinates, generators: Sequence[int] = (0, 1, 2)
) -> float:
    """Deviation between ρ(X_k) χ^m and the ladder combination, over |m| ≤ l."""

    eps = as_param(eps)
    rep = _su2_disc(eps, l)
    worst = 0.0
    for m in range(-l, l + 1):
        probe = spherical_probe(l, m, float(eps))
        for k in generators:
            direct = rep.assign[k].evaluate(probe, *grid)
            ladder = sum(
                (c * spherical_probe(l, target, float(eps))(*grid) for target, c in su2_ladder(l, m, k).items()),
                np.zeros_like(direct),
            )
            worst = max(worst, float(np.max(np.abs(direct - ladder))))
    return worst


# --------------------------------------------------------------------------
# Cases


@dataclass(frozen=True)
class ContractionCase:
    """A contraction edge together with its representation data."""

    case_id: str
    edge: ContractionEdge
    params: ParamPath
    schedule_kind: ScheduleKind
    embedding_kind: EmbeddingKind

    @property
    def generator_names(self) -> tuple[str, str, str]:
        return self.edge.generator_names

    @property
    def uses_basis(self) -> bool:
        return self.embedding_kind is EmbeddingKind.BASIS_INDEX_MAP

    def family(self, eps: ParamValue, index: Optional[int] = None) -> RepRealization:
        return realize(self.case_id, self.params, eps, index)

    def limit(self) -> RepRealization:
        return limit_representation(self.case_id, self.params)

    def scale(self, k: int, eps: ParamValue) -> Fraction:
        return self.edge.scaling.diagonal_entries()[k].evaluate(as_param(eps))

    def scaled_operator(self, k: int, eps: ParamValue, index: Optional[int] = None) -> DiffOp:
        """ρ_ε(t_ε Y_k) for the k-th adapted generator."""

        rep = self.family(eps, index)
        return rep.operator(self.edge.basis.column(k)) * rational(self.scale(k, eps))

    def target_operator(self, k: int) -> DiffOp:
        return self.limit().operator(self.edge.psi.column(k))

    def eps_for_index(self, index: int) -> Fraction:
        if self.schedule_kind is ScheduleKind.SEQUENTIAL_L:
            return self.params["R"] / index
        if self.schedule_kind is ScheduleKind.SEQUENTIAL_N:
            return 4 * self.params["b"] / (index * index)
        raise InvalidParam("Continuous cases are indexed by eps directly")

    def source_space(self, eps: ParamValue, index: Optional[int] = None) -> FunctionSpace:
        return self.family(eps, index).space

    def target_space(self) -> FunctionSpace:
        return self.limit().space

    def embedding(self, eps_from: ParamValue, eps_to: ParamValue, index_to: Optional[int] = None) -> Embedding:
        """φ from the ε_from member into the ε_to member."""

        if self.embedding_kind is EmbeddingKind.ZERO_EXTENSION:
            return Embedding.zero_extension(
                _interval_space(as_param(eps_from)).domain,
                _interval_space(as_param(eps_to)).domain,
            )
        if self.embedding_kind is EmbeddingKind.BASIS_INDEX_MAP:
            degree = _su2_degree(self.params, as_param(eps_to), index_to)
            return Embedding.basis_index_map(degree, float(as_param(eps_to)))
        return Embedding.identity()

    def limit_map(self, f: TestFunction) -> TestFunction:
        """L(f): the function itself for function-space cases, B_{-m} for χ^m."""

        if not self.uses_basis:
            return f
        if f.basis_index is None:
            raise InvalidParam("The su2 limit map acts on basis probes")
        _, m = f.basis_index
        return bessel_mode(-m, float(self.params["R"]))


def bessel_mode(n: int, radius: float) -> TestFunction:
    """B_n(r, φ) = i^n J_n(R r) e^{inφ} on the polar plane."""

    def derivative(order: tuple[int, ...], coords: Coordinates) -> np.ndarray:
        if order[0]:
            raise ValueError("Bessel modes expose φ-derivatives only")
        r, phi = coords
        return (1j) ** (n % 4) * bessel_j(n, radius * r) * np.exp(1j * n * phi) * (1j * n) ** order[1]

    return TestFunction(
        dimension=2,
        derivative_fn=derivative,
        label=f"B({n})",
        basis_index=(-1, n),
    )


_SCHEDULE_KIND = {
    "su2-to-iso2": ScheduleKind.SEQUENTIAL_L,
    "sl2-to-iso11": ScheduleKind.SEQUENTIAL_N,
}
_EMBEDDING_KIND = {
    "iso2-to-h": EmbeddingKind.ZERO_EXTENSION,
    "sl2-to-h": EmbeddingKind.ZERO_EXTENSION,
    "su2-to-iso2": EmbeddingKind.BASIS_INDEX_MAP,
}


def contraction_case(
    case_id: str, overrides: Optional[Mapping[str, ParamValue]] = None
) -> ContractionCase:
    params = case_parameters(case_id, overrides)
    lam = params.constants.get("lambda")
    try:
        edge = contraction_edge(case_id, lam)
    except InvalidFamilyParameter as exc:
        raise InvalidParam(str(exc)) from exc
    return ContractionCase(
        case_id=case_id,
        edge=edge,
        params=params,
        schedule_kind=_SCHEDULE_KIND.get(case_id, ScheduleKind.CONTINUOUS),
        embedding_kind=_EMBEDDING_KIND.get(case_id, EmbeddingKind.IDENTITY),
    )


__all__ = [
    "CASE_PARAMETERS",
    "ContractionCase",
    "InvalidParam",
    "ParamPath",
    "RepRealization",
    "ScheduleKind",
    "UnknownCase",
    "as_param",
    "bessel_mode",
    "case_parameters",
    "commutator_residual",
    "contraction_case",
    "iso2_ladder",
    "ladder_consistency_residual",
    "limit_representation",
    "realize",
    "su2_ladder",
]
