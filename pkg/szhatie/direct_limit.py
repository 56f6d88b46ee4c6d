"""Directed systems of inner-product spaces and matrix-element limits."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np

from .representations import CASE_PARAMETERS, InvalidParam, UnknownCase, iso2_ladder, su2_ladder
from .special import DomainError

logger = logging.getLogger(__name__)

_GENERATOR_NAMES = ("X1", "X2", "X3")
# ψ on the su2 → iso2 edge: X1 ↦ -X2, X2 ↦ X1, X3 ↦ X3.
_SU2_PSI = {0: ((1, -1.0),), 1: ((0, 1.0),), 2: ((2, 1.0),)}


@dataclass(frozen=True)
class DirectedSystem:
    """Totally ordered system; ``embedding(i, j)`` is the matrix of φ_ij."""

    indices: tuple[int, ...]
    dimension: Callable[[int], int]
    embedding_fn: Callable[[int, int], np.ndarray]
    labels: Optional[Callable[[int], Sequence[Any]]] = None
    name: str = ""

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("Directed system indices must be strictly increasing")

    def check_index(self, index: int) -> None:
        if index not in self.indices:
            raise ValueError(f"Index {index} is not part of {self.name or 'the system'}")

    def embedding(self, i: int, j: int) -> np.ndarray:
        self.check_index(i)
        self.check_index(j)
        if j < i:
            raise ValueError("Embeddings only go up the index order")
        return self.embedding_fn(i, j)

    def axiom_residual(self) -> float:
        """Deviation from φ_ii = 1, φ_jk φ_ij = φ_ik and isometry, over the index prefix."""

        worst = 0.0
        for a, i in enumerate(self.indices):
            identity = np.eye(self.dimension(i))
            worst = max(worst, float(np.max(np.abs(self.embedding(i, i) - identity))))
            for b, j in enumerate(self.indices[a:], start=a):
                phi_ij = self.embedding(i, j)
                worst = max(worst, float(np.max(np.abs(phi_ij.conj().T @ phi_ij - identity))))
                for k in self.indices[b:]:
                    composed = self.embedding(j, k) @ phi_ij
                    worst = max(worst, float(np.max(np.abs(composed - self.embedding(i, k)))))
        return worst


def _zero_padding(i: int, j: int) -> np.ndarray:
    matrix = np.zeros((j, i), dtype=complex)
    matrix[:i, :i] = np.eye(i)
    return matrix


def example_sequences(max_index: int = 8) -> DirectedSystem:
    """V_n = C^n with zero padding; the limit is the space of finitely supported sequences."""

    return DirectedSystem(
        indices=tuple(range(1, max_index + 1)),
        dimension=lambda n: n,
        embedding_fn=_zero_padding,
        name="finite sequences",
    )


def _centre_embedding(i: int, j: int) -> np.ndarray:
    matrix = np.zeros((2 * j + 1, 2 * i + 1), dtype=complex)
    for m in range(-i, i + 1):
        matrix[m + j, m + i] = 1.0
    return matrix


def spherical_system(l_values: Sequence[int]) -> DirectedSystem:
    """V_l = span{χ^m_l : |m| ≤ l} with φ_ij(χ^m_i) = χ^m_j; coordinates ordered by m."""

    return DirectedSystem(
        indices=tuple(int(l) for l in l_values),
        dimension=lambda l: 2 * l + 1,
        embedding_fn=_centre_embedding,
        labels=lambda l: list(range(-l, l + 1)),
        name="spherical harmonics",
    )


@dataclass(frozen=True)
class DLVector:
    index: int
    vector: tuple[complex, ...]

    @classmethod
    def of(cls, index: int, values: Sequence[Union[complex, float, int]]) -> DLVector:
        return cls(index, tuple(complex(v) for v in values))

    def as_array(self) -> np.ndarray:
        return np.array(self.vector, dtype=complex)


def _check(a: DLVector, sys: DirectedSystem) -> None:
    sys.check_index(a.index)
    if len(a.vector) != sys.dimension(a.index):
        raise ValueError(f"Vector length {len(a.vector)} does not match V_{a.index}")


def push(a: DLVector, k: int, sys: DirectedSystem) -> DLVector:
    _check(a, sys)
    image = sys.embedding(a.index, k) @ a.as_array()
    return DLVector(k, tuple(complex(v) for v in image))


def _common(a: DLVector, b: DLVector, sys: DirectedSystem, k: Optional[int]) -> tuple[np.ndarray, np.ndarray]:
    upper = max(a.index, b.index) if k is None else k
    if upper < max(a.index, b.index):
        raise ValueError("The common index must dominate both vectors")
    return push(a, upper, sys).as_array(), push(b, upper, sys).as_array()


def dl_equal(a: DLVector, b: DLVector, sys: DirectedSystem, *, tolerance: float = 0.0) -> bool:
    left, right = _common(a, b, sys, None)
    return bool(np.all(np.abs(left - right) <= tolerance))


def dl_inner(a: DLVector, b: DLVector, sys: DirectedSystem, k: Optional[int] = None) -> complex:
    """Linear in ``a``, conjugate-linear in ``b``, evaluated at a common upper index."""

    left, right = _common(a, b, sys, k)
    return complex(np.vdot(right, left))


def dl_add(a: DLVector, b: DLVector, sys: DirectedSystem) -> DLVector:
    left, right = _common(a, b, sys, None)
    return DLVector(max(a.index, b.index), tuple(complex(v) for v in left + right))


def dl_scale(c: complex, a: DLVector, sys: DirectedSystem) -> DLVector:
    _check(a, sys)
    return DLVector(a.index, tuple(complex(c) * v for v in a.vector))


# --------------------------------------------------------------------------
# su2 → iso2 matrix elements


def _generator(generator: Union[int, str]) -> int:
    if isinstance(generator, str):
        if generator not in _GENERATOR_NAMES:
            raise DomainError(f"Unknown generator '{generator}'")
        return _GENERATOR_NAMES.index(generator)
    return int(generator)


def _su2_scale(k: int, radius: float, l: int) -> float:
    return radius / l if k in (0, 1) else 1.0


def finite_matrix_element(radius: float, m: int, s: int, generator: Union[int, str], l: int) -> complex:
    """Coefficient of χ^m_l in ρ_l(t_{R/l} Y) χ^s_l."""

    k = _generator(generator)
    if abs(m) > l or abs(s) > l:
        raise DomainError(f"Orders {m}, {s} exceed degree {l}")
    return _su2_scale(k, radius, l) * su2_ladder(l, s, k).get(m, 0j)


def target_matrix_element(radius: float, m: int, s: int, generator: Union[int, str]) -> complex:
    """Coefficient of B_{-m} in η(ψ Y) B_{-s}."""

    k = _generator(generator)
    total = 0j
    for j, weight in _SU2_PSI[k]:
        total += weight * iso2_ladder(radius, -s, j).get(-m, 0j)
    return total


@dataclass(frozen=True)
class MatrixElementSeries:
    generator: str
    m: int
    s: int
    values: tuple[tuple[int, complex], ...]
    target: complex

    @property
    def final_error(self) -> float:
        return abs(self.values[-1][1] - self.target)

    def as_dict(self) -> dict[str, Any]:
        return {
            "generator": self.generator,
            "m": self.m,
            "s": self.s,
            "target": [self.target.real, self.target.imag],
            "values": [
                {"im": value.imag, "l": l, "re": value.real, "abs_error": abs(value - self.target)}
                for l, value in self.values
            ],
        }


def matrix_element_limit(
    radius: float, m: int, s: int, generator: Union[int, str], l_schedule: Sequence[int]
) -> MatrixElementSeries:
    if not l_schedule:
        raise DomainError("Empty degree schedule")
    if max(abs(m), abs(s)) > min(l_schedule):
        raise DomainError("Orders must not exceed the smallest degree of the schedule")
    k = _generator(generator)
    values = tuple((int(l), finite_matrix_element(radius, m, s, k, int(l))) for l in l_schedule)
    return MatrixElementSeries(_GENERATOR_NAMES[k], m, s, values, target_matrix_element(radius, m, s, k))


def matrix_element_table(
    radius: float, m_max: int, l_schedule: Sequence[int], generators: Sequence[int] = (0, 1, 2)
) -> list[MatrixElementSeries]:
    return [
        matrix_element_limit(radius, m, s, k, l_schedule)
        for k in generators
        for m in range(-m_max, m_max + 1)
        for s in range(-m_max, m_max + 1)
    ]


def compatible_bases_check(case_id: str, l_schedule: Sequence[int]) -> dict[str, Any]:
    """Basis compatibility of the embeddings and the finite-span condition of the ladders."""

    if case_id not in CASE_PARAMETERS:
        raise UnknownCase(f"Unknown contraction case '{case_id}'")
    if case_id != "su2-to-iso2":
        return {
            "case": case_id,
            "has_compatible_basis": False,
            "note": "no compatible basis family is declared for this case",
            "passed": True,
        }
    system = spherical_system(l_schedule)
    indexing_ok = True
    for a, i in enumerate(system.indices):
        for j in system.indices[a:]:
            phi = system.embedding(i, j)
            for m in range(-i, i + 1):
                column = phi[:, m + i]
                expected = np.zeros(2 * j + 1)
                expected[m + j] = 1.0
                indexing_ok = indexing_ok and bool(np.array_equal(column, expected))
    spans: dict[str, int] = {}
    smallest = min(l_schedule)
    for k, name in enumerate(_GENERATOR_NAMES):
        reach: set[int] = set()
        for l in l_schedule:
            for m in range(-smallest, smallest + 1):
                reach_m = {target - m for target, c in su2_ladder(l, m, k).items() if c != 0}
                reach |= reach_m
        spans[name] = len(reach)
    span_ok = spans["X1"] <= 2 and spans["X2"] <= 2 and spans["X3"] <= 1
    return {
        "axiom_residual": system.axiom_residual(),
        "case": case_id,
        "has_compatible_basis": True,
        "indexing": indexing_ok,
        "passed": indexing_ok and span_ok,
        "spans": spans,
    }


def limit_intertwiner(case_id: str, radius: float = 1.0) -> Callable[[int], int]:
    """K([χ^m]) = L(χ^m) = B_{-m}; returns the map on basis orders."""

    if case_id != "su2-to-iso2":
        raise InvalidParam(f"No explicit intertwiner is exhibited for {case_id}")
    if radius <= 0:
        raise InvalidParam("R must be positive")
    return lambda m: -m


def matrix_elements_section(radius: float, m_max: int, l_schedule: Sequence[int], tolerance: float) -> dict[str, Any]:
    series = matrix_element_table(radius, m_max, l_schedule)
    worst = max(item.final_error for item in series)
    logger.debug("Максимальное отклонение матричных элементов: %.3e", worst)
    return {
        "final_error": worst,
        "passed": worst <= tolerance,
        "series": [item.as_dict() for item in series],
        "tolerance": tolerance,
    }


__all__ = [
    "DLVector",
    "DirectedSystem",
    "MatrixElementSeries",
    "compatible_bases_check",
    "dl_add",
    "dl_equal",
    "dl_inner",
    "dl_scale",
    "example_sequences",
    "finite_matrix_element",
    "limit_intertwiner",
    "matrix_element_limit",
    "matrix_element_table",
    "matrix_elements_section",
    "push",
    "spherical_system",
    "target_matrix_element",
]
