from __future__ import annotations

import itertools
import logging
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

logger = logging.getLogger(__name__)

RationalLike = Union[Fraction, int, str]
Vector3 = tuple[Fraction, Fraction, Fraction]
Structure = tuple[tuple[Vector3, Vector3, Vector3], ...]

ZERO_VECTOR: Vector3 = (Fraction(0), Fraction(0), Fraction(0))
DEFAULT_BASIS_NAMES = ("X1", "X2", "X3")

FAMILY_TAGS = ("ab", "h", "ea", "g", "c", "l", "su2", "sl2")
PARAMETRISED_TAGS = frozenset({"g", "l"})
FAMILY_ALIASES: dict[str, tuple[str, Optional[Fraction]]] = {
    "iso2": ("l", Fraction(0)),
    "iso(2)": ("l", Fraction(0)),
    "iso11": ("g", Fraction(-1)),
    "iso(1,1)": ("g", Fraction(-1)),
}


class NotALieAlgebra(ValueError):
    """Raised when structure constants violate antisymmetry or the Jacobi identity."""


class SingularMap(ValueError):
    """Raised when a linear or scaling map is not invertible."""


class InvalidFamilyParameter(ValueError):
    """Raised when a catalog family is requested with an unsupported parameter."""


class ClassificationError(ValueError):
    """Raised when an algebra cannot be matched to a rational catalog representative."""


class ScalingParseError(ValueError):
    """Raised when a textual scaling specification is malformed."""


class UnknownCase(ValueError):
    """Raised for a case identifier outside the contraction graph."""


class DivergenceError(RuntimeError):
    """Raised when a scaled bracket keeps negative powers of epsilon."""

    def __init__(self, entries: Sequence[tuple[int, int, int, int]]) -> None:
        self.entries = tuple(entries)
        described = ", ".join(
            f"[X{i},X{j}] component {k} ~ e^{exponent}"
            for i, j, k, exponent in self.entries
        )
        super().__init__(f"Contraction diverges: {described}")


def as_rational(value: RationalLike) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("Floating point values are not accepted in exact algebra")
    return Fraction(value)


def as_vector(values: Iterable[RationalLike]) -> Vector3:
    items = tuple(as_rational(value) for value in values)
    if len(items) != 3:
        raise ValueError(f"Expected a 3-vector, got {len(items)} components")
    return items  # type: ignore[return-value]


def basis_vector(index: int) -> Vector3:
    return tuple(Fraction(1 if k == index else 0) for k in range(3))  # type: ignore[return-value]


def _is_zero(vector: Sequence[Fraction]) -> bool:
    return all(component == 0 for component in vector)


def _add(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vector3:
    return tuple(a + b for a, b in zip(u, v))  # type: ignore[return-value]


def _scale(factor: Fraction, v: Sequence[Fraction]) -> Vector3:
    return tuple(factor * a for a in v)  # type: ignore[return-value]


# --------------------------------------------------------------------------
# Laurent arithmetic in the contraction parameter


@dataclass(frozen=True)
class LaurentMonomial:
    """A single term ``coeff * e**exponent``; the zero monomial has exponent 0."""

    coeff: Fraction
    exponent: int = 0

    def __post_init__(self) -> None:
        coeff = as_rational(self.coeff)
        object.__setattr__(self, "coeff", coeff)
        object.__setattr__(self, "exponent", int(self.exponent) if coeff != 0 else 0)

    @property
    def is_zero(self) -> bool:
        return self.coeff == 0

    def __mul__(self, other: LaurentMonomial) -> LaurentMonomial:
        return LaurentMonomial(self.coeff * other.coeff, self.exponent + other.exponent)

    def inverse(self) -> LaurentMonomial:
        if self.is_zero:
            raise SingularMap("The zero monomial has no inverse")
        return LaurentMonomial(1 / self.coeff, -self.exponent)

    def as_poly(self) -> LaurentPoly:
        return LaurentPoly.from_mapping({self.exponent: self.coeff})

    def evaluate(self, eps: Fraction) -> Fraction:
        return self.coeff * Fraction(eps) ** self.exponent

    def to_json(self) -> dict[str, Any]:
        return {"coeff": str(self.coeff), "exp": self.exponent}

    @classmethod
    def from_json(cls, payload: Mapping[str, Any]) -> LaurentMonomial:
        try:
            return cls(as_rational(str(payload["coeff"])), int(payload.get("exp", 0)))
        except (KeyError, ValueError, ZeroDivisionError) as exc:
            raise ScalingParseError(f"Invalid monomial payload {payload!r}") from exc

    _PATTERN = re.compile(
        r"^(?P<sign>[-+])?(?P<coeff>\d+(?:/\d+)?)?(?P<eps>e(?:\^(?P<exp>-?\d+))?)?$"
    )

    @classmethod
    def parse(cls, text: str) -> LaurentMonomial:
        """Parse ``[-]q[e^k]`` (``e`` alone means ``e^1``)."""

        cleaned = text.strip().replace(" ", "")
        match = cls._PATTERN.match(cleaned)
        if not cleaned or match is None or not (match["coeff"] or match["eps"]):
            raise ScalingParseError(f"Cannot parse monomial '{text}'")
        try:
            coeff = Fraction(match["coeff"]) if match["coeff"] else Fraction(1)
        except ZeroDivisionError as exc:
            raise ScalingParseError(f"Zero denominator in '{text}'") from exc
        if match["sign"] == "-":
            coeff = -coeff
        exponent = 0
        if match["eps"]:
            exponent = int(match["exp"]) if match["exp"] is not None else 1
        return cls(coeff, exponent)

    def __str__(self) -> str:
        if self.exponent == 0:
            return str(self.coeff)
        power = "e" if self.exponent == 1 else f"e^{self.exponent}"
        if self.coeff == 1:
            return power
        if self.coeff == -1:
            return f"-{power}"
        return f"{self.coeff}{power}"


@dataclass(frozen=True)
class LaurentPoly:
    """Finite Laurent polynomial in e, stored as sorted ``(exponent, coeff)`` pairs."""

    terms: tuple[tuple[int, Fraction], ...] = ()

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, Fraction]) -> LaurentPoly:
        return cls(
            tuple(
                (exponent, coeff)
                for exponent, coeff in sorted(mapping.items())
                if coeff != 0
            )
        )

    @classmethod
    def constant(cls, value: RationalLike) -> LaurentPoly:
        return cls.from_mapping({0: as_rational(value)})

    def as_mapping(self) -> dict[int, Fraction]:
        return dict(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def lowest_exponent(self) -> Optional[int]:
        return self.terms[0][0] if self.terms else None

    @property
    def has_negative_exponents(self) -> bool:
        return bool(self.terms) and self.terms[0][0] < 0

    def coefficient(self, exponent: int) -> Fraction:
        return self.as_mapping().get(exponent, Fraction(0))

    @property
    def constant_term(self) -> Fraction:
        return self.coefficient(0)

    def as_monomial(self) -> Optional[LaurentMonomial]:
        if len(self.terms) != 1:
            return None
        exponent, coeff = self.terms[0]
        return LaurentMonomial(coeff, exponent)

    def __add__(self, other: LaurentPoly) -> LaurentPoly:
        merged = self.as_mapping()
        for exponent, coeff in other.terms:
            merged[exponent] = merged.get(exponent, Fraction(0)) + coeff
        return LaurentPoly.from_mapping(merged)

    def __neg__(self) -> LaurentPoly:
        return LaurentPoly(tuple((exponent, -coeff) for exponent, coeff in self.terms))

    def __sub__(self, other: LaurentPoly) -> LaurentPoly:
        return self + (-other)

    def __mul__(self, other: Union[LaurentPoly, Fraction, int]) -> LaurentPoly:
        if not isinstance(other, LaurentPoly):
            factor = as_rational(other)
            return LaurentPoly.from_mapping(
                {exponent: coeff * factor for exponent, coeff in self.terms}
            )
        product: dict[int, Fraction] = {}
        for (e1, c1), (e2, c2) in itertools.product(self.terms, other.terms):
            product[e1 + e2] = product.get(e1 + e2, Fraction(0)) + c1 * c2
        return LaurentPoly.from_mapping(product)

    __rmul__ = __mul__

    def evaluate(self, eps: Fraction) -> Fraction:
        return sum(
            (coeff * Fraction(eps) ** exponent for exponent, coeff in self.terms),
            Fraction(0),
        )


_POLY_ZERO = LaurentPoly()


# --------------------------------------------------------------------------
# Algebras and maps


@dataclass(frozen=True)
class LieAlgebra3:
    """Three-dimensional real Lie algebra; ``structure[i][j]`` is ``[X_i, X_j]``."""

    label: str
    structure: Structure
    lam: Optional[Fraction] = None
    basis_names: tuple[str, str, str] = DEFAULT_BASIS_NAMES

    def __post_init__(self) -> None:
        if len(self.structure) != 3 or any(len(row) != 3 for row in self.structure):
            raise NotALieAlgebra("Structure constants must form a 3x3x3 array")
        normalised = tuple(
            tuple(as_vector(entry) for entry in row) for row in self.structure
        )
        object.__setattr__(self, "structure", normalised)
        if self.lam is not None:
            object.__setattr__(self, "lam", as_rational(self.lam))
        object.__setattr__(self, "basis_names", tuple(self.basis_names))
        for i, j in itertools.product(range(3), repeat=2):
            if normalised[i][j] != tuple(-c for c in normalised[j][i]):
                raise NotALieAlgebra(
                    f"Structure constants are not antisymmetric at ({i + 1}, {j + 1})"
                )

    @classmethod
    def from_brackets(
        cls,
        label: str,
        brackets: Mapping[tuple[int, int], Sequence[RationalLike]],
        *,
        lam: Optional[RationalLike] = None,
        basis_names: tuple[str, str, str] = DEFAULT_BASIS_NAMES,
    ) -> LieAlgebra3:
        """Build from nonvanishing brackets keyed by 1-based pairs ``(i, j)``."""

        table = [[ZERO_VECTOR for _ in range(3)] for _ in range(3)]
        for (i, j), value in brackets.items():
            vector = as_vector(value)
            table[i - 1][j - 1] = vector
            table[j - 1][i - 1] = tuple(-c for c in vector)  # type: ignore[assignment]
        return cls(
            label=label,
            structure=tuple(tuple(row) for row in table),  # type: ignore[arg-type]
            lam=None if lam is None else as_rational(lam),
            basis_names=basis_names,
        )

    def constant(self, i: int, j: int, k: int) -> Fraction:
        """Return ``c^k_{ij}`` with 0-based indices."""

        return self.structure[i][j][k]

    @property
    def display_name(self) -> str:
        if self.lam is None:
            return self.label
        return f"{self.label}({self.lam})"


@dataclass(frozen=True)
class LinearMap3:
    """Rational 3x3 matrix acting on coordinate columns; column ``i`` is the image of ``X_i``."""

    matrix: tuple[Vector3, Vector3, Vector3]

    def __post_init__(self) -> None:
        if len(self.matrix) != 3:
            raise ValueError("A 3x3 matrix is required")
        object.__setattr__(
            self, "matrix", tuple(as_vector(row) for row in self.matrix)
        )

    @classmethod
    def identity(cls) -> LinearMap3:
        return cls(tuple(basis_vector(i) for i in range(3)))  # type: ignore[arg-type]

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[RationalLike]]) -> LinearMap3:
        cols = [as_vector(column) for column in columns]
        return cls(tuple(tuple(cols[c][r] for c in range(3)) for r in range(3)))  # type: ignore[arg-type]

    def column(self, index: int) -> Vector3:
        return tuple(self.matrix[r][index] for r in range(3))  # type: ignore[return-value]

    def apply(self, vector: Sequence[RationalLike]) -> Vector3:
        v = as_vector(vector)
        return tuple(
            sum((self.matrix[r][c] * v[c] for c in range(3)), Fraction(0))
            for r in range(3)
        )  # type: ignore[return-value]

    def compose(self, other: LinearMap3) -> LinearMap3:
        """Return ``self ∘ other``."""

        return LinearMap3.from_columns([self.apply(other.column(c)) for c in range(3)])

    def determinant(self) -> Fraction:
        return _det3(self.matrix)

    def inverse(self) -> LinearMap3:
        det = self.determinant()
        if det == 0:
            raise SingularMap("Linear map is not invertible")
        adjugate = _adjugate3(self.matrix)
        return LinearMap3(
            tuple(tuple(entry / det for entry in row) for row in adjugate)  # type: ignore[arg-type]
        )

    def to_json(self) -> list[list[str]]:
        return [[str(entry) for entry in row] for row in self.matrix]

    @classmethod
    def from_json(cls, payload: Sequence[Sequence[Any]]) -> LinearMap3:
        return cls(tuple(tuple(as_rational(str(entry)) for entry in row) for row in payload))  # type: ignore[arg-type]


def _det3(m: Sequence[Sequence[Any]]) -> Any:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def _adjugate3(m: Sequence[Sequence[Any]]) -> list[list[Any]]:
    def minor(r: int, c: int) -> Any:
        rows = [i for i in range(3) if i != r]
        cols = [j for j in range(3) if j != c]
        return (
            m[rows[0]][cols[0]] * m[rows[1]][cols[1]]
            - m[rows[0]][cols[1]] * m[rows[1]][cols[0]]
        )

    # adj[r][c] = (-1)^(r+c) * minor(c, r)
    adjugate: list[list[Any]] = []
    for r in range(3):
        row = []
        for c in range(3):
            value = minor(c, r)
            row.append(value if (r + c) % 2 == 0 else -value)
        adjugate.append(row)
    return adjugate


@dataclass(frozen=True)
class ScalingMap:
    """Laurent-monomial matrix modelling the scaling map of a contraction."""

    matrix: tuple[tuple[LaurentMonomial, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(
            tuple(
                entry if isinstance(entry, LaurentMonomial) else LaurentMonomial(entry)
                for entry in row
            )
            for row in self.matrix
        )
        if len(rows) != 3 or any(len(row) != 3 for row in rows):
            raise ValueError("A 3x3 scaling matrix is required")
        object.__setattr__(self, "matrix", rows)
        if self.determinant().as_monomial() is None:
            raise SingularMap(
                "Scaling map determinant must be a single nonzero Laurent monomial"
            )

    @classmethod
    def diagonal(cls, *entries: LaurentMonomial) -> ScalingMap:
        if len(entries) != 3:
            raise ValueError("Three diagonal entries are required")
        zero = LaurentMonomial(0)
        return cls(
            tuple(
                tuple(entries[r] if r == c else zero for c in range(3))
                for r in range(3)
            )
        )

    @classmethod
    def identity(cls) -> ScalingMap:
        one = LaurentMonomial(1)
        return cls.diagonal(one, one, one)

    def _polys(self) -> list[list[LaurentPoly]]:
        return [[entry.as_poly() for entry in row] for row in self.matrix]

    def determinant(self) -> LaurentPoly:
        return _det3(self._polys())

    def image(self, index: int) -> tuple[LaurentPoly, LaurentPoly, LaurentPoly]:
        polys = self._polys()
        return tuple(polys[r][index] for r in range(3))  # type: ignore[return-value]

    def inverse(self) -> list[list[LaurentPoly]]:
        det = self.determinant().as_monomial()
        if det is None:
            raise SingularMap("Scaling map is not invertible")
        factor = det.inverse().as_poly()
        return [[entry * factor for entry in row] for row in _adjugate3(self._polys())]

    def diagonal_entries(self) -> tuple[LaurentMonomial, LaurentMonomial, LaurentMonomial]:
        for r, c in itertools.product(range(3), repeat=2):
            if r != c and not self.matrix[r][c].is_zero:
                raise ValueError("Scaling map is not diagonal")
        return tuple(self.matrix[i][i] for i in range(3))  # type: ignore[return-value]

    def to_json(self) -> dict[str, Any]:
        return {"matrix": [[entry.to_json() for entry in row] for row in self.matrix]}

    @classmethod
    def from_json(cls, payload: Mapping[str, Any]) -> ScalingMap:
        try:
            rows = payload["matrix"]
        except (KeyError, TypeError) as exc:
            raise ScalingParseError("Scaling payload must contain 'matrix'") from exc
        return cls(tuple(tuple(LaurentMonomial.from_json(e) for e in row) for row in rows))

    def __str__(self) -> str:
        try:
            return "diag:" + ",".join(str(e) for e in self.diagonal_entries())
        except ValueError:
            return "[" + "; ".join(", ".join(str(e) for e in row) for row in self.matrix) + "]"


def parse_scaling_spec(text: str) -> ScalingMap:
    """Parse ``diag:a,b,c`` where each entry is ``[-]q[e^k]``."""

    cleaned = text.strip()
    if not cleaned.startswith("diag:"):
        raise ScalingParseError(f"Unsupported scaling specification '{text}'")
    parts = cleaned[len("diag:"):].split(",")
    if len(parts) != 3:
        raise ScalingParseError("A diagonal scaling needs exactly three entries")
    return ScalingMap.diagonal(*(LaurentMonomial.parse(part) for part in parts))


# --------------------------------------------------------------------------
# Operations


def bracket(alg: LieAlgebra3, x: Sequence[RationalLike], y: Sequence[RationalLike]) -> Vector3:
    u = as_vector(x)
    v = as_vector(y)
    result = [Fraction(0)] * 3
    for i, j in itertools.product(range(3), repeat=2):
        weight = u[i] * v[j]
        if weight == 0:
            continue
        for k in range(3):
            result[k] += alg.structure[i][j][k] * weight
    return tuple(result)  # type: ignore[return-value]


def jacobi_residual(alg: LieAlgebra3) -> Fraction:
    worst = Fraction(0)
    for i, j, k in itertools.product(range(3), repeat=3):
        x, y, z = basis_vector(i), basis_vector(j), basis_vector(k)
        total = _add(
            _add(bracket(alg, bracket(alg, x, y), z), bracket(alg, bracket(alg, y, z), x)),
            bracket(alg, bracket(alg, z, x), y),
        )
        worst = max(worst, max(abs(c) for c in total))
    return worst


def _family_brackets(tag: str, lam: Optional[Fraction]) -> dict[tuple[int, int], tuple]:
    one, zero = 1, 0
    if tag == "ab":
        return {}
    if tag == "h":
        return {(3, 2): (one, zero, zero)}
    if tag == "ea":
        return {(3, 1): (one, zero, zero)}
    if tag == "g":
        return {(3, 1): (one, zero, zero), (3, 2): (zero, lam, zero)}
    if tag == "c":
        return {(3, 1): (one, zero, zero), (3, 2): (one, one, zero)}
    if tag == "l":
        return {(3, 1): (lam, one, zero), (3, 2): (-1, lam, zero)}
    if tag == "su2":
        return {(1, 2): (zero, zero, one), (2, 3): (one, zero, zero), (3, 1): (zero, one, zero)}
    if tag == "sl2":
        return {(1, 2): (zero, zero, one), (2, 3): (-1, zero, zero), (3, 1): (zero, -1, zero)}
    raise InvalidFamilyParameter(f"Unknown catalog family '{tag}'")


def family(tag: str, lam: Optional[RationalLike] = None) -> LieAlgebra3:
    """Instantiate a catalog family; ``iso2``/``iso11`` are accepted as aliases."""

    if tag in FAMILY_ALIASES:
        tag, lam = FAMILY_ALIASES[tag]
    if tag not in FAMILY_TAGS:
        raise InvalidFamilyParameter(f"Unknown catalog family '{tag}'")
    parameter = None if lam is None else as_rational(lam)
    if tag in PARAMETRISED_TAGS:
        if parameter is None:
            raise InvalidFamilyParameter(f"Family '{tag}' needs a lambda parameter")
        if tag == "g" and parameter == 0:
            raise InvalidFamilyParameter("Family g(lambda) requires lambda != 0")
    elif parameter is not None:
        raise InvalidFamilyParameter(f"Family '{tag}' takes no parameter")
    return LieAlgebra3.from_brackets(tag, _family_brackets(tag, parameter), lam=parameter)


def catalog(
    *, lam_g: RationalLike = Fraction(1, 2), lam_l: RationalLike = Fraction(1, 2)
) -> list[LieAlgebra3]:
    """The eight families, with the parametrised ones instantiated at the given values."""

    return [
        family(tag, lam_g if tag == "g" else lam_l if tag == "l" else None)
        for tag in FAMILY_TAGS
    ]


def change_basis(
    alg: LieAlgebra3,
    basis: LinearMap3,
    *,
    basis_names: Optional[tuple[str, str, str]] = None,
) -> LieAlgebra3:
    """Rewrite ``alg`` in the basis given by the columns of ``basis``."""

    inverse = basis.inverse()
    columns = [basis.column(i) for i in range(3)]
    structure = tuple(
        tuple(inverse.apply(bracket(alg, columns[i], columns[j])) for j in range(3))
        for i in range(3)
    )
    if basis == LinearMap3.identity():
        label, lam = alg.label, alg.lam
    else:
        label, lam = "custom", None
    return LieAlgebra3(
        label=label,
        structure=structure,  # type: ignore[arg-type]
        lam=lam,
        basis_names=basis_names or alg.basis_names,
    )


def contract(alg: LieAlgebra3, t: ScalingMap) -> LieAlgebra3:
    """Exact limit of ``t^{-1}[t X_i, t X_j]`` as e goes to 0."""

    inverse = t.inverse()
    images = [t.image(i) for i in range(3)]
    divergent: list[tuple[int, int, int, int]] = []
    table: list[list[Vector3]] = []
    for i in range(3):
        row: list[Vector3] = []
        for j in range(3):
            scaled = [_POLY_ZERO, _POLY_ZERO, _POLY_ZERO]
            for a, b in itertools.product(range(3), repeat=2):
                weight = images[i][a] * images[j][b]
                if weight.is_zero:
                    continue
                for k in range(3):
                    c = alg.structure[a][b][k]
                    if c != 0:
                        scaled[k] = scaled[k] + weight * c
            limit = []
            for k in range(3):
                pulled = _POLY_ZERO
                for b in range(3):
                    pulled = pulled + inverse[k][b] * scaled[b]
                if pulled.has_negative_exponents and i < j:
                    divergent.append((i + 1, j + 1, k + 1, pulled.lowest_exponent))
                limit.append(pulled.constant_term)
            row.append(tuple(limit))  # type: ignore[arg-type]
        table.append(row)
    if divergent:
        logger.debug("Контракция расходится: %s", divergent)
        raise DivergenceError(divergent)
    structure = tuple(tuple(row) for row in table)
    if structure == alg.structure:
        label, lam = alg.label, alg.lam
    else:
        label, lam = "custom", None
    result = LieAlgebra3(
        label=label, structure=structure, lam=lam, basis_names=alg.basis_names  # type: ignore[arg-type]
    )
    residual = jacobi_residual(result)
    if residual != 0:
        raise NotALieAlgebra(f"Contracted brackets violate Jacobi (residual {residual})")
    return result


def verify_isomorphism(a: LieAlgebra3, b: LieAlgebra3, psi: LinearMap3) -> Fraction:
    if psi.determinant() == 0:
        raise SingularMap("Isomorphism witness is not invertible")
    worst = Fraction(0)
    for i, j in itertools.product(range(3), repeat=2):
        lhs = psi.apply(a.structure[i][j])
        rhs = bracket(b, psi.column(i), psi.column(j))
        worst = max(worst, max(abs(x - y) for x, y in zip(lhs, rhs)))
    return worst


def killing_form(alg: LieAlgebra3) -> tuple[Vector3, Vector3, Vector3]:
    # ad(X_i)[k][j] = c^k_{ij}
    ad = [
        [[alg.structure[i][j][k] for j in range(3)] for k in range(3)]
        for i in range(3)
    ]
    form = []
    for i in range(3):
        row = []
        for j in range(3):
            row.append(
                sum(
                    (ad[i][k][l] * ad[j][l][k] for k in range(3) for l in range(3)),
                    Fraction(0),
                )
            )
        form.append(tuple(row))
    return tuple(form)  # type: ignore[return-value]


# --------------------------------------------------------------------------
# Classification


@dataclass(frozen=True)
class Classification:
    tag: str
    lam: Optional[Fraction]
    witness: Optional[LinearMap3]

    @property
    def display_name(self) -> str:
        return self.tag if self.lam is None else f"{self.tag}({self.lam})"


def _rational_sqrt(value: Fraction) -> Optional[Fraction]:
    if value < 0:
        return None
    num, den = value.numerator, value.denominator
    root_num, root_den = math.isqrt(num), math.isqrt(den)
    if root_num * root_num != num or root_den * root_den != den:
        return None
    return Fraction(root_num, root_den)


def _independent_subset(vectors: Iterable[Sequence[Fraction]]) -> list[Vector3]:
    """Greedy row reduction keeping the original vectors that extend the span."""

    kept: list[Vector3] = []
    echelon: list[list[Fraction]] = []
    pivots: list[int] = []
    for vector in vectors:
        reduced = list(vector)
        for row, pivot in zip(echelon, pivots):
            if reduced[pivot] != 0:
                factor = reduced[pivot] / row[pivot]
                reduced = [a - factor * b for a, b in zip(reduced, row)]
        if _is_zero(reduced):
            continue
        pivot = next(k for k, value in enumerate(reduced) if value != 0)
        echelon.append(reduced)
        pivots.append(pivot)
        kept.append(as_vector(vector))
    return kept


def _nullspace(rows: Sequence[Sequence[Fraction]]) -> list[Vector3]:
    """Rational nullspace basis of a matrix with three columns."""

    matrix = [list(row) for row in rows]
    pivot_columns: list[int] = []
    rank = 0
    for column in range(3):
        pivot_row = next(
            (r for r in range(rank, len(matrix)) if matrix[r][column] != 0), None
        )
        if pivot_row is None:
            continue
        matrix[rank], matrix[pivot_row] = matrix[pivot_row], matrix[rank]
        lead = matrix[rank][column]
        matrix[rank] = [value / lead for value in matrix[rank]]
        for r in range(len(matrix)):
            if r != rank and matrix[r][column] != 0:
                factor = matrix[r][column]
                matrix[r] = [a - factor * b for a, b in zip(matrix[r], matrix[rank])]
        pivot_columns.append(column)
        rank += 1
    basis: list[Vector3] = []
    for free in (c for c in range(3) if c not in pivot_columns):
        vector = [Fraction(0)] * 3
        vector[free] = Fraction(1)
        for r, column in enumerate(pivot_columns):
            vector[column] = -matrix[r][free]
        basis.append(tuple(vector))  # type: ignore[arg-type]
    return basis


def _ad_matrix(alg: LieAlgebra3, x: Vector3) -> list[list[Fraction]]:
    columns = [bracket(alg, x, basis_vector(j)) for j in range(3)]
    return [[columns[j][k] for j in range(3)] for k in range(3)]


def _classify_one(alg: LieAlgebra3, z: Vector3) -> tuple[str, Optional[list[Vector3]]]:
    basis = [basis_vector(i) for i in range(3)]
    if all(_is_zero(bracket(alg, z, e)) for e in basis):
        for i, j in itertools.permutations(range(3), 2):
            value = bracket(alg, basis[i], basis[j])
            if not _is_zero(value):
                return "h", [value, basis[j], basis[i]]
    pivot = next(k for k in range(3) if z[k] != 0)
    for e in basis:
        image = bracket(alg, z, e)
        if not _is_zero(image):
            mu = image[pivot] / z[pivot]
            x3 = _scale(-1 / mu, e)
            break
    # the centre is the common kernel of ad(e) over the basis
    rows = [row for e in basis for row in _ad_matrix(alg, e)]
    center = _nullspace(rows)[0]
    return "ea", [z, center, x3]


def _eigenvector2(matrix: list[list[Fraction]], value: Fraction) -> tuple[Fraction, Fraction]:
    a, b = matrix[0][0] - value, matrix[0][1]
    c, d = matrix[1][0], matrix[1][1] - value
    if a != 0 or b != 0:
        return (b, -a)
    if c != 0 or d != 0:
        return (d, -c)
    return (Fraction(1), Fraction(0))


def _classify_two(
    alg: LieAlgebra3, derived: list[Vector3]
) -> tuple[str, Optional[Fraction], Optional[list[Vector3]]]:
    d1, d2 = derived
    if not _is_zero(bracket(alg, d1, d2)):
        raise ClassificationError("Two-dimensional derived algebra is not abelian")
    x3 = next(
        basis_vector(k)
        for k in range(3)
        if len(_independent_subset([d1, d2, basis_vector(k)])) == 3
    )
    coordinates = LinearMap3.from_columns([d1, d2, x3]).inverse()
    columns = []
    for d in (d1, d2):
        coords = coordinates.apply(bracket(alg, x3, d))
        columns.append((coords[0], coords[1]))
    matrix = [[columns[0][0], columns[1][0]], [columns[0][1], columns[1][1]]]
    trace = matrix[0][0] + matrix[1][1]
    det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]
    disc = trace * trace - 4 * det

    def lift(coords: Sequence[Fraction]) -> Vector3:
        return _add(_scale(coords[0], d1), _scale(coords[1], d2))

    if disc > 0:
        root = _rational_sqrt(disc)
        if root is None:
            raise ClassificationError("Adjoint eigenvalues are irrational")
        mu1, mu2 = (trace + root) / 2, (trace - root) / 2
        lead, other = (mu1, mu2) if abs(mu1) >= abs(mu2) else (mu2, mu1)
        lam = other / lead
        return "g", lam, [
            lift(_eigenvector2(matrix, lead)),
            lift(_eigenvector2(matrix, other)),
            _scale(1 / lead, x3),
        ]
    if disc == 0:
        mu = trace / 2
        nilpotent = [
            [(matrix[r][c] - (mu if r == c else 0)) / mu for c in range(2)]
            for r in range(2)
        ]
        if all(value == 0 for row in nilpotent for value in row):
            return "g", Fraction(1), [d1, d2, _scale(1 / mu, x3)]
        for seed in ((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))):
            image = (
                nilpotent[0][0] * seed[0] + nilpotent[0][1] * seed[1],
                nilpotent[1][0] * seed[0] + nilpotent[1][1] * seed[1],
            )
            if image != (0, 0):
                return "c", None, [lift(image), lift(seed), _scale(1 / mu, x3)]
    alpha = trace / 2
    beta = _rational_sqrt((4 * det - trace * trace) / 4)
    if beta is None:
        if alpha == 0:
            return "l", Fraction(0), None
        raise ClassificationError("Rotation parameter is irrational")
    sign = 1 if alpha >= 0 else -1
    lam = abs(alpha) / beta
    rotation = [[sign * matrix[r][c] / beta for c in range(2)] for r in range(2)]
    seed = (Fraction(1), Fraction(0))
    partner = (
        rotation[0][0] * seed[0] + rotation[0][1] * seed[1] - lam * seed[0],
        rotation[1][0] * seed[0] + rotation[1][1] * seed[1] - lam * seed[1],
    )
    return "l", lam, [lift(seed), lift(partner), _scale(Fraction(sign) / beta, x3)]


def _small_vectors(bound: int = 2) -> list[Vector3]:
    candidates = [
        as_vector(v)
        for v in itertools.product(range(-bound, bound + 1), repeat=3)
        if any(v)
    ]
    return sorted(candidates, key=lambda v: (sum(abs(c) for c in v), v))


def _form(matrix: Sequence[Sequence[Fraction]], u: Vector3, v: Vector3) -> Fraction:
    return sum(
        (u[i] * matrix[i][j] * v[j] for i in range(3) for j in range(3)), Fraction(0)
    )


def _compact_basis(alg: LieAlgebra3, killing: Sequence[Vector3]) -> Optional[list[Vector3]]:
    reference = family("su2").structure
    for x in _small_vectors():
        norm = _rational_sqrt(-_form(killing, x, x) / 2)
        if not norm:
            continue
        x1 = _scale(1 / norm, x)
        for y in _small_vectors():
            overlap = -_form(killing, y, x1) / 2
            y_perp = _add(y, _scale(-overlap, x1))
            if _is_zero(y_perp):
                continue
            length = _rational_sqrt(-_form(killing, y_perp, y_perp) / 2)
            if not length:
                continue
            x2 = _scale(1 / length, y_perp)
            candidate = [x1, x2, bracket(alg, x1, x2)]
            if change_basis(alg, LinearMap3.from_columns(candidate)).structure == reference:
                return candidate
    return None


def _split_basis(alg: LieAlgebra3, killing: Sequence[Vector3]) -> Optional[list[Vector3]]:
    reference = family("sl2").structure
    for h in _small_vectors():
        half_norm = _form(killing, h, h) / 2
        root = _rational_sqrt(half_norm) if half_norm > 0 else None
        if not root:
            continue
        h_std = _scale(2 / root, h)
        ad_h = _ad_matrix(alg, h_std)
        shifted_up = [[ad_h[r][c] - (2 if r == c else 0) for c in range(3)] for r in range(3)]
        shifted_down = [[ad_h[r][c] + (2 if r == c else 0) for c in range(3)] for r in range(3)]
        raising, lowering = _nullspace(shifted_up), _nullspace(shifted_down)
        if not raising or not lowering:
            continue
        e, f0 = raising[0], lowering[0]
        product = bracket(alg, e, f0)
        pivot = next((k for k in range(3) if h_std[k] != 0), None)
        if pivot is None or product[pivot] == 0:
            continue
        f = _scale(h_std[pivot] / product[pivot], f0)
        candidate = [
            _scale(Fraction(1, 2), _add(e, f)),
            _scale(Fraction(1, 2), h_std),
            _scale(Fraction(1, 2), _add(f, _scale(Fraction(-1), e))),
        ]
        if change_basis(alg, LinearMap3.from_columns(candidate)).structure == reference:
            return candidate
    return None


def classify(alg: LieAlgebra3) -> Classification:
    """Match ``alg`` to its catalog family and, when one exists, a rational witness."""

    residual = jacobi_residual(alg)
    if residual != 0:
        raise NotALieAlgebra(f"Jacobi identity fails (residual {residual})")

    brackets = [
        bracket(alg, basis_vector(i), basis_vector(j))
        for i, j in itertools.combinations(range(3), 2)
    ]
    derived = _independent_subset(brackets)
    lam: Optional[Fraction] = None
    adapted: Optional[list[Vector3]]
    if len(derived) == 0:
        tag, adapted = "ab", [basis_vector(i) for i in range(3)]
    elif len(derived) == 1:
        tag, adapted = _classify_one(alg, derived[0])
    elif len(derived) == 2:
        tag, lam, adapted = _classify_two(alg, derived)
    else:
        killing = killing_form(alg)
        minors = (
            killing[0][0],
            killing[0][0] * killing[1][1] - killing[0][1] * killing[1][0],
            _det3(killing),
        )
        negative_definite = minors[0] < 0 and minors[1] > 0 and minors[2] < 0
        tag = "su2" if negative_definite else "sl2"
        if alg.structure == family(tag).structure:
            adapted = [basis_vector(i) for i in range(3)]
        else:
            search = _compact_basis if negative_definite else _split_basis
            adapted = search(alg, killing)

    reference = family(tag, lam)
    if alg.structure == reference.structure:
        witness: Optional[LinearMap3] = LinearMap3.identity()
    elif adapted is None:
        logger.info(
            "Для алгебры %s не найден рациональный изоморфизм на %s",
            alg.display_name,
            reference.display_name,
        )
        witness = None
    else:
        witness = LinearMap3.from_columns(adapted).inverse()
        if verify_isomorphism(alg, reference, witness) != 0:
            raise ClassificationError(
                f"Witness for {reference.display_name} failed verification"
            )
    logger.debug("Классификация %s -> %s", alg.display_name, reference.display_name)
    return Classification(tag=tag, lam=lam, witness=witness)


# --------------------------------------------------------------------------
# Contraction graph


@dataclass(frozen=True)
class ContractionEdge:
    """One arrow of the contraction graph, expressed in an adapted source basis.

    ``basis`` columns are the adapted generators in source coordinates;
    ``scaling`` is diagonal in that basis and ``psi`` maps the adapted
    coordinates of the contracted algebra onto ``target``.
    """

    case_id: str
    source: LieAlgebra3
    target: LieAlgebra3
    basis: LinearMap3
    scaling: ScalingMap
    psi: LinearMap3
    generator_names: tuple[str, str, str]

    @property
    def source_tag(self) -> str:
        return self.source.display_name

    @property
    def target_tag(self) -> str:
        return self.target.display_name

    def adapted_source(self) -> LieAlgebra3:
        return change_basis(self.source, self.basis, basis_names=self.generator_names)

    def contracted(self) -> LieAlgebra3:
        return contract(self.adapted_source(), self.scaling)

    def residual(self) -> Fraction:
        return verify_isomorphism(self.contracted(), self.target, self.psi)


_E = LaurentMonomial(1, 1)
_ONE = LaurentMonomial(1)
_PERMUTE_12 = ((0, 1, 0), (1, 0, 0), (0, 0, 1))

CASE_IDS = (
    "ea-to-h",
    "iso2-to-h",
    "g-lambda-to-h",
    "l-lambda-to-h",
    "c-to-h",
    "c-to-g1",
    "su2-to-iso2",
    "sl2-to-iso2",
    "sl2-to-h",
    "sl2-to-iso11",
)


def contraction_edge(case_id: str, lam: Optional[RationalLike] = None) -> ContractionEdge:
    """Build one edge; ``lam`` parametrises the g(λ) and l(λ) sources (default 1/2)."""

    parameter = as_rational(lam) if lam is not None else Fraction(1, 2)
    identity = LinearMap3.identity()
    h = family("h")
    if case_id == "ea-to-h":
        return ContractionEdge(
            case_id, family("ea"), h,
            LinearMap3(((0, 1, 0), (1, 1, 0), (0, 0, 1))),
            ScalingMap.diagonal(_E, _ONE, LaurentMonomial(-1, 1)),
            identity, ("X2", "X1+X2", "X3"),
        )
    if case_id == "iso2-to-h":
        return ContractionEdge(
            case_id, family("l", 0), h, LinearMap3(_PERMUTE_12),
            ScalingMap.diagonal(_E, _ONE, _E), identity, ("X2", "X1", "X3"),
        )
    if case_id == "g-lambda-to-h":
        if parameter == 1:
            raise InvalidFamilyParameter("g(lambda) -> h requires lambda != 1")
        return ContractionEdge(
            case_id, family("g", parameter), h,
            LinearMap3(((1, 1, 0), (0, 1, 0), (0, 0, 1))),
            ScalingMap.diagonal(LaurentMonomial(1 - parameter, 1), _ONE, _E),
            identity, ("X1", "X1+X2", "X3"),
        )
    if case_id == "l-lambda-to-h":
        if parameter == 0:
            raise InvalidFamilyParameter("l(lambda) -> h requires lambda != 0")
        return ContractionEdge(
            case_id, family("l", parameter), h, LinearMap3(_PERMUTE_12),
            ScalingMap.diagonal(_E, _ONE, _E), identity, ("X2", "X1", "X3"),
        )
    if case_id == "c-to-h":
        return ContractionEdge(
            case_id, family("c"), h, identity,
            ScalingMap.diagonal(_E, _ONE, _E), identity, DEFAULT_BASIS_NAMES,
        )
    if case_id == "c-to-g1":
        return ContractionEdge(
            case_id, family("c"), family("g", 1), identity,
            ScalingMap.diagonal(_ONE, _E, _ONE), identity, DEFAULT_BASIS_NAMES,
        )
    if case_id == "su2-to-iso2":
        return ContractionEdge(
            case_id, family("su2"), family("l", 0), identity,
            ScalingMap.diagonal(_E, _E, _ONE),
            LinearMap3(((0, 1, 0), (-1, 0, 0), (0, 0, 1))), DEFAULT_BASIS_NAMES,
        )
    if case_id == "sl2-to-iso2":
        return ContractionEdge(
            case_id, family("sl2"), family("l", 0), identity,
            ScalingMap.diagonal(_E, _E, LaurentMonomial(-1)), identity,
            DEFAULT_BASIS_NAMES,
        )
    if case_id == "sl2-to-h":
        return ContractionEdge(
            case_id, family("sl2"), h,
            LinearMap3(((1, 0, 0), (0, 1, 1), (0, 1, 0))),
            ScalingMap.diagonal(LaurentMonomial(-1, 1), _ONE, _E), identity,
            ("X1", "X2+X3", "X2"),
        )
    if case_id == "sl2-to-iso11":
        return ContractionEdge(
            case_id, family("sl2"), family("g", -1),
            LinearMap3(((1, 0, 0), (0, 0, 2), (-1, 2, 0))),
            ScalingMap.diagonal(_ONE, _E, LaurentMonomial(Fraction(1, 2))), identity,
            ("X", "Y-X", "H"),
        )
    raise UnknownCase(f"Unknown contraction case '{case_id}'")


def contraction_graph(
    *, lam_g: RationalLike = Fraction(1, 2), lam_l: RationalLike = Fraction(1, 2)
) -> list[ContractionEdge]:
    """The ten arrows; iso(1,1) -> h is the g-lambda-to-h edge at lambda = -1."""

    return [
        contraction_edge(
            case_id,
            lam_g if case_id == "g-lambda-to-h" else lam_l if case_id == "l-lambda-to-h" else None,
        )
        for case_id in CASE_IDS
    ]


# --------------------------------------------------------------------------
# JSON


def algebra_to_json(alg: LieAlgebra3) -> dict[str, Any]:
    return {
        "label": alg.label,
        "lambda": None if alg.lam is None else str(alg.lam),
        "basis_names": list(alg.basis_names),
        "structure": [
            [[str(value) for value in alg.structure[i][j]] for j in range(3)]
            for i in range(3)
        ],
    }


def algebra_from_json(payload: Mapping[str, Any]) -> LieAlgebra3:
    try:
        structure = tuple(
            tuple(tuple(as_rational(str(v)) for v in entry) for entry in row)
            for row in payload["structure"]
        )
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise NotALieAlgebra("Malformed algebra payload") from exc
    lam = payload.get("lambda")
    return LieAlgebra3(
        label=str(payload.get("label", "custom")),
        structure=structure,  # type: ignore[arg-type]
        lam=None if lam is None else as_rational(str(lam)),
        basis_names=tuple(payload.get("basis_names", DEFAULT_BASIS_NAMES)),  # type: ignore[arg-type]
    )


def scaling_to_json(scaling: ScalingMap) -> dict[str, Any]:
    return scaling.to_json()


def scaling_from_json(payload: Mapping[str, Any]) -> ScalingMap:
    return ScalingMap.from_json(payload)


__all__ = [
    "CASE_IDS",
    "Classification",
    "ClassificationError",
    "ContractionEdge",
    "DivergenceError",
    "FAMILY_TAGS",
    "InvalidFamilyParameter",
    "LaurentMonomial",
    "LaurentPoly",
    "LieAlgebra3",
    "LinearMap3",
    "NotALieAlgebra",
    "ScalingMap",
    "ScalingParseError",
    "SingularMap",
    "UnknownCase",
    "algebra_from_json",
    "algebra_to_json",
    "bracket",
    "catalog",
    "change_basis",
    "classify",
    "contract",
    "contraction_edge",
    "contraction_graph",
    "family",
    "jacobi_residual",
    "killing_form",
    "parse_scaling_spec",
    "scaling_from_json",
    "scaling_to_json",
    "verify_isomorphism",
]
