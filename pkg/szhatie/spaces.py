from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt

from .special import sph_harm_theta_derivatives

logger = logging.getLogger(__name__)

NODES_PER_PANEL = 16
DEFAULT_PANELS = 32

Box = tuple[tuple[float, float], ...]
Coordinates = tuple[np.ndarray, ...]
DerivativeFn = Callable[[tuple[int, ...], Coordinates], np.ndarray]


class UnboundedSupport(ValueError):
    """Raised when integrating over an unbounded domain without a declared support."""


class BoundaryClassViolation(ValueError):
    """Raised when a zero extension would not preserve smoothness."""


class DomainKind(str, Enum):
    REAL_LINE = "real-line"
    HALF_LINE = "half-line"
    INTERVAL = "interval"
    DEFORMED_DISC = "deformed-disc"
    POLAR_PLANE = "polar-plane"


class MeasureKind(str, Enum):
    LEBESGUE = "lebesgue"
    LOGARITHMIC = "dx/x"
    SPHERE = "sphere"
    POLAR = "polar"


class BoundaryClass(str, Enum):
    NONE = "none"
    VANISHING_DERIVATIVES = "all-derivatives-vanish-at-endpoints"


@dataclass(frozen=True)
class Domain:
    kind: DomainKind
    a: Optional[float] = None
    b: Optional[float] = None
    eps: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind is DomainKind.INTERVAL:
            if self.a is None or self.b is None or not float(self.a) < float(self.b):
                raise ValueError("Interval domains need a < b")
            object.__setattr__(self, "a", float(self.a))
            object.__setattr__(self, "b", float(self.b))
        if self.kind is DomainKind.DEFORMED_DISC:
            if self.eps is None or float(self.eps) <= 0:
                raise ValueError("Deformed disc needs eps > 0")
            object.__setattr__(self, "eps", float(self.eps))

    @classmethod
    def real_line(cls) -> Domain:
        return cls(DomainKind.REAL_LINE)

    @classmethod
    def half_line(cls) -> Domain:
        return cls(DomainKind.HALF_LINE)

    @classmethod
    def interval(cls, a: float, b: float) -> Domain:
        return cls(DomainKind.INTERVAL, a=a, b=b)

    @classmethod
    def symmetric_interval(cls, half_width: float) -> Domain:
        return cls.interval(-float(half_width), float(half_width))

    @classmethod
    def deformed_disc(cls, eps: float) -> Domain:
        return cls(DomainKind.DEFORMED_DISC, eps=eps)

    @classmethod
    def polar_plane(cls) -> Domain:
        return cls(DomainKind.POLAR_PLANE)

    @property
    def dimension(self) -> int:
        return 2 if self.kind in (DomainKind.DEFORMED_DISC, DomainKind.POLAR_PLANE) else 1

    @property
    def bounds(self) -> Box:
        if self.kind is DomainKind.REAL_LINE:
            return ((-math.inf, math.inf),)
        if self.kind is DomainKind.HALF_LINE:
            return ((0.0, math.inf),)
        if self.kind is DomainKind.INTERVAL:
            return ((self.a, self.b),)  # type: ignore[return-value]
        if self.kind is DomainKind.DEFORMED_DISC:
            return ((0.0, math.pi / self.eps), (0.0, 2 * math.pi))  # type: ignore[operator]
        return ((0.0, math.inf), (0.0, 2 * math.pi))

    def contains_box(self, box: Box) -> bool:
        return all(lo >= bound_lo and hi <= bound_hi for (lo, hi), (bound_lo, bound_hi) in zip(box, self.bounds))

    def describe(self) -> str:
        if self.kind is DomainKind.INTERVAL:
            return f"[{self.a:g}, {self.b:g}]"
        if self.kind is DomainKind.DEFORMED_DISC:
            return f"S2_eps(eps={self.eps:g})"
        return self.kind.value


@dataclass(frozen=True)
class Measure:
    kind: MeasureKind = MeasureKind.LEBESGUE
    degree: int = 0
    eps: float = 1.0

    @classmethod
    def sphere(cls, degree: int, eps: float) -> Measure:
        return cls(MeasureKind.SPHERE, degree=degree, eps=float(eps))

    def weight(self, *coords: np.ndarray) -> np.ndarray:
        first = np.asarray(coords[0], dtype=float)
        if self.kind is MeasureKind.LEBESGUE:
            return np.ones_like(first)
        if self.kind is MeasureKind.LOGARITHMIC:
            return 1.0 / first
        if self.kind is MeasureKind.POLAR:
            return first
        return (2 * self.degree + 1) * self.eps * np.sin(self.eps * first) / (4 * math.pi)


@dataclass(frozen=True)
class FunctionSpace:
    domain: Domain
    measure: Measure = field(default_factory=Measure)
    boundary_class: BoundaryClass = BoundaryClass.NONE


@dataclass(frozen=True)
class TestFunction:
    """Function with closed-form partial derivatives and a declared support box.

    ``support`` of ``None`` means the function is not compactly supported.
    """

    __test__ = False

    dimension: int
    derivative_fn: DerivativeFn
    support: Optional[Box] = None
    max_theta_order: Optional[int] = None
    label: str = ""
    basis_index: Optional[tuple[int, int]] = None

    def derivative(self, order: Sequence[int], *coords: npt.ArrayLike) -> np.ndarray:
        order = tuple(int(o) for o in order)
        if len(order) != self.dimension or len(coords) != self.dimension:
            raise ValueError(
                f"{self.label or 'function'} is {self.dimension}-dimensional"
            )
        if self.max_theta_order is not None and order[0] > self.max_theta_order:
            raise ValueError(
                f"{self.label} provides derivatives up to order {self.max_theta_order}"
            )
        arrays = tuple(np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in coords)))
        return np.asarray(self.derivative_fn(order, arrays), dtype=complex)

    def __call__(self, *coords: npt.ArrayLike) -> np.ndarray:
        return self.derivative((0,) * self.dimension, *coords)

    def d1(self, *coords: npt.ArrayLike) -> tuple[np.ndarray, ...]:
        return tuple(
            self.derivative(tuple(int(i == axis) for i in range(self.dimension)), *coords)
            for axis in range(self.dimension)
        )

    def d2(self, *coords: npt.ArrayLike) -> tuple[tuple[np.ndarray, ...], ...]:
        def order(a: int, b: int) -> tuple[int, ...]:
            return tuple(int(i == a) + int(i == b) for i in range(self.dimension))

        return tuple(
            tuple(self.derivative(order(a, b), *coords) for b in range(self.dimension))
            for a in range(self.dimension)
        )


def _bump_profile_derivative(n: int, u: np.ndarray) -> np.ndarray:
    """n-th derivative of exp(-1/(1-u^2)), zero outside (-1, 1)."""

    inside = np.abs(u) < 1.0
    w = np.where(inside, u, 0.0)
    profile = [np.where(inside, np.exp(-1.0 / (1.0 - w * w)), 0.0)]
    # h = -1/(1-u^2); h^(k) = -k!/2 [(1-u)^-(k+1) + (-1)^k (1+u)^-(k+1)]
    log_derivatives = [
        -0.5 * math.factorial(k) * ((1.0 - w) ** -(k + 1) + (-1) ** k * (1.0 + w) ** -(k + 1))
        for k in range(1, n + 1)
    ]
    for j in range(1, n + 1):
        total = np.zeros_like(w)
        for k in range(j):
            total = total + math.comb(j - 1, k) * log_derivatives[k] * profile[j - 1 - k]
        profile.append(np.where(inside, total, 0.0))
    return profile[n]


def bump(center: float, radius: float) -> TestFunction:
    """The exp(-1/(1-u^2)) profile on [center - radius, center + radius]."""

    if radius <= 0:
        raise ValueError("Bump radius must be positive")
    center, radius = float(center), float(radius)

    def derivative(order: tuple[int, ...], coords: Coordinates) -> np.ndarray:
        (n,) = order
        (x,) = coords
        return _bump_profile_derivative(n, (x - center) / radius) / radius**n

    return TestFunction(
        dimension=1,
        derivative_fn=derivative,
        support=((center - radius, center + radius),),
        label=f"bump({center:g},{radius:g})",
    )


def bump_product(*factors: TestFunction) -> TestFunction:
    if any(f.dimension != 1 or f.support is None for f in factors):
        raise ValueError("Product probes are built from one-dimensional bumps")

    def derivative(order: tuple[int, ...], coords: Coordinates) -> np.ndarray:
        value: Union[np.ndarray, complex] = 1.0
        for factor, n, x in zip(factors, order, coords):
            value = value * factor.derivative((n,), x)
        return np.asarray(value)

    return TestFunction(
        dimension=len(factors),
        derivative_fn=derivative,
        support=tuple(f.support[0] for f in factors),  # type: ignore[index]
        label="*".join(f.label for f in factors),
    )


def spherical_probe(l: int, m: int, eps: float) -> TestFunction:
    """χ^m_{l,eps}(θ, φ) = Y_l^m(eps θ, φ) on the deformed disc."""

    eps = float(eps)

    def derivative(order: tuple[int, ...], coords: Coordinates) -> np.ndarray:
        n_theta, n_phi = order
        theta, phi = coords
        profiles = sph_harm_theta_derivatives(l, m, eps * theta, phi)
        return profiles[n_theta] * eps**n_theta * (-1j * m) ** n_phi

    return TestFunction(
        dimension=2,
        derivative_fn=derivative,
        support=((0.0, math.pi / eps), (0.0, 2 * math.pi)),
        max_theta_order=2,
        label=f"chi(l={l},m={m})",
        basis_index=(l, m),
    )


# --------------------------------------------------------------------------
# Quadrature


@lru_cache(maxsize=None)
def _reference_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def gauss_nodes(
    a: float, b: float, panels: int = DEFAULT_PANELS, order: int = NODES_PER_PANEL
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [a, b]."""

    edges = np.linspace(float(a), float(b), int(panels) + 1)
    ref_nodes, ref_weights = _reference_rule(order)
    half = np.diff(edges) / 2.0
    middle = (edges[:-1] + edges[1:]) / 2.0
    nodes = (middle[:, None] + half[:, None] * ref_nodes[None, :]).ravel()
    weights = (half[:, None] * ref_weights[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class QuadratureGrid:
    """Flattened tensor grid; ``weights`` already include the measure."""

    coords: Coordinates
    weights: np.ndarray

    @property
    def size(self) -> int:
        return int(self.weights.size)


def integration_box(space: FunctionSpace, support: Optional[Box] = None) -> Optional[Box]:
    """Intersect the domain with a support box; ``None`` if they do not overlap."""

    bounds = space.domain.bounds
    if support is None:
        box = bounds
    else:
        box = tuple(
            (max(lo, bound_lo), min(hi, bound_hi))
            for (lo, hi), (bound_lo, bound_hi) in zip(support, bounds)
        )
    if any(math.isinf(lo) or math.isinf(hi) for lo, hi in box):
        raise UnboundedSupport(
            f"Integration over {space.domain.describe()} needs a declared compact support"
        )
    if any(hi <= lo for lo, hi in box):
        return None
    return box


def quadrature_grid(
    space: FunctionSpace,
    *,
    support: Optional[Box] = None,
    panels: int = DEFAULT_PANELS,
) -> Optional[QuadratureGrid]:
    box = integration_box(space, support)
    if box is None:
        return None
    axes = [gauss_nodes(lo, hi, panels) for lo, hi in box]
    if len(axes) == 1:
        coords: Coordinates = (axes[0][0],)
        weights = axes[0][1]
    else:
        mesh = np.meshgrid(*(nodes for nodes, _ in axes), indexing="ij")
        coords = tuple(grid.ravel() for grid in mesh)
        weights = np.prod(
            np.meshgrid(*(w for _, w in axes), indexing="ij"), axis=0
        ).ravel()
    return QuadratureGrid(coords, weights * space.measure.weight(*coords))


def quadrature(
    space: FunctionSpace,
    integrand: Callable[..., npt.ArrayLike],
    resolution: int = DEFAULT_PANELS,
    *,
    support: Optional[Box] = None,
) -> complex:
    grid = quadrature_grid(space, support=support, panels=resolution)
    if grid is None:
        return 0j
    values = np.asarray(integrand(*grid.coords), dtype=complex)
    return complex(np.sum(grid.weights * values))


def _common_support(f: TestFunction, g: TestFunction) -> Optional[Box]:
    if f.support is None:
        return g.support
    if g.support is None:
        return f.support
    return tuple(
        (max(a[0], b[0]), min(a[1], b[1])) for a, b in zip(f.support, g.support)
    )


def inner_product(
    f: TestFunction, g: TestFunction, space: FunctionSpace, resolution: int = DEFAULT_PANELS
) -> complex:
    """Linear in ``f``, conjugate-linear in ``g``."""

    support = _common_support(f, g)
    if support is not None and any(hi <= lo for lo, hi in support):
        return 0j
    return quadrature(
        space, lambda *p: f(*p) * np.conj(g(*p)), resolution, support=support
    )


# --------------------------------------------------------------------------
# Embeddings


class EmbeddingKind(str, Enum):
    IDENTITY = "identity"
    ZERO_EXTENSION = "zero-extension"
    BASIS_INDEX_MAP = "basis-index-map"


@dataclass(frozen=True)
class Embedding:
    kind: EmbeddingKind
    source: Optional[Domain] = None
    target: Optional[Domain] = None
    target_degree: Optional[int] = None
    target_eps: Optional[float] = None

    @classmethod
    def identity(cls) -> Embedding:
        return cls(EmbeddingKind.IDENTITY)

    @classmethod
    def zero_extension(cls, source: Domain, target: Domain) -> Embedding:
        if source.kind is not DomainKind.INTERVAL:
            raise ValueError("Zero extension starts from an interval")
        if not target.contains_box(source.bounds):
            raise ValueError("Zero extension must enlarge the interval")
        return cls(EmbeddingKind.ZERO_EXTENSION, source=source, target=target)

    @classmethod
    def basis_index_map(cls, target_degree: int, target_eps: float) -> Embedding:
        return cls(
            EmbeddingKind.BASIS_INDEX_MAP,
            target_degree=target_degree,
            target_eps=float(target_eps),
        )

    def then(self, after: Embedding) -> Embedding:
        """The embedding ``after ∘ self``."""

        if self.kind is EmbeddingKind.IDENTITY:
            return after
        if after.kind is EmbeddingKind.IDENTITY:
            return self
        if self.kind is not after.kind:
            raise ValueError("Cannot compose embeddings of different kinds")
        if self.kind is EmbeddingKind.ZERO_EXTENSION:
            return Embedding.zero_extension(self.source, after.target)  # type: ignore[arg-type]
        return after


def embed(f: TestFunction, e: Embedding) -> TestFunction:
    if e.kind is EmbeddingKind.IDENTITY:
        return f
    if e.kind is EmbeddingKind.BASIS_INDEX_MAP:
        if f.basis_index is None:
            raise ValueError("Basis-index embeddings act on basis probes only")
        _, m = f.basis_index
        if abs(m) > e.target_degree:  # type: ignore[operator]
            raise ValueError(f"Order {m} does not exist at degree {e.target_degree}")
        return spherical_probe(e.target_degree, m, e.target_eps)  # type: ignore[arg-type]

    lo, hi = e.source.bounds[0]  # type: ignore[union-attr]
    if f.support is None or f.support[0][0] < lo or f.support[0][1] > hi:
        raise BoundaryClassViolation(
            f"{f.label} is not supported inside {e.source.describe()}"  # type: ignore[union-attr]
        )

    def derivative(order: tuple[int, ...], coords: Coordinates) -> np.ndarray:
        (x,) = coords
        inside = (x >= lo) & (x <= hi)
        return np.where(inside, f.derivative(order, x), 0.0)

    return TestFunction(
        dimension=1,
        derivative_fn=derivative,
        support=f.support,
        label=f.label,
    )


__all__ = [
    "BoundaryClass",
    "BoundaryClassViolation",
    "DEFAULT_PANELS",
    "Domain",
    "DomainKind",
    "Embedding",
    "EmbeddingKind",
    "FunctionSpace",
    "Measure",
    "MeasureKind",
    "NODES_PER_PANEL",
    "QuadratureGrid",
    "TestFunction",
    "UnboundedSupport",
    "bump",
    "bump_product",
    "embed",
    "gauss_nodes",
    "inner_product",
    "integration_box",
    "quadrature",
    "quadrature_grid",
    "spherical_probe",
]
