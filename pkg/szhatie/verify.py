"""Convergence checks for contraction cases."""

from __future__ import annotations

import asyncio
import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from . import config
from .representations import (
    ContractionCase,
    ParamValue,
    RepRealization,
    ScheduleKind,
    as_param,
    bessel_mode,
    commutator_residual,
    iso2_ladder,
    ladder_consistency_residual,
    realize,
    su2_ladder,
)
from .spaces import (
    Coordinates,
    DomainKind,
    FunctionSpace,
    QuadratureGrid,
    TestFunction,
    bump,
    bump_product,
    embed,
    inner_product,
    quadrature_grid,
    spherical_probe,
)
from .special import DomainError, bessel_j, sph_harm

logger = logging.getLogger(__name__)


class ScheduleError(ValueError):
    """Raised for schedules that are too short or not strictly monotone."""


class ScheduleMismatch(ValueError):
    """Raised when a schedule kind does not fit the case."""


class DegenerateFit(RuntimeError):
    """Raised when a rate cannot be fitted (too few points or a zero error)."""


# --------------------------------------------------------------------------
# Schedules, probes and thresholds


@dataclass(frozen=True)
class Schedule:
    kind: ScheduleKind
    eps: tuple[Fraction, ...]
    indices: tuple[Optional[int], ...]

    def __post_init__(self) -> None:
        if len(self.eps) < 3:
            raise ScheduleError("A schedule needs at least three points")
        if self.kind is ScheduleKind.CONTINUOUS:
            if any(e <= 0 for e in self.eps):
                raise ScheduleError("eps values must be positive")
            if any(b >= a for a, b in zip(self.eps, self.eps[1:])):
                raise ScheduleError("eps values must be strictly decreasing")
        else:
            values = [i for i in self.indices if i is not None]
            if len(values) != len(self.eps) or any(b <= a for a, b in zip(values, values[1:])):
                raise ScheduleError("Indices must be strictly increasing")

    @classmethod
    def continuous(cls, values: Iterable[ParamValue]) -> Schedule:
        eps = tuple(as_param(v) for v in values)
        return cls(ScheduleKind.CONTINUOUS, eps, (None,) * len(eps))

    @classmethod
    def sequential(cls, case: ContractionCase, indices: Iterable[int]) -> Schedule:
        if case.schedule_kind is ScheduleKind.CONTINUOUS:
            raise ScheduleMismatch(f"Case {case.case_id} uses a continuous eps schedule")
        indices = tuple(int(i) for i in indices)
        return cls(
            case.schedule_kind,
            tuple(case.eps_for_index(i) for i in indices),
            indices,
        )

    @classmethod
    def default(cls, case: ContractionCase) -> Schedule:
        if case.schedule_kind is ScheduleKind.SEQUENTIAL_L:
            return cls.sequential(case, config.DEFAULT_L_SCHEDULE)
        if case.schedule_kind is ScheduleKind.SEQUENTIAL_N:
            return cls.sequential(case, config.DEFAULT_N_SCHEDULE)
        return cls.continuous(config.DEFAULT_EPS_SCHEDULE)

    def points(self) -> list[tuple[Fraction, Optional[int]]]:
        return list(zip(self.eps, self.indices))

    def as_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "kind": self.kind.value,
            "eps": [float(e) for e in self.eps],
        }
        if self.kind is not ScheduleKind.CONTINUOUS:
            payload["indices"] = list(self.indices)
        return payload


@dataclass(frozen=True)
class ProbeSet:
    """Probe functions plus the evaluation grid (with quadrature weights of the target measure)."""

    functions: tuple[TestFunction, ...]
    grid: QuadratureGrid


@dataclass(frozen=True)
class Thresholds:
    final_error: float = config.FINAL_ERROR_THRESHOLD
    min_rate: float = config.MIN_RATE
    min_r2: float = config.MIN_R2
    exact_tolerance: float = config.EXACT_TOLERANCE
    isometry_tolerance: float = config.ISOMETRY_TOLERANCE

    @classmethod
    def for_case(cls, case_id: str) -> Thresholds:
        return cls(final_error=config.FINAL_ERROR_OVERRIDES.get(case_id, config.FINAL_ERROR_THRESHOLD))

    def as_dict(self) -> dict[str, float]:
        return {
            "exact_tolerance": self.exact_tolerance,
            "final_error": self.final_error,
            "isometry_tolerance": self.isometry_tolerance,
            "min_r2": self.min_r2,
            "min_rate": self.min_rate,
        }


_LINE_PROBES = ((0.0, 1.0), (0.5, 0.75), (-1.0, 1.5))
_HALF_LINE_PROBES = ((1.5, 1.0), (2.0, 1.2), (2.5, 1.5))


def default_probes(case: ContractionCase, schedule: Schedule) -> ProbeSet:
    """Three bumps for function-space cases, χ^m with |m| ≤ 3 for the su2 case."""

    target = case.target_space()
    if case.uses_basis:
        eps0, index0 = schedule.points()[0]
        degree = index0 if index0 is not None else int(case.params["R"] / eps0)
        functions = tuple(
            spherical_probe(degree, m, float(eps0)) for m in config.SU2_PROBE_ORDERS
        )
        grid = quadrature_grid(
            target,
            support=((0.0, config.SU2_RADIAL_EXTENT), (0.0, 2 * math.pi)),
            panels=4,
        )
    else:
        shapes = _HALF_LINE_PROBES if target.domain.kind is DomainKind.HALF_LINE else _LINE_PROBES
        functions = tuple(bump(c, r) for c, r in shapes)
        box = (
            (
                min(f.support[0][0] for f in functions),  # type: ignore[index]
                max(f.support[0][1] for f in functions),  # type: ignore[index]
            ),
        )
        grid = quadrature_grid(target, support=box, panels=config.EVALUATION_PANELS)
    assert grid is not None
    return ProbeSet(functions, grid)


# --------------------------------------------------------------------------
# Rate fitting


@dataclass(frozen=True)
class RateFit:
    p: float
    C: float
    r2: float

    def as_dict(self) -> dict[str, float]:
        return {"C": self.C, "p": self.p, "r2": self.r2}


def rate_fit(errors: Sequence[tuple[float, float]]) -> RateFit:
    """Least squares of log e = log C + p log ε."""

    if len(errors) < 3:
        raise DegenerateFit("At least three points are needed for a rate fit")
    eps = np.array([float(e) for e, _ in errors])
    values = np.array([float(v) for _, v in errors])
    if np.any(values <= 0) or np.any(eps <= 0):
        raise DegenerateFit("Errors must be positive for a logarithmic fit")
    log_eps, log_err = np.log(eps), np.log(values)
    slope, intercept = np.polyfit(log_eps, log_err, 1)
    fitted = slope * log_eps + intercept
    total = float(np.sum((log_err - log_err.mean()) ** 2))
    residual = float(np.sum((log_err - fitted) ** 2))
    r2 = 1.0 if total == 0.0 else 1.0 - residual / total
    return RateFit(p=float(slope), C=float(math.exp(intercept)), r2=float(r2))


def _is_monotone(values: Sequence[float], tolerance: float) -> bool:
    return all(b <= a + tolerance for a, b in zip(values, values[1:]))


# --------------------------------------------------------------------------
# Reports


@dataclass
class GeneratorReport:
    name: str
    index: int
    eps: list[float]
    sup_errors: list[float]
    l2_errors: list[float]
    exact: bool = False
    rate: Optional[RateFit] = None
    monotone: bool = True
    passed: bool = False

    def as_dict(self) -> dict[str, Any]:
        return {
            "eps": self.eps,
            "exact": self.exact,
            "index": self.index,
            "l2_errors": self.l2_errors,
            "monotone": self.monotone,
            "name": self.name,
            "passed": self.passed,
            "rate": "exact" if self.exact else (self.rate.as_dict() if self.rate else None),
            "sup_errors": self.sup_errors,
        }


@dataclass
class ConditionResult:
    passed: bool
    residual: Optional[float] = None
    note: str = ""
    details: list[Any] = field(default_factory=list)

    def as_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"passed": self.passed, "residual": self.residual}
        if self.note:
            payload["note"] = self.note
        if self.details:
            payload["details"] = self.details
        return payload


@dataclass
class ConvergenceReport:
    case: str
    params: dict[str, str]
    schedule: Schedule
    generators: list[GeneratorReport]
    conditions: dict[str, ConditionResult]
    thresholds: Thresholds
    probes: list[str]
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions.values()) and all(
            section.get("passed", True) for section in self.extras.values() if isinstance(section, dict)
        )

    def as_dict(self) -> dict[str, Any]:
        return {
            "case": self.case,
            "conditions": {key: value.as_dict() for key, value in sorted(self.conditions.items())},
            "extras": self.extras,
            "generators": [g.as_dict() for g in self.generators],
            "kind": "convergence",
            "params": self.params,
            "passed": self.passed,
            "probes": self.probes,
            "schedule": self.schedule.as_dict(),
            "thresholds": self.thresholds.as_dict(),
        }


# --------------------------------------------------------------------------
# Point evaluation

PointErrors = list[tuple[float, float]]


def _operator_point(
    case: ContractionCase,
    eps: Fraction,
    index: Optional[int],
    eps0: Fraction,
    probes: ProbeSet,
) -> PointErrors:
    grid = probes.grid
    embedding = case.embedding(eps0, eps, index)
    rows = []
    for k in range(3):
        op = case.scaled_operator(k, eps, index)
        target = case.target_operator(k)
        sup = l2 = 0.0
        for f in probes.functions:
            lhs = op.evaluate(embed(f, embedding), *grid.coords)
            rhs = target.evaluate(case.limit_map(f), *grid.coords)
            diff = np.abs(lhs - rhs)
            sup = max(sup, float(np.max(diff)))
            l2 = max(l2, math.sqrt(float(np.sum(grid.weights * diff**2))))
        rows.append((sup, l2))
    return rows


def _mode_values(radius: float, orders: Iterable[int], grid: QuadratureGrid) -> dict[int, np.ndarray]:
    return {n: bessel_mode(n, radius)(*grid.coords) for n in orders}


def _basis_point(
    case: ContractionCase, eps: Fraction, index: Optional[int], probes: ProbeSet
) -> PointErrors:
    """Condition (iv) for the su2 case, evaluated on ladder coefficients mapped through L."""

    degree = index if index is not None else int(case.params["R"] / eps)
    radius = float(case.params["R"])
    orders = [f.basis_index[1] for f in probes.functions]  # type: ignore[index]
    modes = _mode_values(radius, range(-max(map(abs, orders)) - 1, max(map(abs, orders)) + 2), probes.grid)
    rows = []
    for k in range(3):
        scale = float(case.scale(k, eps))
        psi_column = case.edge.psi.column(k)
        sup = l2 = 0.0
        for m in orders:
            diff: dict[int, complex] = {}
            for target, c in su2_ladder(degree, m, k).items():
                diff[-target] = diff.get(-target, 0j) + scale * c
            for j, weight in enumerate(psi_column):
                if not weight:
                    continue
                for n, c in iso2_ladder(radius, -m, j).items():
                    diff[n] = diff.get(n, 0j) - float(weight) * c
            l2 = max(l2, math.sqrt(sum(abs(v) ** 2 for v in diff.values())))
            field_values = sum((c * modes[n] for n, c in diff.items()), np.zeros(probes.grid.size, dtype=complex))
            sup = max(sup, float(np.max(np.abs(field_values))))
        rows.append((sup, l2))
    return rows


def evaluate_point(
    case: ContractionCase,
    eps: Fraction,
    index: Optional[int],
    eps0: Fraction,
    probes: ProbeSet,
) -> PointErrors:
    if case.uses_basis:
        return _basis_point(case, eps, index, probes)
    return _operator_point(case, eps, index, eps0, probes)


async def _evaluate_parallel(
    case: ContractionCase, schedule: Schedule, probes: ProbeSet, parallel: int
) -> list[PointErrors]:
    semaphore = asyncio.Semaphore(max(1, parallel))
    eps0 = schedule.eps[0]

    async def run(eps: Fraction, index: Optional[int]) -> PointErrors:
        async with semaphore:
            return await asyncio.to_thread(evaluate_point, case, eps, index, eps0, probes)

    return list(await asyncio.gather(*(run(e, i) for e, i in schedule.points())))


def evaluate_schedule(
    case: ContractionCase, schedule: Schedule, probes: ProbeSet, parallel: int = 1
) -> list[PointErrors]:
    """Errors per schedule point, merged in schedule order."""

    if parallel <= 1:
        eps0 = schedule.eps[0]
        return [evaluate_point(case, e, i, eps0, probes) for e, i in schedule.points()]
    return asyncio.run(_evaluate_parallel(case, schedule, probes, parallel))


# --------------------------------------------------------------------------
# Conditions


def sph_to_bessel_check(
    radius: float,
    m: int,
    l_schedule: Sequence[int],
    theta_grid: Sequence[float],
    phi: float = 0.0,
) -> list[tuple[int, float]]:
    """sup_θ |Y_l^m(Rθ/l, φ) e^{imφ} - i^m J_m(Rθ)| for each l."""

    theta = np.asarray(theta_grid, dtype=float)
    limit = min(l * math.pi / radius for l in l_schedule)
    if np.any(theta < 0) or np.any(theta >= limit):
        raise DomainError("Theta grid leaves the deformed disc")
    expected = (1j) ** (m % 4) * np.asarray(bessel_j(m, radius * theta))
    rows = []
    for l in l_schedule:
        values = np.asarray(sph_harm(l, m, radius * theta / l, phi)) * np.exp(1j * m * phi)
        rows.append((int(l), float(np.max(np.abs(values - expected)))))
    return rows


def condition_iii_check(
    case: ContractionCase, probes: ProbeSet, eps0: ParamValue, index0: Optional[int] = None
) -> float:
    """max |⟨L f, L g⟩ - ⟨f, g⟩| over probe pairs."""

    worst = 0.0
    eps0 = as_param(eps0)
    source = case.source_space(eps0, index0)
    functions = probes.functions
    for f, g in itertools.combinations_with_replacement(functions, 2):
        if case.uses_basis:
            before = inner_product(f, g, source, resolution=config.DISC_QUADRATURE_PANELS)
            after = 1.0 if f.basis_index == g.basis_index else 0.0
        else:
            before = inner_product(f, g, source)
            after = inner_product(case.limit_map(f), case.limit_map(g), case.target_space())
        worst = max(worst, abs(after - before))
    return worst


def _condition_i(case: ContractionCase, schedule: Schedule, probes: ProbeSet, thresholds: Thresholds) -> ConditionResult:
    if case.uses_basis:
        radius = float(case.params["R"])
        coords = probes.grid.coords
        errors = []
        for eps, index in schedule.points():
            degree = index if index is not None else int(case.params["R"] / eps)
            worst = 0.0
            for f in probes.functions:
                _, m = f.basis_index  # type: ignore[misc]
                lifted = spherical_probe(degree, m, float(eps))(*coords)
                limit = case.limit_map(f)(*coords)
                worst = max(worst, float(np.max(np.abs(lifted - limit))))
            errors.append(worst)
        eps_values = [float(e) for e in schedule.eps]
        if max(errors) <= thresholds.exact_tolerance:
            return ConditionResult(True, max(errors), "exact")
        try:
            fit = rate_fit(list(zip(eps_values, errors)))
        except DegenerateFit:
            return ConditionResult(False, errors[-1], "pointwise discrepancy could not be fitted")
        passed = _is_monotone(errors, thresholds.exact_tolerance) and fit.p >= thresholds.min_rate
        return ConditionResult(
            passed,
            errors[-1],
            f"pointwise limit of basis probes, fitted rate {fit.p:.3f}",
            [{"eps": e, "error": v} for e, v in zip(eps_values, errors)],
        )

    eps0 = schedule.eps[0]
    worst = 0.0
    for eps, index in schedule.points():
        embedding = case.embedding(eps0, eps, index)
        for f in probes.functions:
            lifted = embed(f, embedding)(*probes.grid.coords)
            limit = case.limit_map(f)(*probes.grid.coords)
            worst = max(worst, float(np.max(np.abs(lifted - limit))))
    return ConditionResult(worst <= thresholds.exact_tolerance, worst, "embedded probes against L(f)")


def _condition_ii(case: ContractionCase, probes: ProbeSet) -> ConditionResult:
    target = case.target_space()
    hit = True
    for f in probes.functions:
        image = case.limit_map(f)
        values = image(*probes.grid.coords)
        if not np.all(np.isfinite(values)):
            hit = False
        if image.support is not None and not target.domain.contains_box(image.support):
            hit = False
    return ConditionResult(hit, None, "checked on the probe set only")


def _generator_report(
    name: str, k: int, eps: list[float], rows: list[PointErrors], thresholds: Thresholds
) -> GeneratorReport:
    sup = [point[k][0] for point in rows]
    l2 = [point[k][1] for point in rows]
    report = GeneratorReport(name=name, index=k, eps=eps, sup_errors=sup, l2_errors=l2)
    if max(sup) <= thresholds.exact_tolerance:
        report.exact = True
        report.passed = True
        return report
    report.monotone = _is_monotone(sup, thresholds.exact_tolerance)
    try:
        report.rate = rate_fit(list(zip(eps, sup)))
    except DegenerateFit:
        report.passed = False
        return report
    report.passed = (
        sup[-1] <= thresholds.final_error
        and report.rate.p >= thresholds.min_rate
        and report.rate.r2 >= thresholds.min_r2
        and report.monotone
    )
    return report


def run_case(
    case: ContractionCase,
    schedule: Optional[Schedule] = None,
    probes: Optional[ProbeSet] = None,
    thresholds: Optional[Thresholds] = None,
    *,
    parallel: int = 1,
) -> ConvergenceReport:
    schedule = schedule or Schedule.default(case)
    if schedule.kind is not case.schedule_kind:
        raise ScheduleMismatch(
            f"Case {case.case_id} needs a {case.schedule_kind.value} schedule, got {schedule.kind.value}"
        )
    probes = probes or default_probes(case, schedule)
    thresholds = thresholds or Thresholds.for_case(case.case_id)

    started = time.perf_counter()
    logger.info("Проверяю сжатие %s на %d точках расписания", case.case_id, len(schedule.eps))
    rows = evaluate_schedule(case, schedule, probes, parallel)
    eps = [float(e) for e in schedule.eps]
    generators = [
        _generator_report(name, k, eps, rows, thresholds)
        for k, name in enumerate(case.generator_names)
    ]

    eps0, index0 = schedule.points()[0]
    residual_iii = condition_iii_check(case, probes, eps0, index0)
    conditions = {
        "i": _condition_i(case, schedule, probes, thresholds),
        "ii": _condition_ii(case, probes),
        "iii": ConditionResult(residual_iii <= thresholds.isometry_tolerance, residual_iii),
        "iv": ConditionResult(
            all(g.passed for g in generators),
            max(g.sup_errors[-1] for g in generators),
            "pointwise and L2 convergence of scaled generators",
        ),
    }
    report = ConvergenceReport(
        case=case.case_id,
        params=case.params.to_json(),
        schedule=schedule,
        generators=generators,
        conditions=conditions,
        thresholds=thresholds,
        probes=[f.label for f in probes.functions],
    )
    logger.info(
        "Сжатие %s проверено за %.2f с, результат: %s",
        case.case_id,
        time.perf_counter() - started,
        "успех" if report.passed else "провал",
    )
    return report


def aborted_report(case: ContractionCase, schedule: Schedule, reason: str) -> ConvergenceReport:
    """Failed report for a run that stopped before all errors were measured."""

    skipped = "not evaluated: run aborted"
    return ConvergenceReport(
        case=case.case_id,
        params=case.params.to_json(),
        schedule=schedule,
        generators=[
            GeneratorReport(name=name, index=k, eps=[], sup_errors=[], l2_errors=[], monotone=False)
            for k, name in enumerate(case.generator_names)
        ],
        conditions={
            "i": ConditionResult(False, note=skipped),
            "ii": ConditionResult(False, note=skipped),
            "iii": ConditionResult(False, note=skipped),
            "iv": ConditionResult(False, note=reason),
        },
        thresholds=Thresholds.for_case(case.case_id),
        probes=[],
    )


# --------------------------------------------------------------------------
# Homomorphism suite


def _residual_probes(space: FunctionSpace) -> tuple[list[TestFunction], Coordinates]:
    kind = space.domain.kind
    if kind is DomainKind.HALF_LINE:
        return [bump(1.25, 0.75), bump(1.0, 0.5)], (np.linspace(0.5, 2.0, 200),)
    if kind in (DomainKind.DEFORMED_DISC, DomainKind.POLAR_PLANE):
        probe = bump_product(bump(1.5, 0.5), bump(3.0, 1.0))
        first, second = np.meshgrid(np.linspace(1.05, 1.95, 20), np.linspace(2.05, 3.95, 10), indexing="ij")
        return [probe], (first.ravel(), second.ravel())
    return [bump(0.0, 1.0), bump(0.5, 0.75)], (np.linspace(-1.0, 1.25, 200),)


def representation_residual(rep: RepRealization) -> float:
    probes, grid = _residual_probes(rep.space)
    return commutator_residual(rep, probes, grid)


def homomorphism_suite(case: ContractionCase) -> dict[str, Any]:
    """Commutator residuals of the family at ε = 1 and of the limit representation."""

    if case.schedule_kind is ScheduleKind.SEQUENTIAL_L:
        members = [realize(case.case_id, case.params, 1, index=l) for l in range(1, 7)]
    elif case.schedule_kind is ScheduleKind.SEQUENTIAL_N:
        members = [realize(case.case_id, case.params, 1, index=n) for n in range(2, 7)]
    else:
        members = [case.family(1)]
    members.append(case.limit())
    residuals = {rep.label: representation_residual(rep) for rep in members}
    section: dict[str, Any] = {
        "passed": all(v <= config.HOMOMORPHISM_TOLERANCE for v in residuals.values()),
        "residuals": residuals,
        "tolerance": config.HOMOMORPHISM_TOLERANCE,
    }
    if case.uses_basis:
        theta, phi = np.meshgrid(np.linspace(0.3, 2.8, 12), np.linspace(0.2, 6.0, 12), indexing="ij")
        ladder = max(ladder_consistency_residual(l, 1, (theta.ravel(), phi.ravel())) for l in range(1, 7))
        section["ladder_residual"] = ladder
        section["passed"] = section["passed"] and ladder <= config.HOMOMORPHISM_TOLERANCE
    return section


__all__ = [
    "ConditionResult",
    "ConvergenceReport",
    "DegenerateFit",
    "GeneratorReport",
    "ProbeSet",
    "RateFit",
    "Schedule",
    "ScheduleError",
    "ScheduleMismatch",
    "Thresholds",
    "aborted_report",
    "condition_iii_check",
    "default_probes",
    "evaluate_point",
    "evaluate_schedule",
    "homomorphism_suite",
    "rate_fit",
    "representation_residual",
    "run_case",
    "sph_to_bessel_check",
]
