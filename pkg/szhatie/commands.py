"""Command-line surface: argument parsing, subcommand handlers and exit codes."""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence

from archive import ArchiveError, ReportArchive, initialise_archive

from . import config
from .algebra import (
    DEFAULT_BASIS_NAMES,
    FAMILY_TAGS,
    ClassificationError,
    DivergenceError,
    InvalidFamilyParameter,
    LieAlgebra3,
    LinearMap3,
    NotALieAlgebra,
    ScalingMap,
    ScalingParseError,
    SingularMap,
    algebra_from_json,
    algebra_to_json,
    catalog,
    change_basis,
    classify,
    contract,
    family,
    parse_scaling_spec,
    scaling_from_json,
)
from .direct_limit import compatible_bases_check, matrix_element_table, matrix_elements_section
from .env import env_int
from .operators import SingularPoint
from .reports import (
    convergence_csv,
    dumps,
    matrix_elements_csv,
    matrix_elements_payload,
    write_text,
)
from .representations import (
    CASE_PARAMETERS,
    ContractionCase,
    InvalidParam,
    ScheduleKind,
    UnknownCase,
    as_param,
    contraction_case,
)
from .spaces import BoundaryClassViolation, UnboundedSupport
from .special import DomainError
from .verify import (
    ConvergenceReport,
    DegenerateFit,
    Schedule,
    ScheduleError,
    ScheduleMismatch,
    aborted_report,
    homomorphism_suite,
    representation_residual,
    run_case,
)

logger = logging.getLogger(__name__)

_DISPLAY_PAIRS = ((2, 0), (2, 1), (0, 1))
_NAMED_INSTANCES = {("l", Fraction(0)): "iso(2)", ("g", Fraction(-1)): "iso(1,1)"}
_PARAM_FLAGS = (("A", "A"), ("R", "R"), ("lambda", "lam"), ("a", "a"), ("b", "b"), ("r", "r"), ("sign", "sign"))
_USAGE_ERRORS = (
    ArchiveError,
    BoundaryClassViolation,
    ClassificationError,
    DomainError,
    InvalidFamilyParameter,
    InvalidParam,
    NotALieAlgebra,
    ScalingParseError,
    ScheduleError,
    ScheduleMismatch,
    SingularMap,
    UnboundedSupport,
    UnknownCase,
)


class CommandUsageError(ValueError):
    """Raised for malformed command lines instead of exiting the interpreter."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise CommandUsageError(f"{self.prog}: {message}")


def _out(text: str) -> None:
    sys.stdout.write(text)
    if not text.endswith("\n"):
        sys.stdout.write("\n")


# --------------------------------------------------------------------------
# Formatting


def _format_coefficient(value: Fraction, name: str) -> str:
    if value == 1:
        return name
    if value == -1:
        return f"-{name}"
    return f"{value}*{name}"


def _format_vector(vector: Sequence[Fraction], names: Sequence[str]) -> str:
    parts = [_format_coefficient(c, n) for c, n in zip(vector, names) if c != 0]
    if not parts:
        return "0"
    return "".join(p if i == 0 or p.startswith("-") else f"+{p}" for i, p in enumerate(parts))


def format_brackets(alg: LieAlgebra3) -> str:
    names = alg.basis_names
    parts = [
        f"[{names[i]},{names[j]}]={_format_vector(alg.structure[i][j], names)}"
        for i, j in _DISPLAY_PAIRS
        if any(alg.structure[i][j])
    ]
    return ", ".join(parts) if parts else "abelian"


def format_classification(tag: str, lam: Optional[Fraction]) -> str:
    label = tag if lam is None else f"{tag}({lam})"
    named = _NAMED_INSTANCES.get((tag, lam))
    return f"{label} = {named}" if named else label


def _format_map(psi: LinearMap3) -> str:
    return "; ".join(
        f"{name}->{_format_vector(psi.column(i), DEFAULT_BASIS_NAMES)}"
        for i, name in enumerate(DEFAULT_BASIS_NAMES)
    )


# --------------------------------------------------------------------------
# Argument helpers


def _split(text: str) -> list[str]:
    parts = [p.strip() for p in text.split(",")]
    if not all(parts):
        raise CommandUsageError(f"Malformed list '{text}'")
    return parts


def _int_list(text: str) -> list[int]:
    try:
        return [int(p) for p in _split(text)]
    except ValueError as exc:
        raise CommandUsageError(f"Expected integers in '{text}'") from exc


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {
        name: getattr(args, dest)
        for name, dest in _PARAM_FLAGS
        if getattr(args, dest, None) is not None
    }


def _case(args: argparse.Namespace) -> ContractionCase:
    return contraction_case(args.case, _overrides(args))


def _schedule(args: argparse.Namespace, case: ContractionCase) -> Schedule:
    given = [flag for flag in ("eps", "l", "n") if getattr(args, flag, None)]
    if len(given) > 1:
        raise CommandUsageError("Use only one of --eps, --l and --n")
    if not given:
        return Schedule.default(case)
    if given[0] == "eps":
        return Schedule.continuous(_split(args.eps))
    expected = ScheduleKind.SEQUENTIAL_L if given[0] == "l" else ScheduleKind.SEQUENTIAL_N
    if case.schedule_kind is not expected:
        raise ScheduleMismatch(f"Case {case.case_id} does not take a --{given[0]} schedule")
    return Schedule.sequential(case, _int_list(getattr(args, given[0])))


def _parallel(args: argparse.Namespace) -> int:
    if args.parallel is not None:
        if args.parallel < 1:
            raise CommandUsageError("--parallel must be at least 1")
        return args.parallel
    return env_int(config.PARALLEL_ENV, default=1, minimum=1)


def _load_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CommandUsageError(f"Cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CommandUsageError(f"{path} is not valid JSON: {exc}") from exc


def _scaling(spec: str) -> ScalingMap:
    if spec.strip().startswith("diag:"):
        return parse_scaling_spec(spec)
    if spec.strip().startswith("{"):
        try:
            payload = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise ScalingParseError(f"Malformed scaling JSON: {exc}") from exc
    else:
        payload = _load_json(spec)
    try:
        return scaling_from_json(payload)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (ScalingParseError, SingularMap)):
            raise
        raise ScalingParseError(f"Malformed scaling matrix: {exc}") from exc


def _basis(text: str) -> LinearMap3:
    columns = [c.strip() for c in text.split(";")]
    if len(columns) != 3:
        raise CommandUsageError("A basis needs three ';'-separated columns")
    return LinearMap3.from_columns([_split(c) for c in columns])


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        write_text(path, text)
    else:
        _out(text)


def _archive(args: argparse.Namespace, kind: str, case: str, passed: bool, payload: Mapping[str, Any]) -> None:
    path = getattr(args, "archive", None) or os.getenv(config.ARCHIVE_ENV)
    if not path:
        return

    async def store() -> int:
        await initialise_archive(path)
        async with ReportArchive(path) as archive:
            return await archive.save_report(kind, case, passed, payload)

    run_id = asyncio.run(store())
    logger.info("Запуск сохранён в архив %s под номером %s", path, run_id)


# --------------------------------------------------------------------------
# Subcommands


def algebras_command(args: argparse.Namespace) -> int:
    """Lists the catalog, or one family instance."""

    logger.info("Получена команда algebras")
    if args.family:
        algebras = [family(args.family, args.lam)]
    else:
        algebras = catalog()
    if args.json:
        payload = {
            "algebras": [
                dict(algebra_to_json(alg), brackets=format_brackets(alg)) for alg in algebras
            ],
            "kind": "catalog",
        }
        _out(dumps(payload))
        return config.EXIT_OK
    width = max(len(alg.display_name) for alg in algebras)
    lines = [f"{alg.display_name.ljust(width)}  {format_brackets(alg)}" for alg in algebras]
    _out("\n".join(lines))
    return config.EXIT_OK


def contract_command(args: argparse.Namespace) -> int:
    logger.info("Получена команда contract: источник=%s, отображение=%s", args.source, args.map)
    source = family(args.source, args.lam)
    scaling = _scaling(args.map)
    if args.basis:
        source = change_basis(source, _basis(args.basis))
    try:
        limit = contract(source, scaling)
    except DivergenceError as exc:
        logger.warning("Контракция %s расходится", source.display_name)
        entries = [
            {"component": k, "exponent": exponent, "pair": [i, j]}
            for i, j, k, exponent in exc.entries
        ]
        if args.json:
            _out(dumps({"diverged": True, "entries": entries, "kind": "contraction", "source": source.display_name}))
        else:
            _out(f"source: {source.display_name}\nscaling: {scaling}\n{exc}")
        return config.EXIT_DIVERGENCE
    result = classify(limit)
    if args.json:
        payload = {
            "classification": {
                "lambda": None if result.lam is None else str(result.lam),
                "tag": result.tag,
                "witness": None if result.witness is None else result.witness.to_json(),
            },
            "diverged": False,
            "kind": "contraction",
            "limit": algebra_to_json(limit),
            "source": source.display_name,
        }
        _out(dumps(payload))
        return config.EXIT_OK
    _out(
        "\n".join(
            [
                f"source: {source.display_name}",
                f"scaling: {scaling}",
                f"limit: {format_brackets(limit)}",
                f"classified: {format_classification(result.tag, result.lam)}",
            ]
        )
    )
    return config.EXIT_OK


def classify_command(args: argparse.Namespace) -> int:
    logger.info("Получена команда classify")
    if args.algebra:
        alg = algebra_from_json(_load_json(args.algebra))
    elif args.source:
        alg = family(args.source, args.lam)
    else:
        raise CommandUsageError("classify needs --source or --algebra")
    if args.basis:
        alg = change_basis(alg, _basis(args.basis))
    result = classify(alg)
    if args.json:
        _out(
            dumps(
                {
                    "kind": "classification",
                    "lambda": None if result.lam is None else str(result.lam),
                    "tag": result.tag,
                    "witness": None if result.witness is None else result.witness.to_json(),
                }
            )
        )
        return config.EXIT_OK
    lines = [f"classified: {format_classification(result.tag, result.lam)}"]
    if result.witness is None:
        lines.append("witness: none over the rationals")
    else:
        lines.append(f"witness: {_format_map(result.witness)}")
    _out("\n".join(lines))
    return config.EXIT_OK


def verify_rep_command(args: argparse.Namespace) -> int:
    logger.info("Получена команда verify-rep: случай=%s", args.case)
    case = _case(args)
    if args.eps:
        index = args.index
        members = [case.family(as_param(args.eps), index), case.limit()]
        residuals = {rep.label: representation_residual(rep) for rep in members}
        section: dict[str, Any] = {
            "passed": all(v <= config.HOMOMORPHISM_TOLERANCE for v in residuals.values()),
            "residuals": residuals,
            "tolerance": config.HOMOMORPHISM_TOLERANCE,
        }
    else:
        section = homomorphism_suite(case)
    payload = dict(section, case=case.case_id, kind="homomorphism", params=case.params.to_json())
    _emit(dumps(payload), args.out)
    if args.out:
        _out(_summary_line(case.case_id, payload["passed"]))
    return config.EXIT_OK if payload["passed"] else config.EXIT_VERIFICATION_FAILED


def _summary_line(case_id: str, passed: bool) -> str:
    return f"{case_id}: {'PASS' if passed else 'FAIL'}"


def _summary(report: ConvergenceReport) -> str:
    lines = [_summary_line(report.case, report.passed)]
    for key, condition in sorted(report.conditions.items()):
        residual = "" if condition.residual is None else f" residual={condition.residual:.3e}"
        lines.append(f"  condition {key}: {'pass' if condition.passed else 'fail'}{residual}")
    for generator in report.generators:
        if generator.exact:
            rate = "exact"
        elif generator.rate is None:
            rate = "no fit"
        else:
            rate = f"p={generator.rate.p:.3f} r2={generator.rate.r2:.4f}"
        final = f"{generator.sup_errors[-1]:.3e}" if generator.sup_errors else "n/a"
        lines.append(
            f"  {generator.name}: final sup={final} {rate}"
            f" {'pass' if generator.passed else 'fail'}"
        )
    for name, section in sorted(report.extras.items()):
        lines.append(f"  {name}: {'pass' if section.get('passed', True) else 'fail'}")
    return "\n".join(lines)


def _checked_run(case: ContractionCase, schedule: Schedule, args: argparse.Namespace) -> ConvergenceReport:
    try:
        return run_case(case, schedule, parallel=_parallel(args))
    except (SingularPoint, DegenerateFit) as exc:
        logger.error("Проверка %s прервана: %s", case.case_id, exc)
        return aborted_report(case, schedule, str(exc))


def verify_command(args: argparse.Namespace) -> int:
    logger.info("Получена команда verify: случай=%s", args.case)
    case = _case(args)
    schedule = _schedule(args, case)
    l_schedule = [i for i in schedule.indices if i is not None]
    if case.uses_basis and args.m_max > min(l_schedule):
        raise CommandUsageError("--m-max must not exceed the smallest degree")
    report = _checked_run(case, schedule, args)
    completed = bool(report.generators[0].sup_errors)
    if completed:
        report.extras["homomorphism"] = homomorphism_suite(case)
    if completed and case.uses_basis:
        report.extras["matrix_elements"] = matrix_elements_section(
            float(case.params["R"]), args.m_max, l_schedule, config.MATRIX_ELEMENT_TOLERANCE
        )
        report.extras["compatible_bases"] = compatible_bases_check(case.case_id, l_schedule)
    payload = report.as_dict()
    _emit(dumps(payload), args.out)
    if args.csv:
        write_text(args.csv, convergence_csv(payload))
    if args.out:
        _out(_summary(report))
    _archive(args, "convergence", case.case_id, report.passed, payload)
    return config.EXIT_OK if report.passed else config.EXIT_VERIFICATION_FAILED


def sweep_command(args: argparse.Namespace) -> int:
    logger.info("Получена команда sweep: случай=%s", args.case)
    case = _case(args)
    schedule = _schedule(args, case)
    report = _checked_run(case, schedule, args)
    payload = report.as_dict()
    _emit(convergence_csv(payload), args.csv)
    if args.out:
        write_text(args.out, dumps(payload))
    _archive(args, "sweep", case.case_id, report.passed, payload)
    return config.EXIT_OK if report.passed else config.EXIT_VERIFICATION_FAILED


def matrix_elements_command(args: argparse.Namespace) -> int:
    logger.info("Получена команда matrix-elements")
    radius = as_param(args.R if args.R is not None else config.DEFAULT_RADIUS)
    if radius <= 0:
        raise InvalidParam("R must be positive")
    l_schedule = _int_list(args.l) if args.l else list(config.DEFAULT_L_SCHEDULE)
    series = matrix_element_table(float(radius), args.m_max, l_schedule)
    payload = matrix_elements_payload(
        float(radius), args.m_max, l_schedule, series, config.MATRIX_ELEMENT_TOLERANCE
    )
    if args.csv:
        write_text(args.csv, matrix_elements_csv(payload))
    if args.out or not args.csv:
        _emit(dumps(payload), args.out)
    _archive(args, "matrix-elements", "su2-to-iso2", payload["passed"], payload)
    return config.EXIT_OK if payload["passed"] else config.EXIT_VERIFICATION_FAILED


def runs_command(args: argparse.Namespace) -> int:
    path = args.archive or os.getenv(config.ARCHIVE_ENV)
    if not path:
        raise CommandUsageError(f"runs needs --archive or {config.ARCHIVE_ENV}")
    logger.info("Получена команда runs: архив=%s", path)
    if not Path(path).exists():
        raise CommandUsageError(f"Archive {path} does not exist")

    async def read() -> Any:
        async with ReportArchive(path) as archive:
            if args.show is not None:
                return await archive.get_report(args.show)
            return await archive.list_runs(args.case)

    result = asyncio.run(read())
    if args.show is not None:
        if result is None:
            raise CommandUsageError(f"Run #{args.show} is not in the archive")
        _out(dumps(result))
        return config.EXIT_OK
    if args.json:
        _out(dumps({"kind": "runs", "runs": [record.as_dict() for record in result]}))
        return config.EXIT_OK
    lines = [
        f"{record.id:>5}  {record.created_at}  {record.kind:<16} {record.case_id:<14} "
        f"{'PASS' if record.passed else 'FAIL'}"
        for record in result
    ]
    _out("\n".join(lines) if lines else "archive is empty")
    return config.EXIT_OK


# --------------------------------------------------------------------------
# Parser


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("параметры случая")
    group.add_argument("--A", dest="A", help="константа A (случаи с пределом h)")
    group.add_argument("--R", dest="R", help="радиус R (su2-to-iso2)")
    group.add_argument("--lambda", dest="lam", help="параметр λ семейств g и l")
    group.add_argument("--a", dest="a", help="константа a (c-to-g1)")
    group.add_argument("--b", dest="b", help="константа b (c-to-g1, sl2-to-iso11)")
    group.add_argument("--r", dest="r", help="константа r (sl2-to-iso2)")
    group.add_argument("--sign", dest="sign", choices=("1", "-1", "+1"), help="ветвь ± (sl2-to-iso11)")


def _add_schedule_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("расписание")
    group.add_argument("--eps", help="убывающие значения ε через запятую")
    group.add_argument("--l", help="возрастающие степени l через запятую (su2-to-iso2)")
    group.add_argument("--n", help="возрастающие индексы n через запятую (sl2-to-iso11)")
    parser.add_argument("--parallel", type=int, help=f"число потоков (по умолчанию {config.PARALLEL_ENV} или 1)")


def _case_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--case", required=True, choices=sorted(CASE_PARAMETERS), help="идентификатор случая")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="contract", description="Проверка сжатий алгебр Ли и их представлений")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("algebras", help="каталог трёхмерных алгебр")
    p.add_argument("--family", choices=FAMILY_TAGS + ("iso2", "iso11"))
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=algebras_command)

    p = sub.add_parser("contract", help="точная контракция по отображению масштабирования")
    p.add_argument("--source", required=True, choices=FAMILY_TAGS + ("iso2", "iso11"))
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--map", required=True, help="diag:a,b,c или JSON (строка или путь к файлу)")
    p.add_argument("--basis", help="столбцы адаптированного базиса: '1,0,0;1,1,0;0,0,1'")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=contract_command)

    p = sub.add_parser("classify", help="классификация алгебры")
    p.add_argument("--source", choices=FAMILY_TAGS + ("iso2", "iso11"))
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--algebra", help="путь к JSON со структурными константами")
    p.add_argument("--basis", help="замена базиса перед классификацией")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=classify_command)

    p = sub.add_parser("verify-rep", help="коммутаторные невязки реализаций")
    _case_argument(p)
    _add_param_flags(p)
    p.add_argument("--eps", help="единственное значение ε")
    p.add_argument("--index", type=int, help="степень l или индекс n для --eps")
    p.add_argument("--out")
    p.set_defaults(handler=verify_rep_command)

    for name, handler, help_text in (
        ("verify", verify_command, "полная проверка сильного сжатия"),
        ("sweep", sweep_command, "таблица ошибок по расписанию"),
    ):
        p = sub.add_parser(name, help=help_text)
        _case_argument(p)
        _add_param_flags(p)
        _add_schedule_flags(p)
        p.add_argument("--out", help="путь для JSON-отчёта")
        p.add_argument("--csv", help="путь для CSV")
        p.add_argument("--archive", help=f"архив запусков (по умолчанию {config.ARCHIVE_ENV})")
        p.add_argument("--m-max", dest="m_max", type=int, default=config.DEFAULT_M_MAX)
        p.set_defaults(handler=handler)

    p = sub.add_parser("matrix-elements", help="пределы матричных элементов su2 -> iso2")
    p.add_argument("--R", dest="R")
    p.add_argument("--l", help="возрастающие степени l через запятую")
    p.add_argument("--m-max", dest="m_max", type=int, default=config.DEFAULT_M_MAX)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.add_argument("--archive")
    p.set_defaults(handler=matrix_elements_command)

    p = sub.add_parser("runs", help="список сохранённых запусков")
    p.add_argument("--archive")
    p.add_argument("--case")
    p.add_argument("--show", type=int, help="вывести отчёт запуска с этим номером")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=runs_command)
    return parser


def _fail(code: int, message: str) -> int:
    sys.stderr.write(f"error: {message}\n")
    return code


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CommandUsageError as exc:
        parser.print_usage(sys.stderr)
        return _fail(config.EXIT_USAGE, str(exc))
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except CommandUsageError as exc:
        return _fail(config.EXIT_USAGE, str(exc))
    except _USAGE_ERRORS as exc:
        logger.warning("Ошибка параметров команды %s: %s", args.command, exc)
        return _fail(config.EXIT_USAGE, str(exc))
    except DivergenceError as exc:
        return _fail(config.EXIT_DIVERGENCE, str(exc))
    except (SingularPoint, DegenerateFit) as exc:
        logger.error("Проверка прервана: %s", exc)
        return _fail(config.EXIT_VERIFICATION_FAILED, str(exc))


__all__ = ["CommandUsageError", "build_parser", "format_brackets", "format_classification", "run"]
