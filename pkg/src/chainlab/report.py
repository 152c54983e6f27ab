"""
Audits over exponent ranges and their CSV / aligned-text rendering.

Rows are computed independently (optionally in a process pool) and always
emitted in ascending n, so the output only depends on the configuration.
"""

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .bounds import KIND_ORDER, BoundKind, BoundReport, bound_value, format_number, make_report
from .constructors import METHODS, SEARCH_BASE_LIMIT, ConstructionOutcome, construct
from .errors import BoundDomainError, ContractViolation
from .search import (
    IotaResolver,
    IotaSource,
    KnownValuesTable,
    SearchBudget,
    load_known_values,
    shortest_chain,
    shortest_star_chain,
)

logger = logging.getLogger(__name__)

MISSING = "-"
AUDIT_METHODS = ("halving-run", "pothole", "factor-pothole", "iterated-factor")
KIND_METHOD = {
    BoundKind.SIMPLE: "halving-run",
    BoundKind.POTHOLE: "pothole",
    BoundKind.IMPROVED: "factor-pothole",
    BoundKind.MAIN: "iterated-factor",
    BoundKind.BACKTRACK: "backtrack",
    BoundKind.INTEGRAL: "prime-ladder",
    BoundKind.DEGREE_ROAD: "degree-road",
}
METHOD_KIND = {m: k for k, m in KIND_METHOD.items()}
BOUNDS_HEADER = ("n", "kind", "bound", "constructed_length", "satisfied", "iota_source")


@dataclass(frozen=True)
class AuditRow:
    """
    One exponent of the Scholz audit. ``equality`` is only set when both
    iota values were proven by search.
    """

    n: int
    iota_n: int
    iota_n_source: str
    iota_mersenne: int
    iota_mersenne_source: str
    scholz_rhs: int
    scholz_holds: bool
    equality: Optional[bool]
    lower_corollary: bool
    star_n: Optional[int] = None
    star_mersenne: Optional[int] = None
    star_holds: Optional[bool] = None
    methods: Dict[str, Tuple[int, str]] = field(default_factory=dict)

    def cells(self) -> List[str]:
        cells = [
            str(self.n),
            str(self.iota_n),
            self.iota_n_source,
            str(self.iota_mersenne),
            self.iota_mersenne_source,
            str(self.scholz_rhs),
            _flag(self.scholz_holds),
            _flag(self.equality),
            _flag(self.lower_corollary),
            _opt(self.star_n),
            _opt(self.star_mersenne),
            _flag(self.star_holds),
        ]
        for method in AUDIT_METHODS:
            length, bound = self.methods.get(method, (None, MISSING))
            cells += [_opt(length), bound]
        return cells


AUDIT_HEADER = (
    "n",
    "iota_n",
    "iota_n_source",
    "iota_mersenne",
    "iota_mersenne_source",
    "scholz_rhs",
    "scholz_holds",
    "equality",
    "lower_corollary",
    "star_n",
    "star_mersenne",
    "star_holds",
) + tuple(f"{m}_{col}" for m in AUDIT_METHODS for col in ("length", "bound"))


def _flag(value: Optional[bool]) -> str:
    return MISSING if value is None else ("true" if value else "false")


def _opt(value: Optional[int]) -> str:
    return MISSING if value is None else str(value)


@dataclass(frozen=True)
class AuditSettings:
    budget: SearchBudget = field(default_factory=SearchBudget)
    table_path: Optional[Path] = None
    star: bool = False

    def table(self) -> Optional[KnownValuesTable]:
        return load_known_values(self.table_path) if self.table_path else None


def _try_construct(method: str, n: int) -> Optional[ConstructionOutcome]:
    if n < METHODS[method].min_n:
        return None
    return construct(method, n)


def scholz_row(n: int, settings: AuditSettings, table: Optional[KnownValuesTable] = None) -> AuditRow:
    if n < 2:
        raise ContractViolation(f"the Scholz audit starts at n = 2, got {n}")
    resolver = IotaResolver(table, settings.budget, allow_fallback=True)
    iota_n, n_source = resolver.resolve(n)

    outcomes = {m: _try_construct(m, n) for m in AUDIT_METHODS}
    best = min((o for o in outcomes.values() if o is not None), key=lambda o: o.length)
    mersenne = (1 << n) - 1
    searched = shortest_chain(mersenne, settings.budget)
    if table is not None:
        table.cross_check(searched)
    if searched.proven_optimal:
        iota_m, m_source = searched.optimal_length, IotaSource.SEARCH.value
    else:
        logger.warning(f"iota(2^{n}-1) not proven within budget; using the {best.method} construction")
        iota_m, m_source = best.length, f"construction:{best.method}"

    rhs = n - 1 + iota_n
    both_proven = searched.proven_optimal and n_source is IotaSource.SEARCH
    row_methods = {}
    for method, outcome in outcomes.items():
        if outcome is None:
            continue
        kind = METHOD_KIND[method]
        bound = bound_value(kind, n, iota_n, iota_source=n_source)
        row_methods[method] = (outcome.length, bound.text())

    star_n = star_m = star_holds = None
    if settings.star:
        star_a = shortest_star_chain(n, settings.budget)
        star_b = shortest_star_chain(mersenne, settings.budget)
        if star_a.proven_optimal:
            star_n = star_a.optimal_length
        if star_b.proven_optimal:
            star_m = star_b.optimal_length
        if star_n is not None and star_m is not None:
            star_holds = star_m <= n - 1 + star_n

    logger.info(f"audited n={n}: iota(2^n-1)={iota_m} ({m_source}), rhs={rhs}")
    return AuditRow(
        n=n,
        iota_n=iota_n,
        iota_n_source=n_source.value,
        iota_mersenne=iota_m,
        iota_mersenne_source=m_source,
        scholz_rhs=rhs,
        scholz_holds=iota_m <= rhs,
        equality=(iota_m == rhs) if both_proven else None,
        lower_corollary=iota_m >= n + 1,
        star_n=star_n,
        star_mersenne=star_m,
        star_holds=star_holds,
        methods=row_methods,
    )


def _scholz_task(args: Tuple[int, AuditSettings]) -> AuditRow:
    n, settings = args
    return scholz_row(n, settings, settings.table())


def _bounds_task(args: Tuple[int, Tuple[BoundKind, ...], AuditSettings]) -> List[BoundReport]:
    n, kinds, settings = args
    return bounds_rows(n, kinds, settings, settings.table())


def _run_ordered(task: Callable, items: Sequence, workers: int) -> List:
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(task, items))
    return [task(item) for item in items]


def scholz_audit(n_max: int, settings: AuditSettings, workers: int = 1, n_min: int = 2) -> List[AuditRow]:
    if n_max < 2:
        raise ContractViolation(f"n_max must be at least 2, got {n_max}")
    items = [(n, settings) for n in range(max(2, n_min), n_max + 1)]
    return _run_ordered(_scholz_task, items, workers)


def bounds_rows(
    n: int,
    kinds: Iterable[BoundKind],
    settings: AuditSettings,
    table: Optional[KnownValuesTable] = None,
) -> List[BoundReport]:
    """One report per kind, in enumeration order."""
    kinds = sorted(set(kinds), key=KIND_ORDER.__getitem__)
    resolver = IotaResolver(table, settings.budget, allow_fallback=True)
    cache: Dict[str, Optional[ConstructionOutcome]] = {}

    def outcome(method: str) -> Optional[ConstructionOutcome]:
        if method not in cache:
            cache[method] = _try_construct(method, n)
        return cache[method]

    def best_length() -> Optional[int]:
        lengths = [o.length for o in (outcome(m) for m in AUDIT_METHODS) if o is not None]
        return min(lengths) if lengths else None

    reports = []
    for kind in kinds:
        try:
            if kind in (BoundKind.BRAUER_LOWER, BoundKind.BRAUER_UPPER):
                bound = bound_value(kind, (1 << n) - 1)
                reports.append(make_report(bound, best_length()))
                continue
            method = KIND_METHOD.get(kind)
            if method is None:
                bound = bound_value(kind, n, resolver=resolver)
                reports.append(make_report(bound, best_length()))
                continue
            built = outcome(method)
            if built is None:
                raise BoundDomainError(f"{method} is not defined at n={n}")
            reports.append(construction_report(built, n, resolver))
        except BoundDomainError as e:
            logger.debug(f"n={n} {kind.value}: {e}")
            reports.append(_empty_report(n, kind))
    return reports


def _empty_report(n: int, kind: BoundKind) -> BoundReport:
    return BoundReport(n, kind, None, None, None, None)


def bounds_table(
    n_range: Tuple[int, int], kinds: Sequence[BoundKind], settings: AuditSettings, workers: int = 1
) -> List[BoundReport]:
    low, high = n_range
    if low < 1 or high < low:
        raise ContractViolation(f"range {low}..{high} is empty")
    if not kinds:
        return []
    items = [(n, tuple(kinds), settings) for n in range(low, high + 1)]
    return [report for rows in _run_ordered(_bounds_task, items, workers) for report in rows]


def bound_cells(report: BoundReport) -> List[str]:
    return [
        str(report.n),
        report.kind.value,
        report.bound.text() if report.bound is not None else MISSING,
        _opt(report.constructed_length),
        _flag(report.satisfied),
        report.iota_source.value if report.iota_source is not None else MISSING,
    ]


def render_csv(header: Sequence[str], rows: Iterable[Sequence[str]], stamp: Optional[datetime] = None) -> str:
    """CSV preceded by a ``# generated`` line; everything below it is deterministic."""
    stamp = stamp or datetime.now(timezone.utc)
    buffer = io.StringIO()
    buffer.write(f"# generated {stamp.isoformat(timespec='seconds')}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def render_pretty(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    rows = [list(header)] + [list(r) for r in rows]
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def audit_csv(rows: Sequence[AuditRow], pretty: bool = False) -> str:
    cells = [row.cells() for row in rows]
    return render_pretty(AUDIT_HEADER, cells) if pretty else render_csv(AUDIT_HEADER, cells)


def bounds_csv(reports: Sequence[BoundReport], pretty: bool = False) -> str:
    cells = [bound_cells(r) for r in reports]
    return render_pretty(BOUNDS_HEADER, cells) if pretty else render_csv(BOUNDS_HEADER, cells)


def format_comparison(length: int, bound: Optional[BoundReport]) -> str:
    """``"7 <= 7 OK"``, the one-line verdict of ``chainlab construct``."""
    if bound is None or bound.bound is None:
        return f"{length}"
    op = ">" if bound.kind.is_lower else "<="
    verdict = "OK" if bound.satisfied else "EXCEEDS"
    return f"{length} {op} {format_number(bound.bound.value)} {verdict}"


def construction_report(
    outcome: ConstructionOutcome, n: int, resolver: Optional[IotaResolver] = None
) -> Optional[BoundReport]:
    """The bound a construction is measured against, or None if it has none."""
    kind_name = METHODS[outcome.method].bound_kind
    if kind_name is None:
        return None
    kind = BoundKind.parse(kind_name)
    filler = outcome.filler_count if kind is BoundKind.INTEGRAL else None
    bound = bound_value(kind, n, resolver=resolver if kind.needs_iota else None, filler=filler)
    source = None
    if kind is BoundKind.MAIN and outcome.details.get("base_exponent", 0) <= SEARCH_BASE_LIMIT:
        source = IotaSource.SEARCH
    return make_report(bound, outcome.length, source)


def measurement(outcome: ConstructionOutcome, report: Optional[BoundReport]) -> Dict[str, object]:
    """The ``[measurement]`` block of a chain file."""
    block: Dict[str, object] = {
        "base_length": outcome.base_length,
        "adjoined_count": outcome.adjoined_count,
        "filler_count": outcome.filler_count,
    }
    if report is not None and report.bound is not None:
        block["bound_kind"] = report.kind.value
        block["bound"] = report.bound.text()
        block["satisfied"] = bool(report.satisfied)
        if report.iota_source is not None:
            block["iota_source"] = report.iota_source.value
    return block
