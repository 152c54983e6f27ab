import csv
import io
from datetime import datetime, timezone

import pytest

from chainlab.bounds import BoundKind, bound_value, make_report
from chainlab.constructors import construct, halving_run_chain
from chainlab.errors import ContractViolation
from chainlab.report import (
    AUDIT_HEADER,
    BOUNDS_HEADER,
    AuditSettings,
    audit_csv,
    bound_cells,
    bounds_csv,
    bounds_rows,
    bounds_table,
    construction_report,
    format_comparison,
    measurement,
    render_csv,
    render_pretty,
    scholz_audit,
)
from chainlab.search import IotaResolver, SearchBudget, packaged_table_path

STAMP = datetime(2026, 1, 1, tzinfo=timezone.utc)


@pytest.fixture(scope="module")
def settings():
    return AuditSettings(table_path=packaged_table_path())


def _body(text):
    lines = text.splitlines()
    assert lines[0].startswith("# generated ")
    return list(csv.reader(io.StringIO("\n".join(lines[1:]))))


class TestBoundsRows:
    def test_simple_at_four(self, settings, known_values):
        (report,) = bounds_rows(4, [BoundKind.SIMPLE], settings, known_values)
        assert bound_cells(report) == ["4", "simple", "6", "5", "true", "-"]

    def test_main_at_sixty_four(self, settings, known_values):
        (report,) = bounds_rows(64, [BoundKind.MAIN], settings, known_values)
        assert bound_cells(report) == ["64", "main", "83", "69", "true", "search"]

    def test_rows_follow_kind_order(self, settings, known_values):
        reports = bounds_rows(8, [BoundKind.MAIN, BoundKind.SIMPLE, BoundKind.POTHOLE], settings, known_values)
        assert [r.kind for r in reports] == [BoundKind.SIMPLE, BoundKind.POTHOLE, BoundKind.MAIN]

    def test_pothole_iota_from_search(self, settings, known_values):
        (report,) = bounds_rows(8, [BoundKind.POTHOLE], settings, known_values)
        assert bound_cells(report) == ["8", "pothole", "15", "14", "true", "search"]

    def test_undefined_method_gives_empty_cells(self, settings, known_values):
        (report,) = bounds_rows(3, [BoundKind.IMPROVED], settings, known_values)
        assert bound_cells(report) == ["3", "improved", "-", "-", "-", "-"]

    def test_brauer_kinds_use_the_number(self, settings, known_values):
        lower, upper = bounds_rows(10, [BoundKind.BRAUER_UPPER, BoundKind.BRAUER_LOWER], settings, known_values)
        assert lower.kind is BoundKind.BRAUER_LOWER
        assert lower.bound.n == 1023
        assert lower.satisfied
        assert upper.bound.n == 1023

    def test_scholz_rhs_has_no_construction(self, settings, known_values):
        (report,) = bounds_rows(5, [BoundKind.SCHOLZ_RHS], settings, known_values)
        assert report.bound.value == 7
        assert report.constructed_length == 7


class TestBoundsTable:
    def test_empty_kinds(self, settings):
        assert bounds_table((2, 8), [], settings) == []
        text = bounds_csv([])
        assert text.splitlines()[1] == ",".join(BOUNDS_HEADER)
        assert len(text.splitlines()) == 2

    def test_range_order(self, settings):
        reports = bounds_table((4, 6), [BoundKind.SIMPLE, BoundKind.POTHOLE], settings)
        assert [(r.n, r.kind.value) for r in reports] == [
            (4, "simple"), (4, "pothole"), (5, "simple"), (5, "pothole"), (6, "simple"), (6, "pothole"),
        ]
        assert all(r.satisfied for r in reports)

    def test_workers_do_not_change_output(self, settings):
        kinds = [BoundKind.SIMPLE, BoundKind.IMPROVED, BoundKind.MAIN]
        single = bounds_table((4, 9), kinds, settings, workers=1)
        pooled = bounds_table((4, 9), kinds, settings, workers=2)
        assert render_csv(BOUNDS_HEADER, map(bound_cells, single), STAMP) == render_csv(
            BOUNDS_HEADER, map(bound_cells, pooled), STAMP
        )

    def test_bad_range(self, settings):
        with pytest.raises(ContractViolation):
            bounds_table((9, 4), [BoundKind.SIMPLE], settings)


class TestScholzAudit:
    def test_first_rows(self, settings):
        rows = scholz_audit(5, settings)
        assert [r.n for r in rows] == [2, 3, 4, 5]
        assert [r.iota_mersenne for r in rows] == [2, 4, 5, 7]
        assert all(r.scholz_holds and r.equality for r in rows)
        assert all(r.iota_mersenne_source == "search" for r in rows)

    def test_lower_corollary_fails_at_two(self, settings):
        (row,) = scholz_audit(2, settings)
        assert row.lower_corollary is False
        assert row.cells()[:9] == ["2", "1", "search", "2", "search", "2", "true", "true", "false"]

    def test_method_columns(self, settings):
        (row,) = scholz_audit(4, settings, n_min=4)
        cells = dict(zip(AUDIT_HEADER, row.cells()))
        assert cells["halving-run_length"] == "5"
        assert cells["halving-run_bound"] == "6"
        assert cells["factor-pothole_length"] == "5"
        assert cells["star_n"] == "-"

    def test_star_columns(self):
        star_settings = AuditSettings(star=True)
        (row,) = scholz_audit(4, star_settings, n_min=4)
        assert (row.star_n, row.star_mersenne, row.star_holds) == (2, 5, True)

    def test_unproven_search_falls_back_to_a_construction(self):
        tight = AuditSettings(budget=SearchBudget(max_depth=3))
        (row,) = scholz_audit(5, tight, n_min=5)
        assert row.iota_mersenne_source.startswith("construction:")
        assert row.iota_mersenne == 7
        assert row.equality is None

    def test_workers_do_not_change_rows(self, settings):
        assert audit_csv(scholz_audit(4, settings, workers=2)).splitlines()[1:] == (
            audit_csv(scholz_audit(4, settings)).splitlines()[1:]
        )

    def test_n_max_below_two(self, settings):
        with pytest.raises(ContractViolation):
            scholz_audit(1, settings)


class TestRendering:
    def test_csv_header_line(self):
        text = render_csv(("a", "b"), [["1", "2"]], STAMP)
        assert text == "# generated 2026-01-01T00:00:00+00:00\na,b\n1,2\n"

    def test_pretty_alignment(self):
        text = render_pretty(("n", "value"), [["4", "6"], ["10", "15"]])
        lines = text.splitlines()
        assert lines[0] == " n  value"
        assert lines[1] == "--  -----"
        assert lines[3] == "10     15"

    def test_audit_csv_columns(self, settings):
        rows = _body(audit_csv(scholz_audit(3, settings)))
        assert rows[0] == list(AUDIT_HEADER)
        assert all(len(r) == len(AUDIT_HEADER) for r in rows)


class TestConstructionReport:
    def test_comparison_text(self):
        outcome = halving_run_chain(4)
        report = construction_report(outcome, 4)
        assert format_comparison(outcome.length, report) == "5 <= 6 OK"

    def test_exceeds(self):
        report = make_report(bound_value(BoundKind.SIMPLE, 4), 9)
        assert format_comparison(9, report) == "9 <= 6 EXCEEDS"

    def test_methods_without_bound(self):
        outcome = construct("degree", 5)
        assert construction_report(outcome, 5) is None
        assert format_comparison(outcome.length, None) == "6"

    def test_measurement_block(self, known_values):
        outcome = construct("pothole", 8)
        resolver = IotaResolver(known_values, use_search=False)
        report = construction_report(outcome, 8, resolver)
        assert measurement(outcome, report) == {
            "base_length": 7,
            "adjoined_count": 7,
            "filler_count": 0,
            "bound_kind": "pothole",
            "bound": "15",
            "satisfied": True,
            "iota_source": "table",
        }

    def test_integral_uses_filler(self, known_values):
        outcome = construct("prime-ladder", 11)
        report = construction_report(outcome, 11, IotaResolver(known_values))
        assert report.kind is BoundKind.INTEGRAL
        assert report.satisfied
