import csv
import io

import pytest
import tomlkit

from chainlab.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main
from chainlab.report import AUDIT_HEADER, BOUNDS_HEADER


@pytest.fixture(autouse=True)
def no_table_env(monkeypatch):
    monkeypatch.delenv("CHAINLAB_TABLE", raising=False)


def _csv_rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# generated ")
    return list(csv.reader(io.StringIO("\n".join(lines[1:]))))


@pytest.fixture
def chain_file(tmp_path, capsys):
    out = tmp_path / "halving-run-4.toml"
    assert main(["construct", "--method", "halving-run", "--n", "4", "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    return out


class TestConstruct:
    def test_prints_comparison(self, tmp_path, capsys):
        out = tmp_path / "chain.toml"
        code = main(["construct", "--method", "halving-run", "--n", "4", "--out", str(out)])
        assert code == EXIT_OK
        assert capsys.readouterr().out.strip() == "5 <= 6 OK"
        data = tomlkit.parse(out.read_text(encoding="utf-8")).unwrap()
        assert data["target"] == "15"
        assert data["measurement"]["bound"] == "6"

    def test_default_output_name(self, tmp_path, capsys):
        config = tmp_path / "config.toml"
        config.write_text('[paths]\noutput_dir = "chains"\n', encoding="utf-8")
        (tmp_path / "chains").mkdir()
        assert main(["--config", str(config), "construct", "--method", "pothole", "--n", "8"]) == EXIT_OK
        assert (tmp_path / "chains" / "pothole-8.toml").exists()
        assert capsys.readouterr().out.strip() == "14 <= 15 OK"

    def test_degree_chain_has_no_bound(self, tmp_path, capsys):
        out = tmp_path / "degree.toml"
        assert main(["construct", "--method", "degree", "--n", "5", "--out", str(out)]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "6"
        assert main(["verify", str(out)]) == EXIT_OK

    def test_n_outside_domain(self, tmp_path, capsys):
        code = main(["construct", "--method", "pothole", "--n", "2", "--out", str(tmp_path / "x.toml")])
        assert code == EXIT_USAGE
        assert "needs n >= 3" in capsys.readouterr().err

    def test_unknown_method(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["construct", "--method", "window", "--n", "4"])
        assert excinfo.value.code == 2


class TestVerify:
    def test_valid_file(self, chain_file, capsys):
        assert main(["verify", str(chain_file)]) == EXIT_OK
        assert "ok, length 5 for 15" in capsys.readouterr().out

    def test_tampered_element(self, chain_file, capsys):
        data = tomlkit.parse(chain_file.read_text(encoding="utf-8"))
        data["elements"][3] = "7"
        chain_file.write_text(tomlkit.dumps(data), encoding="utf-8")
        assert main(["verify", str(chain_file)]) == EXIT_FAILED
        assert "index 3" in capsys.readouterr().out

    def test_truncated_file(self, chain_file):
        text = chain_file.read_text(encoding="utf-8")
        chain_file.write_text(text[: len(text) // 3], encoding="utf-8")
        assert main(["verify", str(chain_file)]) == EXIT_USAGE

    def test_missing_file(self, tmp_path):
        assert main(["verify", str(tmp_path / "absent.toml")]) == EXIT_USAGE

    def test_superscript_digit_is_a_parse_error(self, chain_file, capsys):
        data = tomlkit.parse(chain_file.read_text(encoding="utf-8"))
        data["elements"][1] = "²"
        chain_file.write_text(tomlkit.dumps(data), encoding="utf-8")
        assert main(["verify", str(chain_file)]) == EXIT_USAGE
        assert "decimal string" in capsys.readouterr().err


class TestSearch:
    def test_fifteen(self, capsys):
        assert main(["search", "--n", "15"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("15: length 5 optimal")
        assert lines[1].split()[-1] == "15"

    def test_star_search_writes_file(self, tmp_path, capsys):
        out = tmp_path / "star.toml"
        assert main(["search", "--n", "23", "--star", "--out", str(out)]) == EXIT_OK
        data = tomlkit.parse(out.read_text(encoding="utf-8")).unwrap()
        assert data["search"] == {"optimal_length": 6, "proven_optimal": True, "star_only": True}
        assert main(["verify", str(out)]) == EXIT_OK

    def test_exhausted_budget(self, capsys):
        assert main(["search", "--n", "127", "--budget-nodes", "10"]) == EXIT_OK
        assert "not proven" in capsys.readouterr().out

    def test_invalid_budget(self, capsys):
        assert main(["search", "--n", "15", "--budget-nodes", "0"]) == EXIT_USAGE

    def test_inconsistent_table(self, tmp_path, capsys):
        table = tmp_path / "wrong.txt"
        table.write_text("15 4\n", encoding="utf-8")
        assert main(["search", "--n", "15", "--table", str(table)]) == EXIT_FAILED
        assert "search proves 5" in capsys.readouterr().err

    def test_malformed_table(self, tmp_path):
        table = tmp_path / "bad.txt"
        table.write_text("15 four\n", encoding="utf-8")
        assert main(["search", "--n", "15", "--table", str(table)]) == EXIT_USAGE


class TestTables:
    def test_bounds_table_single_row(self, capsys):
        assert main(["bounds-table", "--n", "4", "--kinds", "simple"]) == EXIT_OK
        rows = _csv_rows(capsys.readouterr().out)
        assert rows == [list(BOUNDS_HEADER), ["4", "simple", "6", "5", "true", "-"]]

    def test_bounds_table_empty_kinds(self, capsys):
        assert main(["bounds-table", "--range", "2..8", "--kinds", ""]) == EXIT_OK
        assert _csv_rows(capsys.readouterr().out) == [list(BOUNDS_HEADER)]

    def test_bounds_table_unknown_kind(self, capsys):
        assert main(["bounds-table", "--n", "4", "--kinds", "simple,window"]) == EXIT_USAGE

    def test_bounds_table_to_file(self, tmp_path, capsys):
        out = tmp_path / "bounds.csv"
        assert main(["bounds-table", "--range", "4..5", "--kinds", "simple,pothole", "--out", str(out)]) == EXIT_OK
        assert capsys.readouterr().out == ""
        assert len(_csv_rows(out.read_text(encoding="utf-8"))) == 5

    def test_bounds_table_pretty(self, capsys):
        assert main(["bounds-table", "--n", "4", "--kinds", "simple", "--pretty"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split() == list(BOUNDS_HEADER)
        assert lines[2].split() == ["4", "simple", "6", "5", "true", "-"]

    def test_bad_range(self):
        assert main(["bounds-table", "--range", "x..y"]) == EXIT_USAGE

    def test_scholz_audit(self, capsys):
        assert main(["scholz-audit", "--n-max", "3"]) == EXIT_OK
        rows = _csv_rows(capsys.readouterr().out)
        assert rows[0] == list(AUDIT_HEADER)
        assert [r[0] for r in rows[1:]] == ["2", "3"]


class TestGlobalOptions:
    def test_missing_config(self, tmp_path):
        assert main(["--config", str(tmp_path / "none.toml"), "search", "--n", "3"]) == EXIT_USAGE

    def test_bad_log_level(self):
        assert main(["--log-level", "LOUD", "search", "--n", "3"]) == EXIT_USAGE


@pytest.mark.parametrize(
    "method, n, expected",
    [
        ("halving-run", "5", "7 <= 7 OK"),
        ("power", "0", "0"),
        ("iterated-factor", "64", "69 <= 83 OK"),
        ("degree-road", "5", "7 <= 8 OK"),
    ],
)
def test_construct_then_verify(tmp_path, capsys, method, n, expected):
    out = tmp_path / f"{method}-{n}.toml"
    assert main(["construct", "--method", method, "--n", n, "--out", str(out)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == expected
    assert main(["verify", str(out)]) == EXIT_OK


@pytest.mark.slow
def test_scholz_audit_to_eight(capsys):
    assert main(["scholz-audit", "--n-max", "8"]) == EXIT_OK
    rows = _csv_rows(capsys.readouterr().out)[1:]
    assert [(r[0], r[3]) for r in rows] == [("2", "2"), ("3", "4"), ("4", "5"), ("5", "7"), ("6", "8"), ("7", "10"), ("8", "10")]
    assert all(r[7] == "true" for r in rows)
