from pathlib import Path

import pytest

from chainlab.config import TABLE_ENV, RunConfig, load_config, parse_range, resolve_table_path
from chainlab.errors import ConfigError
from chainlab.search import packaged_table_path

REPO_CONFIG = Path(__file__).resolve().parents[1] / "config.toml"


@pytest.fixture(autouse=True)
def no_table_env(monkeypatch):
    monkeypatch.delenv(TABLE_ENV, raising=False)


def write_config(tmp_path, text):
    path = tmp_path / "config.toml"
    path.write_text(text, encoding="utf-8")
    return path


def test_defaults_without_file():
    config = load_config(None)
    assert config == RunConfig()
    assert config.n_range == (2, 8)
    assert config.budget.max_depth == 14


def test_repository_config():
    config = load_config(REPO_CONFIG)
    assert config.server.name == "chainlab"
    assert config.table_path.exists()
    assert config.kinds == ("simple", "pothole", "improved", "main")
    assert config.budget.max_nodes == 1_000_000_000


def test_sections_are_read(tmp_path):
    path = write_config(
        tmp_path,
        '[paths]\nknown_values = "table.txt"\n\n'
        "[search]\nmax_depth = 10\ntime_limit = 5\nworkers = 2\n\n"
        '[audit]\nn_min = 3\nn_max = 5\nkinds = ["main"]\n\n'
        '[logging]\nlevel = "debug"\n',
    )
    config = load_config(path)
    assert config.table_path == tmp_path / "table.txt"
    assert config.budget.max_depth == 10
    assert config.budget.time_limit == 5.0
    assert config.workers == 2
    assert config.n_range == (3, 5)
    assert config.kinds == ("main",)
    assert config.log_level == "debug"


@pytest.mark.parametrize(
    "text",
    [
        "[audit]\nn_min = 5\nn_max = 3\n",
        '[logging]\nlevel = "LOUD"\n',
        '[search]\nmax_nodes = "lots"\n',
        "[search]\nmax_nodes = 0\n",
        "[search]\nworkers = 0\n",
        'search = "flat"\n',
        "[search\n",
    ],
)
def test_invalid_config(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, text))


def test_missing_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml")


def test_overrides():
    config = RunConfig()
    assert config.with_overrides(log_level=None) == config
    assert config.with_overrides(workers=3).workers == 3
    with pytest.raises(ConfigError):
        config.with_overrides(workers=0)


@pytest.mark.parametrize("text, expected", [("2..8", (2, 8)), ("5", (5, 5)), ("10..10", (10, 10))])
def test_parse_range(text, expected):
    assert parse_range(text) == expected


def test_parse_range_rejects_text():
    with pytest.raises(ConfigError):
        parse_range("a..b")


class TestTableResolution:
    def test_flag_wins(self, tmp_path, monkeypatch):
        flag = tmp_path / "flag.txt"
        flag.write_text("1 0\n", encoding="utf-8")
        env = tmp_path / "env.txt"
        env.write_text("1 0\n", encoding="utf-8")
        monkeypatch.setenv(TABLE_ENV, str(env))
        assert resolve_table_path(str(flag)) == flag

    def test_environment_before_config(self, tmp_path, monkeypatch):
        env = tmp_path / "env.txt"
        env.write_text("1 0\n", encoding="utf-8")
        monkeypatch.setenv(TABLE_ENV, str(env))
        config = RunConfig(table_path=packaged_table_path())
        assert resolve_table_path(None, config) == env

    def test_config_before_package(self, tmp_path):
        table = tmp_path / "config.txt"
        table.write_text("1 0\n", encoding="utf-8")
        assert resolve_table_path(None, RunConfig(table_path=table)) == table

    def test_missing_files_fall_through_to_package(self, tmp_path):
        config = RunConfig(table_path=tmp_path / "gone.txt")
        assert resolve_table_path(str(tmp_path / "nope.txt"), config) == packaged_table_path()
