"""
Run configuration.

Defaults live in ``config.toml`` (sections ``[server]``, ``[paths]``,
``[logging]``, ``[search]``, ``[audit]``); command-line flags override them.
"""

import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import tomlkit
from tomlkit.exceptions import TOMLKitError

from .errors import ConfigError
from .search import SearchBudget, packaged_table_path

logger = logging.getLogger(__name__)

TABLE_ENV = "CHAINLAB_TABLE"
DEFAULT_FORMAT = "[%(asctime)s] %(levelname)s: %(message)s"


@dataclass(frozen=True)
class ServerInfo:
    name: str = "chainlab"
    version: str = "0.2.0"
    description: str = "Addition chain laboratory"


@dataclass(frozen=True)
class RunConfig:
    n_range: Tuple[int, int] = (2, 8)
    kinds: Tuple[str, ...] = ("simple", "pothole", "improved", "main")
    budget: SearchBudget = field(default_factory=SearchBudget)
    table_path: Optional[Path] = None
    output_dir: Path = Path(".")
    workers: int = 1
    log_level: str = "INFO"
    log_format: str = DEFAULT_FORMAT
    server: ServerInfo = field(default_factory=ServerInfo)

    def __post_init__(self):
        low, high = self.n_range
        if low < 1 or high < low:
            raise ConfigError(f"range {low}..{high} is empty or not positive")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        if logging.getLevelName(self.log_level.upper()) == f"Level {self.log_level.upper()}":
            raise ConfigError(f"unknown log level {self.log_level!r}")

    def with_overrides(self, **changes: Any) -> "RunConfig":
        """Copy with the non-None ``changes`` applied."""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def parse_range(text: str) -> Tuple[int, int]:
    """``"a..b"`` (inclusive) or a single integer."""
    try:
        if ".." in text:
            low, high = text.split("..", 1)
            return int(low), int(high)
        value = int(text)
        return value, value
    except ValueError:
        raise ConfigError(f"range must look like 'a..b', got {text!r}") from None


def _section(data: Dict[str, Any], name: str) -> Dict[str, Any]:
    section = data.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"[{name}] must be a table")
    return section


def _budget(section: Dict[str, Any]) -> SearchBudget:
    try:
        return SearchBudget(
            max_depth=int(section.get("max_depth", 14)),
            max_nodes=int(section.get("max_nodes", 10 ** 9)),
            time_limit=float(section.get("time_limit", 300.0)),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"[search]: {e}") from None


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """Read a config file; ``None`` gives the built-in defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        data = tomlkit.parse(path.read_text(encoding="utf-8")).unwrap()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except TOMLKitError as e:
        raise ConfigError(f"{path}: {e}") from None

    server = _section(data, "server")
    paths = _section(data, "paths")
    log = _section(data, "logging")
    search = _section(data, "search")
    audit = _section(data, "audit")

    base = path.parent
    table = paths.get("known_values")
    try:
        config = RunConfig(
            n_range=(int(audit.get("n_min", 2)), int(audit.get("n_max", 8))),
            kinds=tuple(audit.get("kinds", RunConfig.kinds)),
            budget=_budget(search),
            table_path=(base / table) if table else None,
            output_dir=base / paths.get("output_dir", "."),
            workers=int(search.get("workers", 1)),
            log_level=str(log.get("level", "INFO")),
            log_format=str(log.get("format", DEFAULT_FORMAT)),
            server=ServerInfo(
                name=str(server.get("name", "chainlab")),
                version=str(server.get("version", ServerInfo.version)),
                description=str(server.get("description", ServerInfo.description)),
            ),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from None
    logger.info(f"Loaded configuration from {path}")
    return config


def setup_logging(config: RunConfig) -> None:
    logging.basicConfig(level=config.log_level.upper(), format=config.log_format)


def resolve_table_path(flag: Optional[Union[str, Path]], config: Optional[RunConfig] = None) -> Optional[Path]:
    """
    Where to read known iota values from: the flag, the CHAINLAB_TABLE
    environment variable, the config file, the packaged table, then
    ``./reference/known_values.txt``.
    """
    candidates = [
        ("--table", flag),
        (TABLE_ENV, os.environ.get(TABLE_ENV)),
        ("config", config.table_path if config else None),
        ("package", packaged_table_path()),
        ("working directory", Path.cwd() / "reference" / "known_values.txt"),
    ]
    for origin, candidate in candidates:
        if not candidate:
            continue
        candidate = Path(candidate)
        if candidate.exists():
            logger.info(f"Using known values from {origin}: {candidate}")
            return candidate
        if origin in ("--table", TABLE_ENV, "config"):
            logger.warning(f"Known values file from {origin} not found: {candidate}")
    logger.warning("No known values table found; iota comes from search or fallback")
    return None
