"""
Chain files: TOML documents holding one chain and optional measurement and
search blocks.

Element values are written as decimal strings (TOML integers stop at 64
bits). Writing a loaded document reproduces the original bytes.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import tomlkit
from tomlkit.exceptions import TOMLKitError

from .chain import AdditionChain, DegreeDChain, Step
from .errors import ChainFileError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

MEASUREMENT_KEYS = (
    "base_length",
    "adjoined_count",
    "filler_count",
    "bound_kind",
    "bound",
    "satisfied",
    "iota_source",
)
SEARCH_KEYS = ("optimal_length", "proven_optimal", "nodes_expanded", "star_only")


@dataclass(frozen=True)
class ChainDocument:
    chain: Union[AdditionChain, DegreeDChain]
    measurement: Dict[str, Any] = field(default_factory=dict)
    search: Dict[str, Any] = field(default_factory=dict)


def dumps(document: ChainDocument) -> str:
    chain = document.chain
    doc = tomlkit.document()
    doc.add("format", FORMAT_VERSION)
    doc.add("method", chain.method)
    doc.add("target", str(chain.target))
    doc.add("length", chain.length)
    doc.add("elements", [str(e) for e in chain.elements])
    if isinstance(chain, DegreeDChain):
        doc.add("degree", chain.degree)
        doc.add("blocks", [list(block) for block in chain.blocks])
    else:
        doc.add("steps", [[s.left, s.right] for s in chain.steps])

    for name, keys, values in (
        ("measurement", MEASUREMENT_KEYS, document.measurement),
        ("search", SEARCH_KEYS, document.search),
    ):
        present = {k: values[k] for k in keys if values.get(k) is not None}
        if present:
            table = tomlkit.table()
            for key, value in present.items():
                table.add(key, value)
            doc.add(name, table)
    return tomlkit.dumps(doc)


def _field(data: Dict[str, Any], key: str, kind, path: Optional[str]):
    if key not in data:
        raise ChainFileError(f"missing key {key!r}", path)
    value = data[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ChainFileError(f"key {key!r} has the wrong type", path)
    return value


def _decimal(text: Any, what: str, path: Optional[str]) -> int:
    if not isinstance(text, str) or not (text.isascii() and text.isdigit()):
        raise ChainFileError(f"{what} must be a decimal string, got {text!r}", path)
    return int(text)


def _index_list(raw: Any, what: str, path: Optional[str]):
    if not isinstance(raw, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in raw):
        raise ChainFileError(f"{what} must be a list of integers", path)
    return tuple(raw)


def loads(text: str, path: Optional[str] = None) -> ChainDocument:
    """Parse a chain file; the chain itself is not validated here."""
    try:
        data = tomlkit.parse(text).unwrap()
    except TOMLKitError as e:
        raise ChainFileError(f"not a TOML document: {e}", path) from None

    version = _field(data, "format", int, path)
    if version != FORMAT_VERSION:
        raise ChainFileError(f"unsupported format version {version}", path)
    method = _field(data, "method", str, path)
    target = _decimal(_field(data, "target", str, path), "target", path)
    elements = tuple(_decimal(e, "element", path) for e in _field(data, "elements", list, path))
    length = _field(data, "length", int, path)
    if length != len(elements) - 1:
        raise ChainFileError(f"length {length} does not match {len(elements)} elements", path)

    if "degree" in data:
        degree = _field(data, "degree", int, path)
        blocks = tuple(_index_list(b, "block", path) for b in _field(data, "blocks", list, path))
        chain: Union[AdditionChain, DegreeDChain] = DegreeDChain(elements, blocks, degree, method)
        if target != chain.target:
            raise ChainFileError(f"target {target} is not the last element", path)
    else:
        steps = []
        for raw in _field(data, "steps", list, path):
            pair = _index_list(raw, "step", path)
            if len(pair) != 2:
                raise ChainFileError(f"step {list(pair)} is not an index pair", path)
            steps.append(Step(*pair))
        chain = AdditionChain(elements, tuple(steps), target, method)

    measurement = data.get("measurement", {})
    search = data.get("search", {})
    if not isinstance(measurement, dict) or not isinstance(search, dict):
        raise ChainFileError("measurement and search must be tables", path)
    return ChainDocument(chain, measurement, search)


def write_chain_file(path: Union[str, Path], document: ChainDocument) -> Path:
    path = Path(path)
    path.write_text(dumps(document), encoding="utf-8")
    logger.info(f"Wrote {document.chain.method} chain for {document.chain.target} to {path}")
    return path


def read_chain_file(path: Union[str, Path]) -> ChainDocument:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ChainFileError(f"cannot read file: {e}", str(path)) from None
    return loads(text, str(path))
