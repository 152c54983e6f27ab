"""
Exact shortest-addition-chain search.

Iterative deepening over the chain length, starting at a sound lower
bound. Each depth is split into independent subtrees (one per chain
prefix of fixed length); the subtrees are searched in canonical order,
in-process or in a process pool, and the first subtree in that order
holding a chain supplies the witness. Both modes therefore return the
same length, witness and proof flag for the same budget.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .chain import AdditionChain, ChainBuilder, Nat, chain_from_values, validate_chain
from .errors import ContractViolation, DataIntegrityError, TableParseError

logger = logging.getLogger(__name__)

PREFIX_LENGTH = 3


@dataclass(frozen=True)
class SearchBudget:
    """
    Limits for one search.

    ``max_nodes`` applies to each prefix subtree at each depth, so a whole
    search may expand up to (prefixes x depths x max_nodes) nodes. A subtree
    that hits it stops the deepening after the current depth; the result is
    unproven unless that depth still yields a chain. ``time_limit`` is shared
    by the whole search.
    """

    max_depth: int = 14
    max_nodes: int = 10 ** 9
    time_limit: float = 300.0

    def __post_init__(self):
        if self.max_depth <= 0 or self.max_nodes <= 0 or self.time_limit <= 0:
            raise ContractViolation(f"search budget must be positive: {self}")


@dataclass(frozen=True)
class SearchResult:
    n: Nat
    optimal_length: int
    witness: AdditionChain
    nodes_expanded: int
    proven_optimal: bool
    star_only: bool = False


class IotaSource(Enum):
    SEARCH = "search"
    TABLE = "table"
    FALLBACK_UPPER = "fallback-upper"


def binary_weight(n: int) -> int:
    return bin(n).count("1")


def lower_bound(n: Nat) -> int:
    """
    A length no chain for ``n`` can beat.

    Combines the doubling argument, the thresholds on the binary weight
    (weight 2 costs one extra step, 3-4 two, 5-8 three, 9 or more four) and
    the real-valued weight bound log2 n + log2 v(n) - 2.13.
    """
    if n < 1:
        raise ContractViolation(f"n must be positive, got {n}")
    if n == 1:
        return 0
    lam = n.bit_length() - 1
    ceil_log = (n - 1).bit_length()
    weight = binary_weight(n)
    if weight == 1:
        extra = 0
    elif weight == 2:
        extra = 1
    elif weight <= 4:
        extra = 2
    elif weight <= 8:
        extra = 3
    else:
        extra = 4
    weighted = math.ceil(math.log2(n) + math.log2(weight) - 2.13 - 1e-9)
    # iota(n) > log2 n - 1
    strict = math.floor(math.log2(n) - 1 + 1e-9) + 1
    return max(ceil_log, lam + extra, weighted, strict)


def binary_chain(n: Nat) -> AdditionChain:
    """Left-to-right binary method; always valid, used when search is cut short."""
    builder = ChainBuilder("binary")
    for bit in bin(n)[3:]:
        builder.double()
        if bit == "1":
            builder.add(builder.last_index, 0)
    return builder.build()


class _BudgetExhausted(Exception):
    pass


class _SubtreeSearch:
    """Depth-limited search below one prefix."""

    def __init__(self, n: int, depth: int, star_only: bool, node_limit: int, deadline: float):
        self.n = n
        self.depth = depth
        self.star_only = star_only
        self.node_limit = node_limit
        self.deadline = deadline
        self.nodes = 0

    def run(self, prefix: Sequence[int]) -> Optional[List[int]]:
        chain = list(prefix)
        return self._extend(chain, set(chain))

    def _extend(self, chain: List[int], members: set) -> Optional[List[int]]:
        n = self.n
        last = chain[-1]
        if last == n:
            return list(chain)
        remaining = self.depth - (len(chain) - 1)
        if remaining <= 0 or last << remaining < n:
            return None

        self.nodes += 1
        if self.nodes > self.node_limit:
            raise _BudgetExhausted()
        if self.nodes & 0x3FF == 0 and time.monotonic() > self.deadline:
            raise _BudgetExhausted()

        if remaining == 1:
            for a in reversed(chain):
                if 2 * a < n:
                    break
                if n - a in members and (not self.star_only or a == last or n - a == last):
                    return chain + [n]
            return None

        for x in candidates(chain, n, remaining, self.star_only):
            chain.append(x)
            members.add(x)
            found = self._extend(chain, members)
            if found is not None:
                return found
            chain.pop()
            members.discard(x)
        return None


def candidates(chain: Sequence[int], n: int, remaining: int, star_only: bool = False) -> List[int]:
    """Next elements worth trying, largest first."""
    last = chain[-1]
    shift = remaining - 1
    # x * 2**(remaining-1) must still reach n
    threshold = max(last + 1, (n + (1 << shift) - 1) >> shift)
    sums = set()
    for j in range(len(chain) - 1, -1, -1):
        cj = chain[j]
        if 2 * cj < threshold:
            break
        for i in range(j, -1, -1):
            s = chain[i] + cj
            if s < threshold:
                break
            if s <= n:
                sums.add(s)
        if star_only:
            break
    return sorted(sums, reverse=True)


def _prefixes(n: int, depth: int, star_only: bool) -> List[List[int]]:
    """All chain prefixes of the split length that can still reach ``n`` at ``depth``."""
    size = min(PREFIX_LENGTH, depth)
    level = [[1]]
    for length in range(size):
        remaining = depth - length
        following = []
        for chain in level:
            if chain[-1] == n:
                following.append(chain)
                continue
            for x in candidates(chain, n, remaining, star_only):
                following.append(chain + [x])
        level = following
    return level


def _search_subtree(args: Tuple[int, int, bool, int, float, Tuple[int, ...]]) -> Tuple[Optional[List[int]], int, bool]:
    n, depth, star_only, node_limit, deadline, prefix = args
    worker = _SubtreeSearch(n, depth, star_only, node_limit, deadline)
    try:
        found = worker.run(prefix)
    except _BudgetExhausted:
        return None, worker.nodes, True
    return found, worker.nodes, False


def _search(n: Nat, budget: SearchBudget, star_only: bool, workers: int) -> SearchResult:
    if n < 1:
        raise ContractViolation(f"n must be positive, got {n}")
    if n == 1:
        return SearchResult(1, 0, binary_chain(1), 0, True, star_only)

    deadline = time.monotonic() + budget.time_limit
    start = lower_bound(n)
    nodes = 0
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for depth in range(start, budget.max_depth + 1):
            tasks = [
                (n, depth, star_only, budget.max_nodes, deadline, tuple(prefix))
                for prefix in _prefixes(n, depth, star_only)
            ]
            outcomes = executor.map(_search_subtree, tasks) if executor else map(_search_subtree, tasks)
            found = None
            cut = False
            for chain_values, spent, was_cut in outcomes:
                nodes += spent
                cut = cut or was_cut
                if chain_values is not None:
                    found = chain_values
                    break
            if found is not None:
                witness, inserted = chain_from_values(found, "star-search" if star_only else "search")
                assert inserted == 0 and validate_chain(witness).ok
                # every shallower depth was exhausted or lies below the lower bound
                result = SearchResult(n, witness.length, witness, nodes, True, star_only)
                logger.debug(f"n={n} depth={depth} found after {nodes} nodes")
                return result
            if cut:
                logger.warning(f"search for {n} stopped at depth {depth}: budget exhausted")
                break
            logger.debug(f"n={n} depth={depth} exhausted ({nodes} nodes so far)")
    finally:
        if executor:
            executor.shutdown(wait=True, cancel_futures=True)

    fallback = binary_chain(n)
    return SearchResult(n, fallback.length, fallback, nodes, False, star_only)


def shortest_chain(n: Nat, budget: Optional[SearchBudget] = None, workers: int = 1) -> SearchResult:
    """Shortest addition chain for ``n`` (iota(n) when ``proven_optimal``)."""
    return _search(n, budget or SearchBudget(), False, workers)


def shortest_star_chain(n: Nat, budget: Optional[SearchBudget] = None, workers: int = 1) -> SearchResult:
    """Shortest star chain for ``n`` (iota*(n) when ``proven_optimal``)."""
    return _search(n, budget or SearchBudget(), True, workers)


@dataclass(frozen=True)
class KnownValuesTable:
    """Immutable ``n -> iota(n)`` lookup."""

    values: Mapping[int, int]
    source: str = "<records>"

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, n: int) -> bool:
        return n in self.values

    def get(self, n: int) -> Optional[int]:
        return self.values.get(n)

    def cross_check(self, result: SearchResult) -> None:
        """Raise if a proven search result contradicts the table."""
        if result.star_only or not result.proven_optimal:
            return
        expected = self.values.get(result.n)
        if expected is not None and expected != result.optimal_length:
            raise DataIntegrityError(
                f"{self.source}: iota({result.n}) = {expected} but search proves {result.optimal_length}"
            )


def parse_known_values(text: str, source: str = "<table>") -> KnownValuesTable:
    records = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TableParseError(f"expected 'n length', got {raw!r}", line_no, source)
        try:
            n, length = int(parts[0]), int(parts[1])
        except ValueError:
            raise TableParseError(f"non-integer field in {raw!r}", line_no, source) from None
        records.append((n, length, line_no))
    return _table_from(records, source)


def load_known_values(source: Union[str, Path, Iterable[Tuple[int, int]]]) -> KnownValuesTable:
    """Load a table from a file path or from ``(n, length)`` records."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        logger.info(f"Loading known iota values from {path}")
        return parse_known_values(path.read_text(encoding="utf-8"), str(path))
    return _table_from([(n, length, i) for i, (n, length) in enumerate(source, start=1)], "<records>")


def _table_from(records: Sequence[Tuple[int, int, int]], source: str) -> KnownValuesTable:
    values: Dict[int, int] = {}
    previous = 0
    for n, length, line_no in records:
        if n < 1 or length < 0:
            raise TableParseError(f"out of range record ({n}, {length})", line_no, source)
        if n <= previous:
            raise TableParseError(f"n={n} is not strictly increasing", line_no, source)
        values[n] = length
        previous = n
    return KnownValuesTable(MappingProxyType(values), source)


def packaged_table_path() -> Path:
    return Path(__file__).parent / "reference" / "known_values.txt"


class IotaResolver:
    """
    Supplies iota(n) for bound formulas: a proven search result first, then
    the known-values table, then (when allowed) the Brauer bracket upper value.
    """

    def __init__(
        self,
        table: Optional[KnownValuesTable] = None,
        budget: Optional[SearchBudget] = None,
        use_search: bool = True,
        allow_fallback: bool = True,
        search_limit: int = 1 << 12,
    ):
        self.table = table
        self.budget = budget or SearchBudget(max_nodes=2_000_000, time_limit=30.0)
        self.use_search = use_search
        self.allow_fallback = allow_fallback
        self.search_limit = search_limit
        self._cache: Dict[int, Tuple[int, IotaSource]] = {}

    def resolve(self, n: int) -> Optional[Tuple[int, IotaSource]]:
        if n in self._cache:
            return self._cache[n]
        resolved = None
        if self.use_search and n <= self.search_limit:
            result = shortest_chain(n, self.budget)
            if result.proven_optimal:
                if self.table is not None:
                    self.table.cross_check(result)
                resolved = (result.optimal_length, IotaSource.SEARCH)
        if resolved is None and self.table is not None and n in self.table:
            resolved = (self.table.get(n), IotaSource.TABLE)
        if resolved is None and self.allow_fallback:
            logger.warning(f"iota({n}) not proven; using the Brauer upper value")
            resolved = (brauer_bracket_upper(n), IotaSource.FALLBACK_UPPER)
        if resolved is not None:
            self._cache[n] = resolved
        return resolved


def brauer_bracket_upper(n: int) -> int:
    """2m for 2^m + 1 <= n <= 2^(m+1)."""
    if n < 1:
        raise ContractViolation(f"n must be positive, got {n}")
    if n <= 2:
        return n - 1
    m = (n - 1).bit_length() - 1
    return 2 * m
