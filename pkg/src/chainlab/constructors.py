"""
Explicit chain constructions for 2^n, 2^n + 1 and 2^n - 1.

Every constructor returns a certified object: the chain is validated before
it leaves this module, and a failure is a ``ConstructionError`` (a bug here,
never a property of the input).
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Tuple, Union

from .chain import (
    AdditionChain,
    ChainBuilder,
    DegreeDChain,
    EquivalenceWitness,
    chain_from_values,
    chain_product,
    double_plus_one_extend,
    stabilizers_between,
    validate_chain,
    validate_degree_d,
)
from .bounds import floor_log, floor_log2, primes_upto
from .errors import ConstructionError, ContractViolation
from .search import SearchBudget, shortest_chain

logger = logging.getLogger(__name__)

SEARCH_BASE_LIMIT = 8


@dataclass(frozen=True)
class ConstructionOutcome:
    """
    A certified chain plus what went into it.

    ``base_length + adjoined_count + filler_count == chain.length``; the filler
    counts the terms that completion had to insert on its own.
    """

    chain: Union[AdditionChain, DegreeDChain]
    base_length: int
    adjoined_count: int
    filler_count: int
    method: str
    details: Mapping[str, object] = field(default_factory=dict)

    @property
    def length(self) -> int:
        return self.chain.length

    @property
    def target(self) -> int:
        return self.chain.target


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ContractViolation(message)


def _certify(outcome: ConstructionOutcome, target: int) -> ConstructionOutcome:
    chain = outcome.chain
    report = validate_degree_d(chain) if isinstance(chain, DegreeDChain) else validate_chain(chain)
    if not report.ok:
        raise ConstructionError(f"{outcome.method} produced an invalid chain: {report.describe()}")
    if chain.target != target:
        raise ConstructionError(f"{outcome.method} reached {chain.target}, expected {target}")
    if outcome.base_length + outcome.adjoined_count + outcome.filler_count != chain.length:
        raise ConstructionError(f"{outcome.method}: term accounting does not add up to {chain.length}")
    return outcome


def power_chain(n: int) -> AdditionChain:
    """1, 2, 4, ..., 2^n."""
    _require(n >= 0, f"power_chain needs n >= 0, got {n}")
    builder = ChainBuilder("power")
    for _ in range(n):
        builder.double()
    return builder.build()


def power_plus_one_chain(n: int) -> AdditionChain:
    _require(n >= 1, f"power_plus_one_chain needs n >= 1, got {n}")
    builder = ChainBuilder("power-plus-one")
    for _ in range(n):
        builder.double()
    builder.add(builder.last_index, 0)
    return builder.build()


def _halving_base(n: int, builder: ChainBuilder) -> None:
    # 1, 2, 3, 6, 12, ..., 3 * 2^(n-2)
    builder.double()
    builder.add(1, 0)
    for _ in range(n - 2):
        builder.double()


def halving_run_chain(n: int) -> ConstructionOutcome:
    """
    Chain for 2^n - 1 of length n + floor((n-2)/2) + (n mod 2).

    Builds 3 * 2^(n-2) = 2^n - 2^(n-2), then adds back the earlier terms
    3 * 2^(n-2j-2) while the exponent stays non-negative; odd n closes with +1.
    """
    _require(n >= 2, f"halving_run_chain needs n >= 2, got {n}")
    builder = ChainBuilder("halving-run")
    _halving_base(n, builder)
    base = builder.length
    exponent = n - 4
    while exponent >= 0:
        builder.add_to_last(3 << exponent)
        exponent -= 2
    if n % 2:
        builder.add(builder.last_index, 0)
    chain = builder.build()
    return _certify(ConstructionOutcome(chain, base, chain.length - base, 0, "halving-run"), (1 << n) - 1)


def halving_run_witness(n: int) -> Tuple[AdditionChain, AdditionChain, EquivalenceWitness]:
    """
    The doubling chain for 2^(n-1), the chain 1, 2, 3, 6, ..., 3 * 2^(n-2), and
    the stabilizers that make the first equivalent to the second.
    """
    _require(n >= 2, f"halving_run_witness needs n >= 2, got {n}")
    doubling = power_chain(n - 1)
    builder = ChainBuilder("halving-base")
    _halving_base(n, builder)
    halving = builder.build()
    return doubling, halving, stabilizers_between(doubling, halving)


def _road_exponents(n: int) -> List[int]:
    """floor((n-1)/2^j) for j = 1, 2, ... down to and including 0."""
    road = []
    e = (n - 1) // 2
    while True:
        road.append(e)
        if e == 0:
            return road
        e //= 2


def pothole_chain(n: int) -> ConstructionOutcome:
    """
    Doubling to 2^(n-1), a road of powers 2^floor((n-1)/2^j) ending at 1,
    then the potholes (the skipped powers) filled largest first.
    Always 2n - 2 steps.
    """
    _require(n >= 3, f"pothole_chain needs n >= 3, got {n}")
    builder = ChainBuilder("pothole")
    for _ in range(n - 1):
        builder.double()
    base = builder.length

    road = _road_exponents(n)
    for e in road:
        builder.add_to_last(1 << e)
    on_road = set(road)
    potholes = [e for e in range(n - 2, -1, -1) if e not in on_road]
    for e in potholes:
        builder.add_to_last(1 << e)

    previous = [n - 1] + road
    block_sizes = [previous[j] - previous[j + 1] - 1 for j in range(len(road))]
    logger.debug(f"pothole n={n} road={road} blocks={block_sizes}")
    chain = builder.build()
    outcome = ConstructionOutcome(
        chain,
        base,
        chain.length - base,
        0,
        "pothole",
        {"road": tuple(road), "block_sizes": tuple(block_sizes)},
    )
    return _certify(outcome, (1 << n) - 1)


def _with_method(chain: AdditionChain, method: str) -> AdditionChain:
    return AdditionChain(chain.elements, chain.steps, chain.target, method)


def factor_pothole_chain(n: int) -> ConstructionOutcome:
    """
    2^n - 1 = (2^k - 1)(2^k + 1) for even n = 2k, the first factor by
    potholes; odd n doubles and adds one on top of n - 1.
    """
    _require(n >= 4, f"factor_pothole_chain needs n >= 4, got {n}")
    if n % 2:
        inner = factor_pothole_chain(n - 1)
        chain = _with_method(double_plus_one_extend(inner.chain), "factor-pothole")
        outcome = ConstructionOutcome(
            chain, inner.base_length, inner.adjoined_count + 2, inner.filler_count, "factor-pothole", inner.details
        )
        return _certify(outcome, (1 << n) - 1)

    k = n // 2
    left = pothole_chain(k) if k >= 3 else halving_run_chain(k)
    chain = _with_method(chain_product(left.chain, power_plus_one_chain(k)), "factor-pothole")
    base = left.length
    outcome = ConstructionOutcome(
        chain, base, chain.length - base, 0, "factor-pothole", {"factor_exponent": k, "factor_method": left.method}
    )
    return _certify(outcome, (1 << n) - 1)


@lru_cache(maxsize=None)
def _searched_mersenne(k: int) -> AdditionChain:
    result = shortest_chain((1 << k) - 1, SearchBudget())
    if not result.proven_optimal:
        logger.warning(f"search for 2^{k}-1 was not proven optimal; using its best chain")
    return result.witness


def iterated_factor_chain(n: int, s: Optional[int] = None) -> ConstructionOutcome:
    """
    Halve the exponent ``s`` times through 2^(2k) - 1 = (2^k - 1)(2^k + 1),
    peeling a double-and-add-one off every odd exponent on the way.

    The innermost exponent is solved by exact search when it is at most 8,
    otherwise by the halving-run chain.
    """
    _require(n >= 2, f"iterated_factor_chain needs n >= 2, got {n}")
    levels = floor_log2(n)
    if s is None:
        s = levels
    _require(1 <= s <= levels, f"s must lie in 1..{levels} for n={n}, got {s}")

    trail: List[int] = []

    def build(k: int, level: int) -> Tuple[AdditionChain, int]:
        if k <= SEARCH_BASE_LIMIT:
            base_chain = _searched_mersenne(k)
            trail.append(k)
            return base_chain, base_chain.length
        if level == s:
            base_outcome = halving_run_chain(k)
            trail.append(k)
            return base_outcome.chain, base_outcome.length
        if k % 2:
            inner, base = build(k - 1, level)
            return double_plus_one_extend(inner), base
        inner, base = build(k // 2, level + 1)
        return chain_product(inner, power_plus_one_chain(k // 2)), base

    chain, base = build(n, 0)
    chain = _with_method(chain, "iterated-factor")
    outcome = ConstructionOutcome(
        chain, base, chain.length - base, 0, "iterated-factor", {"s": s, "base_exponent": trail[0]}
    )
    return _certify(outcome, (1 << n) - 1)


def prime_ladder_chain(n: int) -> ConstructionOutcome:
    """
    Doubling to 2^(n-1), then one adjoined power 2^floor((n-1)/p^i) for every
    prime p <= (n-1)/2 and every i with p^i <= n-1 (repeated exponents once),
    then the remaining powers down to 1 as filler.
    """
    _require(n >= 3, f"prime_ladder_chain needs n >= 3, got {n}")
    builder = ChainBuilder("prime-ladder")
    for _ in range(n - 1):
        builder.double()
    base = builder.length

    primes = primes_upto((n - 1) // 2)
    exponents: List[int] = []
    seen = set()
    for p in primes:
        power = p
        while power <= n - 1:
            e = (n - 1) // power
            if e not in seen:
                seen.add(e)
                exponents.append(e)
            power *= p
    for e in exponents:
        builder.add_to_last(1 << e)
    adjoined = len(exponents)

    filler = 0
    for e in range(n - 2, -1, -1):
        if e not in seen:
            builder.add_to_last(1 << e)
            filler += 1

    allowance = sum(floor_log(n, p) for p in primes)
    if adjoined > allowance:
        raise ConstructionError(f"prime ladder adjoined {adjoined} terms, more than {allowance}")
    chain = builder.build()
    outcome = ConstructionOutcome(
        chain,
        base,
        adjoined,
        filler,
        "prime-ladder",
        {"primes": tuple(primes), "exponents": tuple(exponents), "adjoin_allowance": allowance},
    )
    return _certify(outcome, (1 << n) - 1)


def _power_run_sums(low: int, high: int) -> List[int]:
    """Partial sums 2^low, 2^low + 2^(low+1), ..., up to 2^high - 2^low."""
    sums, total = [], 0
    for e in range(low, high):
        total += 1 << e
        sums.append(total)
    return sums


def backtrack_chain(n: int) -> ConstructionOutcome:
    """
    Tail terms 2^n - 2^f_j with f_j = floor((n-1)/2^j), reached from 2^(n-1)
    through the regulators R_j = 2^f_(j-1) - 2^f_j, which are themselves built
    from runs of consecutive powers. The value set is completed into a chain;
    summands the completion had to insert are counted as filler.
    """
    _require(n >= 4, f"backtrack_chain needs n >= 4, got {n}")
    levels = floor_log2(n)
    f = [(n - 1) >> j for j in range(levels + 1)]
    top = 1 << n
    target = top - 1

    values = {1 << e for e in range(n)}
    base = n - 1
    tails, regulators = [], []
    for j in range(1, levels + 1):
        tails.append(top - (1 << f[j]))
        regulators.append((1 << f[j - 1]) - (1 << f[j]))
        # P_j: the run 2^(f_j + 1) .. 2^(f_(j-1) - 1)
        run = _power_run_sums(f[j] + 1, f[j - 1])
        values.update(run)
        if j < levels:
            values.add((run[-1] if run else 0) + (1 << f[j + 1]))
    values.update(tails)
    values.update(regulators)
    values.add(target)
    values = {v for v in values if 1 <= v <= target}

    chain, inserted = chain_from_values(values, "backtrack")
    bound = 2 * n - 1 - 2 * f[levels] + levels
    outcome = ConstructionOutcome(
        chain,
        base,
        chain.length - base - inserted,
        inserted,
        "backtrack",
        {"tails": tuple(tails), "regulators": tuple(regulators), "reference_bound": bound,
         "within_reference_bound": chain.length <= bound},
    )
    logger.debug(f"backtrack n={n} length={chain.length} inserted={inserted} bound={bound}")
    return _certify(outcome, target)


def degree_chain(n: int) -> DegreeDChain:
    """
    Chain for 2^n - 1 of degree d = floor((n-1)/2) and length n + 1.

    Odd n: doubling to 2^(n-1), then the block 2^(n-2) .. 2^d and the block
    2^(d-1) .. 1. Even n: 1, 2, 3, 6, ..., 3 * 2^(n-2) and a single closing
    block of the terms 3 * 4^i.
    """
    _require(n >= 3, f"degree_chain needs n >= 3, got {n}")
    d = (n - 1) // 2
    if n % 2:
        elements = [1 << i for i in range(n)]
        blocks: List[Tuple[int, ...]] = [(i - 1,) for i in range(1, n)]
        for block in (tuple(range(n - 2, d - 1, -1)), tuple(range(d - 1, -1, -1))):
            blocks.append(block)
            elements.append(elements[-1] + sum(elements[i] for i in block))
    else:
        elements = [1, 2, 3] + [3 << i for i in range(1, n - 1)]
        blocks = [(0,), (0,)] + [(k - 1,) for k in range(3, n + 1)]
        # 3 * 2^m sits at index m + 2
        block = tuple(2 * i + 2 for i in range((n - 2) // 2 - 1, -1, -1))
        blocks.append(block)
        elements.append(elements[-1] + sum(elements[i] for i in block))

    if any(len(block) > d for block in blocks):
        raise ConstructionError(f"degree chain for n={n} has a block larger than {d}")
    chain = DegreeDChain(tuple(elements), tuple(blocks), d, "degree")
    report = validate_degree_d(chain)
    if not report.ok or chain.target != (1 << n) - 1 or chain.length != n + 1:
        raise ConstructionError(f"degree chain for n={n} is broken: {report.describe()}")
    return chain


def degree_road_chain(n: int) -> ConstructionOutcome:
    """
    Degree floor((n-1)/2) chain for 2^n - 1 of length at most n + iota(n).

    Doubling to 2^(n-1), then 2^n - 2^f for f = floor((n-1)/2^j), j = 1, 2, ...
    down to f = 0. Each step adds the powers 2^f .. 2^(f_prev - 1) as one block.
    For even n the first block has one power too many and is split in two.
    """
    _require(n >= 3, f"degree_road_chain needs n >= 3, got {n}")
    d = (n - 1) // 2
    top = 1 << n
    elements = [1 << i for i in range(n)]
    blocks: List[Tuple[int, ...]] = [(i - 1,) for i in range(1, n)]
    base = n - 1

    # 2^e sits at index e
    road = []
    previous, f = n - 1, d
    while True:
        block = tuple(range(previous - 1, f - 1, -1))
        pieces = [block[:d], block[d:]] if len(block) > d else [block]
        for piece in pieces:
            blocks.append(piece)
            elements.append(elements[-1] + sum(elements[i] for i in piece))
        road.append(f)
        if f == 0:
            break
        previous, f = f, f // 2

    chain = DegreeDChain(tuple(elements), tuple(blocks), d, "degree-road")
    adjoined = chain.length - base
    outcome = ConstructionOutcome(
        chain, base, adjoined, 0, "degree-road",
        {"degree": d, "road": tuple(road), "split_first_block": n % 2 == 0},
    )
    logger.debug(f"degree road n={n} road={tuple(road)} length={chain.length}")
    return _certify(outcome, top - 1)


class Method(NamedTuple):
    name: str
    build: Callable[[int], ConstructionOutcome]
    min_n: int
    bound_kind: Optional[str]
    target: Callable[[int], int]


def _mersenne(n: int) -> int:
    return (1 << n) - 1


def _wrap_plain(method: str, make: Callable[[int], AdditionChain]) -> Callable[[int], ConstructionOutcome]:
    def build(n: int) -> ConstructionOutcome:
        chain = make(n)
        return ConstructionOutcome(chain, chain.length, 0, 0, method)

    return build


def _wrap_degree(n: int) -> ConstructionOutcome:
    chain = degree_chain(n)
    closing = 2 if n % 2 else 1
    return ConstructionOutcome(chain, chain.length - closing, closing, 0, "degree", {"degree": chain.degree})


METHODS: Dict[str, Method] = {
    m.name: m
    for m in (
        Method("power", _wrap_plain("power", power_chain), 0, None, lambda n: 1 << n),
        Method("power-plus-one", _wrap_plain("power-plus-one", power_plus_one_chain), 1, None, lambda n: (1 << n) + 1),
        Method("halving-run", halving_run_chain, 2, "simple", _mersenne),
        Method("prime-ladder", prime_ladder_chain, 3, "integral", _mersenne),
        Method("backtrack", backtrack_chain, 4, "backtrack", _mersenne),
        Method("pothole", pothole_chain, 3, "pothole", _mersenne),
        Method("factor-pothole", factor_pothole_chain, 4, "improved", _mersenne),
        Method("iterated-factor", iterated_factor_chain, 2, "main", _mersenne),
        Method("degree", _wrap_degree, 3, None, _mersenne),
        Method("degree-road", degree_road_chain, 3, "degree_road", _mersenne),
    )
}


def construct(method: str, n: int) -> ConstructionOutcome:
    """Run a named construction."""
    try:
        entry = METHODS[method]
    except KeyError:
        raise ContractViolation(f"unknown method {method!r}; choose from {', '.join(METHODS)}") from None
    if n < entry.min_n:
        raise ContractViolation(f"method {method} needs n >= {entry.min_n}, got {n}")
    return entry.build(n)
