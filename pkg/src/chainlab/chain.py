"""
Chain core: addition chains, degree-d chains and the operations on them.

Values are Python ints (arbitrary precision, exact). A chain stores the
element list together with the index pair each element was built from,
so validation is a constant amount of work per step no matter how large
the values grow.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .errors import ConstructionError, ContractViolation, MalformedWitnessError

logger = logging.getLogger(__name__)

Nat = int


class Step(NamedTuple):
    """Provenance of one element: ``elements[left] + elements[right]``."""

    left: int
    right: int


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    index: Optional[int] = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "ok"
        where = f" at index {self.index}" if self.index is not None else ""
        return f"invalid{where}: {self.message}"


@dataclass(frozen=True)
class AdditionChain:
    """
    An addition chain ``1 = e[0] < e[1] < ... < e[k] = target``.

    ``steps[k-1]`` records how ``elements[k]`` was formed. Instances are not
    validated on construction (a chain read from a tampered file must still be
    representable); call :func:`validate_chain`.
    """

    elements: Tuple[Nat, ...]
    steps: Tuple[Step, ...]
    target: Nat
    method: str = "custom"

    @property
    def length(self) -> int:
        # the leading 1 is not counted
        return len(self.elements) - 1

    def __len__(self) -> int:
        return self.length


@dataclass(frozen=True)
class StarView:
    """Determiner/regulator form of a star chain: ``s_i = a_i + r_i``."""

    determiners: Tuple[Nat, ...]
    regulators: Tuple[Nat, ...]

    def generators(self) -> List[Tuple[Nat, Nat]]:
        return list(zip(self.determiners, self.regulators))


@dataclass(frozen=True)
class DegreeDChain:
    """
    A chain where every element is the previous element plus a block of at
    most ``degree`` earlier elements (a multiset of indices).
    """

    elements: Tuple[Nat, ...]
    blocks: Tuple[Tuple[int, ...], ...]
    degree: int
    method: str = "custom"

    @property
    def target(self) -> Nat:
        return self.elements[-1]

    @property
    def length(self) -> int:
        return len(self.elements) - 1

    def to_addition_chain(self) -> AdditionChain:
        """Convert a chain whose blocks are all singletons into a star chain."""
        steps = []
        for k, block in enumerate(self.blocks, start=1):
            if len(block) != 1:
                raise ContractViolation(
                    f"block for index {k} has {len(block)} terms; only singleton blocks convert"
                )
            steps.append(Step(min(block[0], k - 1), max(block[0], k - 1)))
        return AdditionChain(self.elements, tuple(steps), self.elements[-1], self.method)


@dataclass(frozen=True)
class EquivalenceWitness:
    """Positions of a complete sub-chain and the stabilizer pair (v_i, d_i) for each."""

    sub_indices: Tuple[int, ...]
    stabilizer_pairs: Tuple[Tuple[int, int], ...]


class ChainBuilder:
    """
    Incremental construction of an addition chain.

    Appending a value that is already present returns the existing index;
    appending a value below the current last element is a construction fault.
    """

    def __init__(self, method: str = "custom"):
        self.method = method
        self._elements: List[Nat] = [1]
        self._steps: List[Step] = []
        self._index: Dict[Nat, int] = {1: 0}

    @property
    def last(self) -> Nat:
        return self._elements[-1]

    @property
    def last_index(self) -> int:
        return len(self._elements) - 1

    @property
    def length(self) -> int:
        return len(self._elements) - 1

    def __contains__(self, value: Nat) -> bool:
        return value in self._index

    def index_of(self, value: Nat) -> int:
        try:
            return self._index[value]
        except KeyError:
            raise ConstructionError(f"value {value} is not in the chain") from None

    def add(self, i: int, j: int) -> int:
        """Append ``elements[i] + elements[j]`` and return its index."""
        value = self._elements[i] + self._elements[j]
        existing = self._index.get(value)
        if existing is not None:
            return existing
        if value < self.last:
            raise ConstructionError(
                f"cannot append {value} after {self.last}: chains are strictly increasing"
            )
        self._elements.append(value)
        self._steps.append(Step(min(i, j), max(i, j)))
        self._index[value] = len(self._elements) - 1
        return len(self._elements) - 1

    def double(self) -> int:
        return self.add(self.last_index, self.last_index)

    def add_to_last(self, value: Nat) -> int:
        """Append ``last + value`` where ``value`` is already an element."""
        return self.add(self.last_index, self.index_of(value))

    def build(self) -> AdditionChain:
        return AdditionChain(tuple(self._elements), tuple(self._steps), self.last, self.method)


def validate_chain(chain: AdditionChain) -> ValidationReport:
    """Check every AdditionChain invariant; report the first failing index."""
    elements = chain.elements
    if not elements:
        return ValidationReport(False, None, "empty element list")
    if elements[0] != 1:
        return ValidationReport(False, 0, f"first element is {elements[0]}, expected 1")
    if len(chain.steps) != len(elements) - 1:
        return ValidationReport(
            False, None, f"{len(chain.steps)} steps for {len(elements)} elements"
        )
    for k in range(1, len(elements)):
        left, right = chain.steps[k - 1]
        if not (0 <= left <= right < k):
            return ValidationReport(False, k, f"step ({left},{right}) does not reference earlier terms")
        if elements[k] <= elements[k - 1]:
            return ValidationReport(False, k, f"{elements[k]} does not exceed {elements[k - 1]}")
        if elements[left] + elements[right] != elements[k]:
            return ValidationReport(
                False, k, f"{elements[k]} != {elements[left]} + {elements[right]}"
            )
    if elements[-1] != chain.target:
        return ValidationReport(
            False, len(elements) - 1, f"last element {elements[-1]} != target {chain.target}"
        )
    return ValidationReport(True)


def _require_valid(chain: AdditionChain, what: str = "chain") -> None:
    report = validate_chain(chain)
    if not report.ok:
        raise ContractViolation(f"{what} is not a valid addition chain: {report.describe()}")


def is_star(chain: AdditionChain) -> bool:
    """True iff every step uses the immediately preceding element as a summand."""
    _require_valid(chain)
    return all(step.right == k for k, step in enumerate(chain.steps))


def star_view(chain: AdditionChain) -> StarView:
    if not is_star(chain):
        raise ContractViolation("chain is not a star chain; no determiner/regulator view")
    determiners = tuple(chain.elements[step.right] for step in chain.steps)
    regulators = tuple(chain.elements[step.left] for step in chain.steps)
    return StarView(determiners, regulators)


def validate_degree_d(chain: DegreeDChain) -> ValidationReport:
    elements = chain.elements
    if chain.degree < 1:
        return ValidationReport(False, None, f"degree {chain.degree} is not positive")
    if not elements:
        return ValidationReport(False, None, "empty element list")
    if elements[0] != 1:
        return ValidationReport(False, 0, f"first element is {elements[0]}, expected 1")
    if len(chain.blocks) != len(elements) - 1:
        return ValidationReport(
            False, None, f"{len(chain.blocks)} blocks for {len(elements)} elements"
        )
    for k in range(1, len(elements)):
        block = chain.blocks[k - 1]
        if not 1 <= len(block) <= chain.degree:
            return ValidationReport(
                False, k, f"block of {len(block)} terms outside 1..{chain.degree}"
            )
        if any(not 0 <= i < k for i in block):
            return ValidationReport(False, k, f"block {block} references a later term")
        if elements[k] <= elements[k - 1]:
            return ValidationReport(False, k, f"{elements[k]} does not exceed {elements[k - 1]}")
        total = elements[k - 1] + sum(elements[i] for i in block)
        if total != elements[k]:
            return ValidationReport(False, k, f"{elements[k]} != {elements[k - 1]} + block sum")
    return ValidationReport(True)


def to_degree_chain(chain: AdditionChain) -> DegreeDChain:
    """Degree-1 form of a star chain (each block is the regulator index)."""
    if not is_star(chain):
        raise ContractViolation("only star chains have a degree-1 form")
    blocks = tuple((step.left,) for step in chain.steps)
    return DegreeDChain(chain.elements, blocks, 1, chain.method)


def chain_product(a_chain: AdditionChain, b_chain: AdditionChain) -> AdditionChain:
    """
    Chain for ``a*b``: the chain for ``a`` followed by ``a`` times each element
    of the chain for ``b`` after its leading 1.
    """
    _require_valid(a_chain, "left factor")
    _require_valid(b_chain, "right factor")
    a = a_chain.target
    offset = len(a_chain.elements) - 1

    def shift(i: int) -> int:
        return offset + i

    elements = list(a_chain.elements) + [a * e for e in b_chain.elements[1:]]
    steps = list(a_chain.steps) + [Step(shift(s.left), shift(s.right)) for s in b_chain.steps]
    return AdditionChain(tuple(elements), tuple(steps), a * b_chain.target, a_chain.method)


def double_plus_one_extend(chain: AdditionChain) -> AdditionChain:
    """Append ``2m`` and ``2m + 1`` to a chain for ``m``."""
    _require_valid(chain)
    last = len(chain.elements) - 1
    m = chain.target
    elements = chain.elements + (2 * m, 2 * m + 1)
    steps = chain.steps + (Step(last, last), Step(0, last + 1))
    return AdditionChain(elements, steps, 2 * m + 1, chain.method)


def check_equivalence_witness(a: AdditionChain, b: AdditionChain, w: EquivalenceWitness) -> bool:
    """
    Check that ``a`` is equivalent to ``b`` under witness ``w``: for every
    selected generator position i, ``g_i = a_i - v_i`` and ``h_i = r_i - d_i``
    with non-negative stabilizers.

    The selected positions must be the complete prefix ``0..t-1`` of ``b``'s
    generators and must cover every generator of ``a``; a shorter cover is
    not a witness.
    """
    view_a = star_view(a)
    view_b = star_view(b)
    positions = tuple(w.sub_indices)
    if len(positions) != len(w.stabilizer_pairs):
        raise MalformedWitnessError(
            f"{len(positions)} positions but {len(w.stabilizer_pairs)} stabilizer pairs"
        )
    if positions != tuple(range(len(positions))):
        raise MalformedWitnessError("witness positions do not form a complete sub-chain")
    if len(positions) > len(view_a.determiners) or len(positions) > len(view_b.determiners):
        raise MalformedWitnessError(f"witness position {len(positions) - 1} is out of range")

    if len(positions) < len(view_a.determiners):
        return False
    for i, (v, d) in zip(positions, w.stabilizer_pairs):
        if v < 0 or d < 0:
            return False
        if view_b.determiners[i] != view_a.determiners[i] - v:
            return False
        if view_b.regulators[i] != view_a.regulators[i] - d:
            return False

    assert a.length <= b.length
    return True


def is_equivalent_in_base(s_chain: AdditionChain, u_chain: AdditionChain, w: EquivalenceWitness) -> bool:
    """
    Equivalence in base ``n``: some complete sub-chain of ``s_chain`` (the
    prefix selected by ``w``) is equivalent to ``u_chain``.
    """
    t = len(w.sub_indices)
    if t > s_chain.length:
        raise MalformedWitnessError(f"sub-chain of {t} generators exceeds the chain")
    prefix = AdditionChain(
        s_chain.elements[: t + 1], s_chain.steps[:t], s_chain.elements[t], s_chain.method
    )
    return check_equivalence_witness(prefix, u_chain, w)


def stabilizers_between(a: AdditionChain, b: AdditionChain, count: Optional[int] = None) -> EquivalenceWitness:
    """Stabilizers read off two star chains position by position (they may be negative)."""
    view_a, view_b = star_view(a), star_view(b)
    t = len(view_a.determiners) if count is None else count
    pairs = tuple(
        (view_a.determiners[i] - view_b.determiners[i], view_a.regulators[i] - view_b.regulators[i])
        for i in range(t)
    )
    return EquivalenceWitness(tuple(range(t)), pairs)


def chain_from_values(values: Iterable[Nat], method: str = "custom") -> Tuple[AdditionChain, int]:
    """
    Turn a set of values containing the target into a chain.

    Values are sorted; each value takes the decomposition ``a + b`` with ``a``
    the largest available summand. A value with no decomposition gets a
    missing summand inserted (the gap to its predecessor, or half the value
    when the predecessor is below half), and that one is completed in turn.
    Returns the chain and the number of inserted values.
    """
    pool = set(values)
    pool.add(1)
    if any(v < 1 for v in pool):
        raise ContractViolation("chain values must be positive")
    inserted = 0
    while True:
        ordered = sorted(pool)
        missing = None
        for k in range(1, len(ordered)):
            if _decompose(ordered, k, pool) is None:
                value, previous = ordered[k], ordered[k - 1]
                # close the gap to the predecessor, or halve when it is too far below
                missing = value - previous if 2 * previous >= value else (value + 1) // 2
                break
        if missing is None:
            break
        logger.debug(f"inserting summand {missing}")
        pool.add(missing)
        inserted += 1

    ordered = sorted(pool)
    position = {v: i for i, v in enumerate(ordered)}
    steps = []
    for k in range(1, len(ordered)):
        a, b = _decompose(ordered, k, pool)
        steps.append(Step(min(position[a], position[b]), max(position[a], position[b])))
    return AdditionChain(tuple(ordered), tuple(steps), ordered[-1], method), inserted


def _decompose(ordered: Sequence[Nat], k: int, pool: set) -> Optional[Tuple[Nat, Nat]]:
    value = ordered[k]
    for i in range(k - 1, -1, -1):
        a = ordered[i]
        if 2 * a < value:
            return None
        if value - a in pool:
            return a, value - a
    return None
