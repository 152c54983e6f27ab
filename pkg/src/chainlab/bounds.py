"""
Bound formulas for chain lengths.

Integer and dyadic quantities are computed exactly (``int`` and
``fractions.Fraction``); floor logarithms use bit lengths or integer powers.
The two real-valued kinds (Brauer's asymptotic upper bound and the integral
bound) carry an absolute error estimate that comparisons take into account.
"""

import logging
import math
import threading
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Union

import numpy as np
from scipy.integrate import quad

from .errors import BoundDependencyError, BoundDomainError
from .search import IotaResolver, IotaSource, brauer_bracket_upper

logger = logging.getLogger(__name__)

SIEVE_LIMIT = 10 ** 8
QUAD_TOLERANCE = 1e-9
FLOAT_LOG_ERROR = 1e-10

Number = Union[Fraction, float]


@dataclass(frozen=True)
class DyadicRational:
    """``numerator / 2**exponent``."""

    numerator: int
    exponent: int

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def __float__(self) -> float:
        return float(self.to_fraction())

    def __add__(self, other: "DyadicRational") -> "DyadicRational":
        e = max(self.exponent, other.exponent)
        return DyadicRational(
            (self.numerator << (e - self.exponent)) + (other.numerator << (e - other.exponent)), e
        )

    def __eq__(self, other) -> bool:
        if isinstance(other, DyadicRational):
            return self.to_fraction() == other.to_fraction()
        if isinstance(other, (int, Fraction)):
            return self.to_fraction() == other
        return NotImplemented

    def __lt__(self, other) -> bool:
        return self.to_fraction() < _as_fraction(other)

    def __le__(self, other) -> bool:
        return self.to_fraction() <= _as_fraction(other)

    def __hash__(self) -> int:
        return hash(self.to_fraction())


def _as_fraction(value) -> Fraction:
    return value.to_fraction() if isinstance(value, DyadicRational) else Fraction(value)


class BoundKind(Enum):
    BRAUER_LOWER = "brauer_lower"
    BRAUER_UPPER = "brauer_upper"
    SIMPLE = "simple"
    INTEGRAL = "integral"
    BACKTRACK = "backtrack"
    POTHOLE = "pothole"
    IMPROVED = "improved"
    MAIN = "main"
    SCHOLZ_RHS = "scholz_rhs"
    DEGREE_ROAD = "degree_road"

    @classmethod
    def parse(cls, name: str) -> "BoundKind":
        try:
            return cls(name.strip().lower().replace("-", "_"))
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise BoundDomainError(f"unknown bound kind {name!r}; choose from {choices}") from None

    @property
    def needs_iota(self) -> bool:
        return self in (
            BoundKind.POTHOLE,
            BoundKind.IMPROVED,
            BoundKind.SCHOLZ_RHS,
            BoundKind.INTEGRAL,
            BoundKind.DEGREE_ROAD,
        )

    @property
    def is_lower(self) -> bool:
        return self is BoundKind.BRAUER_LOWER


KIND_ORDER = {kind: position for position, kind in enumerate(BoundKind)}


@dataclass(frozen=True)
class BoundValue:
    """
    A bound evaluated at ``n``. ``value`` is a Fraction when exact, a float
    otherwise with ``error`` its absolute error bound.
    """

    kind: BoundKind
    n: int
    value: Number
    error: float = 0.0
    iota: Optional[int] = None
    iota_source: Optional[IotaSource] = None

    @property
    def exact(self) -> bool:
        return isinstance(self.value, Fraction)

    def admits(self, length: int) -> bool:
        """Whether ``length`` is consistent with this bound, never optimistic."""
        if self.kind.is_lower:
            return length > self.value + self.error
        return length <= self.value - self.error

    def text(self) -> str:
        return format_number(self.value)


@dataclass(frozen=True)
class BoundReport:
    n: int
    kind: BoundKind
    constructed_length: Optional[int]
    bound: Optional[BoundValue]
    satisfied: Optional[bool]
    iota_source: Optional[IotaSource] = None


def make_report(
    bound: BoundValue, constructed_length: Optional[int], iota_source: Optional[IotaSource] = None
) -> BoundReport:
    satisfied = None if constructed_length is None else bound.admits(constructed_length)
    source = iota_source if iota_source is not None else bound.iota_source
    return BoundReport(bound.n, bound.kind, constructed_length, bound, satisfied, source)


def format_number(value: Number) -> str:
    """Integers plainly, dyadic fractions as exact decimals, reals to 9 places."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        k = value.denominator.bit_length() - 1
        if value.denominator == 1 << k:
            digits = abs(value.numerator) * 5 ** k
            whole, frac = divmod(digits, 10 ** k)
            sign = "-" if value < 0 else ""
            return f"{sign}{whole}.{str(frac).rjust(k, '0').rstrip('0')}"
        return f"{float(value):.9f}"
    return f"{value:.9f}"


def floor_log2(n: int) -> int:
    if n < 1:
        raise BoundDomainError(f"log2 of {n} is undefined")
    return n.bit_length() - 1


def floor_log(n: int, base: int) -> int:
    """floor(log n / log base) with integer arithmetic only."""
    if n < 1 or base < 2:
        raise BoundDomainError(f"floor log of {n} in base {base} is undefined")
    count, power = 0, base
    while power <= n:
        count += 1
        power *= base
    return count


def xi(n: int, j: int) -> DyadicRational:
    """n/2^j - floor(n/2^j), the fractional part lost by j halvings."""
    if n < 2:
        raise BoundDomainError(f"xi needs n >= 2, got {n}")
    if not 1 <= j <= floor_log2(n):
        raise BoundDomainError(f"xi({n}, j) needs 1 <= j <= {floor_log2(n)}, got {j}")
    return DyadicRational(n & ((1 << j) - 1), j)


def theta(n: int, s: int) -> DyadicRational:
    if n < 2:
        raise BoundDomainError(f"theta needs n >= 2, got {n}")
    if not 1 <= s <= floor_log2(n):
        raise BoundDomainError(f"theta({n}, s) needs 1 <= s <= {floor_log2(n)}, got {s}")
    total = DyadicRational(0, 0)
    for j in range(1, s + 1):
        total = total + xi(n, j)
    return total


class _Sieve:
    """Shared Eratosthenes table, grown on demand."""

    def __init__(self):
        self._lock = threading.Lock()
        self._is_prime = np.zeros(0, dtype=bool)

    def _ensure(self, limit: int) -> None:
        if limit < len(self._is_prime):
            return
        with self._lock:
            old = len(self._is_prime)
            if limit < old:
                return
            size = max(limit + 1, 2 * old, 1024)
            size = min(size, SIEVE_LIMIT + 1)
            root = math.isqrt(size - 1)
            if root >= old:
                is_prime = np.ones(size, dtype=bool)
                is_prime[:2] = False
                for p in range(2, root + 1):
                    if is_prime[p]:
                        is_prime[p * p :: p] = False
            else:
                # only the new segment is sieved, by the primes already known
                segment = np.ones(size - old, dtype=bool)
                for p in np.flatnonzero(self._is_prime[: root + 1]).tolist():
                    start = max(p * p, -(-old // p) * p)
                    segment[start - old :: p] = False
                is_prime = np.concatenate((self._is_prime, segment))
            logger.debug(f"sieve extended to {size - 1}")
            self._is_prime = is_prime

    def count(self, limit: int) -> int:
        if limit < 2:
            return 0
        self._ensure(limit)
        return int(np.count_nonzero(self._is_prime[: limit + 1]))

    def primes(self, limit: int) -> List[int]:
        if limit < 2:
            return []
        self._ensure(limit)
        return np.flatnonzero(self._is_prime[: limit + 1]).tolist()


_SIEVE = _Sieve()


def prime_count(x: float) -> int:
    """pi(x), exact for x up to 10^8."""
    if x > SIEVE_LIMIT:
        raise BoundDomainError(f"prime_count is limited to x <= {SIEVE_LIMIT}, got {x}")
    return _SIEVE.count(math.floor(x))


def primes_upto(limit: float) -> List[int]:
    if limit > SIEVE_LIMIT:
        raise BoundDomainError(f"primes are sieved up to {SIEVE_LIMIT}, got {limit}")
    return _SIEVE.primes(math.floor(limit))


def _inverse_log_cube(t: float) -> float:
    return 1.0 / math.log(t) ** 3


def log_cube_integral_with_error(a: float, b: float):
    if not 2 <= a <= b:
        raise BoundDomainError(f"log_cube_integral needs 2 <= a <= b, got a={a}, b={b}")
    if a == b:
        return 0.0, 0.0
    value, error = quad(_inverse_log_cube, a, b, epsabs=1e-11, epsrel=0.0, limit=200)
    if error > QUAD_TOLERANCE:
        raise BoundDomainError(f"quadrature on [{a}, {b}] only reached error {error:.2e}")
    return value, error


def log_cube_integral(a: float, b: float) -> float:
    """Integral of dt / ln(t)^3 over [a, b]."""
    return log_cube_integral_with_error(a, b)[0]


def brauer_upper(r: int) -> float:
    """log2 r * (1 + 1/ln ln r + 2 ln 2 / (ln r)^(1 - ln 2))."""
    if r < 3:
        raise BoundDomainError(f"brauer_upper needs r >= 3, got {r}")
    ln_r = math.log(r)
    return math.log2(r) * (1 + 1 / math.log(ln_r) + 2 * math.log(2) / ln_r ** (1 - math.log(2)))


def _resolve_iota(
    n: int,
    iota_of_n: Optional[int],
    iota_source: Optional[IotaSource],
    resolver: Optional[IotaResolver],
    allow_fallback: bool,
):
    if iota_of_n is not None:
        return iota_of_n, iota_source or IotaSource.TABLE
    if resolver is not None:
        resolved = resolver.resolve(n)
        if resolved is not None:
            return resolved
    if allow_fallback:
        logger.warning(f"iota({n}) unavailable; bound uses the Brauer upper value")
        return brauer_bracket_upper(n), IotaSource.FALLBACK_UPPER
    raise BoundDependencyError(f"iota({n}) is required and no source is available")


def bound_value(
    kind: Union[BoundKind, str],
    n: int,
    iota_of_n: Optional[int] = None,
    *,
    iota_source: Optional[IotaSource] = None,
    resolver: Optional[IotaResolver] = None,
    allow_fallback: bool = False,
    filler: Optional[int] = None,
) -> BoundValue:
    """
    Evaluate one bound.

    ``n`` is the exponent for every kind except the two Brauer kinds, which
    are evaluated at the number itself. Kinds that need iota(n) take it from
    ``iota_of_n``, then ``resolver``, then (if allowed) the Brauer bracket.
    The integral kind also needs the measured ``filler`` of the prime ladder.
    """
    if isinstance(kind, str):
        kind = BoundKind.parse(kind)

    if kind is BoundKind.BRAUER_LOWER:
        if n < 1:
            raise BoundDomainError(f"brauer_lower needs n >= 1, got {n}")
        if n & (n - 1) == 0:
            return BoundValue(kind, n, Fraction(floor_log2(n) - 1))
        return BoundValue(kind, n, math.log2(n) - 1, FLOAT_LOG_ERROR)
    if kind is BoundKind.BRAUER_UPPER:
        return BoundValue(kind, n, brauer_upper(n), FLOAT_LOG_ERROR)

    if n < 2 and kind is not BoundKind.SCHOLZ_RHS:
        raise BoundDomainError(f"{kind.value} needs n >= 2, got {n}")
    if n < 1:
        raise BoundDomainError(f"{kind.value} needs n >= 1, got {n}")

    iota, source = None, None
    if kind.needs_iota:
        iota, source = _resolve_iota(n, iota_of_n, iota_source, resolver, allow_fallback)

    lg = floor_log2(n)
    if kind is BoundKind.SIMPLE:
        value = Fraction(n + 1 + (n - 2) // 2)
    elif kind is BoundKind.BACKTRACK:
        value = Fraction(2 * n - 1 - 2 * ((n - 1) >> lg) + lg)
    elif kind is BoundKind.POTHOLE:
        value = Fraction(2 * n - 1 - ((n - 1) >> lg) - lg + iota)
    elif kind is BoundKind.IMPROVED:
        parity = Fraction(1 - (-1) ** n, 4)
        value = Fraction(3 * n, 2) - ((n - 2) >> lg) - (lg - 1) + parity + iota
    elif kind is BoundKind.MAIN:
        value = Fraction(n + 1 + 3 * lg) - theta(n, lg).to_fraction()
    elif kind is BoundKind.SCHOLZ_RHS:
        value = Fraction(n - 1 + iota)
    elif kind is BoundKind.DEGREE_ROAD:
        value = Fraction(n + iota)
    elif kind is BoundKind.INTEGRAL:
        if n < 3:
            raise BoundDomainError(f"integral needs n >= 3, got {n}")
        if filler is None:
            raise BoundDependencyError(f"integral bound for n={n} needs the measured filler count")
        upper = (n - 1) / 2
        integral, error = log_cube_integral_with_error(2.0, upper) if upper >= 2 else (0.0, 0.0)
        ln_n = math.log(n)
        total = n + iota + n / ln_n + 1.3 * ln_n * integral + filler
        return BoundValue(kind, n, total, 1.3 * ln_n * error + FLOAT_LOG_ERROR, iota, source)
    else:  # pragma: no cover
        raise BoundDomainError(f"unhandled bound kind {kind}")
    return BoundValue(kind, n, value, 0.0, iota, source)
