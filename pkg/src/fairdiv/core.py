"""Exact domain model for online fair division with monotone bundle utilities.

Items are identified by their arrival index ``0..m-1`` and bundles are integer
bitmasks over those indices.  An allocation is a tuple of ``n`` pairwise
disjoint bitmasks.  Every number is a :class:`fractions.Fraction`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence, Union

MAX_ITEMS = 16

Allocation = tuple  # tuple[int, ...] of bundle bitmasks, one per agent
Number = Union[int, str, Fraction]


class SchemaError(ValueError):
    """Malformed problem, utility table, distribution or strategy input."""


class CapacityError(RuntimeError):
    """An enumeration would exceed the configured cap."""


def to_fraction(value: Number) -> Fraction:
    """Parse an int, Fraction, ``"p/q"`` or decimal string exactly.

    Floats are refused: they would smuggle rounding into every verdict.
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise SchemaError(f"refusing inexact value {value!r}; use 'p/q' or a decimal string")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"cannot parse rational {value!r}") from exc
    raise SchemaError(f"cannot parse rational {value!r}")


def fraction_str(value: Fraction) -> str:
    return str(Fraction(value))


# -- item sets ---------------------------------------------------------------

def bundle(*items: int) -> int:
    mask = 0
    for o in items:
        mask |= 1 << o
    return mask


def items_of(mask: int) -> list[int]:
    out = []
    o = 0
    while mask:
        if mask & 1:
            out.append(o)
        mask >>= 1
        o += 1
    return out


def prefix(j: int) -> int:
    """Bitmask of the first ``j`` items, O_j."""
    return (1 << j) - 1


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def subsets(mask: int) -> Iterator[int]:
    """All submasks of ``mask``, including 0 and ``mask``."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


# -- utilities ---------------------------------------------------------------

class UtilityFunction:
    """Monotone bundle utility given as a complete table or additive per-item values.

    The table is indexed by bundle bitmask.  Additive utilities keep their
    per-item values and expand the table on first use.
    """

    __slots__ = ("m", "_table", "item_values")

    def __init__(self, m: int, table: Optional[Sequence[Number]] = None,
                 item_values: Optional[Sequence[Number]] = None):
        if not 0 <= m <= MAX_ITEMS:
            raise SchemaError(f"item count {m} outside 0..{MAX_ITEMS}")
        if (table is None) == (item_values is None):
            raise SchemaError("give exactly one of table or item_values")
        self.m = m
        if table is not None:
            if len(table) != 1 << m:
                raise SchemaError(f"table has {len(table)} entries, expected {1 << m}")
            self._table = tuple(to_fraction(v) for v in table)
            self.item_values = None
        else:
            if len(item_values) != m:
                raise SchemaError(f"expected {m} item values, got {len(item_values)}")
            self.item_values = tuple(to_fraction(v) for v in item_values)
            if any(v < 0 for v in self.item_values):
                raise SchemaError("additive item values must be nonnegative")
            self._table = None

    @classmethod
    def additive(cls, values: Sequence[Number]) -> UtilityFunction:
        return cls(len(values), item_values=values)

    @classmethod
    def from_mapping(cls, m: int, entries: Mapping[int, Number],
                     names: Optional[Sequence[str]] = None) -> UtilityFunction:
        """Build from ``{bundle mask: value}``; every bundle except the empty one is required."""
        table = []
        for mask in range(1 << m):
            if mask in entries:
                table.append(entries[mask])
            elif mask == 0:
                table.append(0)
            else:
                label = [names[o] for o in items_of(mask)] if names else items_of(mask)
                raise SchemaError(f"utility table is missing bundle {label}")
        return cls(m, table=table)

    @classmethod
    def from_function(cls, m: int, fn: Callable[[int], Number]) -> UtilityFunction:
        return cls(m, table=[fn(mask) for mask in range(1 << m)])

    @property
    def table(self) -> tuple:
        if self._table is None:
            vals = self.item_values
            table = [Fraction(0)] * (1 << self.m)
            for mask in range(1, 1 << self.m):
                low = mask & -mask
                table[mask] = table[mask ^ low] + vals[low.bit_length() - 1]
            self._table = tuple(table)
        return self._table

    @property
    def is_shorthand(self) -> bool:
        return self.item_values is not None

    def value(self, mask: int) -> Fraction:
        return self.table[mask]

    def marginal(self, mask: int, item: int) -> Fraction:
        return marginal(self, mask, item)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UtilityFunction):
            return NotImplemented
        return self.m == other.m and self.table == other.table

    def __hash__(self) -> int:
        return hash((self.m, self.table))

    def __repr__(self) -> str:
        if self.item_values is not None:
            return f"UtilityFunction.additive({[str(v) for v in self.item_values]})"
        return f"UtilityFunction(m={self.m}, table={[str(v) for v in self.table]})"


def validate_monotone(u: UtilityFunction) -> Optional[tuple[int, int]]:
    """Return ``None`` if ``u`` is a valid monotone utility, else a witness ``(B, B')``.

    The witness has ``B`` a subset of ``B'`` with ``u(B) > u(B')``.  A nonzero
    value on the empty bundle is reported as ``(0, 0)``.  Checking single-item
    extensions suffices: a violation on a longer chain implies one on a step.
    """
    table = u.table
    if table[0] != 0:
        return (0, 0)
    full = (1 << u.m) - 1
    for mask in range(1 << u.m):
        rest = full & ~mask
        while rest:
            low = rest & -rest
            if table[mask] > table[mask | low]:
                return (mask, mask | low)
            rest ^= low
    return None


def marginal(u: UtilityFunction, mask: int, item: int) -> Fraction:
    if mask >> item & 1:
        raise ValueError(f"item {item} already in bundle {items_of(mask)}")
    table = u.table
    return table[mask | (1 << item)] - table[mask]


def bundle_utility_of(u: UtilityFunction, allocation: Allocation, k: int) -> Fraction:
    return u.value(allocation[k])


# -- problems ----------------------------------------------------------------

@dataclass(frozen=True)
class Problem:
    """Agents, items in arrival order, and one validated utility per agent."""

    n: int
    items: tuple
    utilities: tuple

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "utilities", tuple(self.utilities))
        if self.n < 1:
            raise SchemaError("need at least one agent")
        if len(self.utilities) != self.n:
            raise SchemaError(f"{self.n} agents but {len(self.utilities)} utilities")
        if len(set(self.items)) != len(self.items):
            raise SchemaError("item names must be distinct")
        for i, u in enumerate(self.utilities):
            if u.m != len(self.items):
                raise SchemaError(f"utility of agent {i + 1} covers {u.m} items, expected {len(self.items)}")
            bad = validate_monotone(u)
            if bad is not None:
                small, large = bad
                raise SchemaError(
                    f"utility of agent {i + 1} is not monotone: "
                    f"u({self.names(small)})={u.value(small)} > u({self.names(large)})={u.value(large)}"
                )

    @property
    def m(self) -> int:
        return len(self.items)

    def value(self, i: int, mask: int) -> Fraction:
        return self.utilities[i].table[mask]

    def marginal(self, i: int, mask: int, item: int) -> Fraction:
        return marginal(self.utilities[i], mask, item)

    def names(self, mask: int) -> list[str]:
        return [self.items[o] for o in items_of(mask)]

    def mask_of(self, names: Iterable[str]) -> int:
        index = {name: o for o, name in enumerate(self.items)}
        mask = 0
        for name in names:
            if name not in index:
                raise SchemaError(f"unknown item {name!r}")
            if mask >> index[name] & 1:
                raise SchemaError(f"item {name!r} listed twice")
            mask |= 1 << index[name]
        return mask

    def profile(self, allocation: Allocation) -> tuple:
        """Each agent's utility for their own bundle."""
        return tuple(self.value(i, b) for i, b in enumerate(allocation))


def is_partition(allocation: Allocation, j: int) -> bool:
    """True iff the bundles are pairwise disjoint and cover exactly O_j."""
    union = 0
    for b in allocation:
        if union & b:
            return False
        union |= b
    return union == prefix(j)


# -- distributions -----------------------------------------------------------

@dataclass(frozen=True)
class AllocationDistribution:
    """Exact distribution over allocations of the first ``round`` items."""

    round: int
    support: Mapping

    def __post_init__(self):
        support = {}
        for alloc, p in self.support.items():
            alloc = tuple(alloc)
            p = to_fraction(p)
            if not 0 < p <= 1:
                raise SchemaError(f"probability {p} outside (0, 1]")
            if not is_partition(alloc, self.round):
                raise SchemaError(f"allocation {alloc} does not partition the first {self.round} items")
            if alloc in support:
                raise SchemaError(f"allocation {alloc} listed twice")
            support[alloc] = p
        if sum(support.values()) != 1:
            raise SchemaError(f"probabilities sum to {sum(support.values())}, not 1")
        object.__setattr__(self, "support", support)

    @classmethod
    def point(cls, allocation: Allocation, j: int) -> AllocationDistribution:
        return cls(j, {tuple(allocation): Fraction(1)})

    def items(self):
        return self.support.items()

    def probability(self, allocation: Allocation) -> Fraction:
        return self.support.get(tuple(allocation), Fraction(0))

    def __len__(self) -> int:
        return len(self.support)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AllocationDistribution):
            return NotImplemented
        return self.round == other.round and self.support == other.support

    def __hash__(self) -> int:
        return hash((self.round, frozenset(self.support.items())))


# -- domain classification ---------------------------------------------------

@dataclass(frozen=True)
class DomainFlags:
    identical: bool = False
    additive: bool = False
    nonzero_marginals: bool = False
    zero_one_marginals: bool = False
    positive_additive: bool = False


def _marginals(u: UtilityFunction) -> Iterator[Fraction]:
    table = u.table
    full = (1 << u.m) - 1
    for mask in range(1 << u.m):
        rest = full & ~mask
        while rest:
            low = rest & -rest
            yield table[mask | low] - table[mask]
            rest ^= low


def _is_additive(u: UtilityFunction) -> bool:
    if u.is_shorthand:
        return True
    table = u.table
    for mask in range(1, 1 << u.m):
        low = mask & -mask
        if table[mask] != table[mask ^ low] + table[low]:
            return False
    return True


def classify(problem: Problem) -> DomainFlags:
    us = problem.utilities
    identical = all(u.table == us[0].table for u in us[1:])
    additive = all(_is_additive(u) for u in us)
    marginals = {d for u in us for d in _marginals(u)}
    nonzero = all(d > 0 for d in marginals)
    zero_one = marginals <= {0, 1}
    return DomainFlags(
        identical=identical,
        additive=additive,
        nonzero_marginals=nonzero,
        zero_one_marginals=zero_one,
        positive_additive=additive and nonzero,
    )


def marginal_values(problem: Problem) -> list[Fraction]:
    """Sorted distinct marginal values occurring anywhere in the problem."""
    return sorted({d for u in problem.utilities for d in _marginals(u)})


# -- allocation-level fairness tests ------------------------------------------
# Used both by the distribution verifiers and by the offline oracles.

def envy_witness(problem: Problem, allocation: Allocation) -> Optional[tuple[int, int]]:
    """First ``(i, k)`` with ``u_i(pi_i) < u_i(pi_k)``, or ``None`` if envy-free."""
    for i in range(problem.n):
        own = problem.value(i, allocation[i])
        for k in range(problem.n):
            if k != i and problem.value(i, allocation[k]) > own:
                return (i, k)
    return None


def residual_envies(problem: Problem, allocation: Allocation, i: int, k: int) -> dict[int, Fraction]:
    """``u_i(pi_k - {o}) - u_i(pi_i)`` for each item ``o`` of agent ``k``."""
    own = problem.value(i, allocation[i])
    other = allocation[k]
    return {o: problem.value(i, other & ~(1 << o)) - own for o in items_of(other)}


def ef1_witness(problem: Problem, allocation: Allocation) -> Optional[tuple[int, int]]:
    for i in range(problem.n):
        for k in range(problem.n):
            if k == i or allocation[k] == 0:
                continue
            if all(r > 0 for r in residual_envies(problem, allocation, i, k).values()):
                return (i, k)
    return None


def efx_witness(problem: Problem, allocation: Allocation) -> Optional[tuple[int, int]]:
    for i in range(problem.n):
        u = problem.utilities[i]
        for k in range(problem.n):
            if k == i:
                continue
            res = residual_envies(problem, allocation, i, k)
            if any(r > 0 for o, r in res.items() if u.value(1 << o) > 0):
                return (i, k)
    return None
