"""Finite-domain stores: sequences of variable domains with a single failed element.

A store is either :data:`TOP` (some domain became empty) or a tuple of
nonempty domains, one per variable.  Domains are bitmasks over a
:class:`Universe`; bit ``i`` set means the ``i``-th value is still allowed.
Stores are ordered by information: ``s <= t`` when every domain of ``t`` is a
subset of the matching domain of ``s``, and :data:`TOP` sits above everything.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field

MAX_UNIVERSE = 64


class SignatureError(ValueError):
    """Two stores (or a store and a rule) disagree on the variable layout."""


@dataclass(frozen=True)
class Universe:
    """An ordered set of named values a variable may take."""

    values: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __init__(self, values: Iterable[object]) -> None:
        vals = tuple(str(v) for v in values)
        if not vals:
            raise ValueError("a universe needs at least one value")
        if len(vals) > MAX_UNIVERSE:
            raise ValueError(f"universe has {len(vals)} values, limit is {MAX_UNIVERSE}")
        if len(set(vals)) != len(vals):
            raise ValueError(f"duplicate values in universe {vals}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "index", {v: i for i, v in enumerate(vals)})

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[str]:
        return iter(self.values)

    @property
    def full(self) -> int:
        return (1 << len(self.values)) - 1

    def ordinal(self, value: object) -> int:
        try:
            return self.index[str(value)]
        except KeyError:
            raise ValueError(f"value {value!r} not in universe {self.values}") from None

    def mask(self, values: Iterable[object]) -> int:
        m = 0
        for v in values:
            m |= 1 << self.ordinal(v)
        return m

    def members(self, mask: int) -> tuple[str, ...]:
        return tuple(v for i, v in enumerate(self.values) if mask >> i & 1)

    def subsets(self, *, proper: bool = False) -> list[int]:
        """Every nonempty subset mask, smallest first."""
        top = self.full if proper else self.full + 1
        return sorted(range(1, top), key=lambda m: (m.bit_count(), m))

    def format(self, mask: int) -> str:
        return "{" + ",".join(self.members(mask)) + "}"


class _Top:
    __slots__ = ()
    _instance: _Top | None = None

    def __new__(cls) -> _Top:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "TOP"

    def __reduce__(self) -> str:
        return "TOP"


TOP = _Top()
"""The failed store: every sequence containing an empty domain collapses here."""


@dataclass(frozen=True, slots=True)
class Store:
    domains: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(d == 0 for d in self.domains):
            raise ValueError("a non-top store may not hold an empty domain; use TOP")

    def __len__(self) -> int:
        return len(self.domains)

    def __getitem__(self, var: int) -> int:
        return self.domains[var]


StoreValue = Store | _Top


def make_store(domains: Iterable[int]) -> StoreValue:
    """Build a store, collapsing to TOP when any domain is empty."""
    doms = tuple(domains)
    if any(d == 0 for d in doms):
        return TOP
    return Store(doms)


def store_bottom(universes: Sequence[Universe]) -> Store:
    return Store(tuple(u.full for u in universes))


def store_leq(s: StoreValue, t: StoreValue) -> bool:
    """``s`` is below ``t``: TOP is greatest, otherwise componentwise reversed subset."""
    if t is TOP:
        return True
    if s is TOP:
        return False
    if len(s.domains) != len(t.domains):
        raise SignatureError(f"stores of arity {len(s.domains)} and {len(t.domains)}")
    return all(b & ~a == 0 for a, b in zip(s.domains, t.domains))


def remove_value(s: StoreValue, var: int, value: int) -> StoreValue:
    """Drop the value with ordinal ``value`` from the domain of ``var``."""
    if s is TOP:
        return TOP
    dom = s.domains[var]
    bit = 1 << value
    if not dom & bit:
        return s
    dom &= ~bit
    if not dom:
        return TOP
    doms = list(s.domains)
    doms[var] = dom
    return Store(tuple(doms))


def is_assigned(s: StoreValue) -> bool:
    """Every domain is a singleton."""
    return s is not TOP and all(d & (d - 1) == 0 for d in s.domains)


class StoreLattice:
    """The store ordering over a fixed sequence of universes."""

    def __init__(self, universes: Sequence[Universe]) -> None:
        self.universes = tuple(universes)
        self.bottom = store_bottom(self.universes)

    @property
    def arity(self) -> int:
        return len(self.universes)

    def is_top(self, e: StoreValue) -> bool:
        return e is TOP

    def leq(self, a: StoreValue, b: StoreValue) -> bool:
        return store_leq(a, b)

    def elements(self, *, include_top: bool = True) -> Iterator[StoreValue]:
        """Enumerate the whole carrier; only sensible for tiny signatures."""
        per_var = [u.subsets() for u in self.universes]
        for doms in itertools.product(*per_var):
            yield Store(tuple(doms))
        if include_top:
            yield TOP

    def size(self) -> int:
        n = 1
        for u in self.universes:
            n *= u.full
        return n + 1

    def above(self, s: StoreValue) -> Iterator[StoreValue]:
        """Every element ``e`` with ``s <= e``, TOP included."""
        if s is not TOP:
            per_var = [[m for m in range(1, d + 1) if m & ~d == 0] for d in s.domains]
            for doms in itertools.product(*per_var):
                yield Store(tuple(doms))
        yield TOP

    def format(self, s: StoreValue, names: Sequence[str] | None = None) -> str:
        if s is TOP:
            return "TOP"
        parts = []
        for i, (u, d) in enumerate(zip(self.universes, s.domains)):
            dom = u.format(d)
            parts.append(f"{names[i]}={dom}" if names else dom)
        return ", ".join(parts) if names else "<" + ", ".join(parts) + ">"

    def store(self, *domains: Iterable[object]) -> StoreValue:
        """Build a store from per-variable value collections (by name)."""
        if len(domains) != self.arity:
            raise SignatureError(f"expected {self.arity} domains, got {len(domains)}")
        return make_store(u.mask(vals) for u, vals in zip(self.universes, domains))
