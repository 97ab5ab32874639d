"""Generic fixpoint schedulers over finite partial orders.

Two schedulers live here.  :func:`gi_fixpoint` is plain chaotic iteration:
keep a worklist of rules whose fixpoint status is unknown, re-enqueue
everything idle whenever the current element moves.  :func:`r_fixpoint` works
on precompiled rule sets (see :func:`compute_friends_obviated`): when a rule
fires it also runs the bodies of its friends without testing their conditions,
and it drops the friends and obviated rules from the live set for good.  The
surviving live set can be fed back through :func:`resume` for every later
fixpoint above the one just reached.
"""

from __future__ import annotations

import random
from collections import deque
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Protocol


class Lattice(Protocol):
    bottom: Any

    def is_top(self, e: Any) -> bool: ...

    def leq(self, a: Any, b: Any) -> bool: ...


class PropRule(Protocol):
    """A rule ``b -> g`` with a monotonic, precise condition and a stable body."""

    @property
    def witness(self) -> Any:
        """The least element at which the condition holds."""

    def holds(self, d: Any) -> bool: ...

    def can_ever_hold_above(self, d: Any) -> bool:
        """False only if the condition fails at every ``e`` above ``d``."""

    def apply_body(self, d: Any) -> Any: ...


def apply_rule(rule: PropRule, d: Any) -> Any:
    return rule.apply_body(d) if rule.holds(d) else d


DeadCheck = Callable[[PropRule, Any], bool]
StepHook = Callable[[Any, frozenset, frozenset], None]


@dataclass
class SchedulerTrace:
    final_store: Any
    f_fin: frozenset[int]
    condition_tests: int = 0
    body_applications: int = 0
    rules_removed: int = 0
    reached_top: bool = False
    relevant: list[int] = field(default_factory=list)
    iterations: int = 0


@dataclass(frozen=True)
class CompiledRuleSet:
    rules: tuple
    friends: tuple[tuple[int, ...], ...]
    obviated: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.rules)
        if len(self.friends) != n or len(self.obviated) != n:
            raise ValueError("friends/obviated tables must have one entry per rule")
        for i in range(n):
            fr, ob = self.friends[i], self.obviated[i]
            if i in fr:
                raise ValueError(f"rule {i} lists itself as a friend")
            if i not in ob:
                raise ValueError(f"rule {i} is missing from its own obviated list")
            if set(fr) & set(ob):
                raise ValueError(f"rule {i}: friends and obviated overlap")
            if any(not 0 <= j < n for j in (*fr, *ob)):
                raise ValueError(f"rule {i}: index out of range")

    def __len__(self) -> int:
        return len(self.rules)

    @cached_property
    def removals(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(f) | frozenset(o) for f, o in zip(self.friends, self.obviated))

    @cached_property
    def solving_degree(self) -> tuple[float, ...]:
        n = len(self.rules)
        return tuple(len(r) / n for r in self.removals)

    def is_solving(self, i: int) -> bool:
        return len(self.removals[i]) == len(self.rules)

    def all_indices(self) -> frozenset[int]:
        return frozenset(range(len(self.rules)))


class _Worklist:
    """Pending rule indices; each index is queued at most once.

    FIFO by default.  With an ``rng`` the next rule is drawn uniformly from
    the pending ones, which is what the randomized property tests use.
    """

    def __init__(self, rng: random.Random | None = None) -> None:
        self._rng = rng
        self._pending: set[int] = set()
        self._queue: deque[int] = deque()
        self._items: list[int] = []

    def __bool__(self) -> bool:
        return bool(self._pending)

    def __len__(self) -> int:
        return len(self._pending)

    def __contains__(self, i: int) -> bool:
        return i in self._pending

    def snapshot(self) -> frozenset[int]:
        return frozenset(self._pending)

    def push(self, i: int) -> None:
        if i in self._pending:
            return
        self._pending.add(i)
        if self._rng is None:
            self._queue.append(i)
        else:
            self._items.append(i)

    def pop(self) -> int:
        if self._rng is None:
            while True:
                i = self._queue.popleft()
                if i in self._pending:
                    self._pending.remove(i)
                    return i
        while True:
            k = self._rng.randrange(len(self._items))
            self._items[k], self._items[-1] = self._items[-1], self._items[k]
            i = self._items.pop()
            if i in self._pending:
                self._pending.remove(i)
                return i

    def discard(self, indices: Iterable[int]) -> None:
        # stale queue entries are skipped by pop(); compact when they pile up
        self._pending.difference_update(indices)
        if self._rng is None:
            if len(self._queue) > 2 * len(self._pending) + 16:
                self._queue = deque(i for i in self._queue if i in self._pending)
        elif len(self._items) > 2 * len(self._pending) + 16:
            self._items = [i for i in self._items if i in self._pending]


def _initial_order(indices: Iterable[int], order: Sequence[int] | None) -> list[int]:
    idx = sorted(indices)
    if order is None:
        return idx
    present = set(idx)
    head = [i for i in dict.fromkeys(order) if i in present]
    seen = set(head)
    return head + [i for i in idx if i not in seen]


def gi_fixpoint(
    rules: Sequence[PropRule],
    lattice: Lattice,
    start: Any = None,
    *,
    rng: random.Random | None = None,
    order: Sequence[int] | None = None,
    on_step: StepHook | None = None,
) -> SchedulerTrace:
    """Least common fixpoint of ``rules`` above ``start`` by chaotic iteration.

    ``order`` fixes the initial queue (indices listed first are chosen
    first); ``on_step`` sees ``(d, pending, live)`` before every choice.
    """
    d = lattice.bottom if start is None else start
    everything = frozenset(range(len(rules)))
    work = _Worklist(rng)
    for i in _initial_order(everything, order):
        work.push(i)
    trace = SchedulerTrace(final_store=d, f_fin=everything)
    while work and not lattice.is_top(d):
        if on_step is not None:
            on_step(d, work.snapshot(), everything)
        i = work.pop()
        trace.iterations += 1
        trace.condition_tests += 1
        rule = rules[i]
        if not rule.holds(d):
            continue
        trace.body_applications += 1
        nd = rule.apply_body(d)
        if nd != d:
            trace.relevant.append(i)
            for j in range(len(rules)):
                work.push(j)
            d = nd
    trace.final_store = d
    trace.reached_top = lattice.is_top(d)
    return trace


def r_fixpoint(
    compiled: CompiledRuleSet,
    lattice: Lattice,
    start: Any = None,
    live: Iterable[int] | None = None,
    *,
    rng: random.Random | None = None,
    order: Sequence[int] | None = None,
    dead_check: DeadCheck | None = None,
    on_step: StepHook | None = None,
) -> SchedulerTrace:
    """Fixpoint of the ``live`` rules above ``start`` using friends/obviated lists.

    ``dead_check(rule, d)`` decides whether a rule whose condition failed may
    still hold above ``d``; it defaults to the rule's own
    ``can_ever_hold_above`` and may be more conservative, never less.
    """
    d = lattice.bottom if start is None else start
    rules = compiled.rules
    alive = set(range(len(rules)) if live is None else live)
    if any(not 0 <= i < len(rules) for i in alive):
        raise ValueError("live set refers to rules outside the compiled set")
    work = _Worklist(rng)
    for i in _initial_order(alive, order):
        work.push(i)
    trace = SchedulerTrace(final_store=d, f_fin=frozenset())
    while work and not lattice.is_top(d):
        if on_step is not None:
            on_step(d, work.snapshot(), frozenset(alive))
        i = work.pop()
        trace.iterations += 1
        trace.condition_tests += 1
        rule = rules[i]
        if rule.holds(d):
            gone = compiled.removals[i]
            alive.difference_update(gone)
            work.discard(gone)
            nd = rule.apply_body(d)
            for j in compiled.friends[i]:
                nd = rules[j].apply_body(nd)
            trace.body_applications += 1 + len(compiled.friends[i])
            if nd != d:
                trace.relevant.append(i)
                for j in sorted(alive):
                    work.push(j)
                d = nd
        else:
            maybe = rule.can_ever_hold_above(d) if dead_check is None else dead_check(rule, d)
            if not maybe:
                alive.discard(i)
    trace.final_store = d
    trace.reached_top = lattice.is_top(d)
    trace.f_fin = frozenset(alive)
    trace.rules_removed = len(rules) - len(alive)
    return trace


def resume(
    compiled: CompiledRuleSet,
    lattice: Lattice,
    prior: SchedulerTrace,
    e: Any,
    **kwargs: Any,
) -> SchedulerTrace:
    """Fixpoint above ``e`` reusing the live rules left over by ``prior``.

    Only valid when ``prior.final_store <= e``; rules dropped earlier are
    stable above the prior fixpoint and hence above ``e``.
    """
    if not lattice.leq(prior.final_store, e):
        raise ValueError("resume needs an element above the prior fixpoint")
    return r_fixpoint(compiled, lattice, e, prior.f_fin, **kwargs)


def compute_friends_obviated(
    rules: Sequence[PropRule],
    lattice: Lattice,
    *,
    order: Sequence[int] | None = None,
) -> CompiledRuleSet:
    """Precompute friends and obviated lists for every rule.

    For rule ``b -> g`` with witness ``w`` this runs GI from ``g(w)`` over the
    whole rule set.  The rules that changed the element, in firing order, are
    the friends; every other rule whose body fixes the resulting fixpoint, or
    whose condition can no longer hold above it, is obviated.
    """
    rules = tuple(rules)
    friends: list[tuple[int, ...]] = []
    obviated: list[tuple[int, ...]] = []
    for k, rule in enumerate(rules):
        w = rule.witness
        if w is None:
            raise ValueError(f"rule {k} has no witness; its condition is not precise")
        run = gi_fixpoint(rules, lattice, rule.apply_body(w), order=order)
        d = run.final_store
        fr = tuple(dict.fromkeys(i for i in run.relevant if i != k))
        skip = set(fr)
        ob = tuple(
            j
            for j, other in enumerate(rules)
            if j not in skip and (other.apply_body(d) == d or not other.can_ever_hold_above(d))
        )
        friends.append(fr)
        obviated.append(ob)
    return CompiledRuleSet(rules, tuple(friends), tuple(obviated))


def brute_force_fixpoint(rules: Sequence[PropRule], start: Any) -> Any:
    """Round-robin application of every rule until nothing changes."""
    d = start
    changed = True
    while changed:
        changed = False
        for rule in rules:
            nd = apply_rule(rule, d)
            if nd != d:
                d = nd
                changed = True
    return d


@dataclass
class ConditionViolation:
    rule: int
    other: int
    d: Any
    e: Any
    which: str


def check_friends_conditions(
    compiled: CompiledRuleSet,
    lattice: Any,
    *,
    sequential: bool = False,
    limit: int = 10,
) -> list[ConditionViolation]:
    """Exhaustively check the two properties R relies on.

    For every element ``d`` where rule ``b -> g`` holds: every rule in its
    friends and obviated lists fixes every ``e`` above ``h(d)``, where ``h``
    runs ``g`` and then the friends' bodies; and every friend's condition
    holds at every ``e`` above ``g(d)``.  With ``sequential`` the second check
    only asks friend ``i`` to hold above the element reached after ``g`` and
    the friends before it, which is all the scheduler needs.

    ``lattice`` must provide ``elements()`` and ``above(x)``.
    """
    rules = compiled.rules
    found: list[ConditionViolation] = []
    above_cache: dict[Any, list] = {}

    def above(x: Any) -> list:
        if x not in above_cache:
            above_cache[x] = list(lattice.above(x))
        return above_cache[x]

    for d in lattice.elements():
        for i, rule in enumerate(rules):
            if not rule.holds(d):
                continue
            gd = rule.apply_body(d)
            cur = gd
            for j in compiled.friends[i]:
                base = cur if sequential else gd
                for e in above(base):
                    if not rules[j].holds(e):
                        found.append(ConditionViolation(i, j, d, e, "friend condition"))
                        break
                cur = rules[j].apply_body(cur)
                if len(found) >= limit:
                    return found
            for j in compiled.removals[i]:
                other = rules[j]
                for e in above(cur):
                    if apply_rule(other, e) != e:
                        found.append(ConditionViolation(i, j, d, e, "stability"))
                        break
                if len(found) >= limit:
                    return found
    return found
