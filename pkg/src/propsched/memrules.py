"""Membership rules ``y1 in S1, ..., yk in Sk -> z1 != a1, ..., zm != am``.

A condition holds in a store when each listed domain is already inside its
allowed set (the failed store satisfies everything).  The body removes one
value per atom.  Rules are plain data; :class:`BoundRule` adapts one to the
kernel's rule protocol for a fixed sequence of universes.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Literal

from .kernel import CompiledRuleSet, compute_friends_obviated
from .store import TOP, Store, StoreLattice, StoreValue, Universe

log = logging.getLogger(__name__)

DeadMode = Literal["always", "singleton-only"]


@dataclass(frozen=True)
class MembershipRule:
    conditions: tuple[tuple[int, int], ...]
    body: tuple[tuple[int, int], ...]

    def __init__(self, conditions: Iterable[tuple[int, int]], body: Iterable[tuple[int, int]]) -> None:
        conds = tuple((int(v), int(s)) for v, s in conditions)
        vars_ = [v for v, _ in conds]
        if len(set(vars_)) != len(vars_):
            raise ValueError(f"condition variables must be pairwise distinct: {vars_}")
        if any(s == 0 for _, s in conds):
            raise ValueError("allowed sets must be nonempty")
        atoms = tuple((int(z), int(a)) for z, a in body)
        if not atoms:
            raise ValueError("a membership rule needs at least one body atom")
        unique = tuple(dict.fromkeys(atoms))
        if len(unique) != len(atoms):
            log.warning("dropping duplicate body atoms in rule %s -> %s", conds, atoms)
        object.__setattr__(self, "conditions", conds)
        object.__setattr__(self, "body", unique)

    @property
    def is_equality(self) -> bool:
        return all(s & (s - 1) == 0 for _, s in self.conditions)

    @property
    def condition_key(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.conditions)

    def variables(self) -> set[int]:
        return {v for v, _ in self.conditions} | {z for z, _ in self.body}

    def check_signature(self, universes: Sequence[Universe]) -> None:
        n = len(universes)
        for v, s in self.conditions:
            if not 0 <= v < n:
                raise ValueError(f"condition variable {v} out of range for arity {n}")
            if s & ~universes[v].full:
                raise ValueError(f"allowed set of variable {v} exceeds its universe")
        for z, a in self.body:
            if not 0 <= z < n:
                raise ValueError(f"body variable {z} out of range for arity {n}")
            if not 0 <= a < len(universes[z]):
                raise ValueError(f"value {a} outside the universe of variable {z}")

    def atoms(self) -> list[MembershipRule]:
        """One single-atom rule per body atom."""
        return [MembershipRule(self.conditions, [atom]) for atom in self.body]


def holds(rule: MembershipRule, s: StoreValue) -> bool:
    if s is TOP:
        return True
    doms = s.domains
    for v, allowed in rule.conditions:
        if doms[v] & ~allowed:
            return False
    return True


def holds_equality(rule: MembershipRule, s: StoreValue) -> bool:
    """The original equality reading: the domain must equal the singleton."""
    if s is TOP:
        return True
    return all(s.domains[v] == allowed for v, allowed in rule.conditions)


def apply_body(rule: MembershipRule, s: StoreValue) -> StoreValue:
    if s is TOP:
        return TOP
    doms = list(s.domains)
    changed = False
    for z, a in rule.body:
        bit = 1 << a
        if doms[z] & bit:
            doms[z] &= ~bit
            if not doms[z]:
                return TOP
            changed = True
    return Store(tuple(doms)) if changed else s


def apply(rule: MembershipRule, s: StoreValue) -> StoreValue:
    return apply_body(rule, s) if holds(rule, s) else s


def witness(rule: MembershipRule, universes: Sequence[Universe]) -> Store:
    doms = [u.full for u in universes]
    for v, allowed in rule.conditions:
        doms[v] = allowed
    return Store(tuple(doms))


def can_ever_hold_above(rule: MembershipRule, s: StoreValue, mode: DeadMode = "always") -> bool:
    if s is TOP:
        raise ValueError("the failed store has no rules left to test")
    for v, allowed in rule.conditions:
        dom = s.domains[v]
        if mode == "singleton-only" and dom & (dom - 1):
            continue
        if not dom & allowed:
            return False
    return True


def dead_checker(mode: DeadMode):
    """A kernel ``dead_check`` callable for bound membership rules."""
    if mode == "always":
        return None
    if mode != "singleton-only":
        raise ValueError(f"unknown dead-rule mode {mode!r}")

    def check(bound: BoundRule, d: StoreValue) -> bool:
        return can_ever_hold_above(bound.rule, d, "singleton-only")

    return check


@dataclass(frozen=True)
class BoundRule:
    """A membership rule seen as a kernel rule over fixed universes."""

    rule: MembershipRule
    universes: tuple[Universe, ...] = field(repr=False)

    @property
    def witness(self) -> Store:
        return witness(self.rule, self.universes)

    def holds(self, d: StoreValue) -> bool:
        return holds(self.rule, d)

    def can_ever_hold_above(self, d: StoreValue) -> bool:
        return can_ever_hold_above(self.rule, d)

    def apply_body(self, d: StoreValue) -> StoreValue:
        return apply_body(self.rule, d)


def bind(rules: Iterable[MembershipRule], universes: Sequence[Universe]) -> list[BoundRule]:
    us = tuple(universes)
    out = []
    for r in rules:
        r.check_signature(us)
        out.append(BoundRule(r, us))
    return out


def compile_rules(rules: Sequence[MembershipRule], universes: Sequence[Universe]) -> CompiledRuleSet:
    return compute_friends_obviated(bind(rules, universes), StoreLattice(universes))


@dataclass
class PropReport:
    checked: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_prop_rule(rule, lattice, elements: Sequence | None = None, *, limit: int = 1) -> PropReport:
    """Exhaustively check the prop-rule properties of any kernel rule.

    Covers condition monotonicity and preciseness, and stability,
    inflationarity and monotonicity of the body.  Stops after ``limit``
    counterexamples.
    """
    elems = list(lattice.elements()) if elements is None else list(elements)
    report = PropReport()
    leq = lattice.leq

    def fail(msg: str) -> bool:
        report.failures.append(msg)
        return len(report.failures) >= limit

    w = rule.witness
    if not rule.holds(w):
        if fail(f"condition does not hold at its witness {w!r}"):
            return report
    body = {id(d): rule.apply_body(d) for d in elems}
    held = {id(d): rule.holds(d) for d in elems}
    for d in elems:
        gd = body[id(d)]
        report.checked += 1
        if held[id(d)] and not leq(w, d):
            if fail(f"condition holds at {d!r} which is not above the witness"):
                return report
        if not leq(d, gd):
            if fail(f"body is not inflationary at {d!r}"):
                return report
        for e in elems:
            if not leq(d, e):
                if leq(gd, e) and rule.apply_body(e) != e:
                    if fail(f"body is not stable: g({d!r}) <= {e!r} but g moves {e!r}"):
                        return report
                continue
            if held[id(d)] and not held[id(e)]:
                if fail(f"condition is not monotonic: holds at {d!r}, fails at {e!r}"):
                    return report
            if not leq(gd, body[id(e)]):
                if fail(f"body is not monotonic between {d!r} and {e!r}"):
                    return report
            if leq(gd, e) and body[id(e)] != e:
                if fail(f"body is not stable: g({d!r}) <= {e!r} but g moves {e!r}"):
                    return report
    return report


def verify_prop_rule(rule: MembershipRule, universes: Sequence[Universe], **kwargs) -> PropReport:
    lattice = StoreLattice(universes)
    return check_prop_rule(bind([rule], universes)[0], lattice, **kwargs)


def from_values(
    universes: Sequence[Universe],
    conditions: dict[int, Iterable[object]],
    body: Iterable[tuple[int, object]],
) -> MembershipRule:
    """Build a rule from value names instead of masks and ordinals."""
    conds = [(v, universes[v].mask(vals)) for v, vals in sorted(conditions.items())]
    atoms = [(z, universes[z].ordinal(a)) for z, a in body]
    return MembershipRule(conds, atoms)


def format_rule(rule: MembershipRule, universes: Sequence[Universe], names: Sequence[str] | None = None) -> str:
    nm = list(names) if names else [f"x{i + 1}" for i in range(len(universes))]
    cond = ", ".join(f"{nm[v]} in {universes[v].format(s)}" for v, s in rule.conditions)
    body = ", ".join(f"{nm[z]} != {universes[z].values[a]}" for z, a in rule.body)
    return f"{cond} -> {body}" if cond else f"-> {body}"

