"""Closure under ground proof rules ``B -> G`` over the powerset of a finite atom set.

A rule fires once every premise is present and then adds its conclusions.
Sets of atoms are bitmasks; the greatest element is the full atom set.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from .kernel import CompiledRuleSet, compute_friends_obviated, r_fixpoint


class PowersetLattice:
    def __init__(self, n_atoms: int) -> None:
        self.n_atoms = n_atoms
        self.bottom = 0
        self.full = (1 << n_atoms) - 1

    def is_top(self, e: int) -> bool:
        # every rule fixes the full set, so stopping there is sound
        return e == self.full

    def leq(self, a: int, b: int) -> bool:
        return a & ~b == 0

    def elements(self):
        return iter(range(self.full + 1))

    def above(self, e: int):
        # supersets of e: enumerate subsets of the complement
        rest = self.full & ~e
        sub = rest
        while True:
            yield e | sub
            if sub == 0:
                return
            sub = (sub - 1) & rest


@dataclass(frozen=True, slots=True)
class SetRule:
    premises: int
    conclusions: int

    @property
    def witness(self) -> int:
        return self.premises

    def holds(self, e: int) -> bool:
        return self.premises & ~e == 0

    def can_ever_hold_above(self, e: int) -> bool:
        return True

    def apply_body(self, e: int) -> int:
        return e | self.conclusions


def atom_mask(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def compile_set_rules(rules: Sequence[SetRule], n_atoms: int) -> CompiledRuleSet:
    return compute_friends_obviated(rules, PowersetLattice(n_atoms))


def closure(
    rules: Sequence[SetRule] | CompiledRuleSet,
    initial: int,
    n_atoms: int | None = None,
) -> int:
    """Least superset of ``initial`` closed under every rule."""
    if n_atoms is None:
        n_atoms = max([initial.bit_length()] + [max(r.premises, r.conclusions).bit_length() for r in _rules_of(rules)])
    compiled = rules if isinstance(rules, CompiledRuleSet) else compile_set_rules(rules, n_atoms)
    return r_fixpoint(compiled, PowersetLattice(n_atoms), initial).final_store


def _rules_of(rules):
    return rules.rules if isinstance(rules, CompiledRuleSet) else rules


def naive_closure(rules: Sequence[SetRule], initial: int) -> int:
    e = initial
    while True:
        nxt = e
        for r in rules:
            if r.premises & ~nxt == 0:
                nxt |= r.conclusions
        if nxt == e:
            return e
        e = nxt


_ATOM = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")


def parse_set_rules(text: str, atoms: Sequence[str] = ()) -> tuple[list[str], list[SetRule]]:
    """Parse ``p q -> r s`` lines; ``#`` starts a comment.

    Atoms are numbered in order of first appearance after any given in
    ``atoms``.  Returns the atom table and the rules.
    """
    table = list(atoms)
    index = {a: i for i, a in enumerate(table)}

    def mask(words: list[str], lineno: int) -> int:
        m = 0
        for w in words:
            if not _ATOM.fullmatch(w):
                raise ValueError(f"line {lineno}: bad atom {w!r}")
            if w not in index:
                index[w] = len(table)
                table.append(w)
            m |= 1 << index[w]
        return m

    rules = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.count("->") != 1:
            raise ValueError(f"line {lineno}: expected exactly one '->'")
        lhs, rhs = line.split("->")
        concl = rhs.split()
        if not concl:
            raise ValueError(f"line {lineno}: rule has no conclusions")
        rules.append(SetRule(mask(lhs.split(), lineno), mask(concl, lineno)))
    return table, rules


def atom_names(mask: int, table: Sequence[str]) -> list[str]:
    return [a for i, a in enumerate(table) if mask >> i & 1]
