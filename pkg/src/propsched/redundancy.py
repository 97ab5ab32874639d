"""Redundant-rule detection, rule-set minimization and solving statistics."""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from dataclasses import dataclass, field

from .kernel import CompiledRuleSet, Lattice, PropRule, gi_fixpoint
from .memrules import MembershipRule, bind
from .store import StoreLattice, Universe


def is_redundant(rule: PropRule, others: Sequence[PropRule], lattice: Lattice) -> bool:
    """Witness test: ``rule`` is redundant if its body fixes the least fixpoint
    of ``others`` above its witness.

    The answer is exact for prop rules: when the body moves ``e``, ``e`` itself
    is a fixpoint of ``others`` that the rule does not fix.
    """
    e = gi_fixpoint(others, lattice, rule.witness).final_store
    return rule.apply_body(e) == e


@dataclass(frozen=True)
class Atom:
    """Body atom ``atom`` of input rule ``rule`` (both 0-based)."""

    rule: int
    atom: int


@dataclass
class RedundancyReport:
    removed_rules: list[int] = field(default_factory=list)
    removed_atoms: dict[int, set[int]] = field(default_factory=dict)
    kept: list[MembershipRule] = field(default_factory=list)
    kept_from: list[int] = field(default_factory=list)
    total_atoms: int = 0

    @property
    def removed_atom_count(self) -> int:
        return sum(len(a) for a in self.removed_atoms.values())

    @property
    def remaining_atoms(self) -> int:
        return self.total_atoms - self.removed_atom_count

    @property
    def redundancy_ratio(self) -> float:
        return self.removed_atom_count / self.total_atoms if self.total_atoms else 0.0

    def status(self, i: int, n_atoms: int) -> str:
        gone = len(self.removed_atoms.get(i, ()))
        if gone == 0:
            return "kept"
        return "removed" if gone == n_atoms else "partially_reduced"


def rule_cost(rule: MembershipRule) -> tuple[int, int]:
    return len(rule.conditions), sum(s.bit_count() for _, s in rule.conditions)


def cost_order(rules: Sequence[MembershipRule]) -> list[Atom]:
    """Most expensive atoms first: more condition variables, then larger
    allowed sets, then later rule and atom index."""
    atoms = [Atom(i, k) for i, r in enumerate(rules) for k in range(len(r.body))]
    return sorted(atoms, key=lambda a: (*rule_cost(rules[a.rule]), a.rule, a.atom), reverse=True)


def minimize(
    rules: Sequence[MembershipRule],
    universes: Sequence[Universe],
    order: Sequence[Atom] | str = "cost",
) -> RedundancyReport:
    """Drop redundant body atoms one at a time in the given order.

    Compound bodies are split into single-atom rules, each atom is tested
    against everything still present, and survivors are merged back per input
    rule.  Atoms missing from an explicit ``order`` are tested afterwards in
    cost order.
    """
    lattice = StoreLattice(universes)
    flat = [Atom(i, k) for i, r in enumerate(rules) for k in range(len(r.body))]
    single = {a: bind([MembershipRule(rules[a.rule].conditions, [rules[a.rule].body[a.atom]])], universes)[0] for a in flat}
    if isinstance(order, str):
        if order != "cost":
            raise ValueError(f"unknown order {order!r}")
        schedule = cost_order(rules)
    else:
        schedule = list(dict.fromkeys(order))
        unknown = [a for a in schedule if a not in single]
        if unknown:
            raise ValueError(f"order names atoms that do not exist: {unknown}")
        listed = set(schedule)
        schedule += [a for a in cost_order(rules) if a not in listed]

    present = dict.fromkeys(flat)
    for a in schedule:
        others = [single[b] for b in present if b != a]
        if is_redundant(single[a], others, lattice):
            del present[a]

    report = RedundancyReport(total_atoms=len(flat))
    for i, r in enumerate(rules):
        survivors = [r.body[k] for k in range(len(r.body)) if Atom(i, k) in present]
        gone = {k for k in range(len(r.body)) if Atom(i, k) not in present}
        if gone:
            report.removed_atoms[i] = gone
        if survivors:
            report.kept.append(MembershipRule(r.conditions, survivors))
            report.kept_from.append(i)
        else:
            report.removed_rules.append(i)
    return report


def is_minimal(rules: Sequence[MembershipRule], universes: Sequence[Universe]) -> bool:
    """No single body atom is redundant with respect to all the others."""
    lattice = StoreLattice(universes)
    atoms = [MembershipRule(r.conditions, [a]) for r in rules for a in r.body]
    bound = bind(atoms, universes)
    return not any(is_redundant(b, bound[:k] + bound[k + 1 :], lattice) for k, b in enumerate(bound))


def report_csv(report: RedundancyReport, rules: Sequence[MembershipRule], degrees: Sequence[float] | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rule_id", "status", "removed_atoms", "degree"])
    for i, r in enumerate(rules):
        gone = sorted(report.removed_atoms.get(i, ()))
        deg = "" if degrees is None else f"{degrees[i]:.4f}"
        w.writerow([i + 1, report.status(i, len(r.body)), " ".join(str(k + 1) for k in gone), deg])
    buf.write(
        f"# {report.remaining_atoms} of {report.total_atoms} atomic conclusions remain, "
        f"redundancy ratio {report.redundancy_ratio:.0%}\n"
    )
    return buf.getvalue()


@dataclass
class SolvingStats:
    degrees: tuple[float, ...]
    friends_sizes: tuple[int, ...]
    obviated_sizes: tuple[int, ...]
    union_sizes: tuple[int, ...]

    @property
    def n_rules(self) -> int:
        return len(self.degrees)

    @property
    def solving(self) -> int:
        return sum(1 for s in self.union_sizes if s == self.n_rules)

    @property
    def average_union(self) -> float:
        return sum(self.union_sizes) / self.n_rules if self.n_rules else 0.0

    def histogram(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for s in self.union_sizes:
            out[s] = out.get(s, 0) + 1
        return dict(sorted(out.items(), reverse=True))

    def summary(self) -> str:
        return f"{self.solving} solving / {self.n_rules}, average |friends u obviated| {self.average_union:.2f}"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rule_id", "degree", "friends_size", "obviated_size"])
        for i, (d, f, o) in enumerate(zip(self.degrees, self.friends_sizes, self.obviated_sizes)):
            w.writerow([i + 1, f"{d:.4f}", f, o])
        return buf.getvalue()


def solving_stats(compiled: CompiledRuleSet) -> SolvingStats:
    return SolvingStats(
        degrees=compiled.solving_degree,
        friends_sizes=tuple(len(f) for f in compiled.friends),
        obviated_sizes=tuple(len(o) for o in compiled.obviated),
        union_sizes=tuple(len(r) for r in compiled.removals),
    )
