"""Brute-force generation of minimal valid membership and equality rules.

A rule is valid for a constraint when firing it never removes a value that
some tuple matching the condition still uses.  For each body atom we keep
only the weakest conditions (fewest variables, largest allowed sets) that are
valid and matched by at least one tuple, then merge atoms sharing a
condition into one rule.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from importlib import resources

from .memrules import MembershipRule
from .store import Universe

MAX_ARITY = 6
MAX_VALUES = 11
MAX_CONDITIONS = 2_000_000


class SizeLimitError(ValueError):
    """The candidate space is too large for brute-force generation."""


class ConstraintSyntaxError(ValueError):
    def __init__(self, msg: str, line: int, column: int = 1) -> None:
        super().__init__(f"line {line}, column {column}: {msg}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class ConstraintDef:
    name: str
    universes: tuple[Universe, ...]
    tuples: tuple[tuple[int, ...], ...]
    var_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        n = len(self.universes)
        if not self.tuples:
            raise ValueError(f"constraint {self.name} has no tuples")
        if len(set(self.tuples)) != len(self.tuples):
            raise ValueError(f"constraint {self.name} lists a tuple twice")
        for t in self.tuples:
            if len(t) != n:
                raise ValueError(f"tuple {t} does not have arity {n}")
            if any(not 0 <= v < len(u) for v, u in zip(t, self.universes)):
                raise ValueError(f"tuple {t} leaves the variable universes")
        if not self.var_names:
            object.__setattr__(self, "var_names", default_var_names(n))
        elif len(self.var_names) != n:
            raise ValueError("one variable name per position is required")

    @property
    def arity(self) -> int:
        return len(self.universes)

    @classmethod
    def from_values(
        cls,
        name: str,
        universes: Sequence[Universe | Iterable[object]],
        tuples: Iterable[Sequence[object]],
        var_names: Sequence[str] = (),
    ) -> ConstraintDef:
        us = tuple(u if isinstance(u, Universe) else Universe(u) for u in universes)
        ts = tuple(tuple(u.ordinal(v) for u, v in zip(us, t)) for t in tuples)
        return cls(name, us, ts, tuple(var_names))

    def value_tuples(self) -> list[tuple[str, ...]]:
        return [tuple(u.values[v] for u, v in zip(self.universes, t)) for t in self.tuples]


def default_var_names(n: int) -> tuple[str, ...]:
    if n <= 4:
        return ("x", "y", "z", "u")[:n]
    return tuple(f"x{i + 1}" for i in range(n))


def is_valid(rule: MembershipRule, c: ConstraintDef) -> bool:
    for t in c.tuples:
        if all(allowed >> t[v] & 1 for v, allowed in rule.conditions):
            if any(t[z] == a for z, a in rule.body):
                return False
    return True


def is_vacuous(rule: MembershipRule, c: ConstraintDef) -> bool:
    return not any(all(allowed >> t[v] & 1 for v, allowed in rule.conditions) for t in c.tuples)


def _check_size(c: ConstraintDef, per_var: list[list[int]]) -> None:
    if c.arity > MAX_ARITY:
        raise SizeLimitError(f"arity {c.arity} exceeds {MAX_ARITY}")
    if any(len(u) > MAX_VALUES for u in c.universes):
        raise SizeLimitError(f"a universe exceeds {MAX_VALUES} values")
    total = 1
    for opts in per_var:
        total *= len(opts) + 1
    if total > MAX_CONDITIONS:
        raise SizeLimitError(f"{total} candidate conditions exceed {MAX_CONDITIONS}")


def _generate(c: ConstraintDef, per_var: list[list[int]]) -> list[MembershipRule]:
    _check_size(c, per_var)
    n = c.arity
    ntup = len(c.tuples)
    # tuples matching "x_v in S", as a bitmask over tuple positions
    match = [{s: sum(1 << k for k, t in enumerate(c.tuples) if s >> t[v] & 1) for s in per_var[v]} for v in range(n)]
    # value mask of variable z over a set of tuples, per tuple position
    col = [[1 << t[z] for t in c.tuples] for z in range(n)]
    everything = (1 << ntup) - 1

    # key: per-variable mask, 0 = no condition on that variable
    valid: dict[tuple[int, ...], list[int]] = {}
    for key in itertools.product(*[[0, *opts] for opts in per_var]):
        hit = everything
        for v, s in enumerate(key):
            if s:
                hit &= match[v][s]
        if not hit:
            continue
        removable = []
        for z in range(n):
            if key[z]:
                removable.append(0)
                continue
            seen = 0
            h = hit
            while h:
                low = h & -h
                seen |= col[z][low.bit_length() - 1]
                h ^= low
            removable.append(c.universes[z].full & ~seen)
        valid[key] = removable

    def weakenings(key: tuple[int, ...]):
        for v, s in enumerate(key):
            if not s:
                continue
            yield key[:v] + (0,) + key[v + 1 :]
            for t in per_var[v]:
                if t & s == s and (t & ~s).bit_count() == 1:
                    yield key[:v] + (t,) + key[v + 1 :]

    rules = []
    for key, removable in valid.items():
        blocked = [0] * n
        for wk in weakenings(key):
            other = valid.get(wk)
            if other is not None:
                for z in range(n):
                    blocked[z] |= other[z]
        body = []
        for z in range(n):
            keep = removable[z] & ~blocked[z]
            body.extend((z, a) for a in range(len(c.universes[z])) if keep >> a & 1)
        if body:
            conds = [(v, s) for v, s in enumerate(key) if s]
            rules.append(MembershipRule(conds, body))
    rules.sort(key=_rule_order)
    return rules


def _rule_order(r: MembershipRule):
    return (len(r.conditions), [v for v, _ in r.conditions], [s for _, s in r.conditions], r.body)


def generate_equality_rules(c: ConstraintDef) -> list[MembershipRule]:
    per_var = [[1 << i for i in range(len(u))] for u in c.universes]
    return _generate(c, per_var)


def generate_membership_rules(c: ConstraintDef) -> list[MembershipRule]:
    per_var = [u.subsets(proper=True) for u in c.universes]
    return _generate(c, per_var)


def generate(c: ConstraintDef, kind: str) -> list[MembershipRule]:
    if kind == "equality":
        return generate_equality_rules(c)
    if kind == "membership":
        return generate_membership_rules(c)
    raise ValueError(f"unknown rule kind {kind!r}")


def parse_constraint(text: str) -> ConstraintDef:
    """Read the line-oriented constraint format.

    ::

        constraint c 4            # name, arity
        values 0 1                # default universe
        values@2 t f u            # universe of variable 2 (0-based)
        vars x y z u              # optional variable names
        tuple 0 1 0 1
    """
    name = None
    arity = 0
    default: list[str] | None = None
    overrides: dict[int, list[str]] = {}
    var_names: list[str] = []
    raw_tuples: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, *rest = line.split()
        col = raw.index(word) + 1
        if word == "constraint":
            if len(rest) != 2 or not rest[1].isdigit():
                raise ConstraintSyntaxError("expected 'constraint <name> <arity>'", lineno, col)
            name, arity = rest[0], int(rest[1])
        elif word == "values":
            default = rest
        elif word.startswith("values@"):
            pos = word[len("values@") :]
            if not pos.isdigit():
                raise ConstraintSyntaxError(f"bad variable position in {word!r}", lineno, col)
            overrides[int(pos)] = rest
        elif word == "vars":
            var_names = rest
        elif word == "tuple":
            raw_tuples.append((lineno, rest))
        else:
            raise ConstraintSyntaxError(f"unknown directive {word!r}", lineno, col)
    if name is None:
        raise ConstraintSyntaxError("missing 'constraint' line", 1)
    universes = []
    for i in range(arity):
        vals = overrides.get(i, default)
        if vals is None:
            raise ConstraintSyntaxError(f"no universe for variable {i}", 1)
        universes.append(Universe(vals))
    if any(i >= arity for i in overrides):
        raise ConstraintSyntaxError("values@ refers past the declared arity", 1)
    tuples = []
    for lineno, vals in raw_tuples:
        if len(vals) != arity:
            raise ConstraintSyntaxError(f"tuple has {len(vals)} values, arity is {arity}", lineno)
        try:
            tuples.append(tuple(u.ordinal(v) for u, v in zip(universes, vals)))
        except ValueError as exc:
            raise ConstraintSyntaxError(str(exc), lineno) from None
    try:
        return ConstraintDef(name, tuple(universes), tuple(tuples), tuple(var_names))
    except ValueError as exc:
        raise ConstraintSyntaxError(str(exc), 1) from None


def render_constraint(c: ConstraintDef) -> str:
    lines = [f"constraint {c.name} {c.arity}"]
    first = c.universes[0] if c.universes else None
    if first is not None:
        lines.append("values " + " ".join(first.values))
    for i, u in enumerate(c.universes):
        if u != first:
            lines.append(f"values@{i} " + " ".join(u.values))
    lines.append("vars " + " ".join(c.var_names))
    lines.extend("tuple " + " ".join(t) for t in c.value_tuples())
    return "\n".join(lines) + "\n"


BUNDLED = ("c", "and2", "equ3", "and3")


def bundled_text(name: str) -> str:
    return resources.files("propsched.data").joinpath(f"{name}.con").read_text()


def load_bundled(name: str) -> ConstraintDef:
    if name not in BUNDLED:
        raise KeyError(f"no bundled constraint named {name!r}")
    return parse_constraint(bundled_text(name))
