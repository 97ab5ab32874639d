"""Shared fixtures and independent oracles.

The oracles below work on plain Python sets rather than the package's bitmask
stores, so they share no code with the implementation under test.
"""

from __future__ import annotations

import itertools
import random

import pytest

from propsched.memrules import MembershipRule
from propsched.rulegen import BUNDLED, ConstraintDef, generate, load_bundled
from propsched.store import TOP, Store, Universe

# -- set-based oracle ---------------------------------------------------------


def to_sets(s, universes):
    """Store -> tuple of frozensets of value names, or None for the failed store."""
    if s is TOP:
        return None
    return tuple(frozenset(u.members(d)) for u, d in zip(universes, s.domains))


def from_sets(sets, universes):
    if sets is None or any(not d for d in sets):
        return TOP
    return Store(tuple(u.mask(d) for u, d in zip(universes, sets)))


def oracle_rule(rule: MembershipRule, universes):
    """A rule as ({var: allowed value set}, [(var, value)]) in value names."""
    conds = {v: set(universes[v].members(s)) for v, s in rule.conditions}
    body = [(z, universes[z].values[a]) for z, a in rule.body]
    return conds, body


def oracle_holds(orule, sets):
    return sets is None or all(sets[v] <= allowed for v, allowed in orule[0].items())


def oracle_body(orule, sets):
    if sets is None:
        return None
    doms = [set(d) for d in sets]
    for z, a in orule[1]:
        doms[z].discard(a)
    if any(not d for d in doms):
        return None
    return tuple(frozenset(d) for d in doms)


def oracle_apply(orule, sets):
    return oracle_body(orule, sets) if oracle_holds(orule, sets) else sets


def oracle_fixpoint(rules, universes, start):
    """Least common fixpoint above ``start`` by round-robin to stability."""
    orules = [oracle_rule(r, universes) for r in rules]
    cur = to_sets(start, universes)
    changed = True
    while changed and cur is not None:
        changed = False
        for r in orules:
            nxt = oracle_apply(r, cur)
            if nxt != cur:
                cur, changed = nxt, True
                if cur is None:
                    break
    return from_sets(cur, universes)


def all_stores(universes, include_top=True):
    choices = [[frozenset(c) for k in range(1, len(u) + 1) for c in itertools.combinations(u.values, k)] for u in universes]
    for combo in itertools.product(*choices):
        yield from_sets(combo, universes)
    if include_top:
        yield TOP


def oracle_leq(a, b, universes):
    if b is TOP:
        return True
    if a is TOP:
        return False
    return all(y <= x for x, y in zip(to_sets(a, universes), to_sets(b, universes)))


def oracle_common_fixpoints(rules, universes):
    orules = [oracle_rule(r, universes) for r in rules]
    out = set()
    for s in all_stores(universes):
        sets = to_sets(s, universes)
        if all(oracle_apply(r, sets) == sets for r in orules):
            out.add(s)
    return out


def oracle_solutions(c: ConstraintDef):
    return {tuple(c.universes[i].values[v] for i, v in enumerate(t)) for t in c.tuples}


# -- random instances ---------------------------------------------------------


def random_universes(rng: random.Random, max_arity=4, max_values=3):
    n = rng.randint(1, max_arity)
    return tuple(Universe([f"v{k}" for k in range(rng.randint(1, max_values))]) for _ in range(n))


def random_rule(rng: random.Random, universes):
    n = len(universes)
    k = rng.randint(0, n)
    conds = []
    for v in rng.sample(range(n), k):
        full = universes[v].full
        conds.append((v, rng.randint(1, full)))
    body = [(z, rng.randrange(len(universes[z]))) for z in (rng.randrange(n) for _ in range(rng.randint(1, 3)))]
    return MembershipRule(conds, dict.fromkeys(body))


def random_rules(rng: random.Random, universes, max_rules=8):
    return [random_rule(rng, universes) for _ in range(rng.randint(1, max_rules))]


def random_store(rng: random.Random, universes):
    return Store(tuple(rng.randint(1, u.full) for u in universes))


# -- fixtures -----------------------------------------------------------------


@pytest.fixture(scope="session")
def bundled():
    return {name: load_bundled(name) for name in BUNDLED}


@pytest.fixture(scope="session")
def generated(bundled):
    return {(name, kind): generate(c, kind) for name, c in bundled.items() for kind in ("equality", "membership")}


def sets_leq(a, b):
    """Order on set-tuples, ``None`` being the failed store."""
    if b is None:
        return True
    if a is None:
        return False
    return all(y <= x for x, y in zip(a, b))
