from __future__ import annotations

import itertools
import random

import pytest

from propsched.kernel import check_friends_conditions, gi_fixpoint
from propsched.setrules import (
    PowersetLattice,
    SetRule,
    atom_mask,
    atom_names,
    closure,
    compile_set_rules,
    naive_closure,
    parse_set_rules,
)


def oracle_closure(rules, initial):
    """Closure over Python sets of atom indices."""
    current = {i for i in range(initial.bit_length()) if initial >> i & 1}
    plain = [({i for i in range(64) if r.premises >> i & 1}, {i for i in range(64) if r.conclusions >> i & 1}) for r in rules]
    while True:
        new = set(current)
        for prem, concl in plain:
            if prem <= current:
                new |= concl
        if new == current:
            return atom_mask(current)
        current = new


def random_set_rules(rng, n_atoms, n_rules):
    out = []
    for _ in range(n_rules):
        prem = atom_mask(rng.sample(range(n_atoms), rng.randint(0, 3)))
        concl = atom_mask(rng.sample(range(n_atoms), rng.randint(1, 2)))
        out.append(SetRule(prem, concl))
    return out


def test_chain():
    table, rules = parse_set_rules("a -> b\nb -> c\nc d -> e\n")
    assert table == ["a", "b", "c", "d", "e"]
    assert atom_names(closure(rules, atom_mask([0]), len(table)), table) == ["a", "b", "c"]
    assert atom_names(closure(rules, atom_mask([0, 3]), len(table)), table) == ["a", "b", "c", "d", "e"]


def test_unconditional_rule():
    _, rules = parse_set_rules(" -> p  # axiom\np -> q")
    assert closure(rules, 0) == 0b11


@pytest.mark.parametrize("seed", range(20))
def test_random_against_naive_and_oracle(seed):
    rng = random.Random(seed)
    rules = random_set_rules(rng, 12, 50)
    compiled = compile_set_rules(rules, 12)
    for _ in range(10):
        initial = atom_mask(rng.sample(range(12), rng.randint(0, 4)))
        expected = oracle_closure(rules, initial)
        assert naive_closure(rules, initial) == expected
        assert closure(compiled, initial, 12) == expected


@pytest.mark.parametrize("n", range(1, 7))
def test_exhaustive_small(n):
    rng = random.Random(n)
    lat = PowersetLattice(n)
    for _ in range(5):
        rules = random_set_rules(rng, n, rng.randint(1, 8)) if n >= 3 else [
            SetRule(atom_mask(rng.sample(range(n), rng.randint(0, n))), atom_mask([rng.randrange(n)])) for _ in range(3)
        ]
        compiled = compile_set_rules(rules, n)
        assert check_friends_conditions(compiled, lat, sequential=True) == []
        for initial in lat.elements():
            expected = oracle_closure(rules, initial)
            assert closure(compiled, initial, n) == expected
            assert gi_fixpoint(rules, lat, initial).final_store == expected


def test_above_enumerates_supersets():
    lat = PowersetLattice(4)
    for e in lat.elements():
        assert sorted(lat.above(e)) == [x for x in range(16) if x & e == e]


def test_parse_errors():
    with pytest.raises(ValueError):
        parse_set_rules("a b c")
    with pytest.raises(ValueError):
        parse_set_rules("a ->")
    with pytest.raises(ValueError):
        parse_set_rules("a -> 9x")


def test_given_atom_table():
    table, rules = parse_set_rules("b -> a", atoms=["a", "b"])
    assert table == ["a", "b"]
    assert rules == [SetRule(0b10, 0b01)]


def test_closure_is_extensive_and_idempotent():
    rng = random.Random(99)
    rules = random_set_rules(rng, 8, 15)
    for initial in itertools.islice(range(256), 0, 256, 7):
        c = closure(rules, initial, 8)
        assert c & initial == initial
        assert closure(rules, c, 8) == c
