from __future__ import annotations

import pickle

import pytest

from propsched.store import (
    TOP,
    SignatureError,
    Store,
    StoreLattice,
    Universe,
    is_assigned,
    make_store,
    remove_value,
    store_bottom,
    store_leq,
)

from conftest import all_stores, oracle_leq

KLEENE = Universe(["t", "f", "u"])
BOOL = Universe(["0", "1"])


def test_universe_basics():
    assert len(KLEENE) == 3
    assert KLEENE.full == 0b111
    assert KLEENE.mask(["f", "u"]) == 0b110
    assert KLEENE.members(0b101) == ("t", "u")
    assert KLEENE.ordinal("u") == 2
    assert len(KLEENE.subsets()) == 7
    assert len(KLEENE.subsets(proper=True)) == 6
    with pytest.raises(ValueError):
        KLEENE.ordinal("x")
    with pytest.raises(ValueError):
        Universe(["a", "a"])


def test_store_rejects_empty_domain():
    with pytest.raises(ValueError):
        Store((1, 0))
    assert make_store((1, 0)) is TOP
    assert make_store((1, 2)) == Store((1, 2))


def test_top_is_a_singleton():
    assert pickle.loads(pickle.dumps(TOP)) is TOP


def test_remove_value_collapses_to_top():
    s = Store((0b01, 0b11))
    assert remove_value(s, 1, 0) == Store((0b01, 0b10))
    assert remove_value(s, 0, 0) is TOP
    assert remove_value(TOP, 0, 0) is TOP
    # removing an absent value is the identity
    assert remove_value(s, 0, 1) is s


def test_is_assigned():
    assert is_assigned(Store((1, 2)))
    assert not is_assigned(Store((3, 2)))
    assert not is_assigned(TOP)


def test_leq_arity_mismatch():
    with pytest.raises(SignatureError):
        store_leq(Store((1,)), Store((1, 1)))


def test_leq_matches_set_oracle_exhaustively():
    us = (KLEENE, BOOL)
    stores = list(all_stores(us))
    for a in stores:
        for b in stores:
            assert store_leq(a, b) == oracle_leq(a, b, us)


def test_lattice_size_and_extremes():
    lat = StoreLattice((KLEENE, KLEENE, KLEENE))
    assert lat.size() == 7**3 + 1
    elems = list(lat.elements())
    assert len(elems) == lat.size()
    assert lat.bottom == store_bottom(lat.universes)
    assert all(lat.leq(lat.bottom, e) for e in elems)
    assert all(lat.leq(e, TOP) for e in elems)
    assert lat.is_top(TOP) and not lat.is_top(lat.bottom)


def test_above_is_the_upset():
    us = (KLEENE, BOOL)
    lat = StoreLattice(us)
    elems = list(lat.elements())
    for s in elems:
        assert set(lat.above(s)) == {e for e in elems if oracle_leq(s, e, us)}


def test_remove_value_inflationary_and_monotone():
    us = (KLEENE, BOOL)
    stores = list(all_stores(us))
    for var, u in enumerate(us):
        for val in range(len(u)):
            for a in stores:
                ra = remove_value(a, var, val)
                assert store_leq(a, ra)
                for b in stores:
                    if store_leq(a, b):
                        assert store_leq(ra, remove_value(b, var, val))


def test_lattice_store_and_format():
    lat = StoreLattice((KLEENE, KLEENE))
    s = lat.store(["f"], ["t", "u"])
    assert s == Store((0b010, 0b101))
    assert lat.format(s, ["x", "y"]) == "x={f}, y={t,u}"
    assert lat.format(TOP) == "TOP"
