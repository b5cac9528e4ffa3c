import pytest

from ddalias.ir import MalformedStatement
from ddalias.transfer import (CD, EX, ID, JD, Ctx, VariantConfig, a_gen, alias_transfer, d_gen, d_kill,
                              demand_transfer, must_targets, used_pointer_store, validate_jd)

from conftest import load


def st(p, sid):
    return p.stmt(sid)


def ctx(p, v=ID, **kw):
    return Ctx(p, VariantConfig(v, **kw))


def test_config_validation():
    with pytest.raises(ValueError):
        VariantConfig("nope")
    with pytest.raises(ValueError):
        VariantConfig(ID, "heap")


def test_direct_kill_only(fig2):
    assert d_kill(st(fig2, "n05")) == {"x"}
    assert d_kill(st(fig2, "n15")) == frozenset()
    assert d_kill(st(fig2, "n23")) == frozenset()


def test_id_load_demands_base_and_storage(fig2):
    A = frozenset({("z", "&X")})
    D = frozenset({"t"})
    gen = d_gen(st(fig2, "n27"), D, D, A, ctx(fig2))
    assert {"z", "&z", "X.f"} <= gen


def test_cd_never_demands_addresses(fig2):
    A = frozenset({("z", "&X")})
    D = frozenset({"t"})
    gen = d_gen(st(fig2, "n27"), D, D, A, ctx(fig2, CD))
    assert {"z", "X.f"} <= gen
    assert not any(n.startswith("&") for n in gen)


def test_address_demand_reaches_pointer(fig2):
    # p = &z is relevant once &z is sought, even though p is not
    D = frozenset({"&z", "z"})
    A = frozenset()
    assert a_gen(st(fig2, "n04"), D, A, ctx(fig2)) == {("p", "&z")}
    assert a_gen(st(fig2, "n04"), frozenset({"t"}), A, ctx(fig2)) == frozenset()


def test_undemanded_statement_is_skipped(fig2):
    A = frozenset({("y", "&X")})
    assert a_gen(st(fig2, "n24"), frozenset({"X.f"}), A, ctx(fig2)) == {("X.f", "&Z")}
    assert a_gen(st(fig2, "n24"), frozenset({"t"}), frozenset(), ctx(fig2)) == frozenset()


def test_ex_is_universal(fig2):
    A = frozenset({("y", "&X")})
    assert a_gen(st(fig2, "n24"), None, A, ctx(fig2, EX)) == {("X.f", "&Z")}


def test_alias_kill_direct(fig2):
    A = frozenset({("x", "&Y"), ("y", "&X")})
    out = alias_transfer(st(fig2, "n05"), frozenset({"x"}), A, ctx(fig2))
    assert ("x", "&Y") not in out and ("x", "&X") in out and ("y", "&X") in out


def test_weak_update_through_pointer(fig2):
    A = frozenset({("p", "&z"), ("z", "&Y"), ("x", "&X")})
    out = alias_transfer(st(fig2, "n15"), frozenset({"z"}), A, ctx(fig2))
    assert {("z", "&Y"), ("z", "&X")} <= out


def test_strong_update_option(fig2):
    A = frozenset({("p", "&z"), ("z", "&Y"), ("x", "&X")})
    c = ctx(fig2, CD, strong_update=True)
    assert must_targets(st(fig2, "n15"), A, c) == {"z"}
    out = alias_transfer(st(fig2, "n15"), frozenset({"z"}), A, c)
    assert ("z", "&Y") not in out and ("z", "&X") in out
    # demand for z dies at the store
    assert "z" not in demand_transfer(st(fig2, "n15"), frozenset({"z"}), frozenset({"z"}), A, c)
    # two pointees, nothing is definite
    A2 = A | {("p", "&x")}
    assert must_targets(st(fig2, "n15"), A2, c) == frozenset()
    # Id never trusts its partial pointee sets
    assert must_targets(st(fig2, "n15"), A, ctx(fig2, ID, strong_update=True)) == frozenset()


def test_jd_rejects_address_of(fig2):
    with pytest.raises(MalformedStatement, match="address-of not permitted under jd"):
        validate_jd(fig2)
    validate_jd(load("fig14"))


def test_used_pointer_store(fig2):
    assert used_pointer_store(fig2) == {"p", "x", "y"}


def test_object_store_records_relevant_objects():
    p = load("fig5")
    c = ctx(p, ID, object_store=True)
    assert c.store == set()
    # a1.f names nothing until a1 is known to matter
    D = frozenset({"A.f"})
    d_gen(p.stmt("n02"), D, D, frozenset(), c)
    assert c.store == set()
    # x = &a1 with x demanded records a1
    d_gen(p.stmt("n01"), frozenset({"x"}), frozenset({"x"}), frozenset(), c)
    assert c.store == {"a1"} and c.store_grew
    assert a_gen(p.stmt("n02"), D, frozenset(), c) == {("A.f", "&B")}
    # a2 is not in the store, so a2.f names nothing
    assert a_gen(p.stmt("n03"), D, frozenset(), c) == frozenset()


def test_store_needs_tba():
    p = load("fig5")
    assert Ctx(p, VariantConfig(ID, "asb", object_store=True)).store is None


def test_vcall_demands_receiver(fig2):
    gen = d_gen(st(fig2, "n28"), frozenset(), frozenset(), frozenset(), ctx(fig2, JD))
    assert gen == {"t"}
