import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddalias.absdomain import (ASB, TBA, abs_name, addr_type, alias_closure, aliased, declared_pointees,
                               make_pair, pointees, render_edge, render_pairs, render_set, restrict,
                               restrict_all, vals)
from ddalias.ir import UndeclaredVariable, UnsupportedExpr

PTRS = ["p", "q", "x", "y"]
ADDRS = ["&X", "&Y", "&z", "&p"]
pairs = st.frozensets(st.tuples(st.sampled_from(PTRS), st.sampled_from(ADDRS)), max_size=8)
names = st.frozensets(st.sampled_from(PTRS + ADDRS), max_size=4)


def test_pair_orientation():
    assert make_pair("&X", "x") == ("x", "&X")
    assert make_pair("x", "&X") == ("x", "&X")


def test_vals_and_pointees():
    A = frozenset({("x", "&X"), ("y", "&X"), ("y", "&Y")})
    assert pointees(A, "y") == {"&X", "&Y"}
    assert vals(A, ["x", "&Z"]) == {"&X", "&Z"}
    assert aliased(A, "x", "y")
    assert not aliased(A, "x", "&Y")


def test_closure_stops_at_addresses():
    A = frozenset({("x", "&X"), ("y", "&X")})
    assert alias_closure(A, {"x"}) == {"x", "&X"}
    assert alias_closure(A, {"&X"}) == {"&X"}


@settings(max_examples=200, deadline=None)
@given(pairs, names)
def test_closure_idempotent_and_extensive(A, X):
    c = alias_closure(A, X)
    assert X <= c
    assert alias_closure(A, c) == c


@settings(max_examples=200, deadline=None)
@given(pairs, pairs, names)
def test_closure_monotone(A, B, X):
    assert alias_closure(A, X) <= alias_closure(A | B, X)


@settings(max_examples=200, deadline=None)
@given(pairs, pairs, names)
def test_restrict_distributes_over_union(A, B, D):
    assert restrict_all(A | B, D) == restrict_all(A, D) | restrict_all(B, D)
    ri, ro = restrict(A, B, D, D)
    assert all(a in D for a, _ in ri | ro)


def test_restrict_universal():
    A = frozenset({("x", "&X")})
    assert restrict_all(A, None) == A
    assert restrict_all(A, set()) == frozenset()


def test_abs_names(fig2):
    A = frozenset({("p", "&z"), ("z", "&X"), ("x", "&X")})
    n = {s.id: s for s in fig2.statements()}
    assert abs_name(n["n15"].lhs, A, fig2) == {"z"}
    assert abs_name(n["n27"].rhs, A, fig2) == {"X.f"}
    assert abs_name(n["n05"].rhs, A, fig2, TBA) == {"&X"}
    assert abs_name(n["n05"].rhs, A, fig2, ASB) == {"&n05"}
    assert abs_name(n["n03"].rhs, A, fig2) == {"&z"}
    # unknown pointee, no name
    assert abs_name(n["n24"].lhs, A, fig2) == frozenset()


def test_object_copy_rejected():
    from ddalias.ir import AccessExpr, DEREF, parse_program
    p = parse_program("class X { }\nfunc main() {\n var x: X*  var a: X\n n1: x = &a\n}\n")
    with pytest.raises(UnsupportedExpr):
        abs_name(AccessExpr(DEREF, var="x"), frozenset(), p, rhs=True)


def test_declared_pointees_and_types(fig2):
    assert declared_pointees("t", fig2) == {"X", "Y", "Z"}
    assert addr_type(fig2, "&Y", TBA) == "Y"
    assert addr_type(fig2, "&n23", ASB) == "Y"
    assert addr_type(fig2, "&z", TBA) is None
    with pytest.raises(UndeclaredVariable):
        declared_pointees("nope", fig2)


def test_rendering():
    assert render_set({"z", "&z"}) == "{&z, z}"
    assert render_pairs({("t", "&Y"), ("X.f", "&Y")}) == "{(X.f,&Y), (t,&Y)}"
    assert render_edge(("X.f", "&Y")) == "X.f→Y"
