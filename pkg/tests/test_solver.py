import pytest

from ddalias.ir import parse_program
from ddalias.solver import (NonTermination, diagnostics_trace, fixpoint_violations, rpo_rank, solve,
                            solve_ex)
from ddalias.transfer import CD, EX, ID, JD, VariantConfig

from conftest import FIXTURES, load

INTER = """
class A { field f: A* }
class B : A { }
virtual get in A, B

func mk(a: A*) -> A* {
  m1: a->f = new B
  m2: return a
}
func B::get() {
  g1: skip
}
func main() {
  var x: A*  var y: A*  var z: A*
  n1: x = new A
  n2: call mk(x) -> y
  n3: z = y->f
  n4: vcall z->get()
}
"""


@pytest.mark.parametrize("v,want", [(ID, {"Y::vfun"}), (CD, {"Y::vfun", "Z::vfun"}),
                                    (EX, {"Y::vfun", "Z::vfun"})])
def test_fig2_resolution(fig2, v, want):
    assert solve(fig2, VariantConfig(v)).call_graph["n28"] == want


def test_ex_has_no_demand(fig2):
    r = solve(fig2, VariantConfig(EX))
    assert r.demanded("n28") is None
    assert r.iterations["demand"] == 0
    assert solve_ex(fig2).call_graph == r.call_graph


def test_receiver_always_demanded(fig2):
    for v in (ID, CD):
        r = solve(fig2, VariantConfig(v))
        assert "t" in r.states["n28"].din


def test_budget():
    with pytest.raises(NonTermination):
        solve(load("fig2"), VariantConfig(ID), budget=3)
    with pytest.raises(NonTermination):
        solve(load("fig2"), VariantConfig(EX), budget=3)


@pytest.mark.parametrize("name", FIXTURES)
@pytest.mark.parametrize("v", [ID, CD, EX])
def test_fixpoint_and_order(name, v):
    p = load(name)
    base = solve(p, VariantConfig(v))
    assert fixpoint_violations(base) == []
    for seed in (11, 12, 13):
        r = solve(p, VariantConfig(v), seed=seed)
        assert {n: s.as_tuple() for n, s in r.states.items()} == {n: s.as_tuple() for n, s in base.states.items()}


def test_fixpoint_check_catches_tampering(fig2):
    r = solve(fig2, VariantConfig(ID))
    r.states["n27"].aout = frozenset()
    assert "n27" in fixpoint_violations(r) or "n28" in fixpoint_violations(r)


def test_loop_fixture():
    r = solve(load("fig12"), VariantConfig(ID))
    assert r.call_graph["n7"] == {"T2::vfun", "T3::vfun"}


def test_rpo_puts_start_first(fig2):
    g = solve(fig2, VariantConfig(ID)).graph
    rank = rpo_rank(g)
    assert rank[g.start] == 0 and rank["n03"] < rank["n28"] < rank[g.end]


def test_interprocedural():
    p = parse_program(INTER)
    for v in (ID, CD, EX):
        r = solve(p, VariantConfig(v))
        assert r.call_graph["n4"] == {"B::get"}
        assert "B::get:start" in r.graph.nodes
        assert ("y", "&A") in r.states["n3"].ain


def test_jd_on_java_fixture():
    r = solve(load("fig14"), VariantConfig(JD))
    assert r.restricted("n28", "in") == {("t", "&Y")}


def test_trace_rounds_union_to_final(fig2):
    for v in (ID, CD):
        r = solve(fig2, VariantConfig(v), trace=True)
        assert r.iterations["rounds"] == len(r.rounds) == 3
        for sid, _, cells in diagnostics_trace(r):
            if cells[0] is None:
                continue
            edges = frozenset().union(*(c[1] for c in cells))
            demand = frozenset().union(*(c[0] for c in cells))
            assert edges == r.states[sid].aout
            assert demand == r.states[sid].dout


def test_one_statement_trace():
    p = parse_program("class X { }\nvirtual v in X\nfunc main() {\n var x: X*\n n1: x = new X\n}\n")
    r = solve(p, VariantConfig(ID), trace=True)
    rows = diagnostics_trace(r)
    assert len(rows) == 1 and len(rows[0][2]) == 1


def test_no_origin_means_no_work():
    p = parse_program("class X { }\nfunc main() {\n var x: X*\n n1: x = new X\n}\n")
    r = solve(p, VariantConfig(ID))
    assert r.call_graph == {}
    assert all(not s.din and not s.aout for s in r.states.values())
