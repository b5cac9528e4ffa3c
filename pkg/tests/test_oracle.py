import pytest

from ddalias.ir import parse_program
from ddalias.oracle import (Machine, NullDereference, OracleScopeError, PathBudgetExceeded, UseBeforeDefine,
                            check_mfp_vs_mop, check_soundness, enumerate_paths, enumerate_walks, mop_meet,
                            run_concrete)
from ddalias.solver import solve
from ddalias.transfer import CD, EX, ID, VariantConfig

from conftest import FIXTURES, load
from test_solver import INTER

STRAIGHT = [f for f in FIXTURES if f != "fig12"]


def test_walks_on_loop():
    p = load("fig12")
    ws = enumerate_walks(p, 9)
    # one trip round the loop: 7 statements, two: 10
    assert [len(w) - 2 for w in ws] == [7]
    assert len(enumerate_walks(p, 10)) == 2
    with pytest.raises(PathBudgetExceeded):
        enumerate_walks(p, 40, cap=3)


def test_qualified_paths_count_occurrences():
    p = load("fig12")
    qs = enumerate_paths(p, "n5", 10)
    # n5 once on the short walk, twice on the long one
    assert len(qs) == 3
    assert all(q.nodes[q.index] == "n5" for q in qs)


def test_scope_is_single_function():
    with pytest.raises(OracleScopeError):
        enumerate_walks(parse_program(INTER), 10)


@pytest.mark.parametrize("name", FIXTURES)
@pytest.mark.parametrize("v", [ID, CD, EX])
def test_mfp_contains_mop(name, v):
    assert check_mfp_vs_mop(load(name), VariantConfig(v), 12) == []


def test_mop_meet_below_mfp():
    p = load("fig12")
    r = solve(p, VariantConfig(ID))
    m = mop_meet(p, "n7", 12, VariantConfig(ID))
    assert all(a <= b for a, b in zip(m, r.states["n7"].as_tuple()))
    assert ("x", "&T2") in m[2]


def test_mop_check_catches_tampering(fig2):
    r = solve(fig2, VariantConfig(ID))
    r.states["n27"].aout = frozenset()
    v = check_mfp_vs_mop(fig2, VariantConfig(ID), 12, r)
    assert v and v[0]["check"] == "mfp-contains-mop" and set(v[0]) >= {"node", "witness", "expected", "actual"}


def test_concrete_locations(fig2):
    tr = run_concrete(fig2)
    assert [t[0] for t in tr] == [s.id for s in fig2.statements()]
    m = tr[-1][2]
    assert m.cells[("t", None)] == "l3"
    assert m.objclass["l3"] == "Y"
    assert run_concrete(fig2)[-1][2].cells == m.cells


def test_concrete_errors():
    p = parse_program("class X { field f: X* }\nfunc main() {\n var x: X*  var y: X*\n n1: x = null\n"
                      " n2: y = x->f\n}\n")
    with pytest.raises(NullDereference):
        run_concrete(p)
    p = parse_program("class X { field f: X* }\nfunc main() {\n var x: X*  var y: X*\n n1: y = x\n}\n")
    with pytest.raises(UseBeforeDefine):
        run_concrete(p)
    with pytest.raises(OracleScopeError):
        run_concrete(load("fig12"))


@pytest.mark.parametrize("name", STRAIGHT)
@pytest.mark.parametrize("v", [ID, CD, EX])
@pytest.mark.parametrize("ab", ["tba", "asb"])
def test_soundness_on_fixtures(name, v, ab):
    assert check_soundness(load(name), VariantConfig(v, ab)) == []


def test_negative_control():
    v = check_soundness(load("fig4b"), VariantConfig(ID, addr_demands=False))
    assert v and v[0]["check"] == "soundness"
    assert "&Y" in v[0]["witness"]


def test_soundness_catches_tampering(fig2):
    r = solve(fig2, VariantConfig(ID))
    r.states["n27"].aout = r.states["n27"].aout - {("t", "&Y")}
    assert check_soundness(fig2, VariantConfig(ID), r)


def test_machine_names(fig2):
    m = Machine(fig2)
    for s in fig2.statements():
        m.exec(s)
    assert m.concrete_name(fig2.stmt("n27").rhs, "tba") == "X.f"
    assert m.concrete_name(fig2.stmt("n27").rhs, "asb") == "n05.f"
