import json

import pytest

from ddalias.devirt import class_type_metric, class_type_pairs, devirtualize
from ddalias.ir import parse_program
from ddalias.randprog import random_ir
from ddalias.solver import solve
from ddalias.transfer import CD, EX, ID, VariantConfig

from conftest import FIXTURES, load


def report(p, v, **kw):
    return devirtualize(solve(p, VariantConfig(v, **kw)), "t")


def test_fig2_reports(fig2):
    i, e = report(fig2, ID), report(fig2, EX)
    assert (i.mono, i.edges, i.class_types) == (1, 1, 4)
    assert (e.mono, e.edges, e.class_types) == (0, 2, 7)
    assert report(fig2, CD).class_types == 7
    assert i.calls[0].callees == ("Y::vfun",) and not i.calls[0].fallback


def test_class_type_pairs_exclude_stack(fig2):
    pairs = class_type_pairs(solve(fig2, VariantConfig(ID)))
    assert pairs == {("x", "X"), ("z", "X"), ("X.f", "Y"), ("t", "Y")}


def test_json_schema(fig2):
    doc = report(fig2, ID).to_json()
    assert set(doc) >= {"program", "variant", "abstraction", "calls", "metrics", "perf"}
    assert set(doc["metrics"]) == {"mono", "edges", "classTypes"}
    assert set(doc["perf"]) == {"nodes", "visits", "ms"}
    assert set(doc["calls"][0]) == {"id", "callees", "monomorphic", "fallback"}
    json.dumps(doc)


def test_fallback_uses_hierarchy():
    p = parse_program("class A { }\nclass B : A { }\nvirtual m in A\nfunc main() {\n var x: A*\n"
                      " n1: x = null\n n2: vcall x->m()\n}\n")
    r = report(p, ID)
    assert r.calls[0].fallback and r.calls[0].callees == ("A::m",)
    assert "unresolved-fallback" in r.notes


def test_empty_program():
    p = parse_program("class A { }\nfunc main() {\n n1: skip\n}\n")
    r = report(p, ID)
    assert (r.mono, r.edges, r.class_types) == (0, 0, 0)


@pytest.mark.parametrize("name", FIXTURES)
def test_id_never_worse_than_ex(name):
    p = load(name)
    i, e = report(p, ID), report(p, EX)
    assert i.mono >= e.mono and i.edges <= e.edges


def test_metric_chain_on_random_programs():
    for seed in range(40):
        _, p = random_ir(seed, n_stmts=15)
        i = solve(p, VariantConfig(ID))
        c = solve(p, VariantConfig(CD))
        e = solve(p, VariantConfig(EX))
        cd_demand = {n: (s.din, s.dout) for n, s in c.states.items()}
        assert class_type_metric(c) == class_type_metric(e, cd_demand)
        ri, re_ = devirtualize(i), devirtualize(e)
        assert ri.mono >= re_.mono and ri.edges <= re_.edges
        for call in ri.calls + re_.calls:
            for callee in call.callees:
                cls = callee.split("::")[0]
                assert "vfun" in p.classes[cls].virtuals
