"""Virtual call resolution and precision metrics."""
from __future__ import annotations

from dataclasses import dataclass, field

from .absdomain import addr_type, declared_pointees, is_addr_name, restrict
from .ir import MethodNotInHierarchy, ProgramIR
from .solver import SolveResult, defining_class
from .transfer import EX

METRIC_NOTE = "classTypes counts distinct (demanded pointer name, pointee class) pairs; stack pointees excluded"


@dataclass
class CallInfo:
    id: str
    callees: tuple
    monomorphic: bool
    fallback: bool


@dataclass
class DevirtReport:
    program: str
    variant: str
    abstraction: str
    calls: list
    mono: int
    edges: int
    class_types: int
    nodes: int
    visits: int
    ms: float
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "program": self.program,
            "variant": self.variant,
            "abstraction": self.abstraction,
            "calls": [{"id": c.id, "callees": list(c.callees), "monomorphic": c.monomorphic,
                       "fallback": c.fallback} for c in self.calls],
            "metrics": {"mono": self.mono, "edges": self.edges, "classTypes": self.class_types},
            "perf": {"nodes": self.nodes, "visits": self.visits, "ms": round(self.ms, 3)},
            "notes": self.notes,
        }


def cha_callees(p: ProgramIR, receiver: str, method: str) -> frozenset:
    """Class hierarchy answer: every class the receiver may point to."""
    out = set()
    for c in declared_pointees(receiver, p):
        try:
            out.add(defining_class(p, c, method) + "::" + method)
        except MethodNotInHierarchy:
            pass
    return frozenset(out)


def devirtualize(res: SolveResult, name: str = "") -> DevirtReport:
    p, g = res.program, res.graph
    calls = []
    for n in g.nodes:
        st = g.stmt[n]
        if st.kind != "vcall":
            continue
        callees = res.call_graph.get(n, frozenset())
        fallback = not callees
        if fallback:
            callees = cha_callees(p, st.receiver, st.method)
        cs = tuple(sorted(callees))
        calls.append(CallInfo(n, cs, len(cs) == 1, fallback))
    calls.sort(key=lambda c: c.id)
    return DevirtReport(name, res.config.variant, res.config.abstraction, calls,
                        sum(c.monomorphic for c in calls), sum(len(c.callees) for c in calls),
                        class_type_metric(res), len(g.nodes), res.iterations["visits"], res.ms,
                        [METRIC_NOTE] + (["unresolved-fallback"] if any(c.fallback for c in calls) else []))


def class_type_pairs(res: SolveResult, demand=None) -> frozenset:
    """(pointer name, class) over restricted aliases at every node.

    demand: optional map node -> (din, dout) to restrict with instead of the
    result's own demand (used to compare Ex under Cd's demand).
    """
    p, ab = res.program, res.config.abstraction
    out = set()
    for n, st in res.states.items():
        if demand is not None:
            din, dout = demand.get(n, (frozenset(), frozenset()))
            pairs = restrict(st.ain, st.aout, din, dout)
            pairs = pairs[0] | pairs[1]
        elif res.config.variant == EX:
            pairs = st.ain | st.aout
        else:
            pairs = restrict(st.ain, st.aout, st.din, st.dout)
            pairs = pairs[0] | pairs[1]
        for a, b in pairs:
            if is_addr_name(a) or not is_addr_name(b):
                continue
            t = addr_type(p, b, ab)
            if t is not None:
                out.add((a, t))
    return frozenset(out)


def class_type_metric(res: SolveResult, demand=None) -> int:
    return len(class_type_pairs(res, demand))
