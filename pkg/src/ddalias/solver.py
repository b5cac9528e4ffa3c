"""Bidirectional worklist solver with on-the-fly virtual call resolution."""
from __future__ import annotations

import dataclasses
import heapq
import random
import time
from dataclasses import dataclass, field
from typing import Optional

from .absdomain import (EMPTY, addr_type, alias_closure, pointees, restrict_all, universe_size)
from .ir import MethodNotInHierarchy, ProgramIR, Statement, Supergraph, build_supergraph
from .transfer import (EX, JD, Ctx, VariantConfig, alias_transfer, demand_transfer,
                       validate_jd)


class NonTermination(RuntimeError):
    kind = "NonTermination"


@dataclass
class NodeState:
    din: frozenset = EMPTY
    dout: frozenset = EMPTY
    ain: frozenset = EMPTY
    aout: frozenset = EMPTY

    def as_tuple(self):
        return (self.din, self.dout, self.ain, self.aout)


@dataclass
class SolveResult:
    program: ProgramIR
    config: VariantConfig
    graph: Supergraph
    states: dict
    call_graph: dict
    iterations: dict
    store: Optional[frozenset] = None
    used_pointers: frozenset = EMPTY
    rounds: list = field(default_factory=list)  # per round: {node: (dout, aout)}
    ms: float = 0.0

    def aliases(self, n):
        return self.states[n].aout

    def demanded(self, n, side="out") -> Optional[frozenset]:
        """Demand at a point, None meaning universal (Ex)."""
        if self.config.variant == EX:
            return None
        return self.states[n].dout if side == "out" else self.states[n].din

    def restricted(self, n, side="out") -> frozenset:
        st = self.states[n]
        A = st.aout if side == "out" else st.ain
        return restrict_all(A, self.demanded(n, side))


class _Worklist:
    """Deduplicating priority worklist; a seeded rng pops members at random instead."""

    def __init__(self, rng: Optional[random.Random], rank: dict, backward: bool = False):
        self.heap = []
        self.members = set()
        self.rng = rng
        self.sign = -1 if backward else 1
        self.rank = rank

    def key(self, n):
        return self.sign * self.rank.get(n, len(self.rank))

    def push(self, n):
        if n not in self.members:
            self.members.add(n)
            heapq.heappush(self.heap, (self.key(n), n))

    def reorder(self):
        self.heap = [(self.key(n), n) for _, n in self.heap]
        heapq.heapify(self.heap)

    def pop(self):
        if self.rng is not None and len(self.heap) > 1:
            i = self.rng.randrange(len(self.heap))
            self.heap[i], self.heap[-1] = self.heap[-1], self.heap[i]
            _, n = self.heap.pop()
            heapq.heapify(self.heap)
        else:
            _, n = heapq.heappop(self.heap)
        self.members.discard(n)
        return n

    def __bool__(self):
        return bool(self.heap)


def rpo_rank(g: Supergraph) -> dict:
    """Reverse postorder index from the start node; unreachable nodes go last."""
    post, seen = [], {g.start}
    stack = [(g.start, iter(g.succ[g.start]))]
    while stack:
        n, it = stack[-1]
        for m in it:
            if m not in seen:
                seen.add(m)
                stack.append((m, iter(g.succ[m])))
                break
        else:
            stack.pop()
            post.append(n)
    order = post[::-1] + [n for n in g.nodes if n not in seen]
    return {n: i for i, n in enumerate(order)}


def resolve_virtual(st: Statement, ain: frozenset, p: ProgramIR, abstraction: str) -> frozenset:
    """Callees 'C::m' for the receiver's pointee types, walking up to the defining class."""
    out = set()
    for a in pointees(ain, st.receiver):
        t = addr_type(p, a, abstraction)
        if t is None:
            continue
        out.add(defining_class(p, t, st.method) + "::" + st.method)
    return frozenset(out)


def defining_class(p: ProgramIR, cls: str, method: str) -> str:
    for c in p.ancestors(cls):
        if method in p.classes[c].virtuals:
            return c
    raise MethodNotInHierarchy(f"{method} not defined at or above {cls}")


def _object_users(g: Supergraph, p: ProgramIR) -> list:
    from .absdomain import objects_named
    out = []
    for n in g.nodes:
        st = g.stmt[n]
        if any(objects_named(e, p) for e in st.exprs()):
            out.append(n)
    return out


def solve(p: ProgramIR, cfg: VariantConfig = VariantConfig(), seed: Optional[int] = None,
          trace: bool = False, budget: Optional[int] = None) -> SolveResult:
    """Algorithm 1 over the supergraph. Ex dispatches to solve_ex."""
    if cfg.variant == EX:
        return solve_ex(p, cfg, seed=seed, trace=trace, budget=budget)
    if cfg.variant == JD:
        validate_jd(p)
    t0 = time.perf_counter()
    g = build_supergraph(p)
    ctx = Ctx(p, cfg)
    rng = random.Random(seed) if seed is not None else None
    S = {n: NodeState() for n in g.nodes}
    cg = {n: set() for n in g.nodes if g.stmt[n].kind == "vcall"}
    rank = rpo_rank(g)
    dwl, awl = _Worklist(rng, rank, backward=True), _Worklist(rng, rank)
    for n in g.nodes:
        if g.stmt[n].kind == "vcall":
            dwl.push(n)
    awl.push(g.start)
    limit = budget or 64 * len(g.nodes) * universe_size(p, cfg.abstraction)
    visits = {"demand": 0, "alias": 0}
    rounds = []
    users = None

    def both(ns):
        for m in ns:
            dwl.push(m)
            awl.push(m)

    def check_budget():
        if visits["demand"] + visits["alias"] > limit:
            raise NonTermination(f"visit budget {limit} exceeded")

    def on_store_growth():
        nonlocal users
        if ctx.store_grew:
            ctx.store_grew = False
            if users is None:
                users = _object_users(g, p)
            both(users)

    while dwl or awl:
        while dwl:
            n = dwl.pop()
            visits["demand"] += 1
            check_budget()
            st = S[n]
            dout = frozenset().union(*(S[s].din for s in g.succ[n])) if g.succ[n] else EMPTY
            dp = alias_closure(st.aout, dout)
            din = st.din | demand_transfer(g.stmt[n], dout, dp, st.ain, ctx)
            st.dout = st.dout | dout
            if din != st.din:
                st.din = din
                both(g.pred[n])
            on_store_growth()
        while awl:
            n = awl.pop()
            visits["alias"] += 1
            check_budget()
            st = S[n]
            ain = frozenset().union(*(S[q].aout for q in g.pred[n])) if g.pred[n] else EMPTY
            st.ain = st.ain | ain
            stmt = g.stmt[n]
            aout = st.aout | alias_transfer(stmt, st.dout, st.ain, ctx)
            if aout != st.aout:
                st.aout = aout
                both(g.succ[n])
                dwl.push(n)
            if stmt.kind == "vcall":
                if _grow_calls(g, p, cfg, ctx, S, cg, n, both):
                    rank.clear()
                    rank.update(rpo_rank(g))
                    dwl.reorder()
                    awl.reorder()
            on_store_growth()
        if trace:
            rounds.append({n: (S[n].dout, S[n].aout) for n in g.nodes})

    return SolveResult(p, cfg, g, S, {k: frozenset(v) for k, v in cg.items()},
                       {"demand": visits["demand"], "alias": visits["alias"],
                        "visits": visits["demand"] + visits["alias"], "rounds": _nonempty(rounds)},
                       frozenset(ctx.store) if ctx.store is not None else None, ctx.ups,
                       _trim(rounds), (time.perf_counter() - t0) * 1000)


def _grow_calls(g, p, cfg, ctx, S, cg, n, both) -> bool:
    """Splice newly resolved callees; True when the graph grew."""
    stmt = g.stmt[n]
    grew = False
    for callee in resolve_virtual(stmt, S[n].ain, p, cfg.abstraction) - cg[n]:
        cg[n].add(callee)
        new = g.splice_virtual(stmt, callee)
        for m in new:
            S.setdefault(m, NodeState())
        if new:
            grew = True
            fn = p.functions[callee]
            both(new + [n, fn.cfg.start, fn.cfg.end])
    return grew


def _trim(rounds):
    """Drop trailing rounds that add nothing."""
    while len(rounds) > 1 and rounds[-1] == rounds[-2]:
        rounds.pop()
    return rounds


def _nonempty(rounds):
    return len(_trim(list(rounds))) if rounds else 0


def solve_ex(p: ProgramIR, cfg: VariantConfig = VariantConfig(variant=EX), seed: Optional[int] = None,
             trace: bool = False, budget: Optional[int] = None) -> SolveResult:
    """Alias half only, every name demanded everywhere."""
    if cfg.variant != EX:
        cfg = dataclasses.replace(cfg, variant=EX)
    t0 = time.perf_counter()
    g = build_supergraph(p)
    ctx = Ctx(p, cfg)
    rng = random.Random(seed) if seed is not None else None
    S = {n: NodeState() for n in g.nodes}
    cg = {n: set() for n in g.nodes if g.stmt[n].kind == "vcall"}
    rank = rpo_rank(g)
    awl = _Worklist(rng, rank)
    for n in g.nodes:
        awl.push(n)
    limit = budget or 64 * len(g.nodes) * universe_size(p, cfg.abstraction)
    visits = 0
    users = None

    def both(ns):
        for m in ns:
            awl.push(m)

    while awl:
        n = awl.pop()
        visits += 1
        if visits > limit:
            raise NonTermination(f"visit budget {limit} exceeded")
        st = S[n]
        ain = frozenset().union(*(S[q].aout for q in g.pred[n])) if g.pred[n] else EMPTY
        st.ain = st.ain | ain
        stmt = g.stmt[n]
        aout = st.aout | alias_transfer(stmt, None, st.ain, ctx)
        if aout != st.aout:
            st.aout = aout
            both(g.succ[n])
        if stmt.kind == "vcall":
            if _grow_calls(g, p, cfg, ctx, S, cg, n, both):
                rank.clear()
                rank.update(rpo_rank(g))
                awl.reorder()
        if ctx.store_grew:
            ctx.store_grew = False
            if users is None:
                users = _object_users(g, p)
            both(users)
    rounds = [{n: (EMPTY, S[n].aout) for n in g.nodes}] if trace else []
    return SolveResult(p, cfg, g, S, {k: frozenset(v) for k, v in cg.items()},
                       {"demand": 0, "alias": visits, "visits": visits, "rounds": 1},
                       frozenset(ctx.store) if ctx.store is not None else None, ctx.ups,
                       rounds, (time.perf_counter() - t0) * 1000)


def fixpoint_violations(res: SolveResult) -> list:
    """Re-apply every transfer once; nodes whose state would still grow."""
    p, cfg, g, S = res.program, res.config, res.graph, res.states
    ctx = Ctx(p, cfg)
    if ctx.store is not None and res.store is not None:
        ctx.store |= res.store
    ex = cfg.variant == EX
    bad = []
    for n in g.nodes:
        st, stmt = S[n], g.stmt[n]
        ain = frozenset().union(*(S[q].aout for q in g.pred[n]))
        ok = ain == st.ain and alias_transfer(stmt, None if ex else st.dout, st.ain, ctx) <= st.aout
        if not ex:
            dout = frozenset().union(*(S[s].din for s in g.succ[n]))
            ok = ok and dout == st.dout and \
                demand_transfer(stmt, dout, alias_closure(st.aout, dout), st.ain, ctx) <= st.din
        if stmt.kind == "vcall":
            ok = ok and resolve_virtual(stmt, st.ain, p, cfg.abstraction) == res.call_graph.get(n, EMPTY)
        if not ok:
            bad.append(n)
    if ctx.store_grew:
        bad.append("<store>")
    return bad


def diagnostics_trace(res: SolveResult) -> list:
    """Rows (stmt id, text, [(new demand, new edges) per round]) for the entry function."""
    from .ir import render_stmt
    p = res.program
    fn = p.functions[p.entry]
    rows = []
    for s in fn.stmts:
        cells = []
        prev_d, prev_a = EMPTY, EMPTY
        for snap in res.rounds:
            d, a = snap.get(s.id, (EMPTY, EMPTY))
            if s.kind == "assign":
                cells.append((d - prev_d, a - prev_a))
            else:
                cells.append(None)
            prev_d, prev_a = d, a
        rows.append((s.id, render_stmt(s, lambda v: p.vars[v].raw), cells))
    return rows
