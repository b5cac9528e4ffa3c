"""Per-statement demand and alias transfer functions for Id, Cd, Ex and Jd.

Ex is Id's alias function with every name demanded, so it has no demand side.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .absdomain import (ASB, EMPTY, TBA, abs_name, addr_name, derefs_through_pointer,
                        field_of, is_addr_name, is_field_name, make_pair, objects_named,
                        pointees, vals)
from .ir import ADDR, ARROW, DEREF, DOT, NEW, VAR, AccessExpr, MalformedStatement, ProgramIR, Statement

ID, CD, EX, JD = "id", "cd", "ex", "jd"
VARIANTS = (ID, CD, EX, JD)


@dataclass(frozen=True)
class VariantConfig:
    variant: str = ID
    abstraction: str = TBA
    object_store: bool = False
    used_pointer_store: bool = False
    addr_demands: bool = True  # off only for the negative control
    strong_update: bool = False  # must-pointee kills through *p, Cd and Ex only

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant}")
        if self.abstraction not in (TBA, ASB):
            raise ValueError(f"unknown abstraction {self.abstraction}")

    @property
    def universal(self) -> bool:
        return self.variant == EX

    @property
    def uses_store(self) -> bool:
        return self.object_store and self.abstraction == TBA


class Ctx:
    """Shared per-solve state: program, config, object store, used-pointer store."""

    def __init__(self, p: ProgramIR, cfg: VariantConfig):
        self.p = p
        self.cfg = cfg
        self.store: Optional[set] = set() if cfg.uses_store else None
        self.ups = used_pointer_store(p)
        self.store_grew = False

    def name(self, e: AccessExpr, A: frozenset, rhs: bool = False) -> frozenset:
        return abs_name(e, A, self.p, self.cfg.abstraction, self.store, rhs=rhs)

    def record(self, st: Statement) -> bool:
        """Add objects named by a relevant statement to the store."""
        if self.store is None:
            return False
        objs = set()
        for e in (st.lhs, st.rhs):
            if e is not None:
                objs |= objects_named(e, self.p)
        new = objs - self.store
        if new:
            self.store |= new
            self.store_grew = True
            return True
        return False


def used_pointer_store(p: ProgramIR) -> frozenset:
    """Variables dereferenced on some left-hand side."""
    out = set()
    for s in p.statements():
        if s.kind == "assign" and derefs_through_pointer(p, s.lhs):
            out.add(s.lhs.var)
    return frozenset(out)


def validate_jd(p: ProgramIR):
    for s in p.statements():
        for e in s.exprs():
            if e.kind == ADDR:
                raise MalformedStatement(f"address-of not permitted under jd (statement {s.id})", s.line, 1)
            if e.kind in (DEREF, ARROW):
                raise MalformedStatement(f"'{e}' not permitted under jd (statement {s.id})", s.line, 1)


def deref_var(p: ProgramIR, e: AccessExpr) -> frozenset:
    return frozenset({e.var}) if derefs_through_pointer(p, e) else EMPTY


# --- demand side -------------------------------------------------------------

def d_kill(st: Statement) -> frozenset:
    if st.kind == "assign" and st.lhs.kind == VAR:
        return frozenset({st.lhs.var})
    return EMPTY


def must_targets(st: Statement, ain: frozenset, ctx: Ctx) -> frozenset:
    """Stack variables *p = r definitely overwrites, for strong updates.

    p -> {z} for a single stack z overwrites z. With no pointee yet p can't
    reach anything, so every compatible address-taken variable goes. Id never
    gets this: it only knows all of p's pointees when p is demanded.
    """
    p, l = ctx.p, st.lhs
    if not ctx.cfg.strong_update or ctx.cfg.variant not in (CD, EX):
        return EMPTY
    if st.kind != "assign" or l.kind != DEREF or not derefs_through_pointer(p, l):
        return EMPTY
    pts = pointees(ain, l.var)
    if not pts:
        return _compatible_taken(p, p.var_type(l.var).deref())
    if len(pts) == 1:
        v = next(iter(pts))[1:]
        if v in p.addr_taken and p.vars[v].type.depth > 0:
            return frozenset({v})
    return EMPTY


def _compatible_taken(p: ProgramIR, target) -> frozenset:
    return frozenset(v for v in p.addr_taken
                     if p.vars[v].type.depth == target.depth and p.related(p.vars[v].type.cls, target.cls))


def addr_expr(e: AccessExpr, p: ProgramIR, abstraction: str = TBA) -> frozenset:
    if e.var is None or e.kind not in (VAR, DEREF, ARROW, DOT, ADDR):
        return EMPTY
    if e.var in p.addr_taken:
        return frozenset({addr_name(p, e.var, abstraction)})
    return EMPTY


def storage_addrs(names, ctx: Ctx) -> frozenset:
    """&x for names living in address-taken storage.

    *q may resolve to an address-taken z, q->f to a field of an address-taken
    object; writes there can hide behind any other pointer to it.
    """
    p, ab = ctx.p, ctx.cfg.abstraction
    out = set()
    for n in names:
        base = n.rsplit(".", 1)[0] if is_field_name(n) else n
        if base in p.addr_taken:
            out.add(addr_name(p, base, ab))
        elif base in p.classes and base in _taken_object_classes(p):
            out.add("&" + base)
    return frozenset(out)


def _taken_object_classes(p: ProgramIR) -> frozenset:
    return frozenset(p.vars[v].type.cls for v in p.addr_taken if p.vars[v].type.depth == 0)


def ld_gen(r: AccessExpr, A: frozenset, ctx: Ctx) -> frozenset:
    p, v = ctx.p, ctx.cfg.variant
    if v == JD:
        if r.kind == DOT:
            return frozenset({r.var}) | ctx.name(r, A, rhs=True)
        if r.kind == VAR:
            return frozenset({r.var})
        return EMPTY
    speculate = v != CD and ctx.cfg.addr_demands
    ax = addr_expr(r, p, ctx.cfg.abstraction) if speculate else EMPTY
    if derefs_through_pointer(p, r):
        names = ctx.name(r, A, rhs=True)
        if speculate:
            ax = ax | storage_addrs(names, ctx)
        return frozenset({r.var}) | ax | names
    if r.kind == ADDR:
        return ctx.name(r, A) if speculate else EMPTY
    if r.var is not None:
        return ctx.name(r, A, rhs=True) | ax
    return EMPTY


def rd_gen(l: AccessExpr, ctx: Ctx) -> frozenset:
    p, v = ctx.p, ctx.cfg.variant
    if v == JD:
        return frozenset({l.var}) if l.kind == DOT else EMPTY
    out = deref_var(p, l)
    if v != CD and ctx.cfg.addr_demands:
        out |= addr_expr(l, p, ctx.cfg.abstraction)
    return out


def _cd_speculation(st: Statement, dout: frozenset, ctx: Ctx) -> frozenset:
    """Demand the base of an indirect store when a compatible name is sought."""
    p, l = ctx.p, st.lhs
    if not derefs_through_pointer(p, l):
        return EMPTY
    if l.kind == DEREF:
        if dout & _compatible_taken(p, p.var_type(l.var).deref()):
            return frozenset({l.var})
        return EMPTY
    for d in dout:
        if is_field_name(d) and field_of(d) == l.field:
            return frozenset({l.var})
    return EMPTY


def _carries_sought_addr(rb: frozenset, dout: frozenset, ain: frozenset) -> bool:
    """r holds an address that some speculative &x demand is looking for."""
    sought = {d for d in dout if is_addr_name(d)}
    return bool(sought) and bool(vals(ain, [n for n in rb if not is_addr_name(n)]) & sought)


def d_gen(st: Statement, dout: frozenset, dout_prime: frozenset, ain: frozenset,
          ctx: Ctx) -> frozenset:
    if st.kind == "vcall":
        return ld_gen(AccessExpr(VAR, var=st.receiver), ain, ctx)
    if st.kind != "assign":
        return EMPTY
    lb = ctx.name(st.lhs, ain)
    rb = ctx.name(st.rhs, ain, rhs=True)
    lin = bool(lb & dout_prime)
    if lin and ctx.record(st):
        rb = ctx.name(st.rhs, ain, rhs=True)
    # a fresh object can't alias anything demanded before it existed
    rin = st.rhs.kind != NEW and bool(rb & dout_prime or _carries_sought_addr(rb, dout, ain))
    out = set()
    if lin:
        out |= ld_gen(st.rhs, ain, ctx)
    if rin:
        out |= rd_gen(st.lhs, ctx)
    if ctx.cfg.variant == CD and not (ctx.cfg.strong_update and pointees(ain, st.lhs.var)):
        out |= _cd_speculation(st, dout, ctx)
    return frozenset(out)


def demand_transfer(st: Statement, dout: frozenset, dout_prime: frozenset, ain: frozenset,
                    ctx: Ctx) -> frozenset:
    """Din = (Dout - Dkill) | Dgen."""
    kill = d_kill(st) | must_targets(st, ain, ctx)
    return (dout - kill) | d_gen(st, dout, dout_prime, ain, ctx)


# --- alias side --------------------------------------------------------------

def a_gen(st: Statement, dout: Optional[frozenset], ain: frozenset, ctx: Ctx) -> frozenset:
    """dout=None means every name is demanded (Ex)."""
    if st.kind != "assign":
        return EMPTY
    lb = ctx.name(st.lhs, ain)
    rb = ctx.name(st.rhs, ain, rhs=True)
    universal = dout is None
    lin = universal or bool(lb & dout)
    if lin and ctx.record(st):
        lb = ctx.name(st.lhs, ain)
        rb = ctx.name(st.rhs, ain, rhs=True)
    fire = lin
    if not fire and rb & dout:
        fire = True
        if ctx.cfg.used_pointer_store and st.lhs.kind == VAR and st.rhs.kind == ADDR:
            fire = st.lhs.var in ctx.ups or st.lhs.var in dout
    if not fire:
        fire = any(not is_addr_name(n) and pointees(ain, n) for n in rb)
    if not fire or not lb:
        return EMPTY
    rv = vals(ain, rb)
    return frozenset(make_pair(a, b) for a in lb for b in rv if a != b)


def a_kill(st: Statement, ain: frozenset = EMPTY, ctx: Optional[Ctx] = None):
    """Predicate over stored pairs, None when nothing is killed."""
    if st.kind == "assign" and st.lhs.kind == VAR:
        x = st.lhs.var
        return lambda pair: pair[0] == x
    xs = must_targets(st, ain, ctx) if ctx is not None else EMPTY
    if xs:
        return lambda pair: pair[0] in xs
    return None


def alias_transfer(st: Statement, dout: Optional[frozenset], ain: frozenset, ctx: Ctx) -> frozenset:
    """Aout = (Ain - Akill) | Agen."""
    gen = a_gen(st, dout, ain, ctx)
    k = a_kill(st, ain, ctx)
    base = ain if k is None else frozenset(q for q in ain if not k(q))
    return base | gen if gen else base
