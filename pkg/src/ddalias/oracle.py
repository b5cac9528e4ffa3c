"""Independent checks: path enumeration, per-path fixpoints, a concrete interpreter."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .absdomain import (EMPTY, TBA, abs_name, addr_name, aliased, alias_closure,
                        derefs_through_pointer, new_name, object_name, vals)
from .ir import (ADDR, ARROW, DEREF, DOT, NEW, NULL, VAR, AccessExpr, IRError, ProgramIR,
                 render_expr)
from .solver import SolveResult, solve
from .transfer import EX, Ctx, VariantConfig, alias_transfer, demand_transfer


class PathBudgetExceeded(IRError):
    kind = "PathBudgetExceeded"


class NullDereference(IRError):
    kind = "NullDereference"


class UseBeforeDefine(IRError):
    kind = "UseBeforeDefine"


class OracleScopeError(IRError):
    kind = "OracleScope"


@dataclass(frozen=True)
class QualifiedPath:
    forward: tuple   # start .. pred of pivot
    pivot: str
    backward: tuple  # succ of pivot .. end

    @property
    def nodes(self) -> tuple:
        return self.forward + (self.pivot,) + self.backward

    @property
    def index(self) -> int:
        return len(self.forward)


def _single_cfg(p: ProgramIR):
    if len(p.functions) != 1:
        raise OracleScopeError("path oracles handle single-function programs only")
    return p.entry_cfg


def _stmt_count(walk) -> int:
    return len(walk) - 2  # start and end are not statements


def enumerate_walks(p: ProgramIR, max_len: int, cap: int = 200000) -> list:
    """All start-to-end walks with at most max_len statements."""
    cfg = _single_cfg(p)
    out, stack = [], [(cfg.start,)]
    while stack:
        w = stack.pop()
        n = w[-1]
        if n == cfg.end:
            out.append(w)
            if len(out) > cap:
                raise PathBudgetExceeded(f"more than {cap} paths")
            continue
        for m in reversed(cfg.succ[n]):
            nw = w + (m,)
            if m == cfg.end or _stmt_count(nw) + 1 <= max_len:
                stack.append(nw)
    return out


def enumerate_paths(p: ProgramIR, pivot: str, max_len: int, cap: int = 200000) -> list:
    """Every occurrence of pivot on every bounded walk."""
    out = set()
    for w in enumerate_walks(p, max_len, cap):
        for i, n in enumerate(w):
            if n == pivot:
                out.add(QualifiedPath(w[:i], n, w[i + 1:]))
    return sorted(out, key=lambda q: (len(q.nodes), q.nodes, q.index))


def path_fixpoint(p: ProgramIR, seq: tuple, cfg: VariantConfig) -> list:
    """States per occurrence along one walk, iterated to a local fixpoint."""
    stmts = p.entry_cfg.stmts
    n = len(seq)
    ex = cfg.variant == EX
    din = [EMPTY] * n
    dout = [EMPTY] * n
    ain = [EMPTY] * n
    aout = [EMPTY] * n
    ctx = Ctx(p, cfg)
    changed = True
    while changed:
        changed = False
        if not ex:
            for i in range(n - 1, -1, -1):
                do = din[i + 1] if i + 1 < n else EMPTY
                dp = alias_closure(aout[i], do)
                di = din[i] | demand_transfer(stmts[seq[i]], do, dp, ain[i], ctx)
                if do != dout[i] or di != din[i]:
                    dout[i], din[i] = dout[i] | do, di
                    changed = True
        for i in range(n):
            ai = ain[i] | (aout[i - 1] if i > 0 else EMPTY)
            ao = aout[i] | alias_transfer(stmts[seq[i]], None if ex else dout[i], ai, ctx)
            if ai != ain[i] or ao != aout[i]:
                ain[i], aout[i] = ai, ao
                changed = True
        if ctx.store_grew:
            ctx.store_grew = False
            changed = True
    return [(din[i], dout[i], ain[i], aout[i]) for i in range(n)]


def mop_along_path(p: ProgramIR, rho: QualifiedPath, cfg: VariantConfig) -> tuple:
    return path_fixpoint(p, rho.nodes, cfg)[rho.index]


def mop_meet(p: ProgramIR, pivot: str, max_len: int, cfg: VariantConfig) -> tuple:
    acc = [EMPTY] * 4
    for rho in enumerate_paths(p, pivot, max_len):
        st = mop_along_path(p, rho, cfg)
        acc = [a | b for a, b in zip(acc, st)]
    return tuple(acc)


_COMPONENTS = ("din", "dout", "ain", "aout")


def check_mfp_vs_mop(p: ProgramIR, cfg: VariantConfig, max_len: int,
                     res: Optional[SolveResult] = None) -> list:
    """Every per-path state must sit inside the solver's state at that node."""
    res = res or solve(p, cfg)
    viol = []
    for w in enumerate_walks(p, max_len):
        states = path_fixpoint(p, w, cfg)
        for i, node in enumerate(w):
            mfp = res.states[node].as_tuple()
            for k, name in enumerate(_COMPONENTS):
                extra = states[i][k] - mfp[k]
                if extra:
                    viol.append({"check": "mfp-contains-mop", "node": node,
                                 "witness": {"path": list(w), "occurrence": i, "component": name},
                                 "expected": sorted(map(str, mfp[k])),
                                 "actual": sorted(map(str, states[i][k]))})
    return viol


# --- concrete execution ------------------------------------------------------

UNDEF = object()
NULLV = "null"


class Machine:
    """Concrete memory for straight-line code. Locations: variable names, l1, l2, ..."""

    def __init__(self, p: ProgramIR):
        self.p = p
        self.cells = {}        # (loc, None) for variable cells, (loc, field) for object fields
        self.objclass = {}     # object location -> class
        self.objsite = {}      # heap location -> site
        self.latest = {}       # site -> most recent object
        self.nheap = 0
        for v, info in p.vars.items():
            if info.type.depth == 0:
                self.objclass[v] = info.type.cls

    def _read(self, cell, what):
        v = self.cells.get(cell, UNDEF)
        if v is UNDEF:
            raise UseBeforeDefine(f"read of undefined {what}")
        return v

    def _ptr(self, var):
        v = self._read((var, None), var)
        if v == NULLV:
            raise NullDereference(f"{var} is null")
        return v

    def cell_of(self, e: AccessExpr):
        k = e.kind
        if k == VAR:
            return (e.var, None)
        if k == DEREF:
            return (self._ptr(e.var), None)
        if k == ARROW or (k == DOT and self.p.var_type(e.var).depth > 0):
            return (self._ptr(e.var), e.field)
        if k == DOT:
            return (e.var, e.field)
        raise ValueError(f"{k} has no cell")

    def value(self, e: AccessExpr, allocate=False):
        k = e.kind
        if k == NULL:
            return NULLV
        if k == ADDR:
            return e.var
        if k == NEW:
            if not allocate:
                return self.latest.get(e.site, UNDEF)
            self.nheap += 1
            loc = f"l{self.nheap}"
            self.objclass[loc] = e.type_arg
            self.objsite[loc] = e.site
            self.latest[e.site] = loc
            return loc
        return self._read(self.cell_of(e), render_expr(e))

    def exec(self, st):
        if st.kind == "assign":
            cell = self.cell_of(st.lhs)
            self.cells[cell] = self.value(st.rhs, allocate=True)
        elif st.kind == "vcall":
            self._ptr(st.receiver)
        elif st.kind in ("call", "fcall"):
            raise OracleScopeError("calls are outside the concrete interpreter")

    def peek(self, e: AccessExpr):
        """Value of e, or UNDEF when it can't be evaluated here."""
        try:
            return self.value(e)
        except (NullDereference, UseBeforeDefine):
            return UNDEF

    def cell_name(self, cell, abstraction: str) -> str:
        loc, f = cell
        if f is None:
            return loc
        if loc in self.objsite:
            base = self.objclass[loc] if abstraction == TBA else self.objsite[loc]
        else:
            base = object_name(self.p, loc, abstraction)
        return f"{base}.{f}"

    def addr_of(self, loc, abstraction: str) -> str:
        """Address name of a concrete location."""
        if loc in self.objsite:
            return "&" + (self.objclass[loc] if abstraction == TBA else self.objsite[loc])
        return addr_name(self.p, loc, abstraction)

    def concrete_name(self, e: AccessExpr, abstraction: str) -> Optional[str]:
        """Abstract name of the location e actually denotes."""
        if e.kind == ADDR:
            return addr_name(self.p, e.var, abstraction)
        if e.kind == NEW:
            return new_name(e, abstraction)
        if e.kind == NULL:
            return None
        try:
            return self.cell_name(self.cell_of(e), abstraction)
        except (NullDereference, UseBeforeDefine):
            return None


def program_exprs(p: ProgramIR) -> list:
    seen, out = set(), []
    for s in p.statements():
        es = list(s.exprs())
        if s.kind == "vcall":
            es.append(AccessExpr(VAR, var=s.receiver))
        for e in es:
            if e.kind != NULL and e not in seen:
                seen.add(e)
                out.append(e)
    return out


def run_concrete(p: ProgramIR) -> list:
    """Execute a straight-line program; returns (node, machine snapshot pairs) per statement."""
    if not p.is_straight_line():
        raise OracleScopeError("concrete execution needs a straight-line program")
    m = Machine(p)
    exprs = program_exprs(p)
    trace = []
    for s in p.functions[p.entry].stmts:
        m.exec(s)
        vals = {e: m.peek(e) for e in exprs}
        pairs = set()
        for i, a in enumerate(exprs):
            va = vals[a]
            if va is UNDEF or va == NULLV:
                continue
            for b in exprs[i + 1:]:
                if vals[b] == va:
                    pairs.add((a, b))
        trace.append((s.id, frozenset(pairs), _snapshot(m)))
    return trace


def _snapshot(m: Machine):
    snap = Machine.__new__(Machine)
    snap.__dict__ = {k: (dict(v) if isinstance(v, dict) else v) for k, v in m.__dict__.items()}
    return snap


def check_soundness(p: ProgramIR, cfg: VariantConfig, res: Optional[SolveResult] = None) -> list:
    """Every demanded expression must name its real cell and hold its real pointee.

    For a concrete alias (a, b) with both sides demanded the two abstract cells
    must also be aliased. Address and allocation expressions are never the
    demanded side: &C under tba would otherwise drag in every C object. An
    expression read through a pointer only counts once that pointer is demanded.
    """
    res = res or solve(p, cfg)
    ab = cfg.abstraction
    viol = []
    exprs = [e for e in program_exprs(p) if e.kind not in (ADDR, NEW, NULL)]

    def report(node, witness, expected, A):
        viol.append({"check": "soundness", "node": node, "witness": witness,
                     "expected": expected, "actual": sorted(f"({x},{y})" for x, y in A)})

    for node, pairs, m in run_concrete(p):
        st = res.states[node]
        A = st.aout
        D = None if cfg.variant == EX else st.dout
        demanded = {}
        for e in exprs:
            an = abs_name(e, A, p, ab)
            if not an or (D is not None and not an <= D):
                continue
            # names read through an undemanded pointer carry no promise
            if D is not None and derefs_through_pointer(p, e) and e.var not in D:
                continue
            demanded[e] = an
            ca = m.concrete_name(e, ab)
            if ca is None:
                continue
            if ca not in an:
                report(node, f"{render_expr(e)} names {ca}, analysis has {sorted(an)}", [ca], A)
                continue
            val = m.peek(e)
            if val is UNDEF or val == NULLV:
                continue
            target = m.addr_of(val, ab)
            if target not in vals(A, [ca]):
                report(node, f"{render_expr(e)} points to {target}, missing from analysis", [ca, target], A)
        for a, b in pairs:
            if a in demanded and b in demanded:
                ca, cb = m.concrete_name(a, ab), m.concrete_name(b, ab)
                if ca and cb and not aliased(A, ca, cb):
                    report(node, f"{render_expr(a)} == {render_expr(b)}: {ca} and {cb} not aliased",
                           [ca, cb], A)
    return viol
