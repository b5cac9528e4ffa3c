"""Abstract names, alias relations, closure and restriction.

Names are plain strings: ``x``, ``&x``, ``&X``, ``&n05``, ``X.f``, ``n05.f``, ``a.f``.
An alias relation is a frozenset of points-to pairs ``(ptr, &obj)``. Pointer to
pointer copies are materialized through the source's pointees, so no other
pair shape is ever stored. Membership is symmetric: (a, b) and (b, a) are the
same fact.
"""
from __future__ import annotations

from collections import deque
from functools import lru_cache
from typing import Iterable, Optional

from .ir import (ADDR, ARROW, DEREF, DOT, NEW, NULL, VAR, AccessExpr, ProgramIR,
                 UndeclaredVariable, UnsupportedExpr)

TBA, ASB = "tba", "asb"
EMPTY = frozenset()


def is_addr_name(n: str) -> bool:
    return n.startswith("&")


def strip_addr(n: str) -> str:
    return n[1:] if n.startswith("&") else n


def is_field_name(n: str) -> bool:
    return "." in n and not n.startswith("&")


def field_of(n: str) -> str:
    return n.rsplit(".", 1)[1]


def make_pair(a: str, b: str) -> tuple:
    """Canonical storage orientation: pointer side first."""
    if is_addr_name(a) and not is_addr_name(b):
        return (b, a)
    return (a, b)


def sort_pair(p: tuple) -> tuple:
    return tuple(sorted(p))


@lru_cache(maxsize=65536)
def pts_index(A: frozenset) -> dict:
    """ptr -> frozenset of address names, plus reverse adjacency for closure."""
    fwd, rev = {}, {}
    for a, b in A:
        fwd.setdefault(a, set()).add(b)
        rev.setdefault(b, set()).add(a)
    return ({k: frozenset(v) for k, v in fwd.items()}, {k: frozenset(v) for k, v in rev.items()})


def pointees(A: frozenset, n: str) -> frozenset:
    return pts_index(A)[0].get(n, EMPTY)


def vals(A: frozenset, names: Iterable[str]) -> frozenset:
    """Address names that the given names evaluate to under A."""
    fwd = pts_index(A)[0]
    out = set()
    for n in names:
        if is_addr_name(n):
            out.add(n)
        else:
            out |= fwd.get(n, EMPTY)
    return frozenset(out)


def alias_closure(A: frozenset, X: Iterable[str]) -> frozenset:
    """Names reachable from X over symmetric A edges, X included.

    Address nodes are leaves: reaching &X from x does not pull in every other
    pointer to X. That keeps the result idempotent and stops demand from
    leaking across unrelated pointers that merely share a pointee.
    """
    fwd, rev = pts_index(A)
    seen = set(X)
    todo = deque(n for n in seen if not is_addr_name(n))
    while todo:
        n = todo.popleft()
        for m in fwd.get(n, EMPTY) | rev.get(n, EMPTY):
            if m not in seen:
                seen.add(m)
                if not is_addr_name(m):
                    todo.append(m)
    return frozenset(seen)


def aliased(A: frozenset, a: str, b: str) -> bool:
    """True when a and b may denote the same location (or the same value)."""
    if a == b:
        return True
    va = vals(A, [a])
    vb = vals(A, [b])
    return b in va or a in vb or bool(va & vb)


def restrict(ain: frozenset, aout: frozenset, din: Iterable[str], dout: Iterable[str]) -> tuple:
    """Project (ain, aout) onto (din, dout); the demanded name sits in the first slot."""
    return _restrict_one(ain, frozenset(din)), _restrict_one(aout, frozenset(dout))


def _restrict_one(A: frozenset, D: frozenset) -> frozenset:
    out = set()
    for a, b in A:
        if a in D:
            out.add((a, b))
        if b in D:
            out.add((b, a))
    return frozenset(out)


def restrict_all(A: frozenset, D: Optional[Iterable[str]]) -> frozenset:
    """Pairs of A touching D, stored orientation. D=None means universal."""
    if D is None:
        return A
    D = frozenset(D)
    return frozenset(p for p in A if p[0] in D or p[1] in D)


# --- naming ----------------------------------------------------------------

def object_name(p: ProgramIR, var: str, abstraction: str) -> str:
    """Name of a stack object variable (non-pointer) without the '&'."""
    return p.var_type(var).cls if abstraction == TBA else var


def addr_name(p: ProgramIR, var: str, abstraction: str) -> str:
    if p.var_type(var).depth == 0:
        return "&" + object_name(p, var, abstraction)
    return "&" + var


def new_name(e: AccessExpr, abstraction: str) -> str:
    return "&" + (e.type_arg if abstraction == TBA else e.site)


def derefs_through_pointer(p: ProgramIR, e: AccessExpr) -> bool:
    """Deref, Arrow, and Dot on a pointer variable (reference semantics)."""
    if e.kind in (DEREF, ARROW):
        return True
    return e.kind == DOT and p.var_type(e.var).depth > 0


def abs_name(e: AccessExpr, A: frozenset, p: ProgramIR, abstraction: str = TBA,
             store: Optional[set] = None, rhs: bool = False) -> frozenset:
    """Abstract names of an access expression under A.

    store is the object store (tba only): object variables outside it name nothing.
    rhs=True rejects *y that would copy a whole object.
    """
    k = e.kind
    if k == VAR:
        return frozenset({e.var})
    if k == NULL:
        return EMPTY
    if k == NEW:
        return frozenset({new_name(e, abstraction)})
    if k == ADDR:
        if p.var_type(e.var).depth == 0 and store is not None and e.var not in store:
            return EMPTY
        return frozenset({addr_name(p, e.var, abstraction)})
    if k == DEREF:
        if rhs and p.var_type(e.var).depth < 2:
            raise UnsupportedExpr(f"*{e.var} copies an object")
        return frozenset(strip_addr(a) for a in pointees(A, e.var))
    if derefs_through_pointer(p, e):  # x->f, or x.f with x a reference
        return frozenset(strip_addr(a) + "." + e.field for a in pointees(A, e.var))
    # a.f on an object variable
    if store is not None and e.var not in store:
        return EMPTY
    return frozenset({object_name(p, e.var, abstraction) + "." + e.field})


def objects_named(e: AccessExpr, p: ProgramIR) -> set:
    """Object variables an expression names directly (&a, a.f)."""
    if e.kind in (ADDR, DOT) and p.var_type(e.var).depth == 0:
        return {e.var}
    return set()


def declared_pointees(x: str, p: ProgramIR) -> frozenset:
    """Declared class of x's pointee plus its descendants."""
    if x not in p.vars:
        raise UndeclaredVariable(x)
    return p.descendants(p.vars[x].type.cls)


def addr_type(p: ProgramIR, n: str, abstraction: str) -> Optional[str]:
    """Class of the object an address name denotes, None for pointer cells."""
    o = strip_addr(n)
    if o in p.classes and abstraction == TBA:
        return o
    if o in p.sites:
        return p.sites[o]
    if o in p.vars and p.vars[o].type.depth == 0:
        return p.vars[o].type.cls
    return None


def universe_size(p: ProgramIR, abstraction: str) -> int:
    objs = (len(p.classes) if abstraction == TBA else len(p.sites)) + \
        sum(1 for v in p.vars.values() if v.type.depth == 0)
    nfields = sum(len(c.fields) for c in p.classes.values())
    return max(1, 2 * len(p.vars) + objs * (1 + nfields))


def render_set(names: Iterable[str]) -> str:
    return "{" + ", ".join(sorted(names)) + "}"


def render_pairs(pairs: Iterable[tuple]) -> str:
    ps = sorted((make_pair(*q) for q in pairs), key=sort_pair)
    return "{" + ", ".join(f"({a},{b})" for a, b in ps) + "}"


def render_edge(pair: tuple) -> str:
    a, b = pair
    return f"{a}→{strip_addr(b)}"
