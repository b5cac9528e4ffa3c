"""Random IR programs for the property campaigns."""
from __future__ import annotations

import random
from typing import Optional

from .ir import ADDR, ARROW, DEREF, DOT, NEW, NULL, VAR, AccessExpr, Statement, TypeRef, parse_program
from .oracle import Machine, NullDereference, UseBeforeDefine

STRAIGHT, ACYCLIC, CYCLIC = "straight", "acyclic", "cyclic"


class _Env:
    """Just enough of ProgramIR for the interpreter to run while generating."""

    def __init__(self, types):
        self.vars = {v: _Info(t) for v, t in types.items()}

    def var_type(self, v):
        return self.vars[v].type


class _Info:
    def __init__(self, t):
        self.type = t


def random_program(rng: random.Random, n_stmts: int = 20, n_classes: int = 4, max_depth: int = 2,
                   shape: str = STRAIGHT, n_vcalls: Optional[int] = None, n_ptrs: int = 4,
                   n_objs: int = 2, n_pps: int = 2, executable: bool = False,
                   fields=("f", "g")) -> str:
    """IR text for a random well-typed program. executable=True also keeps it null-safe."""
    classes = [f"C{i}" for i in range(max(1, n_classes))]
    parents = {classes[0]: None}
    for i, c in enumerate(classes[1:], 1):
        parents[c] = classes[rng.randrange(i)]
    ptrs = [f"p{i}" for i in range(n_ptrs)]
    pps = [f"q{i}" for i in range(n_pps)] if max_depth >= 2 else []
    objs = [f"o{i}" for i in range(n_objs)]
    types = {v: TypeRef("C0", 1) for v in ptrs}
    types.update({v: TypeRef("C0", 2) for v in pps})
    types.update({v: TypeRef(rng.choice(classes), 0) for v in objs})
    if n_vcalls is None:
        n_vcalls = rng.randint(1, 3)

    env = _Env(types)
    m = Machine(env) if executable else None
    v = lambda x: AccessExpr(VAR, var=x)

    def candidates(label):
        x, y = rng.choice(ptrs), rng.choice(ptrs)
        f = rng.choice(fields)
        o = rng.choice(objs) if objs else None
        new = AccessExpr(NEW, type_arg=rng.choice(classes), site=label)
        opts = [
            (v(x), new), (v(x), new), (v(x), v(y)), (v(x), AccessExpr(ARROW, var=y, field=f)),
            (AccessExpr(ARROW, var=x, field=f), v(y)), (AccessExpr(ARROW, var=x, field=f), new),
            (v(x), AccessExpr(NULL)),
        ]
        if o:
            opts += [(v(x), AccessExpr(ADDR, var=o)), (AccessExpr(DOT, var=o, field=f), v(y)),
                     (AccessExpr(DOT, var=o, field=f), new), (v(x), AccessExpr(DOT, var=o, field=f))]
        if pps:
            q, q2 = rng.choice(pps), rng.choice(pps)
            opts += [(v(q), AccessExpr(ADDR, var=x)), (v(q), AccessExpr(ADDR, var=x)), (v(q), v(q2)),
                     (AccessExpr(DEREF, var=q), v(y)), (v(x), AccessExpr(DEREF, var=q)),
                     (AccessExpr(DEREF, var=q), new)]
        return opts

    n_assign = max(1, n_stmts - n_vcalls)
    vcall_at = sorted(rng.sample(range(1, n_assign + n_vcalls), min(n_vcalls, n_assign + n_vcalls - 1)))
    lines, k, tries = [], 0, 0
    while len(lines) < n_assign + len(vcall_at) and tries < 50 * n_stmts:
        tries += 1
        label = f"n{len(lines) + 1:02d}"
        if len(lines) in vcall_at:
            recv = rng.choice(ptrs)
            st = Statement(label, "vcall", receiver=recv, method="vfun")
        else:
            lhs, rhs = rng.choice(candidates(label))
            st = Statement(label, "assign", lhs=lhs, rhs=rhs)
        if m is not None:
            snap = _save(m)
            try:
                m.exec(st)
            except (NullDereference, UseBeforeDefine):
                _restore(m, snap)
                continue
        lines.append(st)
        k += 1

    out = []
    for c in classes:
        fl = "  ".join(f"field {f}: C0*" for f in fields) if parents[c] is None else ""
        head = f"class {c}" + (f" : {parents[c]}" if parents[c] else "")
        out.append(f"{head} {{ {fl} }}" if fl else f"{head} {{ }}")
    out.append("virtual vfun in " + ", ".join(classes))
    out.append("func main() {")
    out.append("  " + "  ".join(f"var {x}: {t}" for x, t in types.items()))
    for st in lines:
        if st.kind == "vcall":
            out.append(f"  {st.id}: vcall {st.receiver}->vfun()")
        else:
            out.append(f"  {st.id}: {st.lhs} = {st.rhs}")
    edges = _edges(rng, [s.id for s in lines], shape)
    if edges:
        out.append("  edges: " + ", ".join(f"{a}->{b}" for a, b in edges))
    out.append("}")
    return "\n".join(out) + "\n"


def _edges(rng, ids, shape):
    if shape == STRAIGHT or not ids:
        return []
    nodes = ids + ["end"]
    edges = []
    for i, a in enumerate(ids):
        extra = []
        if rng.random() < 0.3:
            extra.append(nodes[min(len(nodes) - 1, i + rng.randint(2, 4))])
        if shape == CYCLIC and i > 0 and rng.random() < 0.15:
            extra.append(ids[rng.randrange(i)])
        extra = [b for b in extra if b != nodes[i + 1]]
        if extra:
            edges.append((a, nodes[i + 1]))
            edges += [(a, b) for b in dict.fromkeys(extra)]
    return edges


def _save(m: Machine):
    return (dict(m.cells), dict(m.objclass), dict(m.objsite), dict(m.latest), m.nheap)


def _restore(m: Machine, snap):
    m.cells, m.objclass, m.objsite, m.latest, m.nheap = (dict(snap[0]), dict(snap[1]), dict(snap[2]),
                                                         dict(snap[3]), snap[4])


def random_ir(seed: int, **kw):
    """(text, parsed program) for a seed."""
    text = random_program(random.Random(seed), **kw)
    return text, parse_program(text)
