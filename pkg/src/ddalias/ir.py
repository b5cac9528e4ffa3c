"""Three-address IR with classes, fields and virtual calls.

Text format, one statement per line::

    class X { field f: X* }
    class Y : X { }
    virtual vfun in X, Y
    func main() {
      var p: X**  var z: X*
      n03: p = &z
      n05: z = new X
      n28: vcall z->vfun()
      edges: n03->n05
    }

Statements without an explicit outgoing edge fall through to the next
statement (the last one falls through to the function's end node).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional


class IRError(Exception):
    kind = "IRError"

    def __init__(self, msg: str, line: Optional[int] = None, col: Optional[int] = None):
        self.msg = msg
        self.line = line
        self.col = col
        where = f" (line {line}, col {col})" if line is not None else ""
        super().__init__(f"{self.kind}: {msg}{where}")


class IRSyntaxError(IRError):
    kind = "SyntaxError"


class UndeclaredClass(IRError):
    kind = "UndeclaredClass"


class UndeclaredVariable(IRError):
    kind = "UndeclaredVariable"


class CyclicHierarchy(IRError):
    kind = "CyclicHierarchy"


class MalformedStatement(IRError):
    kind = "MalformedStatement"


class UnknownCallee(IRError):
    kind = "UnknownCallee"


class UnsupportedExpr(IRError):
    kind = "UnsupportedExpr"


class MethodNotInHierarchy(IRError):
    kind = "MethodNotInHierarchy"


# --- types -----------------------------------------------------------------

@dataclass(frozen=True)
class TypeRef:
    cls: str
    depth: int = 0  # number of '*'

    def __str__(self):
        return self.cls + "*" * self.depth

    def deref(self) -> "TypeRef":
        return TypeRef(self.cls, self.depth - 1)


@dataclass(frozen=True)
class ClassDecl:
    name: str
    parent: Optional[str]
    fields: tuple  # ((fname, TypeRef), ...)
    virtuals: frozenset = frozenset()


VAR, DEREF, ARROW, DOT, ADDR, NEW, NULL = "Var", "Deref", "Arrow", "Dot", "AddrOf", "New", "Null"
LHS_KINDS = frozenset({VAR, DEREF, ARROW, DOT})


@dataclass(frozen=True)
class AccessExpr:
    kind: str
    var: Optional[str] = None
    field: Optional[str] = None
    type_arg: Optional[str] = None
    site: Optional[str] = None

    def __str__(self):
        return render_expr(self)


def render_expr(e: AccessExpr, rename=lambda v: v) -> str:
    k = e.kind
    if k == VAR:
        return rename(e.var)
    if k == DEREF:
        return "*" + rename(e.var)
    if k == ARROW:
        return f"{rename(e.var)}->{e.field}"
    if k == DOT:
        return f"{rename(e.var)}.{e.field}"
    if k == ADDR:
        return "&" + rename(e.var)
    if k == NEW:
        return "new " + e.type_arg
    return "null"


def var_of(a: AccessExpr) -> frozenset:
    if a.kind in (NEW, NULL):
        return frozenset()
    return frozenset({a.var})


def base_of(a: AccessExpr) -> frozenset:
    if a.kind in (DEREF, ARROW):
        return frozenset({a.var})
    return frozenset()


def is_addr(a: AccessExpr) -> bool:
    return a.kind == ADDR


@dataclass(frozen=True)
class Statement:
    id: str
    kind: str  # assign | vcall | call | fcall | skip
    func: str = ""
    lhs: Optional[AccessExpr] = None
    rhs: Optional[AccessExpr] = None
    receiver: Optional[str] = None
    method: Optional[str] = None
    callee: Optional[str] = None
    args: tuple = ()
    ret: Optional[str] = None
    fp: Optional[str] = None
    targets: tuple = ()
    is_return: bool = False
    line: int = 0

    def exprs(self) -> Iterable[AccessExpr]:
        if self.lhs is not None:
            yield self.lhs
        if self.rhs is not None:
            yield self.rhs
        yield from self.args


@dataclass
class Cfg:
    function: str
    nodes: tuple
    succ: dict
    pred: dict
    start: str
    end: str
    stmts: dict  # id -> Statement (start/end included as skip)

    @property
    def edges(self):
        return [(a, b) for a in self.nodes for b in self.succ[a]]


@dataclass
class Function:
    name: str
    params: tuple           # canonical var ids
    ret_type: Optional[TypeRef]
    ret_var: Optional[str]
    locals: dict            # canonical id -> TypeRef (params included, in declaration order)
    stmts: tuple
    explicit_edges: tuple
    cfg: Cfg = None


@dataclass(frozen=True)
class VarInfo:
    raw: str
    func: Optional[str]  # None for globals
    type: TypeRef
    param: bool = False


@dataclass
class ProgramIR:
    classes: dict
    functions: dict
    entry: str
    vars: dict              # canonical id -> VarInfo
    origin: frozenset
    addr_taken: frozenset
    sites: dict             # site id -> class name
    globals_order: tuple = ()
    class_order: tuple = ()
    virtual_decls: tuple = ()  # ((method, (classes...)), ...)
    _desc: dict = field(default_factory=dict, repr=False)

    # hierarchy helpers
    def ancestors(self, c: str) -> list:
        out = []
        while c is not None:
            out.append(c)
            c = self.classes[c].parent
        return out

    def descendants(self, c: str) -> frozenset:
        if c not in self._desc:
            kids = {k for k, d in self.classes.items() if d.parent == c}
            acc = {c}
            for k in kids:
                acc |= self.descendants(k)
            self._desc[c] = frozenset(acc)
        return self._desc[c]

    def related(self, a: str, b: str) -> bool:
        return a in self.descendants(b) or b in self.descendants(a)

    def field_type(self, cls: str, f: str) -> Optional[TypeRef]:
        for c in self.ancestors(cls):
            for fn, ft in self.classes[c].fields:
                if fn == f:
                    return ft
        return None

    def var_type(self, v: str) -> TypeRef:
        try:
            return self.vars[v].type
        except KeyError:
            raise UndeclaredVariable(v) from None

    def is_pointer(self, v: str) -> bool:
        return self.var_type(v).depth > 0

    def statements(self) -> list:
        return [s for fn in self.functions.values() for s in fn.stmts]

    def stmt(self, sid: str) -> Statement:
        for fn in self.functions.values():
            if sid in fn.cfg.stmts:
                return fn.cfg.stmts[sid]
        raise KeyError(sid)

    @property
    def entry_cfg(self) -> Cfg:
        return self.functions[self.entry].cfg

    def is_straight_line(self) -> bool:
        if len(self.functions) != 1:
            return False
        cfg = self.entry_cfg
        if any(len(cfg.succ[n]) > 1 for n in cfg.nodes):
            return False
        if any(s.kind in ("call", "fcall") for s in cfg.stmts.values()):
            return False
        order = [cfg.start] + [s.id for s in self.functions[self.entry].stmts] + [cfg.end]
        return all(cfg.succ[a] == (b,) for a, b in zip(order, order[1:]))

    def display(self, v: str) -> str:
        return v


# --- lexer -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(->|::|[{}():,*&=.;])|([A-Za-z_$][A-Za-z0-9_$]*))")
KEYWORDS = {"class", "field", "virtual", "in", "func", "var", "edges", "new", "null",
            "vcall", "call", "fcall", "targets", "skip", "return"}


@dataclass
class _Tok:
    text: str
    line: int
    col: int


def _lex(text: str) -> list:
    lines = []
    for ln, raw in enumerate(text.splitlines(), 1):
        body = re.split(r"#|//", raw, maxsplit=1)[0]
        toks, pos = [], 0
        while pos < len(body):
            if body[pos:].strip() == "":
                break
            m = _TOKEN.match(body, pos)
            if not m:
                col = pos + len(body[pos:]) - len(body[pos:].lstrip()) + 1
                raise IRSyntaxError(f"unexpected character {body[col - 1]!r}", ln, col)
            t = m.group(1) or m.group(2)
            toks.append(_Tok(t, ln, m.start(1 if m.group(1) else 2) + 1))
            pos = m.end()
        if toks:
            lines.append(toks)
    return lines


class _Cursor:
    def __init__(self, toks, line_no):
        self.toks, self.i, self.line = toks, 0, line_no

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j].text if j < len(self.toks) else None

    def col(self):
        return self.toks[self.i].col if self.i < len(self.toks) else (self.toks[-1].col + 1 if self.toks else 1)

    def take(self, expect=None):
        if self.i >= len(self.toks):
            raise IRSyntaxError(f"unexpected end of line, expected {expect or 'token'}", self.line, self.col())
        t = self.toks[self.i]
        if expect is not None and t.text != expect:
            raise IRSyntaxError(f"expected {expect!r}, got {t.text!r}", t.line, t.col)
        self.i += 1
        return t.text

    def ident(self, what="identifier"):
        t = self.peek()
        if t is None or not re.match(r"[A-Za-z_$]", t):
            raise IRSyntaxError(f"expected {what}, got {t!r}", self.line, self.col())
        return self.take()

    def done(self):
        return self.i >= len(self.toks)

    def end(self):
        if not self.done():
            raise IRSyntaxError(f"unexpected token {self.peek()!r}", self.line, self.col())


# --- parser ----------------------------------------------------------------

@dataclass
class _RawFunc:
    name: str
    params: list
    ret_type: Optional[TypeRef]
    decls: list = field(default_factory=list)     # (name, TypeRef, line)
    stmts: list = field(default_factory=list)     # raw statement tuples
    edges: list = field(default_factory=list)     # (a, b, line)
    line: int = 0


def _parse_type(cur: _Cursor) -> TypeRef:
    cls = cur.ident("type name")
    d = 0
    while cur.peek() == "*":
        cur.take()
        d += 1
    return TypeRef(cls, d)


def _fname(cur: _Cursor) -> str:
    name = cur.ident("function name")
    if cur.peek() == "::":
        cur.take()
        name += "::" + cur.ident("method name")
    return name


def _parse_lhs(cur: _Cursor) -> tuple:
    if cur.peek() == "*":
        cur.take()
        return (DEREF, cur.ident("variable"), None)
    v = cur.ident("variable")
    if cur.peek() == "->":
        cur.take()
        return (ARROW, v, cur.ident("field"))
    if cur.peek() == ".":
        cur.take()
        return (DOT, v, cur.ident("field"))
    return (VAR, v, None)


def _parse_rhs(cur: _Cursor) -> tuple:
    t = cur.peek()
    if t == "&":
        cur.take()
        return (ADDR, cur.ident("variable"), None)
    if t == "new":
        cur.take()
        return (NEW, cur.ident("class name"), None)
    if t == "null":
        cur.take()
        return (NULL, None, None)
    return _parse_lhs(cur)


def _parse_args(cur: _Cursor) -> list:
    cur.take("(")
    args = []
    if cur.peek() != ")":
        args.append(_parse_rhs(cur))
        while cur.peek() == ",":
            cur.take()
            args.append(_parse_rhs(cur))
    cur.take(")")
    return args


def _parse_stmt(label: str, cur: _Cursor) -> dict:
    t = cur.peek()
    d = {"id": label, "line": cur.line, "col": cur.col()}
    if t == "skip":
        cur.take()
        d["kind"] = "skip"
    elif t == "vcall":
        cur.take()
        d["kind"] = "vcall"
        d["receiver"] = cur.ident("receiver")
        if cur.peek() not in ("->", "."):
            raise IRSyntaxError("expected '->' or '.' after receiver", cur.line, cur.col())
        cur.take()
        d["method"] = cur.ident("method")
        cur.take("(")
        cur.take(")")
    elif t == "call":
        cur.take()
        d["kind"] = "call"
        d["callee"] = _fname(cur)
        d["args"] = _parse_args(cur)
        if cur.peek() == "->":
            cur.take()
            d["ret"] = cur.ident("variable")
    elif t == "fcall":
        cur.take()
        d["kind"] = "fcall"
        d["fp"] = cur.ident("function pointer")
        d["args"] = _parse_args(cur)
        cur.take("targets")
        cur.take("{")
        tg = [_fname(cur)]
        while cur.peek() == ",":
            cur.take()
            tg.append(_fname(cur))
        cur.take("}")
        d["targets"] = tg
        if cur.peek() == "->":
            cur.take()
            d["ret"] = cur.ident("variable")
    elif t == "return":
        cur.take()
        d["kind"] = "return"
        d["rhs"] = (VAR, cur.ident("variable"), None)
    else:
        col = cur.col()
        if t in ("&", "new", "null"):
            raise MalformedStatement(f"{t!r} cannot appear on the left-hand side", cur.line, col)
        d["kind"] = "assign"
        d["lhs"] = _parse_lhs(cur)
        cur.take("=")
        d["rhs"] = _parse_rhs(cur)
    cur.end()
    return d


def parse_program(text: str) -> ProgramIR:
    """Parse and validate IR source text."""
    lines = _lex(text)
    classes, class_order, virtuals, funcs, globals_ = {}, [], [], {}, []
    i = 0

    def header_line(n):
        return lines[n][0].line

    while i < len(lines):
        cur = _Cursor(lines[i], header_line(i))
        kw = cur.peek()
        if kw == "class":
            cur.take()
            name = cur.ident("class name")
            parent = None
            if cur.peek() == ":":
                cur.take()
                parent = cur.ident("parent class")
            cur.take("{")
            fields = []
            # class body may continue on following lines
            while True:
                if cur.done():
                    i += 1
                    if i >= len(lines):
                        raise IRSyntaxError(f"unterminated class {name}", cur.line, 1)
                    cur = _Cursor(lines[i], header_line(i))
                    continue
                if cur.peek() == "}":
                    cur.take()
                    break
                if cur.peek() == ";":
                    cur.take()
                    continue
                cur.take("field")
                fname = cur.ident("field name")
                cur.take(":")
                fields.append((fname, _parse_type(cur), cur.line))
            cur.end()
            if name in classes:
                raise IRSyntaxError(f"class {name} declared twice", cur.line, 1)
            classes[name] = (parent, fields, cur.line)
            class_order.append(name)
            i += 1
        elif kw == "virtual":
            cur.take()
            m = cur.ident("method")
            cur.take("in")
            cl = [cur.ident("class")]
            while cur.peek() == ",":
                cur.take()
                cl.append(cur.ident("class"))
            cur.end()
            virtuals.append((m, cl, cur.line))
            i += 1
        elif kw == "var":
            while not cur.done():
                cur.take("var")
                v = cur.ident("variable")
                cur.take(":")
                globals_.append((v, _parse_type(cur), cur.line))
                if cur.peek() == ";":
                    cur.take()
            i += 1
        elif kw == "func":
            cur.take()
            fname = _fname(cur)
            cur.take("(")
            params = []
            if cur.peek() != ")":
                while True:
                    pn = cur.ident("parameter")
                    cur.take(":")
                    params.append((pn, _parse_type(cur), cur.line))
                    if cur.peek() != ",":
                        break
                    cur.take()
            cur.take(")")
            rt = None
            if cur.peek() == "->":
                cur.take()
                rt = _parse_type(cur)
            cur.take("{")
            rf = _RawFunc(fname, params, rt, line=cur.line)
            if fname in funcs:
                raise IRSyntaxError(f"function {fname} declared twice", cur.line, 1)
            closed = False
            # statements may follow '{' on the same line
            pending = cur
            while True:
                if pending is None or pending.done():
                    i += 1
                    if i >= len(lines):
                        break
                    pending = _Cursor(lines[i], header_line(i))
                c2 = pending
                t = c2.peek()
                if t == "}":
                    c2.take()
                    c2.end()
                    closed = True
                    break
                if t == "var":
                    while not c2.done():
                        c2.take("var")
                        v = c2.ident("variable")
                        c2.take(":")
                        rf.decls.append((v, _parse_type(c2), c2.line))
                        if c2.peek() == ";":
                            c2.take()
                    continue
                if t == "edges":
                    c2.take()
                    c2.take(":")
                    while not c2.done():
                        a = c2.ident("node")
                        c2.take("->")
                        b = c2.ident("node")
                        rf.edges.append((a, b, c2.line))
                        if c2.peek() == ",":
                            c2.take()
                    continue
                label = c2.ident("statement label")
                if label in KEYWORDS:
                    raise IRSyntaxError(f"unexpected keyword {label!r}", c2.line, c2.toks[0].col)
                c2.take(":")
                rf.stmts.append(_parse_stmt(label, c2))
            if not closed:
                raise IRSyntaxError(f"unterminated function {fname}", rf.line, 1)
            funcs[fname] = rf
            i += 1
        else:
            raise IRSyntaxError(f"unexpected {kw!r} at top level", cur.line, cur.toks[0].col)

    return _build(classes, class_order, virtuals, funcs, globals_)


def _check_type(t: TypeRef, classes, line):
    if t.cls not in classes:
        raise UndeclaredClass(t.cls, line, 1)


def _build(raw_classes, class_order, virtuals, funcs, globals_) -> ProgramIR:
    # hierarchy
    for name, (parent, _, line) in raw_classes.items():
        if parent is not None and parent not in raw_classes:
            raise UndeclaredClass(parent, line, 1)
    for name in raw_classes:
        seen, c = set(), name
        while c is not None:
            if c in seen:
                raise CyclicHierarchy(f"cycle through {name}", raw_classes[name][2], 1)
            seen.add(c)
            c = raw_classes[c][0]
    vmap = {c: set() for c in raw_classes}
    for m, cl, line in virtuals:
        for c in cl:
            if c not in raw_classes:
                raise UndeclaredClass(c, line, 1)
            vmap[c].add(m)
    classes = {}
    for name, (parent, fields, line) in raw_classes.items():
        for fn, ft, fl in fields:
            _check_type(ft, raw_classes, fl)
        classes[name] = ClassDecl(name, parent, tuple((f, t) for f, t, _ in fields), frozenset(vmap[name]))

    if not funcs:
        raise IRSyntaxError("program declares no function", 1, 1)
    entry = "main" if "main" in funcs else next(iter(funcs))

    # variable scoping: plain names unless a raw name is declared in several scopes
    decl_count = {}
    for v, t, line in globals_:
        decl_count[v] = decl_count.get(v, 0) + 1
    for rf in funcs.values():
        names = [p[0] for p in rf.params] + [d[0] for d in rf.decls]
        if rf.ret_type is not None:
            names.append("$ret")
        for n in set(names):
            decl_count[n] = decl_count.get(n, 0) + 1

    labels = set()
    for rf in funcs.values():
        for s in rf.stmts:
            if s["id"] in labels or s["id"] in ("start", "end"):
                raise MalformedStatement(f"duplicate label {s['id']}", s["line"], 1)
            labels.add(s["id"])

    vars_ = {}
    gscope = {}
    for v, t, line in globals_:
        _check_type(t, raw_classes, line)
        if v in gscope:
            raise MalformedStatement(f"variable {v} declared twice", line, 1)
        if v in raw_classes or v in labels:
            raise MalformedStatement(f"variable {v} clashes with a class or label name", line, 1)
        gscope[v] = v
        vars_[v] = VarInfo(v, None, t)

    def canon(fname, raw):
        if raw == "$ret":
            return f"{fname}$ret"
        return raw if decl_count.get(raw, 0) <= 1 and raw not in gscope else f"{fname}::{raw}"

    functions, sites, addr_taken, origin = {}, {}, set(), set()
    for fname, rf in funcs.items():
        scope = dict(gscope)
        local_types = {}
        params = []
        for pn, pt, line in rf.params:
            _check_type(pt, raw_classes, line)
            cid = canon(fname, pn)
            if pn in scope and scope[pn] != pn or cid in local_types:
                raise MalformedStatement(f"variable {pn} declared twice", line, 1)
            scope[pn] = cid
            local_types[cid] = pt
            params.append(cid)
            vars_[cid] = VarInfo(pn, fname, pt, True)
        for v, t, line in rf.decls:
            _check_type(t, raw_classes, line)
            cid = canon(fname, v)
            if cid in local_types or (v in gscope and cid == v):
                raise MalformedStatement(f"variable {v} declared twice", line, 1)
            if v in raw_classes or v in labels:
                raise MalformedStatement(f"variable {v} clashes with a class or label name", line, 1)
            scope[v] = cid
            local_types[cid] = t
            vars_[cid] = VarInfo(v, fname, t)
        ret_var = None
        if rf.ret_type is not None:
            _check_type(rf.ret_type, raw_classes, rf.line)
            ret_var = f"{fname}$ret"
            vars_[ret_var] = VarInfo("$ret", fname, rf.ret_type)
            local_types[ret_var] = rf.ret_type

        def resolve(raw, line, col):
            if raw not in scope:
                raise UndeclaredVariable(raw, line, col)
            return scope[raw]

        stmts = []
        for s in rf.stmts:
            line, col = s["line"], s["col"]
            k = s["kind"]

            def mk(tup):
                kind, v, f = tup
                if kind == NEW:
                    if v not in raw_classes:
                        raise UndeclaredClass(v, line, col)
                    sites[s["id"]] = v
                    return AccessExpr(NEW, type_arg=v, site=s["id"])
                if kind == NULL:
                    return AccessExpr(NULL)
                return AccessExpr(kind, var=resolve(v, line, col), field=f)

            if k == "assign":
                lhs, rhs = mk(s["lhs"]), mk(s["rhs"])
                st = Statement(s["id"], "assign", fname, lhs=lhs, rhs=rhs, line=line)
            elif k == "return":
                if ret_var is None:
                    raise MalformedStatement(f"return in function {fname} without return type", line, col)
                st = Statement(s["id"], "assign", fname, lhs=AccessExpr(VAR, var=ret_var),
                               rhs=mk(s["rhs"]), is_return=True, line=line)
            elif k == "vcall":
                recv = resolve(s["receiver"], line, col)
                st = Statement(s["id"], "vcall", fname, receiver=recv, method=s["method"], line=line)
                origin.add(s["id"])
            elif k == "call":
                st = Statement(s["id"], "call", fname, callee=s["callee"],
                               args=tuple(mk(a) for a in s["args"]),
                               ret=resolve(s["ret"], line, col) if s.get("ret") else None, line=line)
            elif k == "fcall":
                st = Statement(s["id"], "fcall", fname, fp=resolve(s["fp"], line, col),
                               args=tuple(mk(a) for a in s["args"]),
                               targets=tuple(sorted(set(s["targets"]))),
                               ret=resolve(s["ret"], line, col) if s.get("ret") else None, line=line)
            else:
                st = Statement(s["id"], "skip", fname, line=line)
            _validate_stmt(st, vars_, raw_classes, classes, line, col)
            for e in st.exprs():
                if e.kind == ADDR:
                    addr_taken.add(e.var)
            stmts.append(st)

        fn = Function(fname, tuple(params), rf.ret_type, ret_var, local_types, tuple(stmts),
                      tuple((a, b) for a, b, _ in rf.edges))
        fn.cfg = _build_cfg(fn, rf)
        functions[fname] = fn

    for fn in functions.values():
        for st in fn.stmts:
            for t in ([st.callee] if st.kind == "call" else st.targets if st.kind == "fcall" else []):
                if t not in functions:
                    raise UnknownCallee(t, st.line, 1)
    prog = ProgramIR(classes, functions, entry, vars_, frozenset(origin), frozenset(addr_taken),
                     sites, tuple(v for v, _, _ in globals_), tuple(class_order),
                     tuple((m, tuple(cl)) for m, cl, _ in virtuals))
    return prog


def _lookup_field(classes, cls, f):
    c = cls
    while c is not None:
        for fn, ft in classes[c].fields:
            if fn == f:
                return ft
        c = classes[c].parent
    return None


def _validate_stmt(st: Statement, vars_, raw_classes, classes, line, col):
    def vt(v):
        return vars_[v].type

    def check_expr(e: AccessExpr, side: str):
        if e.kind in (NEW, NULL):
            return
        t = vt(e.var)
        if e.kind == VAR:
            if t.depth == 0:
                raise MalformedStatement(f"object copy via '{e.var}' is not a pointer assignment", line, col)
        elif e.kind == DEREF:
            if t.depth == 0:
                raise MalformedStatement(f"cannot dereference non-pointer {e.var}", line, col)
            if side == "lhs" and t.depth < 2:
                raise MalformedStatement(f"'*{e.var}' on the left-hand side copies an object", line, col)
        elif e.kind == ARROW:
            if t.depth != 1:
                raise MalformedStatement(f"'->' needs a pointer to an object, {e.var} is {t}", line, col)
            if _lookup_field(classes, t.cls, e.field) is None:
                raise MalformedStatement(f"class {t.cls} has no field {e.field}", line, col)
        elif e.kind == DOT:
            if t.depth > 1:
                raise MalformedStatement(f"'.' on {e.var} of type {t}", line, col)
            if _lookup_field(classes, t.cls, e.field) is None:
                raise MalformedStatement(f"class {t.cls} has no field {e.field}", line, col)

    if st.kind == "assign":
        if st.lhs.kind not in LHS_KINDS:
            raise MalformedStatement(f"{st.lhs.kind} on the left-hand side", line, col)
        check_expr(st.lhs, "lhs")
        check_expr(st.rhs, "rhs")
    elif st.kind in ("call", "fcall"):
        for a in st.args:
            check_expr(a, "rhs")
    elif st.kind == "vcall":
        if vt(st.receiver).depth != 1:
            raise MalformedStatement(f"receiver {st.receiver} is not an object pointer", line, col)


def _build_cfg(fn: Function, rf: _RawFunc) -> Cfg:
    start, end = f"{fn.name}:start", f"{fn.name}:end"
    ids = [s.id for s in fn.stmts]
    idset = set(ids)
    succ = {n: [] for n in [start] + ids + [end]}
    explicit_from = set()
    for a, b, line in rf.edges:
        a2 = start if a == "start" else a
        b2 = end if b == "end" else b
        if a2 not in succ or b2 not in succ or a2 == end or b2 == start:
            raise MalformedStatement(f"edge {a}->{b} names an unknown node", line, 1)
        if b2 not in succ[a2]:
            succ[a2].append(b2)
        explicit_from.add(a2)
    order = [start] + ids + [end]
    for x, y in zip(order, order[1:]):
        if x not in explicit_from:
            succ[x].append(y)
    pred = {n: [] for n in succ}
    for a, bs in succ.items():
        for b in bs:
            pred[b].append(a)
    # reachability both ways
    def reach(root, nbr):
        seen, stack = {root}, [root]
        while stack:
            n = stack.pop()
            for m in nbr[n]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        return seen
    fwd, bwd = reach(start, succ), reach(end, pred)
    for n in order:
        if n not in fwd or n not in bwd:
            raise MalformedStatement(f"node {n} in {fn.name} is not on a start-to-end path")
    stmts = {s.id: s for s in fn.stmts}
    stmts[start] = Statement(start, "skip", fn.name)
    stmts[end] = Statement(end, "skip", fn.name)
    return Cfg(fn.name, tuple(order), {k: tuple(v) for k, v in succ.items()},
               {k: tuple(v) for k, v in pred.items()}, start, end, stmts)


# --- printer ---------------------------------------------------------------

def print_program(p: ProgramIR) -> str:
    raw = {v: info.raw for v, info in p.vars.items()}
    out = []
    for c in p.class_order:
        d = p.classes[c]
        head = f"class {c}" + (f" : {d.parent}" if d.parent else "")
        body = "  ".join(f"field {f}: {t}" for f, t in d.fields)
        out.append(f"{head} {{ {body} }}" if body else f"{head} {{ }}")
    for m, cl in p.virtual_decls:
        out.append(f"virtual {m} in {', '.join(cl)}")
    for g in p.globals_order:
        out.append(f"var {g}: {p.vars[g].type}")
    for fn in p.functions.values():
        params = ", ".join(f"{raw[q]}: {fn.locals[q]}" for q in fn.params)
        rt = f" -> {fn.ret_type}" if fn.ret_type else ""
        out.append(f"func {fn.name}({params}){rt} {{")
        decls = [v for v in fn.locals if v not in fn.params and v != fn.ret_var]
        if decls:
            out.append("  " + "  ".join(f"var {raw[v]}: {fn.locals[v]}" for v in decls))
        ren = raw.get
        for s in fn.stmts:
            out.append(f"  {s.id}: {render_stmt(s, ren)}")
        edges = [(a, b) for a in fn.cfg.nodes for b in fn.cfg.succ[a]]
        if any(len(fn.cfg.succ[n]) != 1 for n in fn.cfg.nodes[:-1]) or not _is_textual(fn):
            rn = lambda n: "start" if n == fn.cfg.start else ("end" if n == fn.cfg.end else n)
            out.append("  edges: " + ", ".join(f"{rn(a)}->{rn(b)}" for a, b in edges))
        out.append("}")
    return "\n".join(out) + "\n"


def _is_textual(fn: Function) -> bool:
    order = fn.cfg.nodes
    return all(fn.cfg.succ[a] == (b,) for a, b in zip(order, order[1:]))


def render_stmt(s: Statement, rename=lambda v: v) -> str:
    r = lambda e: render_expr(e, rename)
    if s.kind == "assign":
        if s.is_return:
            return f"return {r(s.rhs)}"
        return f"{r(s.lhs)} = {r(s.rhs)}"
    if s.kind == "vcall":
        return f"vcall {rename(s.receiver)}->{s.method}()"
    if s.kind == "call":
        ret = f" -> {rename(s.ret)}" if s.ret else ""
        return f"call {s.callee}({', '.join(r(a) for a in s.args)}){ret}"
    if s.kind == "fcall":
        ret = f" -> {rename(s.ret)}" if s.ret else ""
        return f"fcall {rename(s.fp)}({', '.join(r(a) for a in s.args)}) targets {{{', '.join(s.targets)}}}{ret}"
    return "skip"


# --- supergraph ------------------------------------------------------------

class Supergraph:
    """Mutable interprocedural graph. Virtual-call edges are spliced in by the solver."""

    def __init__(self, p: ProgramIR):
        self.prog = p
        self.nodes: list = []
        self.succ: dict = {}
        self.pred: dict = {}
        self.stmt: dict = {}
        self.start = p.entry_cfg.start
        self.end = p.entry_cfg.end
        self.spliced: set = set()   # (call id, callee)
        self.synthetic: set = set()
        self.func_of: dict = {}

    def add_node(self, nid, st, after=None):
        if nid in self.stmt:
            return
        self.stmt[nid] = st
        self.succ[nid] = []
        self.pred[nid] = []
        self.func_of[nid] = st.func
        if after is not None and after in self.nodes:
            self.nodes.insert(self.nodes.index(after) + 1, nid)
        else:
            self.nodes.append(nid)

    def add_edge(self, a, b):
        if b not in self.succ[a]:
            self.succ[a].append(b)
            self.pred[b].append(a)

    def remove_edge(self, a, b):
        if b in self.succ[a]:
            self.succ[a].remove(b)
            self.pred[b].remove(a)

    def link_call(self, call: Statement, callee: str, bindings: list, ret_stmt: Optional[Statement],
                  conts: tuple) -> list:
        """Wire call -> bindings -> callee start, callee end -> ret -> conts. Returns new node ids."""
        fn = self.prog.functions[callee]
        tag = f"{call.id}#{callee}"
        new, prev = [], call.id
        after = call.id
        for k, (lhs, rhs) in enumerate(bindings):
            nid = f"{tag}#b{k}"
            self.add_node(nid, Statement(nid, "assign", call.func, lhs=lhs, rhs=rhs), after=after)
            self.synthetic.add(nid)
            self.add_edge(prev, nid)
            new.append(nid)
            prev = after = nid
        self.add_edge(prev, fn.cfg.start)
        rid = f"{tag}#r"
        rst = ret_stmt if ret_stmt is not None else Statement(rid, "skip", call.func)
        self.add_node(rid, Statement(rid, rst.kind, call.func, lhs=rst.lhs, rhs=rst.rhs), after=after)
        self.synthetic.add(rid)
        self.add_edge(fn.cfg.end, rid)
        for c in conts:
            self.add_edge(rid, c)
        new.append(rid)
        self.spliced.add((call.id, callee))
        return new

    def bindings_for(self, call: Statement, callee: str, receiver: Optional[str] = None):
        fn = self.prog.functions[callee]
        args = list(call.args)
        if receiver is not None:
            args = [AccessExpr(VAR, var=receiver)] + args
        binds = [(AccessExpr(VAR, var=q), a) for q, a in zip(fn.params, args)]
        ret = None
        if call.ret is not None and fn.ret_var is not None:
            ret = Statement("", "assign", call.func, lhs=AccessExpr(VAR, var=call.ret),
                            rhs=AccessExpr(VAR, var=fn.ret_var))
        return binds, ret

    def splice_virtual(self, call: Statement, callee: str) -> list:
        """Connect a newly discovered virtual callee that has a body. No-op otherwise."""
        if (call.id, callee) in self.spliced or callee not in self.prog.functions:
            return []
        binds, _ = self.bindings_for(call, callee, receiver=call.receiver)
        conts = tuple(self.prog.functions[call.func].cfg.succ[call.id])
        return self.link_call(call, callee, binds, None, conts)


def build_supergraph(p: ProgramIR) -> Supergraph:
    g = Supergraph(p)
    order = [p.entry] + [f for f in p.functions if f != p.entry]
    for fname in order:
        cfg = p.functions[fname].cfg
        for n in cfg.nodes:
            g.add_node(n, cfg.stmts[n])
    for fname in order:
        cfg = p.functions[fname].cfg
        for n in cfg.nodes:
            st = cfg.stmts[n]
            if st.kind in ("call", "fcall"):
                targets = [st.callee] if st.kind == "call" else list(st.targets)
                for t in targets:
                    if t not in p.functions:
                        raise UnknownCallee(t, st.line, 1)
                for t in targets:
                    binds, ret = g.bindings_for(st, t)
                    g.link_call(st, t, binds, ret, cfg.succ[n])
            else:
                for m in cfg.succ[n]:
                    g.add_edge(n, m)
    return g
