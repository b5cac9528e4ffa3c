"""Command line driver: analyze, devirt, trace and verify.

Exit codes: 0 ok, 1 bad input (parse or validation), 2 analysis error
(visit budget), 3 a verified property failed.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .absdomain import ASB, EMPTY, TBA, render_edge, render_pairs, render_set, restrict_all
from .devirt import devirtualize
from .ir import IRError, ProgramIR, parse_program
from .oracle import (OracleScopeError, PathBudgetExceeded, check_mfp_vs_mop, check_soundness)
from .randprog import ACYCLIC, random_ir
from .solver import NonTermination, SolveResult, diagnostics_trace, fixpoint_violations, solve
from .transfer import CD, EX, ID, VARIANTS, VariantConfig

EXIT_OK, EXIT_INPUT, EXIT_ANALYSIS, EXIT_VIOLATION = 0, 1, 2, 3


class InputError(Exception):
    pass


def _load(path: str) -> ProgramIR:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from e
    return parse_program(text)


def _config(a, variant=None) -> VariantConfig:
    return VariantConfig(variant or a.variant, a.abstraction, a.object_store, a.used_pointer_store,
                         addr_demands=not getattr(a, "disable_addr_expr", False),
                         strong_update=a.strong_update)


def _node_order(res: SolveResult) -> list:
    """Entry statements in source order, then whatever else the graph holds."""
    p = res.program
    first = [s.id for s in p.functions[p.entry].stmts]
    seen = set(first)
    return first + [n for n in res.graph.nodes if n not in seen]


def _dset(res, n, side):
    d = res.demanded(n, side)
    return None if d is None else sorted(d)


def _pairs_json(A) -> list:
    return [list(q) for q in sorted(A)]


# --- analyze / devirt ----------------------------------------------------------

def cmd_analyze(a, out) -> int:
    p = _load(a.input)
    res = solve(p, _config(a), seed=a.seed, budget=a.budget)
    rep = devirtualize(res, Path(a.input).stem)
    if a.format == "json":
        doc = rep.to_json()
        doc["nodes"] = {n: {"din": _dset(res, n, "in"), "dout": _dset(res, n, "out"),
                            "ain": _pairs_json(res.states[n].ain),
                            "aout": _pairs_json(res.states[n].aout)} for n in _node_order(res)}
        if res.store is not None:
            doc["objectStore"] = sorted(res.store)
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    out.write(f"# {rep.program}  variant={rep.variant}  abstraction={rep.abstraction}\n")
    for n in _node_order(res):
        st = res.states[n]
        din = "U" if res.demanded(n, "in") is None else render_set(st.din)
        dout = "U" if res.demanded(n, "out") is None else render_set(st.dout)
        out.write(f"{n} Din: {din}  Dout: {dout}\n")
        out.write(f"{n} Ain: {render_pairs(st.ain)}\n")
        out.write(f"{n} Aout: {render_pairs(st.aout)}\n")
    _write_calls(rep, out)
    if res.store is not None:
        out.write(f"object store: {render_set(res.store)}\n")
    return EXIT_OK


def _write_calls(rep, out):
    for c in rep.calls:
        flag = "  (unresolved-fallback)" if c.fallback else ""
        kind = "monomorphic" if c.monomorphic else "polymorphic"
        out.write(f"{c.id} callees: {render_set(c.callees)}  {kind}{flag}\n")
    out.write(f"metrics: mono={rep.mono} edges={rep.edges} classTypes={rep.class_types}\n")
    out.write(f"perf: nodes={rep.nodes} visits={rep.visits}\n")


def cmd_devirt(a, out) -> int:
    p = _load(a.input)
    rep = devirtualize(solve(p, _config(a), seed=a.seed, budget=a.budget), Path(a.input).stem)
    if a.format == "json":
        out.write(json.dumps(rep.to_json(), indent=2, sort_keys=True) + "\n")
    else:
        out.write(f"# {rep.program}  variant={rep.variant}  abstraction={rep.abstraction}\n")
        _write_calls(rep, out)
    return EXIT_OK


# --- trace -----------------------------------------------------------------------

def trace_rows(res: SolveResult) -> list:
    rows = []
    for sid, text, cells in diagnostics_trace(res):
        rows.append({"id": sid, "stmt": text, "cells": [
            None if c is None else {"demand": sorted(c[0]), "edges": sorted(render_edge(e) for e in c[1])}
            for c in cells]})
    return rows


def render_trace(res: SolveResult) -> str:
    rows = trace_rows(res)
    nr = len(res.rounds)

    def cell(c):
        if c is None:
            return ""
        return f"{render_set(c['demand'])} {render_set(c['edges'])}"

    table = [["stmt", "statement"] + [f"round {k + 1}" for k in range(nr)]]
    table += [[r["id"], r["stmt"]] + [cell(c) for c in r["cells"]] for r in rows]
    widths = [max(len(row[k]) for row in table) for k in range(len(table[0]))]
    lines = [" | ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in table]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def cmd_trace(a, out) -> int:
    p = _load(a.input)
    res = solve(p, _config(a), seed=a.seed, trace=True, budget=a.budget)
    if a.format == "json":
        doc = {"program": Path(a.input).stem, "variant": res.config.variant,
               "abstraction": res.config.abstraction, "rounds": len(res.rounds),
               "rows": trace_rows(res)}
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        out.write(f"# {Path(a.input).stem}  variant={res.config.variant}  "
                  f"abstraction={res.config.abstraction}  (demand, new points-to edges) per round\n")
        out.write(render_trace(res))
    return EXIT_OK


# --- verify ----------------------------------------------------------------------

def verify_program(p: ProgramIR, name: str, abstraction: str, max_len: int, addr_demands: bool = True,
                   object_store: bool = False, strong_update: bool = False) -> tuple:
    """(violations, notes) for every property we can check on p."""
    viol, notes = [], []

    def cfg(v):
        return VariantConfig(v, abstraction, object_store, addr_demands=addr_demands,
                             strong_update=strong_update)

    res = {v: solve(p, cfg(v)) for v in (ID, CD, EX)}

    def tag(vs, v):
        for x in vs:
            x.setdefault("program", name)
            x.setdefault("variant", v)
        viol.extend(vs)

    for v, r in res.items():
        tag([{"check": "fixpoint", "node": n, "witness": "transfer sweep changes state",
              "expected": "no change", "actual": "changed"} for n in fixpoint_violations(r)], v)
        if v != EX:
            for n in r.graph.nodes:
                st = r.graph.stmt[n]
                if st.kind == "vcall" and st.receiver not in r.states[n].din:
                    tag([{"check": "receiver-demanded", "node": n, "witness": st.receiver,
                          "expected": st.receiver, "actual": sorted(r.states[n].din)}], v)
    ex, i, c = res[EX], res[ID], res[CD]
    for n in ex.states:
        # strong updates in Ex can drop pairs Id keeps, so the chain is weak-update only
        extra = EMPTY if strong_update else i.states[n].aout - ex.states[n].aout
        if extra:
            tag([{"check": "ex-contains-id", "node": n, "witness": sorted(extra),
                  "expected": sorted(ex.states[n].aout), "actual": sorted(i.states[n].aout)}], ID)
        D = c.states[n].dout
        rex, rcd = restrict_all(ex.states[n].aout, D), restrict_all(c.states[n].aout, D)
        if rex != rcd:
            tag([{"check": "cd-equals-ex-restricted", "node": n, "witness": sorted(rex ^ rcd),
                  "expected": sorted(rex), "actual": sorted(rcd)}], CD)
    for v in (ID, CD, EX):
        try:
            tag(check_mfp_vs_mop(p, cfg(v), max_len, res[v]), v)
        except OracleScopeError as e:
            notes.append(f"mfp-vs-mop skipped: {e}")
            break
        except PathBudgetExceeded as e:
            notes.append(f"mfp-vs-mop skipped: {e}")
            break
    if p.is_straight_line():
        for v in (ID, CD, EX):
            try:
                tag(check_soundness(p, cfg(v), res[v]), v)
            except IRError as e:
                notes.append(f"soundness skipped: {e}")
                break
    else:
        notes.append("soundness skipped: not straight-line")
    return viol, notes


def cmd_verify(a, out) -> int:
    abstractions = [a.abstraction] if a.abstraction_given else [TBA, ASB]
    jobs = []
    if a.random:
        for k in range(a.random):
            seed = a.seed + k
            _, p = random_ir(seed, n_stmts=10, shape=ACYCLIC)
            jobs.append((f"random-{seed}", p))
    if a.input:
        jobs.append((Path(a.input).stem, _load(a.input)))
    if not jobs:
        raise InputError("verify needs an input file or --random N")
    allv, report = [], []
    for name, p in jobs:
        for ab in abstractions:
            vs, notes = verify_program(p, name, ab, a.max_path_len, not a.disable_addr_expr,
                                       a.object_store, a.strong_update)
            for x in vs:
                x["abstraction"] = ab
            allv.extend(vs)
            report.append({"program": name, "abstraction": ab, "violations": len(vs), "notes": notes})
    if a.format == "json":
        out.write(json.dumps({"runs": report, "violations": allv}, indent=2, sort_keys=True,
                             default=str) + "\n")
    else:
        for r in report:
            status = "PASS" if r["violations"] == 0 else "FAIL"
            extra = "".join(f"  [{n}]" for n in r["notes"])
            out.write(f"{status} {r['program']} {r['abstraction']} violations={r['violations']}{extra}\n")
        if allv:
            out.write(json.dumps(allv[:20], indent=2, sort_keys=True, default=str) + "\n")
    return EXIT_VIOLATION if allv else EXIT_OK


# --- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ddalias", description="Demand-driven alias analysis for devirtualization")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(sp, need_input=True):
        if need_input:
            sp.add_argument("input", help="IR file")
        else:
            sp.add_argument("input", nargs="?", help="IR file")
        sp.add_argument("--variant", choices=VARIANTS, default=ID)
        sp.add_argument("--abstraction", choices=(TBA, ASB), default=None)
        sp.add_argument("--object-store", action="store_true", help="enable the tba object store")
        sp.add_argument("--used-pointer-store", action="store_true", help="gate address-of aliases on used pointers")
        sp.add_argument("--strong-update", action="store_true",
                        help="must-pointee kills through *p for cd and ex (off: weak updates only)")
        sp.add_argument("--format", choices=("text", "json"), default="text")
        sp.add_argument("--seed", type=int, default=None, help="seeded worklist order, or first seed for --random")
        sp.add_argument("--budget", type=int, default=None, help="node-visit budget, default scales with program size")

    sp = sub.add_parser("analyze", help="per-node demand and alias sets")
    common(sp)
    sp.add_argument("--trace", action="store_true", help="also print the per-round table")
    sp = sub.add_parser("devirt", help="virtual call resolution and metrics")
    common(sp)
    sp = sub.add_parser("trace", help="per-round demand and points-to table")
    common(sp)
    sp = sub.add_parser("verify", help="run the property oracles")
    common(sp, need_input=False)
    sp.add_argument("--random", type=int, default=0, metavar="N", help="also check N generated acyclic programs")
    sp.add_argument("--max-path-len", type=int, default=12, help="statement bound for path enumeration")
    sp.add_argument("--disable-addr-expr", action="store_true",
                    help="turn off address demands (negative control, should fail)")
    return ap


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    a = build_parser().parse_args(argv)
    a.abstraction_given = a.abstraction is not None
    a.abstraction = a.abstraction or TBA
    if a.cmd == "verify" and a.seed is None:
        a.seed = 0
    cmds = {"analyze": cmd_analyze, "devirt": cmd_devirt, "trace": cmd_trace, "verify": cmd_verify}
    try:
        code = cmds[a.cmd](a, out)
        if a.cmd == "analyze" and a.trace and a.format == "text":
            a2 = argparse.Namespace(**vars(a))
            cmd_trace(a2, out)
        return code
    except IRError as e:
        err.write(f"error: {e}\n")
        return EXIT_INPUT
    except InputError as e:
        err.write(f"error: InputError: {e}\n")
        return EXIT_INPUT
    except NonTermination as e:
        err.write(f"error: {e.kind}: {e}\n")
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
