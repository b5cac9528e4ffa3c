"""Walk through the motivating fig2 program: traces, callees, metrics per variant.

Run: python3 demos/fig2_walkthrough.py
"""
from importlib import resources

from ddalias.cli import render_trace
from ddalias.devirt import devirtualize
from ddalias.ir import parse_program
from ddalias.solver import solve
from ddalias.transfer import CD, EX, ID, VariantConfig


def main():
    text = (resources.files("ddalias") / "fixtures" / "fig2.ir").read_text()
    p = parse_program(text)
    print(text)
    for v in (ID, CD):
        print(f"== {v} rounds (demand, new points-to edges)")
        print(render_trace(solve(p, VariantConfig(v), trace=True)))
    print("== cd with strong updates through *p")
    print(render_trace(solve(p, VariantConfig(CD, strong_update=True), trace=True)))
    for v in (ID, CD, EX):
        rep = devirtualize(solve(p, VariantConfig(v)), "fig2")
        c = rep.calls[0]
        print(f"{v}: {c.id} -> {', '.join(c.callees)}  mono={rep.mono} edges={rep.edges} "
              f"classTypes={rep.class_types} visits={rep.visits}")


if __name__ == "__main__":
    main()
