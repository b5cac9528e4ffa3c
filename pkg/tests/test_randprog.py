import random

from ddalias.ir import parse_program
from ddalias.oracle import run_concrete
from ddalias.randprog import ACYCLIC, CYCLIC, STRAIGHT, random_ir, random_program


def test_deterministic():
    assert random_program(random.Random(5)) == random_program(random.Random(5))


def test_shapes_parse():
    for shape in (STRAIGHT, ACYCLIC, CYCLIC):
        for seed in range(20):
            _, p = random_ir(seed, shape=shape, n_stmts=12)
            assert len(p.statements()) <= 12
            assert (shape == STRAIGHT) <= p.is_straight_line()


def test_executable_programs_run():
    for seed in range(30):
        text, p = random_ir(seed, n_stmts=15, executable=True)
        run_concrete(p)
        assert parse_program(text).statements()[0].id == "n01"


def test_vcall_count():
    _, p = random_ir(3, n_stmts=50, n_vcalls=5)
    assert sum(1 for s in p.statements() if s.kind == "vcall") == 5
