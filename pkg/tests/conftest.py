from importlib import resources

import pytest

from ddalias.ir import parse_program

FIXTURES = ("fig2", "fig3a", "fig4a", "fig4b", "fig5", "fig12", "fig14")


def fixture_path(name: str) -> str:
    return str(resources.files("ddalias") / "fixtures" / f"{name}.ir")


def load(name: str):
    with open(fixture_path(name)) as fh:
        return parse_program(fh.read())


@pytest.fixture
def fig2():
    return load("fig2")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
