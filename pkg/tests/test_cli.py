import io
import json
import subprocess
import sys

from ddalias.cli import EXIT_ANALYSIS, EXIT_INPUT, EXIT_OK, EXIT_VIOLATION, main

from conftest import fixture_path


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


FIG2 = fixture_path("fig2")


def test_analyze_text():
    code, out, _ = run("analyze", FIG2)
    assert code == EXIT_OK
    assert "n03 Aout: {(q,&z)}" in out


def test_analyze_ex_prints_universe():
    code, out, _ = run("analyze", FIG2, "--variant", "ex")
    assert code == EXIT_OK and "Din: U" in out


def test_analyze_json():
    code, out, _ = run("analyze", FIG2, "--format", "json")
    assert code == EXIT_OK
    json.loads(out)


def test_analyze_with_trace():
    code, out, _ = run("analyze", FIG2, "--trace")
    assert code == EXIT_OK and "round 3" in out


def test_devirt_text_and_json():
    code, out, _ = run("devirt", FIG2)
    assert code == EXIT_OK
    assert "n28 callees: {Y::vfun}  monomorphic" in out
    assert "metrics: mono=1 edges=1 classTypes=4" in out
    code, out, _ = run("devirt", FIG2, "--variant", "ex", "--format", "json")
    doc = json.loads(out)
    assert doc["metrics"] == {"mono": 0, "edges": 2, "classTypes": 7}


def test_trace_json_rows():
    code, out, _ = run("trace", FIG2, "--format", "json")
    doc = json.loads(out)
    assert doc["rounds"] == 3
    assert [r["id"] for r in doc["rows"]][-1] == "n28"
    assert doc["rows"][-1]["cells"] == [None, None, None]


def test_trace_strong_update_cd():
    code, out, _ = run("trace", FIG2, "--variant", "cd", "--strong-update")
    assert code == EXIT_OK
    row = next(l for l in out.splitlines() if l.startswith("n03"))
    assert row.split("|")[2].strip() == "{} {}"


def test_seeded_order_same_answer():
    _, a, _ = run("analyze", FIG2, "--seed", "3")
    _, b, _ = run("analyze", FIG2)
    strip = lambda t: [l for l in t.splitlines() if not l.startswith("perf:")]
    assert strip(a) == strip(b)


def test_missing_file():
    code, _, err = run("analyze", "/nonexistent.ir")
    assert code == EXIT_INPUT and err.startswith("error: InputError")


def test_malformed_input(tmp_path):
    f = tmp_path / "bad.ir"
    f.write_text("func main() {\n n1: x = \n}\n")
    code, _, err = run("analyze", str(f))
    assert code == EXIT_INPUT and err.startswith("error:")


def test_jd_rejects_pointer_ops():
    code, _, err = run("analyze", FIG2, "--variant", "jd")
    assert code == EXIT_INPUT and "jd" in err


def test_budget_exhaustion():
    code, _, err = run("analyze", FIG2, "--budget", "1")
    assert code == EXIT_ANALYSIS and "NonTermination" in err


def test_verify_fixture_passes():
    code, out, _ = run("verify", FIG2)
    assert code == EXIT_OK
    assert out.count("PASS") == 2


def test_verify_random():
    code, out, _ = run("verify", "--random", "3", "--abstraction", "tba")
    assert code == EXIT_OK and out.count("PASS") == 3


def test_verify_needs_something():
    code, _, _ = run("verify")
    assert code == EXIT_INPUT


def test_verify_negative_control_fails():
    code, out, _ = run("verify", fixture_path("fig4b"), "--disable-addr-expr")
    assert code == EXIT_VIOLATION and "FAIL" in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "ddalias", "devirt", FIG2], capture_output=True, text=True)
    assert r.returncode == 0 and "monomorphic" in r.stdout
