import json
import subprocess
import sys

import pytest

from fusionlab.cli import run_command
from fusionlab.suites import SUITES

GRAPHS = "builtin:graphs"


def test_class_check_passes():
    code, report = run_command(["class", "check", "--spec", GRAPHS, "--max-size", "4", "--properties", "ap,dap"])
    assert code == 0 and [v.status for v in report.verdicts] == ["pass", "pass"]


def test_non_edge_full_existence_fails_with_witness():
    code, report = run_command(["indep", "check", "--relation", "non-edge", "--axiom", "full-existence",
                                "--spec", GRAPHS, "--expansion", "builtin:clique-graphs", "--max-size", "4"])
    assert code == 1
    (w,) = report.witnesses
    assert w["structure"]["relations"]["P"] == [["0"]]
    assert sorted(w["forced"]) == ["E(0,a*)", "E(a*,0)"]


def test_flatten_prints_one_disjunct(tmp_path):
    spec = tmp_path / "g.spec"
    spec.write_text("language { relations R: V; functions f: V -> V; }")
    code, report = run_command(["flatten", "--lang", str(spec), "--formula", "R(f(x))"])
    assert code == 0
    assert report.data["disjuncts"] == ["exists _w0: f(x)=_w0 & R(_w0)"]


@pytest.mark.parametrize("argv", [
    ["flatten", "--lang", "builtin:nope", "--formula", "x=x"],
    ["flatten", "--lang", GRAPHS, "--formula", "E(x,"],
    ["enum", "--spec", "/no/such/file.spec", "--size", "2"],
    ["no-such-command"],
])
def test_usage_errors_exit_2(argv):
    code, _ = run_command(argv)
    assert code == 2


def test_machine_output_reproducible(tmp_path):
    argv = ["--format", "machine", "--seed", "4", "generic", "build", "--spec", "builtin:triangle-free",
            "--budget", "15"]
    outs = []
    for i in range(2):
        (tmp_path / str(i)).mkdir()
        path = tmp_path / str(i) / "r.json"
        subprocess.run([sys.executable, "-m", "fusionlab.cli", *argv, "--report", "r.json"],
                       check=True, capture_output=True, cwd=tmp_path / str(i))
        outs.append(path.read_text())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["seed"] == 4


def test_enum_counts_members():
    code, report = run_command(["enum", "--spec", "builtin:triangle-free", "--size", "4"])
    assert code == 0 and report.data["count"] == 7 and len(report.data["structures"]) == 7


def test_suite_names_registered():
    assert set(SUITES) == {"henson", "rg-example", "roundtrips", "closure-laws"}
