import json
import os
import subprocess
import sys

import pytest

from dwork_semistable.cli import main, write_atomic


def call(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, json.loads(out.read_text()) if out.exists() else None


def test_rank_example(tmp_path):
    code, rep = call(["rank", "--N", "5", "--a", "0,0,0,0,0"], tmp_path)
    assert code == 0
    assert rep["result"]["rank"] == 4
    assert rep["config"]["command"] == "rank"
    assert rep["config"]["params"]["N"] == 5
    assert "version" in rep and "wall_time_s" not in rep


def test_charts_verify_example(tmp_path):
    out = tmp_path / "report.json"
    code = main(["charts", "verify", "--N", "3", "--i", "3", "--q", "7", "--locus", "T0", "--report", str(out)])
    rep = json.loads(out.read_text())
    assert code == 0 and rep["result"]["falsifier_points"] == 0


def test_naive_chart_falsifiers_exit_1(tmp_path):
    code, rep = call(["charts", "verify", "--N", "3", "--i", "1", "--q", "7", "--locus", "T0", "--chart", "naive"], tmp_path)
    assert code == 1 and rep["result"]["falsifier_points"] > 0


def test_monodromy_check_example(tmp_path):
    code, rep = call(["monodromy", "check", "--N", "3"], tmp_path)
    assert code == 0
    assert rep["result"]["verdict"]["verdict"] == "MAXIMALLY_UNIPOTENT"
    assert rep["result"]["verdict"]["n"] == 2
    assert len(rep["result"]["verdict"]["norms"]) == 3


def test_monodromy_continue_with_operator_file(tmp_path):
    op = tmp_path / "op.json"
    op.write_text(json.dumps({"order": 2, "coeffs": [[-6], [1, -54], [0, 1, -27]]}))
    code, rep = call(["monodromy", "continue", "--operator", str(op), "--verdict"], tmp_path)
    assert code == 0 and rep["result"]["verdict"]["verdict"] == "MAXIMALLY_UNIPOTENT"
    op.write_text(json.dumps({"order": 3, "coeffs": [[-6], [1, -54], [0, 1, -27]]}))
    code, rep = call(["monodromy", "continue", "--operator", str(op)], tmp_path, "bad.json")
    assert code == 2 and rep["error"]["type"] == "ConfigInvalid"


@pytest.mark.parametrize(
    "argv, code",
    [
        (["rank", "--N", "5", "--a", "0,0,0,1"], 2),
        (["rank", "--N", "5", "--a", "0,0,0,0,1"], 2),
        (["monodromy", "check", "--N", "5", "--a", "0,0,0,1,4"], 2),
        (["charts", "verify", "--N", "3", "--i", "1", "--q", "3"], 2),
        (["charts", "verify", "--N", "5", "--i", "1", "--q", "11", "--budget", "100"], 3),
    ],
)
def test_exit_codes(argv, code, tmp_path):
    got, rep = call(argv, tmp_path)
    assert got == code
    assert {"module", "type", "message"} <= set(rep["error"])


def test_subdivide(tmp_path):
    src = tmp_path / "tet.json"
    src.write_text(json.dumps({"vertices": [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 2]]}))
    code, rep = call(["subdivide", "--input", str(src), "--samples", "100", "--seed", "4"], tmp_path)
    assert code == 0 and rep["result"]["e"] == 2
    assert rep["result"]["pieces"][0]["coverage"]["gaps"] == 0
    code, _ = call(["subdivide", "--input", str(src), "--max-e", "1"], tmp_path, "cap.json")
    assert code == 3


def test_fan_section(tmp_path):
    src = tmp_path / "cx.json"
    src.write_text(json.dumps({"rank": 2, "cones": [{"generators": [[1, 0], [1, 2]]}], "functionals": {"S": [1, 0]}}))
    code, rep = call(["fan", "section", "--input", str(src)], tmp_path)
    assert code == 0 and rep["result"]["face_compatibility"] == []


def test_h0_and_atlas(tmp_path):
    code, rep = call(["charts", "h0", "--N", "3", "--i", "1", "--q", "7"], tmp_path)
    assert code == 0 and rep["result"]["composition_failures"] == 0
    out = tmp_path / "charts.json"
    assert main(["charts", "atlas", "--N", "3", "--i", "3", "--field", "q7", "--emit", str(out)]) == 0
    charts = json.loads(out.read_text())["result"]["charts"]
    assert len(charts) == 3
    assert all(c["special_fiber"]["reduced_normal_crossings"] for c in charts if "special_fiber" in c)


def test_hypothesis_with_monodromy(tmp_path):
    code, rep = call(["hypothesis", "--N", "3", "--a", "0,0,0", "--monodromy"], tmp_path)
    assert code == 0
    assert rep["verdicts"] and set(rep["verdicts"]) == {"MAXIMALLY_UNIPOTENT"}


def test_reports_are_deterministic(tmp_path):
    argv = ["subdivide", "--input", str(tmp_path / "p.json"), "--samples", "50", "--seed", "9"]
    (tmp_path / "p.json").write_text(json.dumps({"vertices": [[0, 0], [3, 0], [0, 2]]}))
    main([*argv, "--out", str(tmp_path / "a.json")])
    main([*argv, "--out", str(tmp_path / "b.json")])
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_timing_is_opt_in(tmp_path):
    out = tmp_path / "t.json"
    main(["--timing", "rank", "--N", "3", "--a", "0,1,2", "--out", str(out)])
    assert "wall_time_s" in json.loads(out.read_text())


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "sub" / "r.json"
    write_atomic(target, "{}\n")
    write_atomic(target, "[]\n")
    assert target.read_text() == "[]\n"
    assert os.listdir(target.parent) == ["r.json"]


def test_console_entry_point_and_workers_env(tmp_path):
    env = {**os.environ, "DWORK_SEMISTABLE_WORKERS": "2"}
    out = subprocess.run(
        [sys.executable, "-m", "dwork_semistable.cli", "charts", "verify", "--N", "3", "--i", "2", "--q", "5", "--chart", "U1"],
        env=env, capture_output=True, text=True,
    )
    assert out.returncode == 0
    assert json.loads(out.stdout)["config"]["params"]["workers"] == 2
