import io
import json
import subprocess
import sys
from pathlib import Path

from opwire.cli import run_cli
from opwire.modelfile import load, parse_model

MODELS = Path(__file__).resolve().parent.parent / "models"


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def m(name):
    return MODELS / name


def test_validate_corpus():
    for name in ("uav.model", "uav-finite.model", "uav-finite-perturbed.model", "delay.model"):
        code, out, _ = cli("validate", m(name))
        assert code == 0 and out.startswith("ok: ")
    assert cli("validate", m("uav.model"))[1] == "ok: 3 boxes, depth 2, 5 leaf boxes\n"


def test_missing_file_and_bad_json(tmp_path):
    code, _, err = cli("validate", tmp_path / "nope.model")
    assert code == 2 and "error" in err
    bad = tmp_path / "bad.model"
    bad.write_text("{")
    code, _, err = cli("validate", bad)
    assert code == 2 and "line 1" in err


def test_usage_error_exit_code():
    assert cli("frobnicate")[0] == 2
    assert cli("check", m("delay.model"), "--horizon", "-1")[0] == 2


def test_flatten_provenance():
    code, out, _ = cli("flatten", m("uav-finite.model"))
    assert code == 0
    doc = json.loads(out)
    prov = doc["provenance"]
    assert prov["D/autopilot"] == ["D"] and prov["C"] == []
    boxes = [b["id"] for b in doc["flattened"]["model"]["boxes"]]
    assert sorted(boxes) == sorted(prov)


def test_simulate_delay():
    code, out, _ = cli("simulate", m("delay.model"), "--inputs", m("delay.inputs.csv"))
    assert code == 0
    assert out == "t,y\n0,0\n1,1\n2,0\n"


def test_simulate_horizon_and_overrun():
    code, out, _ = cli("simulate", m("delay.model"), "--inputs", m("delay.inputs.csv"),
                       "--horizon", 2)
    assert code == 0 and out.count("\n") == 3
    code, _, err = cli("simulate", m("delay.model"), "--inputs", m("delay.inputs.csv"),
                       "--horizon", 9)
    assert code == 2 and "exceeds" in err


def test_simulate_lti_and_moore_corpus():
    code, out, _ = cli("simulate", m("uav.model"), "--inputs", m("uav.inputs.csv"))
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "t,s[0],s[1]" and len(lines) == 101
    code, out, _ = cli("simulate", m("uav-finite.model"), "--inputs", m("uav-finite.inputs.csv"))
    assert code == 0 and out.splitlines()[0] == "t,s" and len(out.splitlines()) == 101


def test_simulate_wrong_algebra():
    code, _, err = cli("simulate", m("uav.model"), "--inputs", m("uav.inputs.csv"),
                       "--algebra", "moore")
    assert code == 2


def test_compose_contracts():
    code, out, _ = cli("compose-contracts", m("uav-finite.model"))
    assert code == 0 and out.startswith("composite contract at <root>: ")


def test_compose_contracts_non_refined_box():
    code, _, err = cli("compose-contracts", m("uav-finite.model"), "--box", "L")
    assert code == 2 and "not refined" in err


def test_check_passes_on_corpus():
    code, out, _ = cli("check", m("uav-finite.model"))
    assert code == 0
    assert out.splitlines() == ["PASS L", "PASS C", "PASS D", "3 contracts checked, 0 violated"]


def test_check_reports_violation(tmp_path):
    doc = json.loads(m("delay.model").read_text())
    # contract: output equals input
    doc["model"]["boxes"][0]["contract"] = {"kind": "step", "pairs": [
        {"input": {"u": "0"}, "output": {"y": "0"}},
        {"input": {"u": "1"}, "output": {"y": "1"}}]}
    p = tmp_path / "copy.model"
    p.write_text(json.dumps(doc))
    code, out, _ = cli("check", p, "--horizon", 1)
    assert code == 1
    assert out.splitlines()[0] == "FAIL delay: inputs [(u=1)] leave the contract at tick 0"


def test_check_naturality():
    code, out, _ = cli("check-naturality", m("uav-finite.model"), "--horizon", 2)
    assert code == 0 and out == "naturality holds (16 traces)\n"
    code, out, _ = cli("check-naturality", m("uav-finite.model"), "--horizon", 2, "--box", "D")
    assert code == 0


def test_check_refinement():
    assert cli("check-refinement", m("uav-finite.model"), "--box", "D")[0] == 0
    code, out, _ = cli("check-refinement", m("uav.model"), "--box", "D")
    assert code == 0 and out == "refinement holds (lti, tol 1e-09)\n"
    code, out, _ = cli("check-refinement", m("uav-finite-perturbed.model"), "--box", "D")
    assert code == 1
    lines = out.splitlines()
    assert lines[1] == ("counterexample [(c=thrust, e=calm), (c=idle, e=calm), "
                        "(c=idle, e=calm), (c=idle, e=calm)]")
    assert lines[2].endswith("(s=high)]") and lines[3].endswith("(s=low)]")


def test_export_dot():
    code, out, _ = cli("export-dot", m("uav.model"))
    assert code == 0 and out.count("shape=box") == 3
    code, flat, _ = cli("export-dot", m("uav.model"), "--flat")
    assert flat.count("shape=box") == 5 and '"box:D/autopilot"' in flat


def test_max_enum_flag_and_env(monkeypatch):
    args = ("check-naturality", m("uav-finite.model"), "--horizon", 2)
    code, _, err = cli("--max-enum", 10, *args)
    assert code == 2 and "exceeds" in err
    monkeypatch.setenv("OPWIRE_MAX_ENUM", "10")
    assert cli(*args)[0] == 2
    # flag wins over the environment
    assert cli("--max-enum", 10 ** 6, *args)[0] == 0
    monkeypatch.setenv("OPWIRE_MAX_ENUM", "lots")
    assert cli(*args)[0] == 2


def test_repeated_runs_identical():
    for argv in (("flatten", m("uav.model")), ("export-dot", m("uav-finite.model"), "--flat"),
                 ("simulate", m("uav.model"), "--inputs", m("uav.inputs.csv")),
                 ("compose-contracts", m("uav-finite.model"))):
        assert cli(*argv) == cli(*argv)


def test_flatten_output_reparses():
    doc = json.loads(cli("flatten", m("uav.model"))[1])
    flat = parse_model(json.dumps(doc["flattened"]))
    assert flat.model.depth == 1
    assert flat.model.outer == load(m("uav.model")).model.outer


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "opwire", "validate", str(m("delay.model"))],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout == "ok: 1 boxes, depth 1, 1 leaf boxes\n"
