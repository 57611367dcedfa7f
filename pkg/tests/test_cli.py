import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest
from conftest import DATA

from seqident.cli import build_parser, main
from seqident.io import read_full, write_full
from seqident.sensitivity import DEFAULT_DRAWS


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def identify(tmp_path, table=DATA / "mcar_independent.txt", plan=DATA / "plan_example1.json", *extra):
    out = tmp_path / "id"
    return main(["identify", str(table), str(plan), "--out", str(out), *extra]), out


def test_identify_mcar(tmp_path, capsys):
    code, out = identify(tmp_path)
    assert code == 0
    text = capsys.readouterr().out
    assert "1,1 0.41999999999999998" in (out / "study.txt").read_text()
    assert "1,1 0.41999999999999998" in text and "pass" in text
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "identify"
    assert set(manifest["outputs"]) == {"full.txt", "study.txt", "stage_factors.json", "nps_report.json",
                                        "plan.json"}
    assert manifest["inputs"]["table"]["sha256"] == digest(DATA / "mcar_independent.txt")
    assert manifest["outputs"]["full.txt"] == digest(out / "full.txt")


def test_identify_output_verifies(tmp_path, capsys):
    _, out = identify(tmp_path, DATA / "mcar_independent.txt", DATA / "plan_example2.json")
    assert main(["verify", str(out / "full.txt"), str(DATA / "mcar_independent.txt")]) == 0
    assert "pass" in capsys.readouterr().out


def test_invalid_plan_exit_2(tmp_path, capsys):
    assert main(["validate-plan", str(DATA / "plan_invalid_carry.json")]) == 2
    err = capsys.readouterr().err
    assert "invalid plan" in err and "R_2" in err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"blocks": [[1], [2]], "carry": [[2]]}))
    code, _ = identify(tmp_path, DATA / "mcar_independent.txt", bad)
    assert code == 2
    assert "R_1 = {2}" in capsys.readouterr().err


def test_validate_plan_against_table(capsys):
    assert main(["validate-plan", str(DATA / "plan_example1.json"), "--table",
                 str(DATA / "mcar_independent.txt")]) == 0
    assert "plan ok" in capsys.readouterr().out
    assert main(["validate-plan", str(DATA / "plan_example1.json"), "--table",
                 str(DATA / "synthetic_survey_counts.txt")]) == 2


def test_structural_zero_exit_3(tmp_path, capsys):
    code, _ = identify(tmp_path, DATA / "structural_zero.txt")
    assert code == 3
    err = capsys.readouterr().err
    assert "step 1" in err and "zero denominator" in err


def test_structural_zero_uniform_policy(tmp_path):
    code, out = identify(tmp_path, DATA / "structural_zero.txt", DATA / "plan_example1.json",
                         "--zero-cell-policy", "uniform")
    assert code == 0
    diag = json.loads((out / "manifest.json").read_text())["diagnostics"]
    assert diag["filled_cells"][0] > 0
    assert any("uniform" in c for c in diag["conventions"])


def test_multivariable_mar_flagged(tmp_path, capsys):
    plan = tmp_path / "joint.json"
    plan.write_text(json.dumps({"blocks": [[1, 2]], "steps": ["ConditionalMAR"]}))
    code, out = identify(tmp_path, DATA / "mcar_independent.txt", plan)
    assert code == 0
    conventions = json.loads((out / "manifest.json").read_text())["diagnostics"]["conventions"]
    assert conventions == ["step 1: multi-variable ConditionalMAR completed by the MAR fixed point"]


def test_verify_perturbed(tmp_path, capsys):
    _, out = identify(tmp_path)
    full = read_full(out / "full.txt")
    probs = np.array(full.probs)
    probs[0, 1, 0, 1] += 0.01  # x = (1, 2), X2 missing
    probs /= probs.sum()
    bad = tmp_path / "bad.txt"
    write_full(type(full)(full.space, probs), bad)
    capsys.readouterr()
    assert main(["verify", str(bad), str(DATA / "mcar_independent.txt"), "--out", str(tmp_path / "v")]) == 1
    text = capsys.readouterr().out
    assert "at pattern 01 cell (1,*)" in text and "FAIL" in text
    assert (tmp_path / "v" / "nps_report.json").exists()


def test_verify_space_mismatch(tmp_path, capsys):
    _, out = identify(tmp_path)
    assert main(["verify", str(out / "full.txt"), str(DATA / "synthetic_survey_counts.txt")]) == 2


def sensitivity(tmp_path, name, *extra):
    out = tmp_path / name
    code = main(["sensitivity", str(DATA / "synthetic_survey_counts.txt"), str(DATA / "suite_six.json"),
                 "--out", str(out), *extra])
    assert code == 0
    return out


def test_sensitivity_reproducible(tmp_path):
    a = sensitivity(tmp_path, "a", "--seed", "1", "--draws", "200")
    b = sensitivity(tmp_path, "b", "--seed", "1", "--draws", "200")
    for name in ("draws.csv", "summary.json", "summary.txt"):
        assert digest(a / name) == digest(b / name)
    summary = json.loads((a / "summary.json").read_text())
    assert summary["n_draws"] == 200
    assert "ICIN" in summary["unavailable"]
    assert all(m["nps_spot_checks"]["all_passed"] for m in summary["mechanisms"].values())


def test_sensitivity_seeds_differ(tmp_path):
    a = sensitivity(tmp_path, "a", "--seed", "1", "--draws", "50")
    b = sensitivity(tmp_path, "b", "--seed", "2", "--draws", "50")
    assert digest(a / "draws.csv") != digest(b / "draws.csv")
    sa = json.loads((a / "summary.json").read_text())
    sb = json.loads((b / "summary.json").read_text())
    assert sa.keys() == sb.keys()
    assert sa["mechanisms"].keys() == sb["mechanisms"].keys()


def test_draws_default():
    args = build_parser().parse_args(["sensitivity", "c", "s"])
    assert not hasattr(args, "draws")
    assert DEFAULT_DRAWS == 5000


def test_draws_must_be_positive(capsys):
    assert main(["sensitivity", "c", "s", "--draws", "0"]) == 2


@pytest.mark.parametrize("argv", [
    ["--seed", "3", "--tolerance", "1e-9", "identify", "T", "P"],
    ["identify", "T", "P", "--seed", "3", "--tolerance", "1e-9"],
])
def test_global_flags_either_side(argv):
    args = build_parser().parse_args(argv)
    assert args.seed == 3 and args.tolerance == 1e-9


def test_inputs_not_mutated(tmp_path):
    inputs = [DATA / "mcar_independent.txt", DATA / "plan_example1.json", DATA / "synthetic_survey_counts.txt",
              DATA / "suite_six.json"]
    before = [digest(p) for p in inputs]
    identify(tmp_path)
    sensitivity(tmp_path, "s", "--draws", "10")
    assert [digest(p) for p in inputs] == before


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "seqident.cli", "identify", str(DATA / "mcar_independent.txt"),
                          str(DATA / "plan_example1.json"), "--out", str(tmp_path / "o")],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "0.41999999999999998" in out.stdout
