import json
import math

import pytest

from zollsurf import cli
from zollsurf.profiles import BlaschkeSpec, ParabolicSpec, bumps, desitter, odd_bump


def run(args, capsys):
    """(exit code, stdout table, stdout + stderr)."""
    code = cli.main(args)
    cap = capsys.readouterr()
    return code, cap.out, cap.out + cap.err


def write_spec(tmp_path, spec, name="spec.json", **extra):
    doc = cli.spec_document(spec)
    doc.update(extra)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def rows(text):
    return [line.split(",") for line in text.splitlines() if line and not line.startswith("#")][1:]


def test_validate_exit_codes(tmp_path, capsys):
    assert run(["validate", "desitter-parabolic"], capsys)[0] == 0
    even = ParabolicSpec(1, 0.0, (bumps((0.3, 1.0, 0.5), (0.3, -1.0, 0.5)),))
    code, out, log = run(["validate", write_spec(tmp_path, even)], capsys)
    assert code == 1 and "parabolic.oddness" in log


@pytest.mark.parametrize("text,needle", [
    ('{"family": "parabolic", "k": 1,\n "kappas": [}', ":2:"),
    ('{"family": "cubic", "k": 1}', "family"),
    ('{"family": "parabolic", "k": 1, "kappas": [{"type": "zero"}], "extra": 1}', "extra"),
    ('{"family": "parabolic", "k": 1, "kappas": [{"type": "terms", "terms": [{"shape": "bump", "amplitude": 1}]}]}',
     "kappas.0"),
    ('{"family": "parabolic", "k": 2, "kappas": [{"type": "zero"}]}', "needs k=2"),
])
def test_malformed_input_exit_2(tmp_path, capsys, text, needle):
    path = tmp_path / "bad.json"
    path.write_text(text)
    code, out, log = run(["validate", str(path)], capsys)
    assert code == 2 and needle in log


def test_missing_file_and_bad_flags(capsys):
    assert run(["validate", "/nonexistent/spec.json"], capsys)[0] == 2
    assert run(["zoll-verify", "desitter-parabolic", "--c-grid", "1:2"], capsys)[0] == 2
    assert run(["zoll-verify", "desitter-parabolic", "--method", "magic"], capsys)[0] == 2
    assert run(["blaschke", "desitter-parabolic"], capsys)[0] == 2


def test_zoll_verify_desitter(capsys):
    code, out, log = run(["zoll-verify", "desitter-parabolic"], capsys)
    assert code == 0
    assert out.startswith("# tol=")
    data = rows(out)
    assert len(data) == 16
    assert all(abs(float(r[2])) <= 1e-10 and float(r[4]) == pytest.approx(2 * math.pi, abs=1e-9) for r in data)


def test_zoll_verify_tau(tmp_path, capsys):
    spec = ParabolicSpec(1, 0.3, desitter("parabolic").kappas)
    code, out, log = run(["zoll-verify", write_spec(tmp_path, spec), "--c-grid", "0.5:5:4:log", "--method", "quad"],
                    capsys)
    assert code == 1
    assert all(float(r[2]) == pytest.approx(0.3, abs=1e-10) for r in rows(out))


def test_scan_block_in_spec(tmp_path, capsys):
    path = write_spec(tmp_path, desitter("parabolic"), scan={"c_grid": "1:2:3:lin", "tol": 1e-9})
    code, out, log = run(["zoll-verify", path], capsys)
    assert code == 0 and len(rows(out)) == 3 and out.startswith("# tol=1.0000000000000001e-09")


def test_out_files_are_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert run(["zoll-verify", "mobius-parabolic-k3", "--c-grid", "0.5:8:5:log", "--out", str(p)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    ma = json.loads((tmp_path / "a.csv.meta.json").read_text())
    mb = json.loads((tmp_path / "b.csv.meta.json").read_text())
    assert ma["spec_sha256"] == mb["spec_sha256"] and len(ma["spec_sha256"]) == 64
    assert ma["verdicts"]["length"] and ma["expected_length"] == pytest.approx(6 * math.pi)
    assert ma["command"][1] == "zoll-verify"


def test_scan_curvature_and_geodesic(capsys):
    code, out, log = run(["scan", "desitter-parabolic", "--quantity", "curvature", "--chart", "0"], capsys)
    assert code == 0
    assert all(abs(float(r[3]) - 1.0) <= 1e-8 for r in rows(out))
    code, out, log = run(["scan", "desitter-parabolic", "--quantity", "geodesic", "--c", "1"], capsys)
    assert code == 0
    pts = rows(out)
    assert pts[0][0] == pts[-1][0] == "0"
    assert abs(float(pts[0][1]) - float(pts[-1][1])) <= 1e-6 and abs(float(pts[0][2]) - float(pts[-1][2])) <= 1e-6


def test_scan_null_leaf(capsys):
    code, out, log = run(["scan", "desitter-parabolic", "--quantity", "null-leaf", "--point", "0.3", "0.5"], capsys)
    assert code == 0
    assert out.splitlines()[1] == "chart,x,y,asymptote"
    assert {float(r[3]) for r in rows(out)} == {0.3 - 4.0, 4.0 - 0.3}


def test_conformal_commands(capsys):
    assert run(["conformal", "--ppp", "1", "--boundary", "desitter:1"], capsys)[0] == 0
    assert run(["conformal", "--ppp", "2", "--boundary", "desitter:1"], capsys)[0] == 1
    assert run(["conformal", "--ppp", "1", "--normalize", "--boundary", "conjugated:1:0.2"], capsys)[0] == 0
    assert run(["conformal", "--normalize", "--ppp", "2", "--boundary", "desitter:1"], capsys)[0] == 2
    assert run(["conformal"], capsys)[0] == 2
    code, out, log = run(["conformal", "nonsmooth-k3", "--reflexion"], capsys)
    assert code == 0 and "C1: pass, C2: jump=0.439" in log


def test_abel_check_reports_both_forms(capsys):
    code, out, log = run(["abel-check"], capsys)
    assert code == 1  # the printed right-hand side of the J identity does not hold
    assert "abel_J_closed_form: pass" in log and "abel_J_printed: FAIL" in log and "abel_I: pass" in log


def test_blaschke_disjointness_verdict(tmp_path, capsys):
    good = write_spec(tmp_path, BlaschkeSpec(odd_bump(0.3, 0.5, 0.4), odd_bump(0.3, 4.5, 0.5)), "good.json")
    code, out, log = run(["blaschke", good, "--starts", "2", "--samples", "2000"], capsys)
    assert code == 0 and "disjoint: pass" in log
    wide = write_spec(tmp_path, BlaschkeSpec(odd_bump(0.3, 0.5, 0.4), odd_bump(0.3, 2.5, 2.0)), "wide.json")
    code, out, log = run(["blaschke", wide, "--starts", "0", "--samples", "2000"], capsys)
    assert code == 1 and "disjoint: FAIL" in log


def test_shipped_specs_parse():
    for path in sorted(cli.SPEC_DIR.glob("*.json")):
        spec, _, fp = cli.load_spec(str(path))
        assert len(fp) == 64
        assert cli.spec_document(spec) == json.loads(path.read_text())
