import csv
import io
import json

import pytest

from ckdyn import __version__
from ckdyn.cli import main


@pytest.fixture
def spec_file(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"k": 3, "d": 2, "alpha": [[0.5, 0], [0.3, 0.1]]}))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_help_lists_commands(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    text = capsys.readouterr().out
    for name in ("orbit", "classify-point", "basin-grid", "phi", "winding", "lambda",
                 "conjugacy-check", "series-demo", "fw3", "blowup-check"):
        assert name in text


def test_orbit_csv(capsys, spec_file):
    code, out, _ = run(capsys, "orbit", "--spec", spec_file, "--point", "3,0", "0.5,0", "0.2,0",
                       "--steps", "2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# config:") and '"seed": 0' in lines[0]
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    assert rows[0][0] == "step" and len(rows) == 4
    # H(3, 0.5, 0.2) = (9 + 0.25 + 0.06 + 0.02i, 0.2, 3)
    assert float(rows[2][1]) == pytest.approx(9.31) and float(rows[2][2]) == pytest.approx(0.02)


def test_classify_and_phi(capsys, spec_file):
    code, out, _ = run(capsys, "classify-point", "--spec", spec_file, "--point", "0", "0", "0")
    data = json.loads(out)
    assert code == 0 and data["status"] == "Undecided" and data["config"]["max_iter"] == 200
    code, out, _ = run(capsys, "phi", "--spec", spec_file, "--point", "3", "0", "0")
    data = json.loads(out)
    assert data["converged"] and len(repr(data["phi"][0]).replace(".", "")) >= 15


def test_basin_grid(capsys, spec_file):
    code, out, _ = run(capsys, "basin-grid", "--spec", spec_file, "--slice", "z1", "--center", "0,0",
                       "--extent", "8", "--res", "4")
    rows = [r for r in out.splitlines() if not r.startswith("#")]
    assert code == 0 and rows[0] == "i,j,re,im,steps" and len(rows) == 17
    # the corner cell at (-3, -3) already lies in V+
    assert rows[1].split(",")[4] == "0"


def test_winding_command(capsys, spec_file, tmp_path):
    curve = tmp_path / "c0.json"
    curve.write_text(json.dumps({"m": 1}))
    code, out, _ = run(capsys, "winding", "--spec", spec_file, "--curve", str(curve))
    assert code == 0 and json.loads(out)["alpha"] == "1 / 2^0"
    code, out, _ = run(capsys, "winding", "--spec", spec_file, "--m", "3", "--preimage", "2")
    assert json.loads(out)["alpha_fraction"] == "3/4"


def test_lambda_command(capsys, spec_file):
    code, out, _ = run(capsys, "lambda", "--spec", spec_file)
    roots = json.loads(out)["roots"]
    assert code == 0 and roots == [[0.0, -0.5], [0.0, 0.5]]


def test_conjugacy_check_command(capsys, spec_file):
    code, out, _ = run(capsys, "conjugacy-check", "--spec", spec_file, "--steps", "3", "--numeric",
                       "--samples", "5")
    data = json.loads(out)
    assert code == 0 and data["all_cancel"]
    assert all(c["residual_valuation_v"] == "inf" or c["residual_valuation_v"] >= data["order_v"]
               for c in data["components"])
    assert data["numeric"]["max_relative"] <= 1e-4
    code, out, _ = run(capsys, "conjugacy-check", "--spec", spec_file, "--order", "4")
    assert json.loads(out)["order_v"] == 48


def test_series_demo(capsys, spec_file):
    code, out, _ = run(capsys, "series-demo", "--spec", spec_file, "--steps", "2")
    data = json.loads(out)
    assert code == 0 and data["critical_u"] == "4/3" and "u^(12)" in data["g"]


def test_fw3_classify(capsys, tmp_path):
    params = tmp_path / "p.json"
    params.write_text(json.dumps({"a": 1, "alpha": 1, "b": 0}))
    code, out, _ = run(capsys, "fw3", "classify", "--class", "2", "--params", str(params))
    rep = json.loads(out)["report"]
    assert code == 0 and not rep["eligible"] and rep["failed_constraints"] == ["b!=0"]


def test_blowup_check(capsys):
    for d in ("2", "3"):
        code, out, _ = run(capsys, "blowup-check", "--d", d, "--k", "3")
        data = json.loads(out)
        assert code == 0 and data["max_residual"] < 1e-12 and data["interpretation"]


def test_errors_exit_nonzero(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "lambda", "--spec", str(bad))
    assert code != 0 and "error" in err
    bad.write_text(json.dumps({"k": 3, "d": 2, "alpha": [[3, 0], [0, 0]]}))
    code, _, err = run(capsys, "lambda", "--spec", str(bad))
    assert code != 0 and "alpha_2" in err
