import csv
import io
import json
import math

import pytest

from hyperconv import GridMeasure
from hyperconv.cli import EXIT_INPUT, EXIT_OK, EXIT_REGIME, EXIT_VERIFY, main


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _body(text):
    """CSV rows after the '# key = value' header."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(lines))))


def test_kernel_row_at_two(capsys):
    code, out, _ = _run(capsys, "kernel", "--model", "naimark", "--x", "1", "--y", "2")
    assert code == EXIT_OK
    rows = _body(out)
    assert rows[0] == ["t", "k"]
    values = {round(float(t), 9): float(k) for t, k in rows[1:]}
    assert values[2.0] == pytest.approx(1 / (2 * math.sinh(1.0)), abs=1e-6)
    assert "# x = 1.0" in out


def test_header_echoes_effective_parameters(capsys):
    _, out, _ = _run(capsys, "kernel", "--model", "bessel-kingman:2", "--x", "1", "--y", "1.5", "--h", "0.01")
    header = [ln for ln in out.splitlines() if ln.startswith("#")]
    keys = {ln[2:].split(" = ")[0] for ln in header}
    assert {"command", "model", "x", "y", "h", "method"} <= keys


@pytest.mark.parametrize(
    "model, verdict",
    [("bessel-kingman:2", "invariance-regime"), ("naimark", "nu-infinity-regime")],
)
def test_classify_verdicts(capsys, model, verdict):
    code, out, _ = _run(capsys, "classify", "--model", model, "--format", "json")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["config"]["verdict"] == verdict
    assert doc["report"]["verdict"] == verdict
    if model == "naimark":
        assert doc["report"]["ft_min"] > 0


def test_nu_infty_on_rho_zero_is_a_regime_error(capsys):
    code, _, err = _run(capsys, "nu-infty", "--model", "bessel-kingman:2")
    assert code == EXIT_REGIME
    assert "RegimeError" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["kernel", "--model", "no-such-model"],
        ["kernel", "--bogus"],
        ["kernel", "--x", "-1"],
        ["verify", "--tol", "c2_l1"],
        ["verify", "--tol", "nope=1"],
        ["verify", "--only", "c99"],
        [],
    ],
)
def test_input_errors_exit_one(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == EXIT_INPUT
    assert err


def test_model_file_round_trip(tmp_path, capsys):
    path = tmp_path / "jac.model"
    path.write_text("# Jacobi test model\nfamily = jacobi\nalpha = 1\nbeta = 0\n")
    code, out, _ = _run(capsys, "model", "validate", "--model", str(path), "--format", "json")
    assert code == EXIT_OK
    assert json.loads(out)["validation"]["passed"]


def test_bad_model_file_exits_one(tmp_path, capsys):
    path = tmp_path / "bad.model"
    path.write_text("family = jacobi\nalpha = 1\n")
    code, _, _ = _run(capsys, "kernel", "--model", str(path))
    assert code == EXIT_INPUT


def test_out_directory_and_determinism(tmp_path, capsys):
    for d in ("a", "b"):
        code, _, _ = _run(capsys, "verify", "--only", "c1x,c11", "--format", "json", "--out", str(tmp_path / d))
        assert code == EXIT_OK
    first = (tmp_path / "a" / "verify.json").read_bytes()
    assert first == (tmp_path / "b" / "verify.json").read_bytes()
    doc = json.loads(first)
    assert doc["failures"] == []
    for entry in doc["results"]:
        assert set(entry) == {"criterion", "measured", "expected", "tolerance", "provenance", "pass"}


def test_model_action_names_the_output_file(tmp_path, capsys):
    _run(capsys, "model", "validate", "--model", "naimark", "--out", str(tmp_path))
    assert (tmp_path / "model-validate.csv").exists()


def test_tolerance_override_makes_verify_fail(capsys):
    code, out, err = _run(capsys, "verify", "--only", "c2", "--tol", "c2_l1=1e-8", "--format", "json")
    assert code == EXIT_VERIFY
    doc = json.loads(out)
    assert any(f.startswith("2a") for f in doc["failures"])
    assert "FAIL" in err


def test_nu_csv_round_trips(capsys):
    code, out, _ = _run(capsys, "nu", "--model", "naimark", "--y", "1", "--h", "0.01")
    assert code == EXIT_OK
    mu = GridMeasure.from_csv(out)
    assert mu.mass() == pytest.approx(1.0, abs=1e-9)
    assert mu.density_at(0.0) == pytest.approx(1 / (2 * math.sinh(1.0)), abs=1e-4)


def test_eigen_accepts_complex_lambda(capsys):
    code, out, _ = _run(capsys, "eigen", "--model", "naimark", "--lambda", "1i", "--xmax", "2", "--format", "json")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["rows"]


def test_cfun_table(capsys, monkeypatch):
    monkeypatch.setenv("HYPERCONV_THREADS", "2")
    code, out, _ = _run(capsys, "cfun", "--model", "naimark", "--lambda", "1,2")
    assert code == EXIT_OK
    assert len(_body(out)) == 3


def test_translate_constant_is_constant(capsys):
    code, out, _ = _run(capsys, "translate", "--model", "jacobi:1,0", "--f", "1", "--y", "0.5", "--h", "0.01", "--xmax", "3")
    assert code == EXIT_OK
    rows = _body(out)[1:]
    assert all(abs(float(r[1]) - 1.0) < 1e-9 for r in rows)


def test_distances_report_has_curves(capsys):
    code, out, _ = _run(capsys, "distances", "--model", "naimark", "--y", "3,5", "--h", "0.001", "--kernel-check")
    assert code == EXIT_OK
    assert "[d_kernel]" in out
