import csv
import io
import json

import numpy as np
import pytest

from bubblekit.cli import RunConfig, run
from bubblekit.config import ConfigError
from conftest import scenario_path


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def parse(text):
    return list(csv.reader(io.StringIO(text)))


@pytest.fixture
def identity_Q(tmp_path):
    p = tmp_path / "identity.json"
    p.write_text(json.dumps(np.eye(4).tolist()))
    return str(p)


def test_constants_table_shape(capsys):
    code, out, _ = call(capsys, "constants", "--n", "5")
    rows = parse(out)
    assert code == 0
    assert rows[0] == ["name", "value", "error_estimate"]
    assert [r[0] for r in rows[1:]] == ["c0", "c2", "c3", "c4", "c5", "c6", "kappa1", "kappa2", "kappa3"]


def test_csv_roundtrips_at_17_digits(capsys):
    from bubblekit.constants import compute_constants

    _, out, _ = call(capsys, "constants", "--n", "6")
    T = compute_constants(6)
    for name, value, _ in parse(out)[1:]:
        assert float(value) == getattr(T, name)


def test_vortex_deterministic(capsys, identity_Q):
    argv = ["vortex", "--n", "5", "--m", "3", "--Q", identity_Q, "--seed", "7"]
    _, first, _ = call(capsys, *argv)
    _, second, _ = call(capsys, *argv)
    assert first == second
    rows = parse(first)
    assert rows[0][:3] == ["energy", "virial_residual", "morse_index"]
    assert len(rows[0]) == 3 + 3 * 4
    assert all(abs(float(r[1])) <= 1e-9 for r in rows[1:])


def test_vortex_q_object_form(capsys, tmp_path):
    p = tmp_path / "q.json"
    p.write_text(json.dumps({"Q": np.eye(4).tolist()}))
    code, out, _ = call(capsys, "vortex", "--n", "5", "--m", "2", "--Q", str(p), "--starts", "20")
    assert code == 0
    assert len(parse(out)) == 2


def test_predict_columns(capsys):
    code, out, _ = call(capsys, "predict", "--config", scenario_path("cluster.json"), "--eps", "1e-4")
    rows = parse(out)
    assert code == 0
    assert rows[0] == ["index", "type"] + [f"a_{k}" for k in range(1, 9)] + ["lambda", "alpha", "mu"]
    assert [r[1] for r in rows[1:]] == ["cluster"] * 3


def test_sweep_rows(capsys):
    code, out, _ = call(capsys, "sweep", "--config", scenario_path("interior.json"), "--eps-list", "1e-2,1e-3")
    rows = parse(out)
    assert code == 0
    assert len(rows) == 3
    assert [float(r[0]) for r in rows[1:]] == [1e-2, 1e-3]


def test_output_file(capsys, tmp_path):
    dest = tmp_path / "c.csv"
    code, out, _ = call(capsys, "constants", "--n", "7", "--out", str(dest))
    assert code == 0 and out == ""
    assert dest.read_text().startswith("name,value,error_estimate\n")


def test_verify_passes(capsys):
    code, out, _ = call(capsys, "verify", "--starts", "60")
    rows = parse(out)
    assert code == 0
    assert rows[0] == ["check", "value", "threshold", "status"]
    assert all(r[3] == "pass" for r in rows[1:])


def test_malformed_json_exit_2(capsys, tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{"field": ')
    code, _, err = call(capsys, "predict", "--config", str(p), "--eps", "1e-3")
    assert code == 2
    assert str(p) in err


def test_bad_key_reported(capsys, tmp_path):
    doc = json.loads(open(scenario_path("interior.json")).read())
    doc["field"]["terms"][0]["coef"] = doc["field"]["terms"][0].pop("coeff")
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    code, _, err = call(capsys, "predict", "--config", str(p), "--eps", "1e-3")
    assert code == 2
    assert "coef" in err and str(p) in err


def test_missing_argument_exit_2(capsys):
    code, _, err = call(capsys, "predict", "--eps", "1e-3")
    assert code == 2
    assert "--config" in err


def test_unknown_tolerance_exit_2(capsys):
    code, _, err = call(capsys, "constants", "--n", "5", "--tolerance", "bogus=1")
    assert code == 2
    assert "bogus" in err


def test_degenerate_q_exit_2(capsys, tmp_path):
    p = tmp_path / "q.json"
    p.write_text(json.dumps(np.diag([1.0, 0.0, 1.0, 1.0]).tolist()))
    code, _, _ = call(capsys, "vortex", "--n", "5", "--m", "2", "--Q", str(p))
    assert code == 2


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig("constants", seed=-1)
    with pytest.raises(ConfigError):
        RunConfig("constants", tolerances={"quadrature": 0.0})
    assert RunConfig("constants", tolerances={"dedup": 1e-7}).tol("dedup") == 1e-7


@pytest.mark.parametrize(
    "argv",
    [
        ["constants", "--n", "8"],
        ["predict", "--config", scenario_path("boundary_simple.json"), "--eps", "1e-3"],
        ["sweep", "--config", scenario_path("cluster.json"), "--eps-list", "1e-2,1e-3,1e-4"],
    ],
)
def test_commands_deterministic(capsys, argv):
    _, a, _ = call(capsys, *argv)
    _, b, _ = call(capsys, *argv)
    assert a == b and a
