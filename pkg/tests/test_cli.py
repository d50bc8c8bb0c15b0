import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from extremo.cli import main
from extremo.io import ingest_csv

PARAMS = ["--theta1", "0.4", "--alpha1", "1.5", "--theta2", "0.2", "--alpha2", "1.0"]


@pytest.fixture(scope="module")
def field_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "f.csv"
    assert main(["simulate", "--n", "10", "--t", "5", *PARAMS, "--seed", "7", "--out", str(out)]) == 0
    return out


def test_simulate_is_deterministic(field_csv, tmp_path):
    again = tmp_path / "g.csv"
    main(["simulate", "--n", "10", "--t", "5", *PARAMS, "--seed", "7", "--out", str(again)])
    assert again.read_bytes() == field_csv.read_bytes()
    f = ingest_csv(field_csv)
    assert f.values.shape == (10, 10, 5)


def test_simulate_with_noise(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["simulate", "--n", "3", "--t", "2", *PARAMS, "--seed", "1", "--out", str(a)])
    main(["simulate", "--n", "3", "--t", "2", *PARAMS, "--seed", "1", "--noise-sd", "0.2",
          "--out", str(b)])
    assert np.all(ingest_csv(b).values >= ingest_csv(a).values)


def test_fit_json(field_csv, tmp_path):
    out = tmp_path / "fit.json"
    code = main(["fit", "--input", str(field_csv), "--axis", "spatial", "--quantile", "0.9",
                 "--weights", "exp2", "--beta1", "0.3", "--out", str(out)])
    assert code == 0
    d = json.loads(out.read_text())
    for key in ("theta", "alpha", "constrained", "unconstrained_alpha", "dropped_lags",
                "threshold", "weights_rule"):
        assert key in d
    assert d["weights_rule"] == "exp2"


def test_fit_oracle(capsys):
    assert main(["fit", "--oracle", "--axis", "spatial", *PARAMS]) == 0
    d = json.loads(capsys.readouterr().out)
    assert_allclose([d["theta"], d["alpha"]], [0.4, 1.5], atol=1e-9)
    assert main(["fit", "--oracle", "--axis", "temporal", *PARAMS]) == 0
    d = json.loads(capsys.readouterr().out)
    assert_allclose([d["theta"], d["alpha"]], [0.2, 1.0], atol=1e-9)


def test_extremogram_csv(field_csv, tmp_path):
    out = tmp_path / "e.csv"
    assert main(["extremogram", "--input", str(field_csv), "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "axis,lag,value,corrected_value,slices,threshold"
    axes = {r.split(",")[0] for r in rows[1:]}
    assert axes == {"spatial", "temporal"}


def test_ci_and_permtest(field_csv, tmp_path):
    ci = tmp_path / "ci.json"
    code = main(["ci", "--input", str(field_csv), "--axis", "spatial", "--block", "8",
                 "--step", "1", "--spatial-lags-sq", "1,2,4", "--quantile", "0.8",
                 "--out", str(ci)])
    assert code == 0
    d = json.loads(ci.read_text())
    assert d["n_blocks"] == 9
    lo, hi = d["theta_interval"]
    assert lo <= d["theta"] <= hi

    env = tmp_path / "env.csv"
    code = main(["permtest", "--input", str(field_csv), "--n-perm", "100", "--band", "0.9",
                 "--spatial-lags-sq", "1,2", "--temporal-lags", "1,2", "--seed", "3",
                 "--out", str(env)])
    assert code == 0
    rows = env.read_text().splitlines()
    assert rows[0] == "axis,lag,observed,lo,hi,inside"
    assert len(rows) == 5


def test_study_requires_seed():
    with pytest.raises(SystemExit):
        main(["study", "--preset", "desk"])


def test_study_tiny(tmp_path):
    out = tmp_path / "s.json"
    code = main(["study", "--preset", "paper", "--scale", "0.1", "--reps", "1", "--seed", "4",
                 "--no-ci", "--out", str(out)])
    assert code == 0
    d = json.loads(out.read_text())
    assert set(d) == {"per_param", "reps", "config_echo"}
    assert d["config_echo"]["seed"] == 4


def test_errors_exit_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("i1,i2,t,value\n1,1,1,2\n1,1,1,3\n")
    assert main(["fit", "--input", str(bad)]) == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("extremo fit: error:") and "\n" not in err
    assert main(["fit", "--input", str(tmp_path / "missing.csv")]) == 1
    assert main(["fit"]) == 1
