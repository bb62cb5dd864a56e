import json

import pytest

from lwrnet.cli import EXIT_IO, EXIT_USAGE, EXIT_VALIDATION, main
from lwrnet.experiments import ExperimentConfig, exp_initial_data


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_help_documents_exit_codes(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0
    assert "exit codes" in out and "LWRNET_OUT" in out


def test_pipeline_matches_experiment_at_t0(tmp_path, capsys):
    net = tmp_path / "net.json"
    assert run(capsys, "generate-network", "--ell", "3", "--out", str(net))[0] == 0
    for name, pattern in (("s", "rightward-half"), ("d", "leftward-half")):
        code, _, err = run(capsys, "simulate", "--network", str(net), "--initial", pattern,
                           "--T", "0", "--times", "0", "--out", str(tmp_path / name))
        assert code == 0, err
    a = tmp_path / "s" / "rho_t0.0000.csv"
    b = tmp_path / "d" / "rho_t0.0000.csv"
    code, out, _ = run(capsys, "distance", str(a), str(b), "--network", str(net))
    assert code == 0
    expected = exp_initial_data(ExperimentConfig(kind="initial_data", ells=(3,), T=0.0,
                                                 sample_times=[0.0], charts=False))
    assert float(out) == pytest.approx(expected["series_ell3.csv"].rows[0][1], abs=1e-12)
    code, out, _ = run(capsys, "distance", str(a), str(a), "--network", str(net))
    assert float(out) == 0.0
    manifest = json.loads((tmp_path / "s" / "manifest.json").read_text())
    assert manifest["config"]["initial"] == "rightward-half"


def test_experiment_writes_manifest(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("LWRNET_OUT", str(tmp_path))
    code, _, err = run(capsys, "experiment", "--kind", "convergence_1d", "--no-charts")
    assert code == 0, err
    out = tmp_path / "convergence_1d"
    header = (out / "convergence_1d.csv").read_text().splitlines()[0]
    assert header == "dx,H,abs_err,bound,W_line"
    assert json.loads((out / "manifest.json").read_text())["tool"] == "lwrnet"


def test_config_file_and_flag_override(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"kind": "junction_all", "ells": [3], "T": 1.0, "n_samples": 2}))
    code, _, err = run(capsys, "experiment", "--config", str(conf), "--eps", "0.0",
                       "--out", str(tmp_path / "o"), "--no-charts")
    assert code == 0, err
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert m["config"]["eps"] == 0.0 and m["config"]["T"] == 1.0


def test_error_exit_codes(tmp_path, capsys):
    assert run(capsys, "experiment", "--bogus")[0] == EXIT_USAGE
    assert run(capsys, "experiment")[0] == EXIT_USAGE
    code, _, err = run(capsys, "experiment", "--kind", "junction_single", "--ell", "4")
    assert code == EXIT_VALIDATION and "odd" in err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "road_closure", "colour": 1}))
    assert run(capsys, "experiment", "--config", str(bad))[0] == EXIT_VALIDATION
    code, _, err = run(capsys, "distance", "missing.csv", "x.csv", "--network",
                       str(tmp_path / "none.json"))
    assert code == EXIT_IO and err.count("\n") == 1
    assert run(capsys, "generate-network", "--ell", "1", "--out", str(tmp_path / "n.json"))[0] \
        == EXIT_VALIDATION
