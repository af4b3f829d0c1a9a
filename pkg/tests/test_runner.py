import warnings

import numpy as np
import pytest

from chain_hydro import runner
from chain_hydro.runner import (ConfigError, convergence_table, config_from_dict, load_config, main,
                                parse_test_function, run_experiment)


def write(tmp_path, text, name="exp.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def strip_stamp(path):
    return "".join(line for line in open(path) if not line.startswith("# generated="))


def test_convergence_table_power_law():
    rows = [(n, s, 3.0 / n) for n in (64, 128, 256, 512) for s in range(3)]
    fit = convergence_table(rows)
    assert fit.slope == pytest.approx(-1.0, abs=1e-12) and fit.stderr < 0.01
    const = convergence_table([(n, 0, 0.2) for n in (64, 128, 256)])
    assert const.slope == pytest.approx(0.0, abs=1e-12)
    rms = convergence_table([(n, s, (-1) ** s / np.sqrt(n)) for n in (64, 128, 256) for s in range(2)], "rms")
    assert rms.slope == pytest.approx(-0.5)


def test_convergence_table_degenerate_rows():
    rows = [(64, 0, 0.0), (64, 1, 1 / 64), (128, 0, 1 / 128), (256, 0, 1 / 256)]
    with pytest.warns(UserWarning, match="excluded"):
        fit = convergence_table(rows)
    assert fit.excluded == 1 and fit.slope == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            convergence_table([(64, 0, 1.0), (128, 0, 0.5), (256, 0, 0.0)])


def test_config_validation():
    base = {"kind": "conservation", "N": [64], "seeds": [1], "times": [0.5]}
    cfg = config_from_dict(base)
    assert cfg.N == (64,) and cfg.mass_law.mean == 1.0
    bad = [
        {"N": []}, {"N": [4]}, {"seeds": [1, 1]}, {"times": [-1.0]}, {"kind": "nope"},
        {"colour": 1}, {"tolerances": {"bogus": 1}}, {"options": {"samples": 3}},
        {"mass_law": "gamma 1"}, {"profiles": {"beta": {"kind": "constant", "coeffs": [-1.0]}}},
        {"kind": "localization", "alpha": 0.45, "gamma": 0.8},
    ]
    for patch in bad:
        with pytest.raises(ConfigError):
            config_from_dict({**base, **patch})


def test_test_function_specs():
    assert parse_test_function("constant:2")(0.3) == 2.0
    assert parse_test_function("sine:2").kind == "C1_vanishing_ends"
    for spec in ("sine:0", "sine:1.5", "tanh:1"):
        with pytest.raises(ValueError):
            parse_test_function(spec)


def test_empty_n_list_exit_status(tmp_path, capsys):
    path = write(tmp_path, 'kind = "conservation"\nN = []\nseeds = [1]\n')
    assert main(["run", str(path)]) == 2
    assert "field 'N'" in capsys.readouterr().err


def test_parse_error_has_line(tmp_path, capsys):
    path = write(tmp_path, 'kind = "conservation"\nN = [64\nseeds = [1]\n')
    assert main(["validate", str(path)]) == 2
    assert "line" in capsys.readouterr().err


def test_validate_and_list(tmp_path, capsys):
    path = write(tmp_path, 'kind = "averaging"\nN = [64, 128]\nseeds = [1, 2]\n')
    assert main(["validate", str(path)]) == 0
    assert main(["list-experiments"]) == 0
    out = capsys.readouterr().out
    for kind in runner.KINDS:
        assert kind in out


def test_conservation_run_passes(tmp_path):
    path = write(tmp_path, 'kind = "conservation"\nN = [256]\nseeds = [5]\ntimes = [0.0, 0.5, 1.0]\n')
    assert main(["run", str(path), "--out", str(tmp_path / "out")]) == 0
    checks = (tmp_path / "out" / "exp_checks.csv").read_text().splitlines()
    assert checks[0] == "# schema=1"
    assert all(",pass," in line for line in checks[3:])
    assert len(checks) == 7


def test_determinism_and_workers(tmp_path):
    text = 'kind = "averaging"\nN = [64, 128, 256]\nseeds = [1, 2, 3]\ntimes = [0.5]\n'
    path = write(tmp_path, text)
    main(["run", str(path), "--out", str(tmp_path / "a")])
    main(["run", str(path), "--out", str(tmp_path / "b")])
    main(["run", str(path), "--out", str(tmp_path / "c"), "--workers", "2"])
    for name in ("exp_rows.csv", "exp_summary.csv", "exp_fits.csv", "exp_A1_t0_5.svg"):
        a = strip_stamp(tmp_path / "a" / name)
        assert a == strip_stamp(tmp_path / "b" / name) == strip_stamp(tmp_path / "c" / name)
    rows = (tmp_path / "a" / "exp_rows.csv").read_text().splitlines()
    assert rows[0] == "# schema=1" and rows[1].startswith("# generated=")
    assert rows[2] == "experiment_id,N,seed,t,quantity,value"
    svg = (tmp_path / "a" / "exp_A1_t0_5.svg").read_text()
    assert "<svg" in svg and "xlink:href=\"http" not in svg


def test_seed_override_and_env(tmp_path, monkeypatch):
    path = write(tmp_path, 'kind = "conservation"\nN = [32]\nseeds = [1, 2, 3]\ntimes = [1.0]\n')
    monkeypatch.setenv("CHAIN_HYDRO_OUT", str(tmp_path / "env"))
    assert main(["run", str(path), "--seed-override", "9"]) == 0
    body = (tmp_path / "env" / "exp_rows.csv").read_text().splitlines()[3:]
    assert {line.split(",")[2] for line in body} == {"9"}


def test_failing_check_gives_nonzero(tmp_path):
    text = ('kind = "localization"\nN = [64, 128, 256]\nseeds = [1]\n'
            '[tolerances]\npass_rate_threshold = 0.99\n')
    path = write(tmp_path, text)
    assert main(["run", str(path), "--out", str(tmp_path / "o")]) == 1
    modes = (tmp_path / "o" / "exp_modes.csv").read_text().splitlines()
    assert modes[2] == "N,seed,k,omega,center,outside_max,ipr,pass"


def test_clean_chain_kind(tmp_path):
    text = ('kind = "clean_chain"\nN = [64, 128, 256]\nseeds = [1]\ntimes = [1.0]\n'
            '[options]\nsamples = 2000\n[tolerances]\napprox_ratio = 0.25\n')
    cfg = load_config(write(tmp_path, text))
    assert run_experiment(cfg, out=str(tmp_path / "o"), verbose=False) == 0
    assert (tmp_path / "o" / "exp_wavefield_N128.csv").exists()


def test_partial_results_flushed(tmp_path, capsys):
    text = 'kind = "clean_chain"\nN = [64, 100]\nseeds = [1]\ntimes = [1.0]\n[options]\nk = 0.3\n'
    cfg = load_config(write(tmp_path, text))
    assert run_experiment(cfg, out=str(tmp_path / "o"), verbose=False) == 1
    assert "failed" in capsys.readouterr().err
    rows = (tmp_path / "o" / "exp_rows.csv").read_text()
    assert "exp,100," in rows and "exp,64," not in rows
