import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

from coagring.cli import main, parse_complex, parse_series


def _read_csv(path: Path):
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# coagring-csv")
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return header, rows


def test_parse_series_forms():
    s = parse_series("z", 8)
    assert s.coeffs[1] == 1.0
    s = parse_series("0.5z + 0.5z^3", 8)
    assert s.coeffs[1] == 0.5 and s.coeffs[3] == 0.5
    s = parse_series("0.3*z^2", 8)
    assert s.coeffs[2] == 0.3
    with pytest.raises(Exception):
        parse_series("banana", 8)


def test_parse_complex_units():
    assert parse_complex("1e-3i") == 1e-3j
    assert parse_complex("2+0.5j") == 2 + 0.5j


def test_simulate_trivial_single_cluster(tmp_path):
    rc = main(["simulate", "--n0", "1", "--out", str(tmp_path)])
    assert rc == 0
    data = json.loads((tmp_path / "realization.json").read_text())
    assert data["n_infinity"] == 1
    assert data["t_infinity"] == 0.0


def test_simulate_all_plus_fixed(tmp_path):
    rc = main(["simulate", "--n0", "5", "--p0", "1", "--init", "fixed", "--out", str(tmp_path)])
    assert rc == 0
    data = json.loads((tmp_path / "realization.json").read_text())
    assert data["n_infinity"] == 5
    assert data["t_infinity"] == 0.0


def test_simulate_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        rc = main(["simulate", "--n0", "10", "--p", "0.1", "--p0", "0.5",
                   "--seed", "42", "--out", str(out)])
        assert rc == 0
    for name in ("realization.json", "events.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert ma["outputs"] == mb["outputs"]


def test_env_seed_overrides_flag(tmp_path, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    monkeypatch.setenv("COAG_SEED", "99")
    assert main(["simulate", "--n0", "10", "--seed", "1", "--out", str(a)]) == 0
    monkeypatch.delenv("COAG_SEED")
    assert main(["simulate", "--n0", "10", "--seed", "99", "--out", str(b)]) == 0
    assert (a / "realization.json").read_bytes() == (b / "realization.json").read_bytes()


def test_invalid_config_exit_2(tmp_path):
    assert main(["simulate", "--n0", "0", "--out", str(tmp_path)]) == 2


def test_unknown_flag_exit_2(tmp_path, capsys):
    with pytest.raises(SystemExit) as err:
        main(["simulate", "--n0", "5", "--bogus", "1", "--out", str(tmp_path)])
    assert err.value.code == 2
    assert "--bogus" in capsys.readouterr().err


def test_ensemble_outputs_and_replay(tmp_path):
    out = tmp_path / "ens"
    rc = main(["ensemble", "--n0", "12", "--realizations", "50", "--seed", "5",
               "--z-grid", "0.5,2.0", "--threads", "1", "--out", str(out)])
    assert rc == 0
    header, rows = _read_csv(out / "summary.csv")
    assert header == ["n0", "M", "p", "p0", "init_mode", "mean_ninf", "sd_ninf",
                      "mean_tinf", "sd_tinf", "p_single", "se_p_single"]
    assert len(rows) == 1
    assert int(rows[0][0]) == 12 and int(rows[0][1]) == 50
    header, _ = _read_csv(out / "zfluct.csv")
    assert header == ["t", "mean_z", "var_z", "var_z0", "sigma_hat"]
    header, rows = _read_csv(out / "sizedist.csv")
    total_mass = sum(float(r[2]) for r in rows)
    assert total_mass == pytest.approx(1.0, abs=1e-9)
    # replay reproduces every digest
    rc = main(["replay", str(out / "manifest.json"), "--out", str(tmp_path / "replay")])
    assert rc == 0


def test_ensemble_single_realization_matches_simulate(tmp_path):
    out1 = tmp_path / "one"
    rc = main(["ensemble", "--n0", "9", "--realizations", "1", "--seed", "3",
               "--threads", "1", "--out", str(out1)])
    assert rc == 0
    out2 = tmp_path / "sim"
    rc = main(["simulate", "--n0", "9", "--seed", "3", "--out", str(out2)])
    assert rc == 0
    _, rows = _read_csv(out1 / "summary.csv")
    real = json.loads((out2 / "realization.json").read_text())
    assert float(rows[0][5]) == real["n_infinity"]
    assert float(rows[0][8]) == 0.0  # sd over one realization


def test_kinetic_subcommand_closed_form(tmp_path):
    rc = main(["kinetic", "--kernel", "random", "--symmetric", "--n0", "1",
               "--t", "4", "--out", str(tmp_path)])
    assert rc == 0
    _, rows = _read_csv(tmp_path / "spectra.csv")
    n_plus = sum(float(r[3]) for r in rows if r[1] == "plus")
    assert n_plus == pytest.approx(0.25, rel=1e-6)


def test_oracle_subcommand_monodisperse(tmp_path):
    rc = main(["oracle", "--f0", "z", "--t", "2", "--out", str(tmp_path)])
    assert rc == 0
    _, rows = _read_csv(tmp_path / "profile.csv")
    first = [r for r in rows if int(r[2]) == 1][0]
    assert float(first[3]) == pytest.approx(0.25, rel=1e-12)


def test_selfsim_subcommand_energy_column(tmp_path):
    rc = main(["selfsim", "--perturb", "1e-3i", "--tau-max", "20", "--out", str(tmp_path)])
    assert rc == 0
    header, rows = _read_csv(tmp_path / "ss_trajectory.csv")
    k = header.index("e_drift")
    drifts = [float(r[k]) for r in rows]
    assert max(drifts) <= 1e-8


def test_numerical_failure_exit_3(tmp_path):
    # a grotesque step size drives the RK4 update negative
    rc = main(["kinetic", "--kernel", "random", "--symmetric", "--n0", "1",
               "--t", "100", "--dt", "100", "--L", "8", "--out", str(tmp_path)])
    assert rc == 3


def test_manifest_contents(tmp_path):
    rc = main(["simulate", "--n0", "4", "--seed", "8", "--out", str(tmp_path)])
    assert rc == 0
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["command"] == "simulate"
    assert m["master_seed"] == 8
    assert {o["path"] for o in m["outputs"]} == {"realization.json", "events.csv"}
    for o in m["outputs"]:
        assert len(o["sha256"]) == 64
