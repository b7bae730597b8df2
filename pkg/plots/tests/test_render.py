"""Render tests.

Input CSVs are produced by invoking the primary package's CLI (the only
interface the plot scripts depend on), at desk scale.
"""

import subprocess
import sys
from pathlib import Path

import pytest

from coagring_plots.render import MissingColumn, PlotSpec, main, render


def _run_cli(*argv):
    proc = subprocess.run(
        [sys.executable, "-m", "coagring.cli", *argv],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="module")
def ensemble_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("ens100")
    _run_cli("ensemble", "--n0", "100", "--realizations", "3000", "--seed", "101",
             "--threads", "1", "--out", str(out))
    return out


@pytest.fixture(scope="module")
def zfluct_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("zf400")
    grid = ",".join(str(round((x * x) / 400.0, 8)) for x in
                    [0.5, 1, 2, 3, 4, 6, 8, 10, 13, 16, 20, 25, 30])
    _run_cli("ensemble", "--n0", "400", "--realizations", "3000", "--seed", "102",
             "--init", "fixed", "--z-grid", grid, "--threads", "1", "--out", str(out))
    return out


def test_collapse_renders_with_overlay(ensemble_dir, tmp_path):
    out = tmp_path / "fig_collapse.png"
    spec = PlotSpec("collapse", [ensemble_dir / "ninf_hist.csv"], out)
    assert render(spec) == out
    data = out.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(data) > 10_000


def test_zfluct_renders_with_overlay(zfluct_dir, tmp_path):
    out = tmp_path / "fig_zfluct.png"
    spec = PlotSpec("zfluct", [zfluct_dir / "zfluct.csv"], out)
    assert render(spec) == out
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_rendering_is_deterministic(ensemble_dir, tmp_path):
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    render(PlotSpec("collapse", [ensemble_dir / "ninf_hist.csv"], a))
    render(PlotSpec("collapse", [ensemble_dir / "ninf_hist.csv"], b))
    assert a.read_bytes() == b.read_bytes()


def test_zfluct_n0_from_manifest(zfluct_dir, tmp_path):
    # no --n0 given: the sibling manifest supplies it
    rc = main(["--kind", "zfluct", "--in", str(zfluct_dir / "zfluct.csv"),
               "--out", str(tmp_path / "z.png")])
    assert rc == 0


def test_overlay_can_be_disabled(ensemble_dir, tmp_path):
    with_overlay = tmp_path / "w.png"
    without = tmp_path / "wo.png"
    render(PlotSpec("collapse", [ensemble_dir / "ninf_hist.csv"], with_overlay))
    render(PlotSpec("collapse", [ensemble_dir / "ninf_hist.csv"], without, overlay=False))
    assert with_overlay.read_bytes() != without.read_bytes()


def test_scaling_and_sizedist_kinds(ensemble_dir, tmp_path):
    assert render(PlotSpec("scaling", [ensemble_dir / "summary.csv"],
                           tmp_path / "s.png")).exists()
    assert render(PlotSpec("tinf", [ensemble_dir / "summary.csv"],
                           tmp_path / "t.png")).exists()
    assert render(PlotSpec("sizedist", [ensemble_dir / "sizedist.csv"],
                           tmp_path / "d.png")).exists()


def test_missing_column_is_named(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("# coagring-csv ninf_hist v1\nn0,x\n100,0.1\n", encoding="utf-8")
    with pytest.raises(MissingColumn, match="density"):
        render(PlotSpec("collapse", [bad], tmp_path / "x.png"))
    rc = main(["--kind", "collapse", "--in", str(bad), "--out", str(tmp_path / "x.png")])
    assert rc == 2


def test_missing_file_nonzero_exit(tmp_path):
    rc = main(["--kind", "collapse", "--in", str(tmp_path / "nope.csv"),
               "--out", str(tmp_path / "x.png")])
    assert rc == 2


def test_spectra_kind(tmp_path):
    out = tmp_path / "kin"
    _run_cli("kinetic", "--kernel", "random", "--symmetric", "--n0", "1",
             "--t", "4", "--out", str(out))
    _run_cli("oracle", "--f0", "z", "--t", "4", "--out", str(out))
    fig = render(PlotSpec("spectra", [out / "spectra.csv", out / "profile.csv"],
                          tmp_path / "sp.png"))
    assert fig.exists()


def test_ssprofile_kind(tmp_path):
    out = tmp_path / "ss"
    _run_cli("selfsim", "--perturb", "1e-3i", "--tau-max", "20", "--out", str(out))
    fig = render(PlotSpec("ssprofile", [out / "ss_trajectory.csv"], tmp_path / "ss.png"))
    assert fig.exists()
