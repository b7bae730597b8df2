"""Render coagring CSV outputs into the standard figure set.

Consumes only the documented CSV schemas (plus the sibling manifest.json
when a plot needs the run's N0).  Rendering is deterministic: fixed figure
geometry, no timestamps, stripped writer metadata, so re-rendering the
same CSV gives byte-identical images.

Kinds
-----
collapse   ninf_hist.csv ...      square-root collapse of f(N_inf) with the
                                  half-Gaussian overlay (sigma = sqrt 2)
zfluct     zfluct.csv ...         rescaled fluctuation growth vs sqrt(N0 t)
                                  with the 1 - exp(-0.25 x) overlay
scaling    summary.csv ...        <N_inf> and sd vs N0 with the square-root
                                  asymptote lines
tinf       summary.csv ...        <t_inf> vs N0 with a -1/4 power guide
sizedist   sizedist.csv ...       particle-weighted size distribution
spectra    spectra.csv/profile.csv   solver vs oracle spectra overlay
ssprofile  ss_trajectory.csv      real/imaginary parts of the self-similar
                                  fields along the integration path
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_FIGSIZE = (6.4, 4.4)
_DPI = 120


class MissingColumn(Exception):
    """A required CSV column is absent (reported by name)."""


@dataclass
class PlotSpec:
    kind: str
    inputs: list[Path]
    output: Path
    overlay: bool = True
    n0_values: list[int] = field(default_factory=list)


def read_csv(path: Path, required: list[str]) -> dict[str, np.ndarray]:
    """Read one schema-versioned CSV; fail fast naming any missing column."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("# coagring-csv"):
        raise MissingColumn(f"{path}: not a coagring CSV (missing schema header)")
    header = lines[1].split(",")
    for col in required:
        if col not in header:
            raise MissingColumn(f"{path}: missing column {col!r}")
    cols: dict[str, list] = {h: [] for h in header}
    for line in lines[2:]:
        if not line.strip():
            continue
        for h, tok in zip(header, line.split(",")):
            cols[h].append(tok)
    out = {}
    for h, vals in cols.items():
        try:
            out[h] = np.array([float(v) for v in vals])
        except ValueError:
            out[h] = np.array(vals)
    return out


def _n0_for(path: Path, spec: PlotSpec, idx: int) -> int:
    """N0 for input idx: explicit --n0 list first, then the sibling manifest."""
    if spec.n0_values:
        return int(spec.n0_values[idx % len(spec.n0_values)])
    manifest = Path(path).parent / "manifest.json"
    if manifest.exists():
        cfg = json.loads(manifest.read_text(encoding="utf-8")).get("config", {})
        if "n0" in cfg:
            return int(cfg["n0"])
    raise MissingColumn(f"{path}: n0 unknown (no --n0 given and no manifest.json)")


def _new_axes():
    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    return fig, ax


_MARKERS = ["o", "s", "^", "D", "v", "p"]


def _plot_collapse(spec: PlotSpec, ax):
    for idx, path in enumerate(spec.inputs):
        data = read_csv(path, ["n0", "x", "density"])
        n0 = int(data["n0"][0]) if data["n0"].size else _n0_for(path, spec, idx)
        ax.plot(data["x"], data["density"], _MARKERS[idx % len(_MARKERS)],
                ms=4, mfc="none", label=f"$N_0 = {n0}$")
    if spec.overlay:
        x = np.linspace(0.0, 6.0, 400)
        sigma = math.sqrt(2.0)
        g = 2.0 / (sigma * math.sqrt(2 * math.pi)) * np.exp(-(x**2) / (2 * sigma**2))
        ax.plot(x, g, "k-", lw=1.2, label=r"half-Gaussian, $\sigma=\sqrt{2}$")
    ax.set_xlabel(r"$x = N_\infty / \sqrt{N_0}$")
    ax.set_ylabel(r"$\sqrt{N_0}\, f(N_\infty)$")
    ax.set_xlim(0, 6)
    ax.legend(frameon=False)


def _plot_zfluct(spec: PlotSpec, ax):
    for idx, path in enumerate(spec.inputs):
        data = read_csv(path, ["t", "mean_z", "var_z", "var_z0", "sigma_hat"])
        n0 = _n0_for(path, spec, idx)
        x = np.sqrt(n0 * data["t"])
        y = data["sigma_hat"] / math.sqrt(n0)
        ax.plot(x, y, _MARKERS[idx % len(_MARKERS)], ms=4, mfc="none",
                label=f"$N_0 = {n0}$")
    if spec.overlay:
        x = np.linspace(0.0, 30.0, 400)
        ax.plot(x, 1.0 - np.exp(-0.25 * x), "k-", lw=1.2,
                label=r"$1 - e^{-0.25 x}$")
    ax.set_xlabel(r"$\sqrt{N_0 t}$")
    ax.set_ylabel(r"$\hat\sigma[Z(t)] / \sqrt{N_0}$")
    ax.legend(frameon=False)


def _plot_scaling(spec: PlotSpec, ax):
    rows = []
    for path in spec.inputs:
        data = read_csv(path, ["n0", "mean_ninf", "sd_ninf"])
        for k in range(data["n0"].size):
            rows.append((data["n0"][k], data["mean_ninf"][k], data["sd_ninf"][k]))
    rows.sort()
    n0 = np.array([r[0] for r in rows])
    mean = np.array([r[1] for r in rows])
    sd = np.array([r[2] for r in rows])
    ax.loglog(n0, mean, "o", mfc="none", label=r"$\langle N_\infty \rangle$")
    ax.loglog(n0, sd, "s", label=r"$\sigma[N_\infty]$")
    if spec.overlay:
        xs = np.geomspace(n0.min(), n0.max(), 100)
        ax.loglog(xs, 2.0 / math.sqrt(math.pi) * np.sqrt(xs), "k:", lw=1.2,
                  label=r"$(2/\sqrt{\pi})\sqrt{N_0}$")
        ax.loglog(xs, math.sqrt(2 - 4 / math.pi) * np.sqrt(xs), "k--", lw=1.2,
                  label=r"$\sqrt{2-4/\pi}\,\sqrt{N_0}$")
    ax.set_xlabel(r"$N_0$")
    ax.set_ylabel("final cluster count")
    ax.legend(frameon=False)


def _plot_tinf(spec: PlotSpec, ax):
    rows = []
    for path in spec.inputs:
        data = read_csv(path, ["n0", "mean_tinf", "sd_tinf"])
        for k in range(data["n0"].size):
            rows.append((data["n0"][k], data["mean_tinf"][k], data["sd_tinf"][k]))
    rows.sort()
    n0 = np.array([r[0] for r in rows])
    mean = np.array([r[1] for r in rows])
    sd = np.array([r[2] for r in rows])
    ax.loglog(n0, mean, "o", mfc="none", label=r"$\langle t_\infty \rangle$")
    ax.loglog(n0, sd, "s", label=r"$\sigma[t_\infty]$")
    if spec.overlay and n0.size:
        xs = np.geomspace(n0.min(), n0.max(), 50)
        ref = mean[0] * (xs / n0[0]) ** (-0.25)
        ax.loglog(xs, ref, "k-", lw=1.2, label=r"$\propto N_0^{-1/4}$")
    ax.set_xlabel(r"$N_0$")
    ax.set_ylabel("time to absorbing state")
    ax.legend(frameon=False)


def _plot_sizedist(spec: PlotSpec, ax):
    for idx, path in enumerate(spec.inputs):
        data = read_csv(path, ["n0", "n", "f"])
        n0 = int(data["n0"][0]) if data["n0"].size else _n0_for(path, spec, idx)
        ax.loglog(data["n"], data["f"], _MARKERS[idx % len(_MARKERS)], ms=4,
                  mfc="none", label=f"$N_0 = {n0}$")
        if spec.overlay:
            ax.axhline(1.0 / (math.sqrt(n0) * math.sqrt(math.pi)), color="k",
                       lw=0.8, ls=":")
    ax.set_xlabel(r"cluster size $n$")
    ax.set_ylabel(r"$f(n)$")
    ax.legend(frameon=False)


def _plot_spectra(spec: PlotSpec, ax):
    styles = ["o", "s", "^", "x", "+"]
    for idx, path in enumerate(spec.inputs):
        data = read_csv(path, ["t", "direction", "ell", "f"])
        labels = {}
        for direction in np.unique(data["direction"]):
            mask = data["direction"] == direction
            ax.semilogy(data["ell"][mask], data["f"][mask],
                        styles[idx % len(styles)], ms=3, mfc="none",
                        label=f"{Path(path).stem} {direction}")
    ax.set_xlabel(r"cluster size $\ell$")
    ax.set_ylabel(r"$f(\ell, t)$")
    ax.legend(frameon=False, fontsize=8)


def _plot_ssprofile(spec: PlotSpec, ax):
    data = read_csv(spec.inputs[0], ["tau_re", "psi_plus_re", "psi_plus_im",
                                     "h_plus_re", "h_plus_im"])
    ax.plot(data["tau_re"], data["psi_plus_re"], "-", label=r"Re $\psi^+$")
    ax.plot(data["tau_re"], data["psi_plus_im"], "--", label=r"Im $\psi^+$")
    ax.plot(data["tau_re"], data["h_plus_re"], "-.", label=r"Re $H^+$")
    ax.plot(data["tau_re"], data["h_plus_im"], ":", label=r"Im $H^+$")
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel("field value")
    ax.legend(frameon=False)


_KINDS = {
    "collapse": _plot_collapse,
    "zfluct": _plot_zfluct,
    "scaling": _plot_scaling,
    "tinf": _plot_tinf,
    "sizedist": _plot_sizedist,
    "spectra": _plot_spectra,
    "ssprofile": _plot_ssprofile,
}


def render(spec: PlotSpec) -> Path:
    """Render one figure; returns the output path.

    Raises MissingColumn when an input lacks a required column.
    """
    if spec.kind not in _KINDS:
        raise ValueError(f"unknown plot kind {spec.kind!r}; choose from {sorted(_KINDS)}")
    if not spec.inputs:
        raise ValueError("at least one --in file is required")
    for p in spec.inputs:
        if not Path(p).exists():
            raise FileNotFoundError(f"input CSV not found: {p}")
    fig, ax = _new_axes()
    try:
        _KINDS[spec.kind](spec, ax)
        fig.tight_layout()
        spec.output.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.output, format="png", metadata={"Software": None})
    finally:
        plt.close(fig)
    return spec.output


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="coagring-plot",
        description="Render coagring CSV output into standard figures",
    )
    ap.add_argument("--kind", required=True, choices=sorted(_KINDS))
    ap.add_argument("--in", dest="inputs", nargs="+", required=True,
                    help="input CSV file(s)")
    ap.add_argument("--out", required=True, help="output PNG path")
    ap.add_argument("--no-overlay", action="store_true",
                    help="suppress the theoretical overlay curve")
    ap.add_argument("--n0", default="",
                    help="comma-separated N0 per input (else read manifest.json)")
    args = ap.parse_args(argv)
    spec = PlotSpec(
        kind=args.kind,
        inputs=[Path(p) for p in args.inputs],
        output=Path(args.out),
        overlay=not args.no_overlay,
        n0_values=[int(tok) for tok in args.n0.split(",") if tok.strip()],
    )
    try:
        out = render(spec)
    except (MissingColumn, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
