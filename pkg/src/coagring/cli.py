"""Command-line front end.

Subcommands drive the simulator, the ensemble statistics, the kinetic
solver, the series oracles and the self-similar integrator, and write
versioned CSV/JSON artifacts plus a run manifest with content digests.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
``COAG_SEED`` in the environment overrides ``--seed``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, genfun, kinetic, majority_ss
from .core import KernelKind, SeedSpec
from .ensemble import (
    EnsembleConfig,
    collapse_n_inf,
    particle_size_distribution,
    run_ensemble,
    summarize,
    z_fluctuations,
)
from .errors import ConfigError, DegenerateHistogram, NumericalError
from .ring_sim import InitMode, SimConfig, run_realization_raw

SCHEMA_PREFIX = "# coagring-csv"
SCHEMA_VERSION = "v1"


# ---------------------------------------------------------------------------
# small helpers

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_csv(path: Path, name: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{SCHEMA_PREFIX} {name} {SCHEMA_VERSION}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_series(text: str, L: int) -> genfun.PowerSeries:
    """Parse strings like "z", "z^2", "0.5z + 0.5z^3", "0.3*z^2" into a series."""
    weights: dict[int, float] = {}
    for raw in text.replace(" ", "").split("+"):
        if not raw:
            continue
        m = re.fullmatch(r"(?:([0-9.eE][0-9.eE+-]*)\*?)?z(?:\^([0-9]+))?", raw)
        if m is None:
            if re.fullmatch(r"[0-9.eE][0-9.eE+-]*", raw) and float(raw) == 0.0:
                continue
            raise ConfigError(f"cannot parse series term {raw!r}")
        coeff = float(m.group(1)) if m.group(1) else 1.0
        power = int(m.group(2)) if m.group(2) else 1
        if power > L:
            raise ConfigError(f"term {raw!r} exceeds truncation L={L}")
        weights[power] = weights.get(power, 0.0) + coeff
    if not weights:
        raise ConfigError(f"series {text!r} has no terms")
    return genfun.PowerSeries.from_support(weights, L)


def parse_complex(text: str) -> complex:
    """Accepts python complex syntax with either i or j as the unit."""
    return complex(text.replace("i", "j").replace("J", "j"))


def _seed_from(args) -> int:
    env = os.environ.get("COAG_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"COAG_SEED must be an integer, got {env!r}") from exc
    return int(args.seed)


def _sim_config(args, seed: int, z_times=()) -> SimConfig:
    return SimConfig(
        n0=args.n0,
        p=args.p,
        p0=args.p0,
        init_mode=InitMode.BINOMIAL if args.init == "binomial" else InitMode.FIXED_COUNT,
        kernel=KernelKind.RANDOM if args.kernel == "random" else KernelKind.MAJORITY,
        z_sample_times=tuple(z_times),
        seed=SeedSpec(seed, 0),
    )


# ---------------------------------------------------------------------------
# subcommand implementations; each returns (flat_config, {filename: Path})

def _cmd_simulate(args, outdir: Path):
    seed = _seed_from(args)
    z_times = _parse_grid(args.z_grid)
    cfg = _sim_config(args, seed, z_times)
    result, raw = run_realization_raw(cfg)
    spec = result.final_spectrum
    payload = {
        "n_infinity": result.n_infinity,
        "t_infinity": result.t_infinity,
        "z0": result.z0,
        "z_infinity": result.z_infinity,
        "final_spectrum": {
            "plus": {str(k): v for k, v in sorted(spec.f_plus.items())},
            "minus": {str(k): v for k, v in sorted(spec.f_minus.items())},
        },
        "z_series": [[t, z] for t, z in result.z_series],
    }
    jpath = outdir / "realization.json"
    jpath.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    epath = outdir / "events.csv"
    _, _, _, coag_t, coag_z, coag_n, coag_mass, coag_dir, _ = raw
    rows = [
        (float(coag_t[k]), int(coag_z[k]), int(coag_n[k]),
         int(coag_mass[k]), int(coag_dir[k]))
        for k in range(coag_t.size)
    ]
    _write_csv(epath, "events", ["t", "z", "n", "mass", "velocity"], rows)
    flat = _flat_sim_args(args, seed)
    return flat, {"realization.json": jpath, "events.csv": epath}


def _cmd_ensemble(args, outdir: Path):
    seed = _seed_from(args)
    z_times = _parse_grid(args.z_grid)
    sim = _sim_config(args, seed, z_times)
    ecfg = EnsembleConfig(sim, realizations=args.realizations)
    results = run_ensemble(ecfg, workers=args.threads)
    summary = summarize(results)
    files = {}

    spath = outdir / "summary.csv"
    _write_csv(
        spath,
        "summary",
        ["n0", "M", "p", "p0", "init_mode", "mean_ninf", "sd_ninf",
         "mean_tinf", "sd_tinf", "p_single", "se_p_single"],
        [(sim.n0, ecfg.realizations, sim.p, sim.p0, sim.init_mode.value,
          summary.mean_n_inf, summary.sd_n_inf, summary.mean_t_inf,
          summary.sd_t_inf, summary.p_single, summary.se_p_single)],
    )
    files["summary.csv"] = spath

    derived = {}
    hpath = outdir / "ninf_hist.csv"
    try:
        coll = collapse_n_inf(results, sim.n0)
        rows = [(sim.n0, float(x), float(d)) for x, d in zip(coll.x, coll.density)]
        derived["collapse_sigma"] = coll.fit.params["sigma"]
        derived["collapse_residual"] = coll.fit.residual
    except DegenerateHistogram:
        rows = []
    _write_csv(hpath, "ninf_hist", ["n0", "x", "density"], rows)
    files["ninf_hist.csv"] = hpath

    zpath = outdir / "zfluct.csv"
    zrows = []
    if z_times:
        zf = z_fluctuations(results, sim)
        zrows = [
            (float(t), float(mz), float(vz), float(zf.var_z0), float(sh))
            for t, mz, vz, sh in zip(zf.times, zf.mean_z, zf.var_z, zf.sigma_hat)
        ]
        derived["zfluct_a"] = zf.fit.params["a"]
        derived["zfluct_residual"] = zf.fit.residual
        derived["sigma_hat_inf"] = zf.sigma_hat_inf
    _write_csv(zpath, "zfluct", ["t", "mean_z", "var_z", "var_z0", "sigma_hat"], zrows)
    files["zfluct.csv"] = zpath

    dpath = outdir / "sizedist.csv"
    dist = particle_size_distribution(results, sim.n0)
    _write_csv(
        dpath,
        "sizedist",
        ["n0", "n", "f"],
        [(sim.n0, int(n), float(f)) for n, f in zip(dist.n, dist.f) if f > 0.0],
    )
    files["sizedist.csv"] = dpath

    flat = _flat_sim_args(args, seed)
    flat["realizations"] = args.realizations
    return flat, files, derived


def _cmd_kinetic(args, outdir: Path):
    L = args.L
    if args.symmetric:
        state = kinetic.symmetric_monodisperse(float(args.n0), L)
    else:
        if not args.init_plus or not args.init_minus:
            raise ConfigError("provide --symmetric or both --init-plus/--init-minus")
        fp = parse_series(args.init_plus, L)
        fm = parse_series(args.init_minus, L)
        state = kinetic.KineticState(fp.coeffs.copy(), fm.coeffs.copy())
    kernel = KernelKind.RANDOM if args.kernel == "random" else KernelKind.MAJORITY
    t_eval = _parse_grid(args.t_eval) or [args.t]
    traj = kinetic.integrate(state, args.t, kinetic.SolverConfig(L=L, dt=args.dt), kernel, t_eval=t_eval)
    rows = []
    for st in traj:
        for l in range(1, L + 1):
            if st.f_plus[l] != 0.0:
                rows.append((st.t, "plus", l, float(st.f_plus[l])))
        for l in range(1, L + 1):
            if st.f_minus[l] != 0.0:
                rows.append((st.t, "minus", l, float(st.f_minus[l])))
    path = outdir / "spectra.csv"
    _write_csv(path, "spectra", ["t", "direction", "ell", "f"], rows)
    flat = {
        "command": "kinetic", "kernel": args.kernel, "symmetric": args.symmetric,
        "n0": args.n0, "init_plus": args.init_plus, "init_minus": args.init_minus,
        "t": args.t, "dt": args.dt, "L": L, "t_eval": args.t_eval,
    }
    return flat, {"spectra.csv": path}


def _cmd_oracle(args, outdir: Path):
    L = args.L
    f0 = parse_series(args.f0, L)
    rows = []
    if args.f0_minus:
        f0m = parse_series(args.f0_minus, L)
        fp, fm = genfun.exact_asymmetric(f0, f0m, args.t)
        for l in range(1, L + 1):
            rows.append((args.t, "plus", l, float(fp.coeffs[l])))
        for l in range(1, L + 1):
            rows.append((args.t, "minus", l, float(fm.coeffs[l])))
    else:
        out = genfun.evolve_symmetric(f0, args.t)
        for l in range(1, L + 1):
            rows.append((args.t, "both", l, float(out.coeffs[l])))
    path = outdir / "profile.csv"
    _write_csv(path, "profile", ["t", "direction", "ell", "f"], rows)
    flat = {"command": "oracle", "f0": args.f0, "f0_minus": args.f0_minus,
            "t": args.t, "L": L}
    return flat, {"profile.csv": path}


def _cmd_selfsim(args, outdir: Path):
    eps_p = parse_complex(args.perturb)
    eps_m = parse_complex(args.perturb_minus) if args.perturb_minus else eps_p
    start = majority_ss.perturbed_start(eps_p, eps_m)
    traj = majority_ss.integrate_ss(start, args.tau_max, steps=args.steps)
    e0 = traj.energy[0]
    rows = []
    stride = max(1, traj.taus.size // args.max_rows)
    idx = list(range(0, traj.taus.size, stride))
    if idx[-1] != traj.taus.size - 1:
        idx.append(traj.taus.size - 1)
    for k in idx:
        y = traj.states[k]
        rows.append((
            float(traj.taus[k].real), float(traj.taus[k].imag),
            float(y[0].real), float(y[0].imag), float(y[1].real), float(y[1].imag),
            float(y[2].real), float(y[2].imag), float(y[3].real), float(y[3].imag),
            float(abs(traj.energy[k] - e0)),
        ))
    path = outdir / "ss_trajectory.csv"
    _write_csv(
        path,
        "ss_trajectory",
        ["tau_re", "tau_im", "psi_plus_re", "psi_plus_im", "psi_minus_re",
         "psi_minus_im", "h_plus_re", "h_plus_im", "h_minus_re", "h_minus_im",
         "e_drift"],
        rows,
    )
    flat = {"command": "selfsim", "perturb": args.perturb,
            "perturb_minus": args.perturb_minus, "tau_max": args.tau_max,
            "steps": args.steps, "max_rows": args.max_rows}
    return flat, {"ss_trajectory.csv": path}


def _flat_sim_args(args, seed: int) -> dict:
    return {
        "command": args.command,
        "n0": args.n0,
        "p": args.p,
        "p0": args.p0,
        "init": args.init,
        "kernel": args.kernel,
        "seed": seed,
        "z_grid": args.z_grid,
    }


def _parse_grid(text) -> list[float]:
    if not text:
        return []
    return [float(tok) for tok in str(text).split(",") if tok.strip()]


# ---------------------------------------------------------------------------
# manifest plumbing

def _write_manifest(outdir: Path, command: str, flat_config: dict,
                    files: dict, derived: dict | None,
                    started: str, seed: int | None) -> Path:
    manifest = {
        "artifact_version": __version__,
        "command": command,
        "config": flat_config,
        "master_seed": seed,
        "started_utc": started,
        "finished_utc": datetime.now(timezone.utc).isoformat(),
        "outputs": [
            {"path": name, "sha256": _sha256(path)} for name, path in sorted(files.items())
        ],
    }
    if derived:
        manifest["derived"] = derived
    mpath = outdir / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return mpath


def _cmd_replay(args, outdir: Path):
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    config = manifest["config"]
    command = manifest["command"]
    argv = [command]
    skip = {"command"}
    for key, val in config.items():
        if key in skip or val in (None, "", False):
            continue
        flag = "--" + key.replace("_", "-")
        if val is True:
            argv.append(flag)
        else:
            argv.append(flag)
            argv.append(str(val))
    argv += ["--out", str(outdir)]
    rc = main(argv)
    if rc != 0:
        return rc
    replayed = json.loads((outdir / "manifest.json").read_text(encoding="utf-8"))
    old = {o["path"]: o["sha256"] for o in manifest["outputs"]}
    new = {o["path"]: o["sha256"] for o in replayed["outputs"]}
    ok = True
    for name, digest in sorted(old.items()):
        match = new.get(name) == digest
        ok &= match
        print(f"{'MATCH' if match else 'DIFFER'}  {name}")
    return 0 if ok else 3


# ---------------------------------------------------------------------------
# argument parsing

def _add_sim_flags(sp, ensemble: bool):
    sp.add_argument("--n0", type=int, required=True, help="initial number of unit-mass clusters")
    sp.add_argument("--p", type=float, default=0.1, help="coagulation probability per meeting")
    sp.add_argument("--p0", type=float, default=0.5, help="initial fraction moving +1")
    sp.add_argument("--init", choices=["binomial", "fixed"], default="binomial",
                    help="velocity assignment mode")
    sp.add_argument("--kernel", choices=["random", "majority"], default="random")
    sp.add_argument("--seed", type=int, default=0, help="master seed (COAG_SEED overrides)")
    sp.add_argument("--z-grid", default="", help="comma-separated Z(t) sample times")
    if ensemble:
        sp.add_argument("--realizations", type=int, required=True)
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker processes (results are order-independent)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="coagring",
        description="Two-species ballistic coagulation on a ring",
    )
    ap.add_argument("--version", action="version", version=f"coagring {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="run one realization")
    _add_sim_flags(sp, ensemble=False)
    sp.add_argument("--out", default=".", help="output directory")

    sp = sub.add_parser("ensemble", help="run M realizations and summarize")
    _add_sim_flags(sp, ensemble=True)
    sp.add_argument("--out", default=".")

    sp = sub.add_parser("kinetic", help="integrate the kinetic equations")
    sp.add_argument("--kernel", choices=["random", "majority"], default="random")
    sp.add_argument("--symmetric", action="store_true",
                    help="symmetric monodisperse start with --n0 total clusters")
    sp.add_argument("--n0", type=float, default=1.0)
    sp.add_argument("--init-plus", default="", help="series, e.g. '0.5z+0.5z^3'")
    sp.add_argument("--init-minus", default="")
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--dt", type=float, default=0.01)
    sp.add_argument("--L", type=int, default=256)
    sp.add_argument("--t-eval", default="", help="comma-separated output times")
    sp.add_argument("--out", default=".")

    sp = sub.add_parser("oracle", help="evaluate the exact series solutions")
    sp.add_argument("--f0", required=True, help="initial series, e.g. 'z'")
    sp.add_argument("--f0-minus", default="", help="minus-side series (asymmetric mode)")
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--L", type=int, default=128)
    sp.add_argument("--out", default=".")

    sp = sub.add_parser("selfsim", help="integrate the self-similar system")
    sp.add_argument("--perturb", default="1e-3i", help="H perturbation at tau=0 (complex)")
    sp.add_argument("--perturb-minus", default="", help="separate H- perturbation")
    sp.add_argument("--tau-max", type=float, default=20.0)
    sp.add_argument("--steps", type=int, default=10000)
    sp.add_argument("--max-rows", type=int, default=2001, help="CSV row cap (strided)")
    sp.add_argument("--out", default=".")

    sp = sub.add_parser("replay", help="re-run a manifest and compare digests")
    sp.add_argument("manifest")
    sp.add_argument("--out", default=None, help="directory for the replay outputs")

    return ap


_HANDLERS = {
    "simulate": _cmd_simulate,
    "ensemble": _cmd_ensemble,
    "kinetic": _cmd_kinetic,
    "oracle": _cmd_oracle,
    "selfsim": _cmd_selfsim,
}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "replay":
            outdir = Path(args.out) if args.out else Path(args.manifest).parent / "replay"
            outdir.mkdir(parents=True, exist_ok=True)
            return _cmd_replay(args, outdir)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        started = datetime.now(timezone.utc).isoformat()
        out = _HANDLERS[args.command](args, outdir)
        flat, files = out[0], out[1]
        derived = out[2] if len(out) > 2 else None
        seed = flat.get("seed")
        _write_manifest(outdir, args.command, flat, files, derived, started, seed)
        for name in sorted(files):
            print(f"wrote {files[name]}")
        return 0
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
