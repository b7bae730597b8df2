"""Ensemble execution and the empirical statistics of the absorbing state.

Realization i always runs from the stream (master_seed, i), and results
are collected in index order, so summaries are bit-identical regardless
of worker count.  Estimators: plain sample means and standard deviations,
the square-root collapse of the final cluster count with its half-Gaussian
fit, the order-parameter fluctuation curve, the particle-weighted size
distribution, and the time-scale bridge between simulation time and the
kinetic clock.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from .errors import DegenerateHistogram
from .ring_sim import RealizationResult, SimConfig, run_realization


@dataclass(frozen=True)
class EnsembleConfig:
    """A simulation config repeated over M independent realizations."""

    sim: SimConfig
    realizations: int
    bin_rule: str = "fd"  # Freedman-Diaconis, lattice-aligned

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")


@dataclass(frozen=True)
class EnsembleSummary:
    mean_n_inf: float
    sd_n_inf: float
    mean_t_inf: float
    sd_t_inf: float
    p_single: float
    se_p_single: float
    z0_variance: float
    z_times: tuple[float, ...] = ()
    mean_z: tuple[float, ...] = ()
    var_z: tuple[float, ...] = ()
    realizations: int = 0


@dataclass(frozen=True)
class SizeDistribution:
    """Particle-weighted cluster-size probabilities at the absorbing state:
    f(n) = <count of size-n clusters> * n / N0, summing to 1."""

    n: np.ndarray
    f: np.ndarray

    @property
    def argmax(self) -> int:
        return int(self.n[int(np.argmax(self.f))])


@dataclass(frozen=True)
class FitResult:
    params: dict
    residual: float


def _run_block(args) -> list[RealizationResult]:
    cfg, lo, hi = args
    return [run_realization(cfg.with_seed_index(i)) for i in range(lo, hi)]


def run_ensemble(cfg: EnsembleConfig, workers: int = 1) -> list[RealizationResult]:
    """M realizations, seeded by index, returned in index order."""
    m = cfg.realizations
    if workers <= 1:
        return _run_block((cfg.sim, 0, m))
    workers = min(workers, m)
    bounds = np.linspace(0, m, workers + 1).astype(int)
    blocks = [(cfg.sim, int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:])]
    out: list[RealizationResult] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for block in pool.map(_run_block, blocks):
            out.extend(block)
    return out


def summarize(results: Sequence[RealizationResult]) -> EnsembleSummary:
    """Sample statistics of N_inf, t_inf, p(N_inf = 1) and the Z(t) grid."""
    if not results:
        raise ValueError("results must be non-empty")
    m = len(results)
    n_inf = np.array([r.n_infinity for r in results], dtype=float)
    t_inf = np.array([r.t_infinity for r in results], dtype=float)
    z0 = np.array([r.z0 for r in results], dtype=float)
    p1 = float(np.mean(n_inf == 1))
    times = tuple(t for t, _ in results[0].z_series)
    mean_z: tuple[float, ...] = ()
    var_z: tuple[float, ...] = ()
    if times:
        zmat = np.array([[z for _, z in r.z_series] for r in results], dtype=float)
        mean_z = tuple(float(v) for v in zmat.mean(axis=0))
        var_z = tuple(float(v) for v in zmat.var(axis=0, ddof=1)) if m > 1 else tuple(0.0 for _ in times)
    return EnsembleSummary(
        mean_n_inf=float(n_inf.mean()),
        sd_n_inf=float(n_inf.std(ddof=1)) if m > 1 else 0.0,
        mean_t_inf=float(t_inf.mean()),
        sd_t_inf=float(t_inf.std(ddof=1)) if m > 1 else 0.0,
        p_single=p1,
        se_p_single=math.sqrt(max(p1 * (1.0 - p1), 0.0) / m),
        z0_variance=float(z0.var(ddof=1)) if m > 1 else 0.0,
        z_times=times,
        mean_z=mean_z,
        var_z=var_z,
        realizations=m,
    )


def half_gaussian(x, sigma):
    """G(x) = 2/(sigma sqrt(2 pi)) exp(-x^2 / 2 sigma^2) on x >= 0."""
    return 2.0 / (sigma * math.sqrt(2.0 * math.pi)) * np.exp(-(x**2) / (2.0 * sigma**2))


@dataclass(frozen=True)
class CollapseResult:
    x: np.ndarray          # bin centers of x = N_inf / sqrt(N0)
    density: np.ndarray    # rescaled density: sqrt(N0) * f(N_inf)
    fit: FitResult         # {'sigma': ...}

    @property
    def g_plus_at_zero(self) -> float:
        return half_gaussian(0.0, self.fit.params["sigma"])


def collapse_n_inf(results: Sequence[RealizationResult], n0: int) -> CollapseResult:
    """Square-root collapse of the N_inf histogram with a half-Gaussian fit.

    x = N_inf / sqrt(N0); the histogram density of x estimates
    sqrt(N0) f(N_inf).  Bin widths follow Freedman-Diaconis, rounded up
    to a multiple of the x-lattice spacing 1/sqrt(N0) so the integer
    nature of N_inf does not alias into the histogram.
    """
    xs = np.array([r.n_infinity for r in results], dtype=float) / math.sqrt(n0)
    lattice = 1.0 / math.sqrt(n0)
    q75, q25 = np.percentile(xs, [75, 25])
    width = 2.0 * (q75 - q25) * len(xs) ** (-1.0 / 3.0)
    width = max(1, math.ceil(width / lattice - 1e-9)) * lattice
    lo = lattice / 2.0  # N_inf >= 1, so bins start just below the first point
    nbins = max(1, math.ceil((xs.max() - lo) / width + 0.5))
    edges = lo + width * np.arange(nbins + 1)
    counts, edges = np.histogram(xs, bins=edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    density = counts / (len(xs) * width)
    occupied = counts > 0
    if occupied.sum() < 3:
        raise DegenerateHistogram(
            f"only {int(occupied.sum())} occupied bins; need >= 3 for the fit"
        )
    sigma0 = math.sqrt(2.0)
    popt, _ = optimize.curve_fit(
        half_gaussian, centers[occupied], density[occupied], p0=[sigma0]
    )
    sigma = float(abs(popt[0]))
    resid = float(
        np.sqrt(np.mean((half_gaussian(centers[occupied], sigma) - density[occupied]) ** 2))
    )
    return CollapseResult(centers, density, FitResult({"sigma": sigma}, resid))


@dataclass(frozen=True)
class ZFluctuations:
    times: np.ndarray
    sigma_hat: np.ndarray       # sqrt(max(var Z(t) - var Z(0), 0))
    mean_z: np.ndarray
    se_mean_z: np.ndarray
    var_z: np.ndarray
    var_z0: float               # initial-condition variance that was subtracted
    sigma_hat_inf: float        # from the absorbing-state Z
    fit: FitResult              # {'a': ...} in sigma_hat = amp (1 - exp(-a sqrt(N0 t)))


def z_fluctuations(results: Sequence[RealizationResult], cfg: SimConfig) -> ZFluctuations:
    """Growth curve of the intrinsic Z fluctuations and its rate fit.

    The initial-condition variance (4 p0 (1-p0) N0 for binomial draws, 0
    for the fixed-count mode) is subtracted from var Z(t); the remainder
    is fitted to amp * (1 - exp(-a sqrt(N0 t))) with the theoretical
    amplitude amp = sqrt(4 p0 (1-p0) N0) held fixed, by least squares on
    the rescaled curve.
    """
    times = np.array([t for t, _ in results[0].z_series], dtype=float)
    if times.size == 0:
        raise ValueError("config has no z sample times")
    m = len(results)
    zmat = np.array([[z for _, z in r.z_series] for r in results], dtype=float)
    var_z = zmat.var(axis=0, ddof=1)
    mean_z = zmat.mean(axis=0)
    se_mean = np.sqrt(var_z / m)
    n0, p0 = cfg.n0, cfg.p0
    from .ring_sim import InitMode

    var_z0 = 4.0 * p0 * (1.0 - p0) * n0 if cfg.init_mode is InitMode.BINOMIAL else 0.0
    sig_hat = np.sqrt(np.maximum(var_z - var_z0, 0.0))
    z_inf = np.array([r.z_infinity for r in results], dtype=float)
    var_inf = z_inf.var(ddof=1)
    sig_inf = math.sqrt(max(var_inf - var_z0, 0.0))

    amp = math.sqrt(4.0 * p0 * (1.0 - p0) * n0)
    xs = np.sqrt(n0 * times)
    ys = sig_hat / math.sqrt(n0)
    amp_resc = amp / math.sqrt(n0)

    def model(x, a):
        return amp_resc * (1.0 - np.exp(-a * x))

    if amp > 0:
        popt, _ = optimize.curve_fit(model, xs, ys, p0=[0.25])
        a = float(popt[0])
        resid = float(np.sqrt(np.mean((model(xs, a) - ys) ** 2)))
    else:  # degenerate p0 in {0, 1}: no fluctuations to fit
        a, resid = float("nan"), 0.0
    return ZFluctuations(
        times=times,
        sigma_hat=sig_hat,
        mean_z=mean_z,
        se_mean_z=se_mean,
        var_z=var_z,
        var_z0=var_z0,
        sigma_hat_inf=sig_inf,
        fit=FitResult({"a": a}, resid),
    )


def particle_size_distribution(results: Sequence[RealizationResult], n0: int) -> SizeDistribution:
    """f(n): probability that a particle ends up in a cluster of size n."""
    acc = np.zeros(n0 + 1)
    for r in results:
        for side in (r.final_spectrum.f_plus, r.final_spectrum.f_minus):
            for size, count in side.items():
                acc[size] += count * size
    f = acc / (n0 * len(results))
    f /= f.sum()  # exact normalization (the sum is 1 up to rounding)
    return SizeDistribution(n=np.arange(n0 + 1), f=f)


def mean_counts_curve(results: Sequence[RealizationResult]):
    """Averaged cluster-count trajectory <N(t)> on the sample grid."""
    times = np.array([t for t, _ in results[0].n_series], dtype=float)
    nmat = np.array([[n for _, n in r.n_series] for r in results], dtype=float)
    return times, nmat.mean(axis=0)


def timescale_fit(
    sim_times: np.ndarray,
    sim_n: np.ndarray,
    kinetic_times: np.ndarray,
    kinetic_n: np.ndarray,
) -> FitResult:
    """Least-squares clock factor kappa aligning N_sim(t) with N_kin(kappa t).

    The kinetic equations absorb the collision rate into their time unit,
    so one global factor relates the two clocks.  The residual is the
    relative RMS misfit after the optimal kappa, so shape disagreement
    stays visible.  kappa * max(sim_times) must stay inside the kinetic
    grid; supply a long enough kinetic trajectory.
    """
    sim_times = np.asarray(sim_times, dtype=float)
    sim_n = np.asarray(sim_n, dtype=float)
    kt = np.asarray(kinetic_times, dtype=float)
    kn = np.asarray(kinetic_n, dtype=float)

    def misfit(log_kappa: float) -> float:
        kappa = math.exp(log_kappa)
        if kappa * sim_times.max() > kt.max():
            return 1e9
        pred = np.interp(kappa * sim_times, kt, kn)
        return float(np.mean(((sim_n - pred) / sim_n) ** 2))

    res = optimize.minimize_scalar(
        misfit, bounds=(math.log(1e-6), math.log(1e3)), method="bounded",
        options={"xatol": 1e-10},
    )
    kappa = float(math.exp(res.x))
    return FitResult({"kappa": kappa}, math.sqrt(misfit(res.x)))
