"""Exact event-driven simulation of the stochastic coagulation process.

Unit-mass clusters are placed uniformly on the unit ring with velocities
+1 or -1.  Opposite movers close their gap at relative speed 2; at each
meeting they coagulate with probability p (merged mass = sum, direction
drawn from the collision kernel) and otherwise pass through unchanged.
A realization ends in the absorbing state: a single cluster, or all
remaining clusters sharing one velocity.

Two execution paths produce bit-compatible realizations from a seed:

* :func:`run_realization` drives the array engine in ``_engine`` (jitted,
  used for ensembles);
* :func:`init_realization` / :func:`next_meeting` / :func:`step` expose
  the same dynamics one event at a time with a brute-force O(n^2) meeting
  search, and :func:`run_realization_reference` loops them.  Tests use
  this as the independent cross-check of the engine.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _engine
from .core import ClusterSpectrum, KernelKind, SeedSpec
from .errors import ConfigError, StepOnAbsorbing
from .rng import RngStream

MEETING_TIE_TOL = 1e-12


class InitMode(enum.Enum):
    """Velocity assignment: independent Bernoulli(p0) draws, or exactly
    floor(p0*n0) clusters chosen uniformly at random."""

    BINOMIAL = "binomial"
    FIXED_COUNT = "fixed"


@dataclass(frozen=True)
class SimConfig:
    n0: int
    p: float = 0.1
    p0: float = 0.5
    init_mode: InitMode = InitMode.BINOMIAL
    kernel: KernelKind = KernelKind.RANDOM
    z_sample_times: tuple[float, ...] = ()
    seed: SeedSpec = field(default_factory=SeedSpec)

    def __post_init__(self):
        if int(self.n0) < 1:
            raise ConfigError(f"n0 must be >= 1, got {self.n0}")
        if not 0.0 < self.p <= 1.0:
            raise ConfigError(f"p must be in (0, 1], got {self.p}")
        if not 0.0 <= self.p0 <= 1.0:
            raise ConfigError(f"p0 must be in [0, 1], got {self.p0}")
        if any(t < 0 for t in self.z_sample_times):
            raise ConfigError("z sample times must be >= 0")
        object.__setattr__(self, "z_sample_times", tuple(float(t) for t in self.z_sample_times))

    def with_seed_index(self, index: int) -> "SimConfig":
        return replace(self, seed=self.seed.with_index(index))


@dataclass
class RingState:
    """Live clusters of one realization at one instant."""

    positions: np.ndarray  # float in [0, 1)
    velocities: np.ndarray  # +1 / -1
    masses: np.ndarray  # positive integers
    time: float = 0.0
    coagulation_count: int = 0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=np.int64)
        self.masses = np.asarray(self.masses, dtype=np.int64)

    @property
    def n(self) -> int:
        return self.positions.size

    @property
    def z(self) -> int:
        return int(np.sum(self.velocities == 1) - np.sum(self.velocities == -1))

    @property
    def total_mass(self) -> int:
        return int(self.masses.sum())

    def is_absorbing(self) -> bool:
        return self.n <= 1 or np.all(self.velocities == self.velocities[0])

    def to_spectrum(self) -> ClusterSpectrum:
        fp: dict[int, float] = {}
        fm: dict[int, float] = {}
        for v, m in zip(self.velocities, self.masses):
            side = fp if v == 1 else fm
            side[int(m)] = side.get(int(m), 0.0) + 1.0
        return ClusterSpectrum(fp, fm, time=self.time)


@dataclass(frozen=True)
class RealizationResult:
    """Outcome of one realization.

    ``z_series`` and ``n_series`` sample the piecewise-constant Z(t) and
    cluster-count trajectories at the configured times (right-continuous:
    a sample at the exact instant of a coagulation sees the new value).
    """

    n_infinity: int
    t_infinity: float
    final_spectrum: ClusterSpectrum
    z_series: tuple[tuple[float, int], ...]
    z0: int
    n_series: tuple[tuple[float, int], ...] = ()
    coagulation_times: tuple[float, ...] = ()

    @property
    def z_infinity(self) -> int:
        np_ = sum(self.final_spectrum.f_plus.values())
        nm = sum(self.final_spectrum.f_minus.values())
        return int(round(np_ - nm))


def _rng_for(cfg: SimConfig) -> RngStream:
    return RngStream(cfg.seed.master_seed, cfg.seed.realization_index)


def init_realization(cfg: SimConfig, rng: Optional[RngStream] = None) -> RingState:
    """Draw the initial state: uniform positions, velocities per init_mode.

    Consumes n0 uniforms for positions, then n0 (binomial mode) or
    floor(p0*n0) (fixed mode) uniforms for velocities, in that order; the
    engine consumes the stream identically.
    """
    rng = rng or _rng_for(cfg)
    n0 = cfg.n0
    x = rng.uniforms(n0)
    vel = np.empty(n0, dtype=np.int64)
    if cfg.init_mode is InitMode.BINOMIAL:
        for i in range(n0):
            vel[i] = 1 if rng.uniform() < cfg.p0 else -1
    else:
        k = int(cfg.p0 * n0)
        perm = np.arange(n0)
        for i in range(k):
            j = i + int(rng.uniform() * (n0 - i))
            perm[i], perm[j] = perm[j], perm[i]
        vel[:] = -1
        vel[perm[:k]] = 1
    return RingState(x, vel, np.ones(n0, dtype=np.int64))


def next_meeting(state: RingState) -> Optional[tuple[float, tuple[int, int]]]:
    """Earliest future meeting of any opposite-velocity pair, or None.

    For the pair (i, j) the approaching gap is measured from the right
    mover to the left mover along the +1 direction and closes at speed 2.
    An exactly zero gap means the pair is at the meeting point right now
    (it just passed through), so its next meeting is half a period away.
    Ties within 1e-12 resolve to the lowest (i, j).
    """
    x, v, t = state.positions, state.velocities, state.time
    n = state.n
    best_t = math.inf
    candidates: list[tuple[float, tuple[int, int]]] = []
    for i in range(n):
        for j in range(i + 1, n):
            if v[i] == v[j]:
                continue
            if v[i] == 1:
                gap = (x[j] - x[i]) % 1.0
            else:
                gap = (x[i] - x[j]) % 1.0
            if gap < MEETING_TIE_TOL:
                gap += 1.0
            t_ev = t + 0.5 * gap
            candidates.append((t_ev, (i, j)))
            if t_ev < best_t:
                best_t = t_ev
    if not candidates:
        return None
    in_tol = [(te, pair) for te, pair in candidates if te <= best_t + MEETING_TIE_TOL]
    in_tol.sort(key=lambda item: item[1])
    return in_tol[0]


def step(state: RingState, rng: RngStream, p: float = 0.1,
         kernel: KernelKind = KernelKind.RANDOM) -> RingState:
    """Advance to the next meeting and resolve it (merge or pass through).

    Consumes one uniform for the Bernoulli(p) trial and, on coagulation,
    one more for the direction rule; the merged cluster is placed at the
    meeting point and appended after the survivors.  Raises
    StepOnAbsorbing if no meeting is possible.
    """
    meeting = next_meeting(state)
    if meeting is None:
        raise StepOnAbsorbing("no opposite-velocity pair remains")
    t_ev, (i, j) = meeting
    dt = t_ev - state.time
    x = (state.positions + state.velocities * dt) % 1.0
    v = state.velocities.copy()
    m = state.masses.copy()
    u1 = rng.uniform()
    if u1 >= p:
        return RingState(x, v, m, time=t_ev, coagulation_count=state.coagulation_count)
    u2 = rng.uniform()
    if kernel is KernelKind.MAJORITY:
        newv = v[i] if u2 < m[i] / (m[i] + m[j]) else v[j]
    else:
        newv = 1 if u2 < 0.5 else -1
    # merged cluster sits at the meeting point: the right mover's position
    pos_new = x[i] if v[i] == 1 else x[j]
    keep = np.ones(state.n, dtype=bool)
    keep[i] = keep[j] = False
    x2 = np.append(x[keep], pos_new)
    v2 = np.append(v[keep], newv)
    m2 = np.append(m[keep], m[i] + m[j])
    return RingState(x2, v2, m2, time=t_ev, coagulation_count=state.coagulation_count + 1)


def _series_samples(times, coag_t, values, v0):
    """Sample the piecewise-constant trajectory (v0 before the first event)."""
    out = []
    for s in times:
        idx = int(np.searchsorted(coag_t, s, side="right")) - 1
        out.append((float(s), int(v0 if idx < 0 else values[idx])))
    return tuple(out)


def _result_from_engine(cfg: SimConfig, raw) -> RealizationResult:
    pos_f, vel_f, mass_f, coag_t, coag_z, coag_n, coag_mass, coag_dir, z0 = raw
    fp: dict[int, float] = {}
    fm: dict[int, float] = {}
    for v, m in zip(vel_f, mass_f):
        side = fp if v == 1 else fm
        side[int(m)] = side.get(int(m), 0.0) + 1.0
    t_inf = float(coag_t[-1]) if coag_t.size else 0.0
    spectrum = ClusterSpectrum(fp, fm, time=t_inf)
    times = cfg.z_sample_times
    return RealizationResult(
        n_infinity=int(pos_f.size),
        t_infinity=t_inf,
        final_spectrum=spectrum,
        z_series=_series_samples(times, coag_t, coag_z, z0),
        z0=int(z0),
        n_series=_series_samples(times, coag_t, coag_n, cfg.n0),
        coagulation_times=tuple(float(t) for t in coag_t),
    )


def run_realization_raw(cfg: SimConfig):
    """Engine run returning (RealizationResult, raw event arrays).

    The raw tuple is (final positions, velocities, masses, coagulation
    times, Z after each, N after each, merged masses, merged directions,
    z0); the CLI event log is written from it.
    """
    rng_state = _rng_for(cfg).state
    raw = _engine.run_engine(
        rng_state,
        cfg.n0,
        cfg.p,
        cfg.p0,
        cfg.init_mode is InitMode.BINOMIAL,
        cfg.kernel is KernelKind.MAJORITY,
    )
    return _result_from_engine(cfg, raw), raw


def run_realization(cfg: SimConfig) -> RealizationResult:
    """Run one realization to absorption (engine path).

    t_infinity is the time of the final coagulation (0.0 if the initial
    state is already absorbing): after it, no observable evolves.
    Identical configs give bit-identical results.
    """
    return run_realization_raw(cfg)[0]


def run_realization_reference(cfg: SimConfig) -> RealizationResult:
    """Step-by-step runner over the brute-force meeting search.

    Slow; exists as the independent verification route for the engine.
    """
    rng = _rng_for(cfg)
    state = init_realization(cfg, rng)
    z0 = state.z
    coag_t: list[float] = []
    coag_z: list[int] = []
    coag_n: list[int] = []
    while not state.is_absorbing():
        before = state.coagulation_count
        state = step(state, rng, cfg.p, cfg.kernel)
        if state.coagulation_count > before:
            coag_t.append(state.time)
            coag_z.append(state.z)
            coag_n.append(state.n)
    t_inf = coag_t[-1] if coag_t else 0.0
    spectrum = state.to_spectrum()
    spectrum = ClusterSpectrum(spectrum.f_plus, spectrum.f_minus, time=t_inf)
    ct = np.asarray(coag_t)
    times = cfg.z_sample_times
    return RealizationResult(
        n_infinity=state.n,
        t_infinity=t_inf,
        final_spectrum=spectrum,
        z_series=_series_samples(times, ct, np.asarray(coag_z), z0),
        z0=z0,
        n_series=_series_samples(times, ct, np.asarray(coag_n), cfg.n0),
        coagulation_times=tuple(coag_t),
    )
