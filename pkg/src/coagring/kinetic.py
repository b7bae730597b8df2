"""Fixed-step RK4 integration of the truncated two-species coagulation equations.

The discrete system evolves per-direction densities f+(l), f-(l) on the
size lattice l = 1..L.  For the random kernel,

    df+(l)/dt = (1/2) sum_{k+j=l} f+(k) f-(j) - f+(l) N-,

and symmetrically for f-.  For the majority kernel the gain convolution
carries the mass-fraction weight of the same-direction parent,

    df+(l)/dt = sum_{k+j=l} (k/l) f+(k) f-(j) - f+(l) N-,

which is the coefficient form of the generating-function system
d(dF+/dz)/dt = F- dF+/dz - N- dF+/dz and is what conserves M+ and M-
individually.  Production beyond the truncation L is dropped from the
arrays but its mass rate is integrated into per-direction leak ledgers,
so conservation can be checked including the leak.

Convolutions are direct O(L^2) sums (jitted): they keep exact zeros on
gapped lattices, which transform-based products would not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ClusterSpectrum, KernelKind
from .errors import NegativeDensity, UnsupportedSize

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


@dataclass
class SolverConfig:
    """Truncation and step size for the fixed-step RK4 integrator."""

    L: int = 256
    dt: float = 0.01
    method: str = "rk4"

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("truncation L must be >= 2")
        if not (self.dt > 0):
            raise ValueError("dt must be > 0")
        if self.method != "rk4":
            raise ValueError("only fixed-step rk4 is implemented")


@dataclass
class KineticState:
    """Dense truncated spectra plus the accumulated truncation leak.

    Index 0 of the arrays is unused and kept at zero; f_plus[l] is the
    count of size-l clusters moving in the + direction.
    """

    f_plus: np.ndarray
    f_minus: np.ndarray
    t: float = 0.0
    leak_plus: float = 0.0
    leak_minus: float = 0.0

    @property
    def L(self) -> int:
        return self.f_plus.shape[0] - 1

    @property
    def leaked_mass(self) -> float:
        return self.leak_plus + self.leak_minus

    def to_spectrum(self) -> ClusterSpectrum:
        fp = {l: float(v) for l, v in enumerate(self.f_plus) if l > 0 and v > 0.0}
        fm = {l: float(v) for l, v in enumerate(self.f_minus) if l > 0 and v > 0.0}
        return ClusterSpectrum(fp, fm, time=self.t)


@dataclass(frozen=True)
class ConservedDiagnostics:
    """Exact sums over the truncated arrays."""

    c0: float  # N+ - N-
    c1: float  # M+ + M-
    m_plus: float
    m_minus: float


def state_from_spectrum(initial: ClusterSpectrum, L: int) -> KineticState:
    if initial.max_size() > L:
        raise UnsupportedSize(
            f"initial support reaches {initial.max_size()} > truncation L={L}"
        )
    fp = np.zeros(L + 1)
    fm = np.zeros(L + 1)
    for l, v in initial.f_plus.items():
        fp[l] = v
    for l, v in initial.f_minus.items():
        fm[l] = v
    return KineticState(fp, fm, t=initial.time)


def symmetric_monodisperse(n_total: float, L: int) -> KineticState:
    """N0 unit-size clusters split evenly between the directions."""
    fp = np.zeros(L + 1)
    fm = np.zeros(L + 1)
    fp[1] = 0.5 * n_total
    fm[1] = 0.5 * n_total
    return KineticState(fp, fm)


@njit(cache=True)
def _conv_trunc(a, b, out):
    """out[l] = sum_{k+j=l, k,j>=1} a[k] b[j] for l <= L (index 0 unused)."""
    L = a.shape[0] - 1
    for l in range(L + 1):
        out[l] = 0.0
    for k in range(1, L):
        ak = a[k]
        if ak != 0.0:
            for j in range(1, L - k + 1):
                out[k + j] += ak * b[j]


@njit(cache=True)
def _rhs_random_jit(fp, fm, dfp, dfm):
    L = fp.shape[0] - 1
    _conv_trunc(fp, fm, dfp)  # shared convolution (f+ * f-)
    np_ = 0.0
    nm = 0.0
    mp = 0.0
    mm = 0.0
    kept_mass = 0.0
    for l in range(1, L + 1):
        np_ += fp[l]
        nm += fm[l]
        mp += l * fp[l]
        mm += l * fm[l]
        kept_mass += l * dfp[l]
    for l in range(1, L + 1):
        conv = dfp[l]
        dfp[l] = 0.5 * conv - fp[l] * nm
        dfm[l] = 0.5 * conv - fm[l] * np_
    # mass production rate beyond L, split evenly by the random direction rule
    leak_total = (mp * nm + mm * np_) - kept_mass
    if leak_total < 0.0:
        leak_total = 0.0
    return 0.5 * leak_total, 0.5 * leak_total


@njit(cache=True)
def _rhs_majority_jit(fp, fm, dfp, dfm, wp, wm, cp, cm):
    L = fp.shape[0] - 1
    np_ = 0.0
    nm = 0.0
    mp = 0.0
    mm = 0.0
    for l in range(1, L + 1):
        np_ += fp[l]
        nm += fm[l]
        mp += l * fp[l]
        mm += l * fm[l]
        wp[l] = l * fp[l]
        wm[l] = l * fm[l]
    wp[0] = 0.0
    wm[0] = 0.0
    _conv_trunc(wp, fm, cp)  # sum k f+(k) f-(l-k)
    _conv_trunc(wm, fp, cm)
    kept_p = 0.0
    kept_m = 0.0
    for l in range(1, L + 1):
        gain_p = cp[l] / l
        gain_m = cm[l] / l
        kept_p += cp[l]
        kept_m += cm[l]
        dfp[l] = gain_p - fp[l] * nm
        dfm[l] = gain_m - fm[l] * np_
    leak_p = mp * nm - kept_p
    leak_m = mm * np_ - kept_m
    if leak_p < 0.0:
        leak_p = 0.0
    if leak_m < 0.0:
        leak_m = 0.0
    return leak_p, leak_m


def rhs_random(state: KineticState):
    """Time derivatives (df+, df-, dleak+, dleak-) for the random kernel."""
    dfp = np.zeros_like(state.f_plus)
    dfm = np.zeros_like(state.f_minus)
    lp, lm = _rhs_random_jit(state.f_plus, state.f_minus, dfp, dfm)
    return dfp, dfm, lp, lm


def rhs_majority(state: KineticState):
    """Time derivatives (df+, df-, dleak+, dleak-) for the majority kernel."""
    L = state.L
    dfp = np.zeros(L + 1)
    dfm = np.zeros(L + 1)
    scratch = [np.zeros(L + 1) for _ in range(4)]
    lp, lm = _rhs_majority_jit(state.f_plus, state.f_minus, dfp, dfm, *scratch)
    return dfp, dfm, lp, lm


def _rhs(fp, fm, kernel, scratch):
    dfp, dfm, wp, wm, cp, cm = scratch
    if kernel is KernelKind.RANDOM:
        lp, lm = _rhs_random_jit(fp, fm, dfp, dfm)
    else:
        lp, lm = _rhs_majority_jit(fp, fm, dfp, dfm, wp, wm, cp, cm)
    return dfp, dfm, lp, lm


def _rk4_advance(fp, fm, leaks, h, kernel, scratch):
    """One classical RK4 step of size h; returns new (fp, fm, leak+, leak-)."""
    k1p, k1m, l1p, l1m = _rhs(fp, fm, kernel, scratch)
    k1p, k1m = k1p.copy(), k1m.copy()
    k2p, k2m, l2p, l2m = _rhs(fp + 0.5 * h * k1p, fm + 0.5 * h * k1m, kernel, scratch)
    k2p, k2m = k2p.copy(), k2m.copy()
    k3p, k3m, l3p, l3m = _rhs(fp + 0.5 * h * k2p, fm + 0.5 * h * k2m, kernel, scratch)
    k3p, k3m = k3p.copy(), k3m.copy()
    k4p, k4m, l4p, l4m = _rhs(fp + h * k3p, fm + h * k3m, kernel, scratch)
    new_fp = fp + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    new_fm = fm + (h / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
    new_lp = leaks[0] + (h / 6.0) * (l1p + 2.0 * l2p + 2.0 * l3p + l4p)
    new_lm = leaks[1] + (h / 6.0) * (l1m + 2.0 * l2m + 2.0 * l3m + l4m)
    return new_fp, new_fm, new_lp, new_lm


def integrate(
    initial: ClusterSpectrum | KineticState,
    t_end: float,
    cfg: SolverConfig,
    kernel: KernelKind,
    t_eval: Sequence[float] | None = None,
) -> list[KineticState]:
    """RK4 trajectory from the initial spectrum, sampled at ``t_eval``.

    Each requested output time is hit exactly by dividing the preceding
    interval into uniform substeps of size <= cfg.dt, so reruns with the
    same config are bit-identical.

    Raises
    ------
    UnsupportedSize
        If the initial support exceeds the truncation.
    NegativeDensity
        If any density drops below -1e-12 along the trajectory.
    """
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    state = (
        initial
        if isinstance(initial, KineticState)
        else state_from_spectrum(initial, cfg.L)
    )
    if state.L != cfg.L:
        raise UnsupportedSize(f"state truncation {state.L} != solver truncation {cfg.L}")
    times = sorted(set(float(t) for t in (t_eval if t_eval is not None else [t_end])))
    if times and (times[0] < state.t or times[-1] > t_end):
        raise ValueError("t_eval must lie within [t_start, t_end]")
    if not times or times[-1] < t_end:
        times.append(t_end)

    fp = state.f_plus.copy()
    fm = state.f_minus.copy()
    lp, lm = state.leak_plus, state.leak_minus
    t = state.t
    L = state.L
    scratch = tuple(np.zeros(L + 1) for _ in range(6))
    out: list[KineticState] = []
    for t_next in times:
        span = t_next - t
        if span > 0:
            n_sub = max(1, math.ceil(span / cfg.dt - 1e-12))
            h = span / n_sub
            for _ in range(n_sub):
                fp, fm, lp, lm = _rk4_advance(fp, fm, (lp, lm), h, kernel, scratch)
            low = min(fp.min(), fm.min())
            if low < -1e-12:
                raise NegativeDensity(
                    f"density reached {low:.3e} at t={t_next}; reduce dt or increase L"
                )
        t = t_next
        out.append(KineticState(fp.copy(), fm.copy(), t=t, leak_plus=lp, leak_minus=lm))
    return out


def conserved_diagnostics(state: KineticState) -> ConservedDiagnostics:
    """N+ - N-, M+ + M-, and the per-direction masses, as exact sums."""
    l = np.arange(state.L + 1, dtype=float)
    n_plus = math.fsum(state.f_plus[1:])
    n_minus = math.fsum(state.f_minus[1:])
    m_plus = math.fsum(l * state.f_plus)
    m_minus = math.fsum(l * state.f_minus)
    return ConservedDiagnostics(
        c0=n_plus - n_minus, c1=m_plus + m_minus, m_plus=m_plus, m_minus=m_minus
    )


def counts(state: KineticState):
    """(N+, N-) for convenience in tests and the CLI."""
    return float(state.f_plus[1:].sum()), float(state.f_minus[1:].sum())
