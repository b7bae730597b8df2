"""Domain types shared by the simulator, the kinetic solver and the oracles.

Cluster-size spectra are sparse maps ``size -> count`` with real-valued
counts: the kinetic description evolves ensemble averages, so counts need
not be integers.  The stochastic simulator converts to integer histograms
at its boundary.  All types here are immutable value objects and safe to
share between tasks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .errors import EmptySpectrum


class KernelKind(enum.Enum):
    """Direction rule for the cluster produced by a coagulation.

    RANDOM:   the merged cluster moves +1 or -1 with probability 1/2 each.
    MAJORITY: it keeps the k-parent's direction with probability k/(k+j).
    """

    RANDOM = "random"
    MAJORITY = "majority"


def _clean_spectrum(raw: Mapping[int, float]) -> Mapping[int, float]:
    out = {}
    for size, count in raw.items():
        s = int(size)
        if s != size or s < 1:
            raise ValueError(f"cluster sizes must be positive integers, got {size!r}")
        c = float(count)
        if not math.isfinite(c) or c < 0.0:
            raise ValueError(f"counts must be finite and >= 0, got {count!r} at size {s}")
        if c != 0.0:
            out[s] = c
    return MappingProxyType(out)


@dataclass(frozen=True)
class ClusterSpectrum:
    """Per-direction cluster counts f+(l), f-(l) at one instant."""

    f_plus: Mapping[int, float] = field(default_factory=dict)
    f_minus: Mapping[int, float] = field(default_factory=dict)
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "f_plus", _clean_spectrum(self.f_plus))
        object.__setattr__(self, "f_minus", _clean_spectrum(self.f_minus))
        if not (self.time >= 0.0):
            raise ValueError(f"time must be >= 0, got {self.time}")

    def __reduce__(self):
        # mapping proxies do not pickle; rebuild through the constructor
        return (ClusterSpectrum, (dict(self.f_plus), dict(self.f_minus), self.time))

    @property
    def support(self) -> set[int]:
        return set(self.f_plus) | set(self.f_minus)

    def max_size(self) -> int:
        sup = self.support
        return max(sup) if sup else 0


@dataclass(frozen=True)
class Moments:
    """Low-order moments of a spectrum: counts, masses and second moments."""

    n_plus: float
    n_minus: float
    m_plus: float
    m_minus: float
    m2_plus: float
    m2_minus: float

    def __post_init__(self):
        for name in ("n_plus", "n_minus", "m_plus", "m_minus", "m2_plus", "m2_minus"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        # sizes are >= 1, so N <= M and M^2 <= N * M2 (Cauchy-Schwarz)
        tol = 1e-9
        for n, m, m2 in ((self.n_plus, self.m_plus, self.m2_plus),
                         (self.n_minus, self.m_minus, self.m2_minus)):
            if n > m * (1 + tol) + tol:
                raise ValueError(f"invalid moments: N={n} exceeds M={m}")
            if m * m > n * m2 * (1 + tol) + tol:
                raise ValueError(f"invalid moments: M^2={m*m} exceeds N*M2={n*m2}")

    @property
    def n_total(self) -> float:
        return self.n_plus + self.n_minus

    @property
    def m_total(self) -> float:
        return self.m_plus + self.m_minus


@dataclass(frozen=True)
class SeedSpec:
    """Deterministic per-realization RNG stream identity.

    Distinct ``realization_index`` values yield statistically independent
    streams derived from the same 64-bit ``master_seed``.
    """

    master_seed: int = 0
    realization_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")
        if int(self.realization_index) < 0:
            raise ValueError("realization_index must be >= 0")

    def with_index(self, index: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, index)


def moments(spec: ClusterSpectrum) -> Moments:
    """Exact finite sums N, M and sum(l^2 f) for each direction.

    Empty spectra give all-zero moments.  Sums use ``math.fsum`` so the
    result is the correctly rounded value of the exact sum.
    """

    def side(f: Mapping[int, float]):
        n = math.fsum(f.values())
        m = math.fsum(l * c for l, c in f.items())
        m2 = math.fsum(l * l * c for l, c in f.items())
        return n, m, m2

    np_, mp, m2p = side(spec.f_plus)
    nm, mm, m2m = side(spec.f_minus)
    return Moments(np_, nm, mp, mm, m2p, m2m)


def gap_index(spec: ClusterSpectrum) -> int:
    """gcd of all occupied sizes across both directions.

    Sizes generated by coagulation stay on multiples of this index, so it
    fixes the lattice ("characteristic wavelength") of the evolved spectrum.

    Raises
    ------
    EmptySpectrum
        If neither direction has an occupied size.
    """
    sup = spec.support
    if not sup:
        raise EmptySpectrum("gap index undefined for an empty spectrum")
    d = 0
    for s in sup:
        d = math.gcd(d, s)
    return d
