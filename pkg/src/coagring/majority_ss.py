"""Self-similar dynamics of the majority kernel in logarithmic variables.

The scaling ansatz for the continuum majority-kernel equation reduces, in
the variable tau = log of the (complex) Laplace coordinate, to the
four-dimensional system

    H+' = psi- H+,   psi+' = H+,   H-' = psi+ H-,   psi-' = H-,

with the first integral E = psi+ psi- - H+ - H-.  Heteroclinic orbits of
this system (from psi=1, H=0 back to the fixed plane H=0) encode the
self-similar profiles; their continuation into the strip |Im tau| <= pi/2
gives the Laplace-space profile phi on a Bromwich line, and the physical
profile Phi follows by numerical Laplace inversion.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import Diverged, QuadratureNotConverged

DIVERGENCE_BOUND = 1e6
STRIP_HALF_WIDTH = 0.5 * math.pi


@dataclass(frozen=True)
class SSState:
    """One point of the self-similar system: (psi+, psi-, H+, H-) at tau."""

    psi_plus: complex = 1.0
    psi_minus: complex = 1.0
    h_plus: complex = 0.0
    h_minus: complex = 0.0
    tau: complex = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array(
            [self.psi_plus, self.psi_minus, self.h_plus, self.h_minus],
            dtype=np.complex128,
        )

    @classmethod
    def from_vector(cls, y: np.ndarray, tau: complex) -> "SSState":
        return cls(complex(y[0]), complex(y[1]), complex(y[2]), complex(y[3]), tau)

    @property
    def first_integral(self) -> complex:
        return self.psi_plus * self.psi_minus - self.h_plus - self.h_minus


@dataclass
class ProfileGrid:
    """Sampled self-similar profiles Phi+-(zeta) on a positive zeta grid."""

    zeta_values: np.ndarray
    phi_plus: np.ndarray
    phi_minus: np.ndarray


@dataclass
class SSTrajectory:
    taus: np.ndarray          # complex path points, shape (n+1,)
    states: np.ndarray        # complex, shape (n+1, 4): psi+, psi-, H+, H-
    energy: np.ndarray        # first integral at each point

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))

    def final_state(self) -> SSState:
        return SSState.from_vector(self.states[-1], complex(self.taus[-1]))


def rhs_ss(state: SSState | np.ndarray) -> np.ndarray:
    """Right-hand side (dpsi+, dpsi-, dH+, dH-)."""
    y = state.as_vector() if isinstance(state, SSState) else np.asarray(state)
    return _rhs_vec(y)


def _rhs_vec(y: np.ndarray) -> np.ndarray:
    psi_p, psi_m, h_p, h_m = y
    return np.array([h_p, h_m, psi_m * h_p, psi_p * h_m], dtype=np.complex128)


def first_integral(y: np.ndarray) -> complex:
    return complex(y[0] * y[1] - y[2] - y[3])


def analytic_symmetric(tau, tau0: float = 0.0):
    """Closed-form symmetric heteroclinic: psi = -tanh((tau-tau0)/2).

    Returns (psi, H) with H = -1 / (1 + cosh(tau - tau0)).  Accepts scalar
    or array tau; connects psi(-inf)=1 to psi(+inf)=-1 with E = 1.
    """
    s = np.asarray(tau, dtype=float) - tau0
    psi = -np.tanh(0.5 * s)
    h = -1.0 / (1.0 + np.cosh(s))
    if psi.ndim == 0:
        return float(psi), float(h)
    return psi, h


def _rk4_path(y0: np.ndarray, taus: np.ndarray, record: bool = True):
    """Classical RK4 along the straight segments of the complex path ``taus``."""
    y = y0.astype(np.complex128).copy()
    n = taus.size
    if record:
        states = np.empty((n, 4), dtype=np.complex128)
        states[0] = y
    for i in range(1, n):
        h = taus[i] - taus[i - 1]
        k1 = _rhs_vec(y)
        k2 = _rhs_vec(y + 0.5 * h * k1)
        k3 = _rhs_vec(y + 0.5 * h * k2)
        k4 = _rhs_vec(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.max(np.abs(y)) > DIVERGENCE_BOUND:
            raise Diverged(
                f"|component| exceeded {DIVERGENCE_BOUND:g} at tau={taus[i]}",
                tau=complex(taus[i]),
            )
        if record:
            states[i] = y
    if record:
        return states
    return y


def integrate_ss(initial: SSState, tau_end: complex, steps: int = 10_000) -> SSTrajectory:
    """RK4 along the straight segment initial.tau -> tau_end.

    The path must stay inside the strip |Im tau| <= pi/2 where the
    continued solution is singularity-free.  The first integral is
    recorded at every step; a component exceeding 1e6 raises Diverged
    with the tau at which the bound was crossed.
    """
    tau0 = complex(initial.tau)
    tau1 = complex(tau_end)
    for pt in (tau0, tau1):
        if abs(pt.imag) > STRIP_HALF_WIDTH + 1e-12:
            raise ValueError(f"path endpoint {pt} outside strip |Im tau| <= pi/2")
    taus = tau0 + (tau1 - tau0) * np.linspace(0.0, 1.0, steps + 1)
    states = _rk4_path(initial.as_vector(), taus)
    energy = states[:, 0] * states[:, 1] - states[:, 2] - states[:, 3]
    return SSTrajectory(taus=taus, states=states, energy=energy)


def integrate_polyline(initial: SSState, waypoints: Sequence[complex], steps_per_unit: float = 2000.0) -> SSTrajectory:
    """Chain of straight segments through ``waypoints`` (used by strip scans)."""
    pieces_t = []
    pieces_s = []
    state = initial
    for w in waypoints:
        seg_len = abs(complex(w) - complex(state.tau))
        steps = max(8, int(math.ceil(seg_len * steps_per_unit)))
        traj = integrate_ss(state, w, steps=steps)
        pieces_t.append(traj.taus if not pieces_t else traj.taus[1:])
        pieces_s.append(traj.states if not pieces_s else traj.states[1:])
        state = traj.final_state()
    taus = np.concatenate(pieces_t)
    states = np.concatenate(pieces_s)
    energy = states[:, 0] * states[:, 1] - states[:, 2] - states[:, 3]
    return SSTrajectory(taus=taus, states=states, energy=energy)


def perturbed_start(eps_plus: complex, eps_minus: complex, tau: complex = 0.0) -> SSState:
    """Fixed point psi=1, H=0 kicked by small H perturbations."""
    return SSState(1.0, 1.0, eps_plus, eps_minus, tau)


def strip_scan(
    eps_plus: complex,
    eps_minus: complex,
    re_max: float = 20.0,
    heights: Sequence[float] = (0.0, 0.25 * math.pi, -0.25 * math.pi, 0.99 * STRIP_HALF_WIDTH, -0.99 * STRIP_HALF_WIDTH),
    steps_per_unit: float = 4000.0,
):
    """Spot-check boundedness along horizontal lines of the strip.

    For each height b the solution is continued 0 -> i b -> i b + re_max.
    Returns {b: (max |component|, energy drift)}; raises Diverged if any
    line blows past the divergence bound.
    """
    report = {}
    for b in heights:
        start = perturbed_start(eps_plus, eps_minus)
        traj = integrate_polyline(start, [1j * b, 1j * b + re_max], steps_per_unit)
        report[b] = (float(np.max(np.abs(traj.states))), traj.energy_drift)
    return report


def laplace_line_samples(
    initial: SSState,
    gamma: float,
    omegas: np.ndarray,
    xi0: float = 1.0,
    substeps: int = 4,
):
    """psi-field samples along the Bromwich line eta = gamma + i omega.

    The Laplace coordinate maps to tau = log(eta / xi0); sweeping omega
    from 0 upward traces a curve inside the strip, so the system is
    integrated along that curve with ``substeps`` RK4 stages between
    successive omegas.  ``initial`` must be the solution state at
    tau = log(gamma / xi0) (real axis), typically obtained with
    integrate_ss from a perturbed fixed point.

    Returns states at each omega, shape (len(omegas), 4).
    """
    if gamma <= 0 or xi0 <= 0:
        raise ValueError("gamma and xi0 must be positive")
    tau_of = lambda w: cmath.log((gamma + 1j * w) / xi0)
    tau_start = tau_of(float(omegas[0]))
    if abs(complex(initial.tau) - tau_start) > 1e-9:
        raise ValueError(
            f"initial.tau={initial.tau} does not match log(eta/xi0)={tau_start}"
        )
    out = np.empty((omegas.size, 4), dtype=np.complex128)
    y = initial.as_vector()
    out[0] = y
    for i in range(1, omegas.size):
        seg = np.array(
            [tau_of(w) for w in np.linspace(omegas[i - 1], omegas[i], substeps + 1)],
            dtype=np.complex128,
        )
        y = _rk4_path(y, seg, record=False)
        out[i] = y
    return out


def bromwich_invert(
    phi: Callable[[np.ndarray], np.ndarray],
    gamma: float,
    zeta_grid: np.ndarray,
    tol: float = 1e-6,
    t_start: float = 256.0,
    t_max: float = 40_000.0,
    domega: float | None = None,
):
    """Inverse Laplace transform along the vertical line Re(eta) = gamma.

    Phi(zeta) = (1/2 pi i) Int e^{zeta eta} phi(eta) d eta is computed by
    trapezoid quadrature on eta = gamma + i omega, omega in [-T, T], with
    Euler-Maclaurin and integration-by-parts endpoint corrections that
    remove the leading truncation error of the oscillatory tail.  T is
    doubled until the result moves less than ``tol`` in sup norm.

    ``phi`` must accept a complex ndarray and be analytic for Re > 0;
    zeta values must be positive (at a jump of the original function the
    contour integral converges to the midpoint, so zeta = 0 is excluded).

    Returns (Phi, imag_residual): real parts and the largest |imaginary
    part|, which estimates quadrature quality.

    Raises
    ------
    QuadratureNotConverged
        If doubling the contour beyond t_max still changes the result by
        more than ``tol``.
    """
    zeta = np.asarray(zeta_grid, dtype=float)
    if np.any(zeta <= 0):
        raise ValueError("zeta grid must be strictly positive")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    zmax = float(zeta.max())
    if domega is None:
        domega = min(0.02, 0.1 / zmax, 0.1 * gamma)

    def contour_value(T: float) -> np.ndarray:
        n = int(math.ceil(T / domega))
        om = (np.arange(-n, n + 1)) * domega
        h = np.asarray(phi(gamma + 1j * om), dtype=np.complex128)
        w = np.ones_like(om)
        w[0] = w[-1] = 0.5
        # J(zeta) = Int h(om) e^{i om zeta} dom, trapezoid + corrections.
        # Chunked over omega to bound the phase-matrix memory.
        J = np.zeros(zeta.size, dtype=np.complex128)
        wh = w * h
        chunk = max(1, 4_000_000 // max(1, zeta.size))
        for lo in range(0, om.size, chunk):
            sl = slice(lo, lo + chunk)
            J += (np.exp(1j * np.outer(zeta, om[sl])) * wh[sl]).sum(axis=1)
        J *= domega
        Tn = om[-1]
        hT, hmT = h[-1], h[0]
        dT = (3.0 * h[-1] - 4.0 * h[-2] + h[-3]) / (2.0 * domega)
        dmT = -(3.0 * h[0] - 4.0 * h[1] + h[2]) / (2.0 * domega)
        eiT = np.exp(1j * Tn * zeta)
        eimT = np.exp(-1j * Tn * zeta)
        iz = 1j * zeta
        # truncated oscillatory tails, two integrations by parts each
        J = J + (hmT * eimT - hT * eiT) / iz + (dT * eiT - dmT * eimT) / iz**2
        # Euler-Maclaurin endpoint term of the trapezoid rule
        fpT = (dT + 1j * zeta * hT) * eiT
        fpmT = (dmT + 1j * zeta * hmT) * eimT
        J = J - (domega**2 / 12.0) * (fpT - fpmT)
        return np.exp(gamma * zeta) / (2.0 * math.pi) * J

    T = t_start
    prev = contour_value(T)
    while True:
        T *= 2.0
        cur = contour_value(T)
        if np.max(np.abs(cur - prev)) <= tol:
            return cur.real, float(np.max(np.abs(cur.imag)))
        if T > t_max:
            raise QuadratureNotConverged(
                f"contour length {T:g} still changes result by "
                f"{np.max(np.abs(cur - prev)):.3e} > {tol:g}"
            )
        prev = cur


def symmetric_profile_pipeline(
    gamma: float = 1.0,
    zeta_grid: np.ndarray | None = None,
    xi0: float = 1.0,
    depth: float = 12.0,
    tol: float = 1e-5,
    substeps: int = 2,
):
    """End-to-end profile for the symmetric connection (phi(0) = 2).

    Integrates the real heteroclinic from deep inside its tail (the state
    there is exponentially close to the fixed point psi=1, H=0), centers
    it at tau0 = log(gamma/xi0) so the resulting profile scale is gamma,
    sweeps the Bromwich line through the strip to sample
    phi(eta) = psi(log(eta/xi0)) - psi(+inf), and inverts.  The exact
    result for this connection is Phi(zeta) = 2 c e^{-c zeta} with
    c = xi0 e^{tau0} = gamma.

    Returns (ProfileGrid, imag_residual); plus and minus columns coincide
    by symmetry.
    """
    if zeta_grid is None:
        zeta_grid = np.linspace(0.25, 5.0, 40)
    zeta_grid = np.asarray(zeta_grid, dtype=float)
    tau0 = math.log(gamma / xi0)
    psi_start, h_start = analytic_symmetric(tau0 - depth, tau0)
    start = SSState(psi_start, psi_start, h_start, h_start, tau=tau0 - depth)
    real_leg = integrate_ss(start, tau0, steps=int(2000 * depth))
    anchor = real_leg.final_state()
    psi_inf = -math.sqrt(abs(anchor.first_integral))  # E = psi^2 on the H=0 plane

    cache: dict[tuple, np.ndarray] = {}

    def phi_vals(eta: np.ndarray) -> np.ndarray:
        om = np.asarray(eta).imag
        key = (round(float(om.max()), 9), round(float(om[1] - om[0]), 12), om.size)
        if key not in cache:
            pos = om[om.size // 2 :]  # symmetric grid: second half is 0..T
            states = laplace_line_samples(anchor, gamma, pos, xi0=xi0, substeps=substeps)
            phi_pos = states[:, 0] - psi_inf
            # real trajectory: phi(conj(eta)) = conj(phi(eta))
            cache[key] = np.concatenate([np.conj(phi_pos[1:][::-1]), phi_pos])
        return cache[key]

    phi_arr, resid = bromwich_invert(phi_vals, gamma, zeta_grid, tol=tol)
    return ProfileGrid(zeta_grid, phi_arr.copy(), phi_arr.copy()), resid
