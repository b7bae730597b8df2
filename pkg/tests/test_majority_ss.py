import math

import numpy as np
import pytest

from coagring.errors import Diverged, QuadratureNotConverged
from coagring.majority_ss import (
    SSState,
    analytic_symmetric,
    bromwich_invert,
    first_integral,
    integrate_ss,
    perturbed_start,
    rhs_ss,
    strip_scan,
    symmetric_profile_pipeline,
)


def test_rhs_fixed_point():
    assert np.all(rhs_ss(SSState(1.0, 1.0, 0.0, 0.0)) == 0.0)


def test_rhs_substitution():
    d = rhs_ss(SSState(0.0, 0.0, -0.5, -0.5))
    assert d[0] == -0.5 and d[1] == -0.5  # psi' = H
    assert d[2] == 0.0 and d[3] == 0.0    # H' = psi H = 0


def test_first_integral_rate_vanishes_identically():
    rng = np.random.default_rng(5)
    for _ in range(20):
        y = rng.normal(size=4) + 1j * rng.normal(size=4)
        d = rhs_ss(y)
        # dE = psi+' psi- + psi+ psi-' - H+' - H-'
        de = d[0] * y[1] + y[0] * d[1] - d[2] - d[3]
        assert abs(de) < 1e-15


def test_analytic_symmetric_center():
    psi, h = analytic_symmetric(0.0, 0.0)
    assert psi == 0.0
    assert h == pytest.approx(-0.5)


def test_analytic_symmetric_limits():
    psi_m, h_m = analytic_symmetric(-40.0, 0.0)
    psi_p, h_p = analytic_symmetric(40.0, 0.0)
    assert psi_m == pytest.approx(1.0, abs=1e-12)
    assert h_m == pytest.approx(0.0, abs=1e-12)
    assert psi_p == pytest.approx(-1.0, abs=1e-12)  # 1 - phi(0) with phi(0) = 2


def test_heteroclinic_matches_closed_form():
    psi0, h0 = analytic_symmetric(-10.0, 0.0)
    traj = integrate_ss(SSState(psi0, psi0, h0, h0, tau=-10.0), 10.0, steps=10_000)
    psi_exact, h_exact = analytic_symmetric(traj.taus.real, 0.0)
    assert np.max(np.abs(traj.states[:, 0].real - psi_exact)) <= 1e-6
    assert np.max(np.abs(traj.states[:, 2].real - h_exact)) <= 1e-6


def test_first_integral_conserved_1e4_steps():
    psi0, h0 = analytic_symmetric(-20.0, 0.0)
    traj = integrate_ss(SSState(psi0, psi0, h0, h0, tau=-20.0), 20.0, steps=10_000)
    assert traj.energy_drift <= 1e-8


def test_invariant_plane_preserved_exactly():
    start = perturbed_start(1e-3j, 1e-3j)
    traj = integrate_ss(start, 15.0, steps=4000)
    assert np.array_equal(traj.states[:, 0], traj.states[:, 1])
    assert np.array_equal(traj.states[:, 2], traj.states[:, 3])


def test_hyperbola_limit():
    # on the E=1 orbit, psi+ psi- -> 1 wherever H -> 0 (both tau ends)
    psi0, h0 = analytic_symmetric(-15.0, 0.0)
    traj = integrate_ss(SSState(psi0, psi0, h0, h0, tau=-15.0), 15.0, steps=12_000)
    for state in (traj.states[0], traj.states[-1]):
        assert abs(state[0] * state[1] - 1.0) < 1e-5


def test_complex_strip_trajectory_bounded():
    traj = integrate_ss(perturbed_start(1e-3j, 1e-3j), 20.0, steps=10_000)
    assert np.max(np.abs(traj.states)) < 2.0
    assert traj.energy_drift <= 1e-8


def test_opposite_sign_perturbation_diverges():
    with pytest.raises(Diverged) as err:
        integrate_ss(perturbed_start(1e-3j, -1e-3j), 60.0, steps=60_000)
    assert err.value.tau is not None


def test_strip_scan_bounded_on_all_lines():
    report = strip_scan(1e-3j, 1e-3j, re_max=20.0)
    for b, (max_abs, _) in report.items():
        assert max_abs < 1e6


def test_path_endpoint_outside_strip_rejected():
    with pytest.raises(ValueError):
        integrate_ss(perturbed_start(1e-3j, 1e-3j), 5.0 + 2.0j, steps=100)


def test_bromwich_exponential_pair():
    zg = np.linspace(0.1, 5.0, 25)
    phi, resid = bromwich_invert(lambda e: 1.0 / (1.0 + e), 1.0, zg)
    assert np.max(np.abs(phi - np.exp(-zg))) <= 1e-6
    assert resid < 1e-9


def test_bromwich_ramp_pair():
    zg = np.linspace(0.2, 4.0, 15)
    phi, _ = bromwich_invert(lambda e: 1.0 / e**2, 1.0, zg)
    assert np.max(np.abs(phi - zg)) <= 1e-6


def test_bromwich_rejects_nonpositive_zeta():
    with pytest.raises(ValueError):
        bromwich_invert(lambda e: 1.0 / (1.0 + e), 1.0, np.array([0.0, 1.0]))


def test_bromwich_not_converged():
    with pytest.raises(QuadratureNotConverged):
        bromwich_invert(lambda e: 1.0 / (1.0 + e), 1.0, np.array([0.05]),
                        tol=1e-12, t_start=2.0, t_max=4.0)


def test_symmetric_profile_pipeline():
    grid, resid = symmetric_profile_pipeline()
    assert np.all(grid.phi_plus >= 0.0)
    mass = float(np.trapezoid(grid.zeta_values * grid.phi_plus, grid.zeta_values))
    assert math.isfinite(mass) and mass > 0.0
    # this connection has the closed-form profile 2 exp(-zeta)
    expected = 2.0 * np.exp(-grid.zeta_values)
    assert np.max(np.abs(grid.phi_plus - expected)) <= 1e-5
    assert resid < 1e-8
