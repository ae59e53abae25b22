import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from damping_lab import bfun, damping, modes, phasespace as ps
from damping_lab.errors import DomainViolation


def _const_phi(b0: float, xi: float, tau: float) -> tuple[float, float]:
    """Closed-form solution of v'' + b0 v' + xi^2 v = 0, v(s)=0, v'(s)=1."""
    nu = cmath.sqrt(b0**2 / 4.0 - xi**2)
    if abs(nu) < 1e-14:
        phi = tau * math.exp(-b0 * tau / 2.0)
        dphi = (1.0 - b0 * tau / 2.0) * math.exp(-b0 * tau / 2.0)
        return phi, dphi
    ep = cmath.exp((nu - b0 / 2.0) * tau)
    em = cmath.exp((-nu - b0 / 2.0) * tau)
    phi = (ep - em) / (2.0 * nu)
    dphi = ((nu - b0 / 2.0) * ep + (nu + b0 / 2.0) * em) / (2.0 * nu)
    return phi.real, dphi.real


def test_oscillator_flow_matches_closed_form():
    for b0, xi, h in [(1.0, 0.3, 2.0), (1.0, 0.5, 3.0), (1.0, 4.0, 1.5),
                      (0.2, 0.1, 10.0), (3.0, 0.05, 5.0)]:
        m11, m12, m21, m22 = modes.oscillator_flow(b0, np.array([xi**2]), h)
        phi, dphi = _const_phi(b0, xi, h)
        assert m12[0] == pytest.approx(phi, rel=1e-12, abs=1e-300)
        assert m22[0] == pytest.approx(dphi, rel=1e-12)


def test_oscillator_flow_zero_frequency():
    m11, m12, m21, m22 = modes.oscillator_flow(1.0, np.array([0.0]), 2.0)
    # v'' + v' = 0 with v(0)=0, v'(0)=1 gives v = 1 - e^{-t}
    assert m12[0] == pytest.approx(1.0 - math.exp(-2.0), rel=1e-12)
    assert m21[0] == pytest.approx(0.0, abs=1e-15)


def test_propagate_constant_damping_oracle():
    term = damping.constant(1.0)
    profile = bfun.make_profile(term)
    grid = np.linspace(0.0, 20.0, 9)
    for xi in (0.05, 0.5, 2.0):
        prop = modes.propagate(term, profile, 0.0, xi, grid, integrator_tol=1e-10)
        for i, t in enumerate(grid[1:], start=1):
            phi, dphi = _const_phi(1.0, xi, t)
            assert prop.phi()[i] == pytest.approx(phi, rel=1e-9, abs=1e-14)
            assert prop.phi_prime()[i] == pytest.approx(dphi, rel=1e-9, abs=1e-14)


def test_propagate_initial_values():
    term = damping.power_law(1.0, 1.0 / 3.0)
    profile = bfun.make_profile(term)
    prop = modes.propagate(term, profile, 2.0, 1.0, np.array([2.0, 5.0]))
    assert prop.phi()[0] == 0.0
    assert prop.phi_prime()[0] == 1.0


def test_residuals_small():
    term = damping.power_law(1.0, -1.0 / 3.0)
    profile = bfun.make_profile(term)
    grid = np.linspace(1.0, 30.0, 240)
    prop = modes.propagate(term, profile, 1.0, 0.7, grid, integrator_tol=1e-10)
    res = prop.residuals()
    assert np.nanmax(np.abs(res)) < 1e-2


def test_ensemble_matches_scalar_propagation():
    term = damping.power_law(1.0, 1.0 / 3.0)
    profile = bfun.make_profile(term)
    cps = np.array([5.0, 20.0])
    xis = np.array([0.1, 1.0])
    la, lap = modes.propagate_ensemble(term, 0.0, xis, cps, rel_step=0.001)
    for j, xi in enumerate(xis):
        prop = modes.propagate(term, profile, 0.0, xi, np.concatenate([[0.0], cps]),
                               integrator_tol=1e-11)
        for i in range(cps.size):
            assert la[i, j] == pytest.approx(prop.log_abs_phi()[i + 1], abs=2e-3)


def test_fundamental_matrix_composition():
    term = damping.power_law(1.0, 1.0 / 3.0)
    profile = bfun.make_profile(term)
    cfg = ps.ZoneConfig()
    s, r, t, xi = 1.0, 4.0, 9.0, 0.8
    E_ts = modes.fundamental_matrix(term, profile, cfg, s, t, xi)
    E_tr = modes.fundamental_matrix(term, profile, cfg, r, t, xi)
    E_rs = modes.fundamental_matrix(term, profile, cfg, s, r, xi)
    np.testing.assert_allclose(E_ts, E_tr @ E_rs, rtol=1e-6, atol=1e-10)


def test_step_matrices_compose_to_flow():
    term = damping.constant(1.0)
    nodes = np.linspace(0.0, 10.0, 101)
    xis = np.array([0.3])
    mats = modes.step_matrices(term, nodes, xis)
    acc = np.eye(2)
    for j in range(nodes.size - 1):
        acc = mats[j, :, :, 0] @ acc
    phi, dphi = _const_phi(1.0, 0.3, 10.0)
    assert acc[0, 1] == pytest.approx(phi, rel=1e-10)
    assert acc[1, 1] == pytest.approx(dphi, rel=1e-10)


def test_bound_report_finite():
    term = damping.constant(1.0)
    profile = bfun.make_profile(term)
    rep = modes.check_bound(term, profile, modes.BoundId.PHI_ELL, ps.ZoneConfig(),
                            t_max=100.0)
    assert np.isfinite(rep.sup_ratio)
    assert rep.n_samples > 0
    assert rep.fitted_C_prime is None or rep.fitted_C_prime > 0


def test_bound_domain_violation():
    term = damping.constant(1.0)
    profile = bfun.make_profile(term)
    sample = [(10.0, 0.0, 10.0, None)]  # |xi| far above the elliptic threshold
    with pytest.raises(DomainViolation):
        modes.check_bound(term, profile, modes.BoundId.PHI_ELL, ps.ZoneConfig(),
                          samples=sample)


@settings(max_examples=40, deadline=None)
@given(b0=st.floats(0.01, 5.0), xi=st.floats(0.001, 10.0), h=st.floats(0.01, 5.0))
def test_flow_determinant_property(b0, xi, h):
    # Abel's identity: the Wronskian contracts by exactly exp(-b0 h)
    m11, m12, m21, m22 = modes.oscillator_flow(b0, np.array([xi**2]), h)
    det = m11[0] * m22[0] - m12[0] * m21[0]
    assert det == pytest.approx(math.exp(-b0 * h), rel=1e-9)
