import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from damping_lab import bfun, damping
from damping_lab.errors import HypothesisNotSatisfied, OrderViolation


@pytest.fixture(scope="module")
def const_profile():
    return bfun.make_profile(damping.constant(1.0))


@pytest.fixture(scope="module")
def power_profile():
    return bfun.make_profile(damping.power_law(1.0, 1.0 / 3.0))


def test_constant_closed_form(const_profile):
    assert bfun.B(const_profile, 7.0, 2.0) == pytest.approx(5.0, rel=1e-14)


def test_power_law_closed_form(power_profile):
    k = 1.0 / 3.0
    t, s = 50.0, 3.0
    expected = ((1 + t) ** (1 + k) - (1 + s) ** (1 + k)) / (1 + k)
    assert bfun.B(power_profile, t, s) == pytest.approx(expected, rel=1e-12)


def test_closed_form_matches_quadrature():
    term = damping.log_modified(1.0, 0.5, 1.0)
    profile = bfun.make_profile(term)
    from scipy import integrate
    t, s = 20.0, 1.0
    ref, _ = integrate.quad(lambda x: 1.0 / damping.eval_term(term, x, 0), s, t,
                            epsabs=1e-13, epsrel=1e-13)
    assert bfun.B(profile, t, s) == pytest.approx(ref, rel=1e-9)


def test_order_violation(const_profile):
    with pytest.raises(OrderViolation):
        bfun.B(const_profile, 1.0, 2.0)
    with pytest.raises(OrderViolation):
        bfun.B(const_profile, 1.0, -1.0)


def test_beta_l1_constant(const_profile):
    exps = bfun.damping_exponentials(const_profile)
    # lambda = e^{t/2}, beta = e^{-t}, so the L1 norm is 1
    assert exps.beta_l1 == pytest.approx(1.0, rel=1e-8)
    assert exps.b_hat_1 == pytest.approx(1.0, rel=1e-8)


def test_log_lambda_is_half_primitive(const_profile):
    exps = bfun.damping_exponentials(const_profile)
    assert exps.log_lambda(10.0) == pytest.approx(5.0, rel=1e-10)
    assert exps.log_beta(10.0) == pytest.approx(-10.0, rel=1e-10)


def test_all_properties_bounded_on_catalog():
    for name, term in damping.catalog().items():
        profile = bfun.make_profile(term)
        for prop in bfun.EquivalenceProperty:
            rep = bfun.verify_equivalence(profile, prop)
            if rep.one_sided:
                assert rep.worst_slack >= 0.0, (name, prop)
            else:
                assert rep.bounded, (name, prop)
                assert 0.0 < rep.r_min <= rep.r_max < math.inf, (name, prop)


def test_one_sided_slack_negative_kappa():
    profile = bfun.make_profile(damping.power_law(1.0, -0.5))
    rep = bfun.verify_equivalence(profile, bfun.EquivalenceProperty.B_ALPHA_LOWER,
                                  alpha=0.25)
    assert rep.one_sided
    assert rep.worst_slack >= 0.0
    assert rep.slack_sign >= 0


def test_product_form_ratio_near_one(const_profile):
    # for b = 1: b(t)(1 + B(t,0)) = 1 + t exactly
    rep = bfun.verify_equivalence(const_profile, bfun.EquivalenceProperty.B_TIMES_1PB)
    assert rep.r_min == pytest.approx(1.0, rel=1e-10)
    assert rep.r_max == pytest.approx(1.0, rel=1e-10)


def test_properties_require_admissibility():
    profile = bfun.make_profile(damping.power_law(1.0, 1.0))
    with pytest.raises(HypothesisNotSatisfied):
        bfun.verify_equivalence(profile, bfun.EquivalenceProperty.BTS_BEHAV2)


def test_blowup_functional(const_profile):
    res = bfun.blowup_data_functional(const_profile, 2.0, 3.0)
    assert res["b_hat_1"] == pytest.approx(1.0, rel=1e-8)
    assert res["functional"] == pytest.approx(5.0, rel=1e-8)
    assert res["positive"]
    swapped = bfun.blowup_data_functional(const_profile, 2.0, 3.0, swap_roles=True)
    assert swapped["swapped"]
    assert swapped["functional"] == pytest.approx(2.0 * 1.0 + 3.0, rel=1e-8)


def test_blowup_functional_sign(const_profile):
    res = bfun.blowup_data_functional(const_profile, -5.0, 1.0)
    assert not res["positive"]


@settings(max_examples=30, deadline=None)
@given(t=st.floats(1.0, 1e4), frac_r=st.floats(0.1, 0.9), frac_s=st.floats(0.0, 0.9))
def test_additivity_property(power_profile, t, frac_r, frac_s):
    r = frac_r * t
    s = frac_s * r
    lhs = bfun.B(power_profile, t, s)
    rhs = bfun.B(power_profile, t, r) + bfun.B(power_profile, r, s)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(t=st.floats(0.0, 1e4), dt=st.floats(0.001, 100.0))
def test_monotonicity_property(power_profile, t, dt):
    assert bfun.B(power_profile, t + dt, 0.0) > bfun.B(power_profile, t, 0.0)
