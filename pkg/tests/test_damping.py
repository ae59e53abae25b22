import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from damping_lab import damping
from damping_lab.errors import NonFiniteValue


def test_power_law_values_and_derivatives():
    term = damping.power_law(2.0, 0.5)
    ts = np.array([0.0, 1.0, 9.0, 99.0])
    np.testing.assert_allclose(damping.eval_term(term, ts, 0),
                               2.0 * (1.0 + ts) ** -0.5, rtol=1e-12)
    np.testing.assert_allclose(damping.eval_term(term, ts, 1),
                               -0.5 * 2.0 * (1.0 + ts) ** -1.5, rtol=1e-12)
    np.testing.assert_allclose(damping.eval_term(term, ts, 2),
                               0.75 * 2.0 * (1.0 + ts) ** -2.5, rtol=1e-12)


def test_constant_term():
    term = damping.constant(3.0)
    assert damping.eval_term(term, 17.0, 0) == 3.0
    assert damping.eval_term(term, 17.0, 1) == 0.0


def test_log_modified_positive_and_decaying():
    term = damping.log_modified(1.0, 1.0, 2.0)
    ts = np.geomspace(0.1, 1e6, 50)
    b = damping.eval_term(term, ts, 0)
    assert np.all(b > 0)
    assert np.all(np.diff(b) < 0)


def test_iterated_log_nesting():
    term = damping.iterated_log(1.0, 0.0, gammas=(1.0, 1.0), cs=(3.0, 3.0))
    t = 10.0
    L1 = math.log(3.0 + t)
    L2 = math.log(3.0 + L1)
    expected = L1 * L2
    assert damping.eval_term(term, t, 0) == pytest.approx(expected, rel=1e-12)


def test_custom_term_finite_differences():
    term = damping.custom(lambda t: (1.0 + t) ** -0.25)
    t = 5.0
    exact = -0.25 * (1.0 + t) ** -1.25
    assert damping.eval_term(term, t, 1) == pytest.approx(exact, rel=1e-5)


def test_kappa_outside_range_rejected():
    with pytest.raises(ValueError):
        damping.power_law(1.0, 1.5)
    with pytest.raises(ValueError):
        damping.power_law(1.0, -1.0)
    with pytest.raises(ValueError):
        damping.power_law(-1.0, 0.0)


def test_log_modified_kappa_one_needs_gamma_above_one():
    with pytest.raises(ValueError):
        damping.log_modified(1.0, 1.0, 1.0)
    damping.log_modified(1.0, 1.0, 1.5)


def test_catalog_terms_satisfy_hypotheses():
    for name, term in damping.catalog().items():
        rep = damping.check_hypotheses(term)
        assert rep.hyp_b_ok, f"{name}: {rep.hyp_b_items}"
        assert rep.hyp_further.ok, name
        assert rep.certified, name


def test_borderline_power_law_fails_effectiveness():
    term = damping.power_law(1.0, 1.0)
    rep = damping.check_hypotheses(term)
    assert not rep.hyp_b_items["ii_effective"].ok
    assert not rep.hyp_b_items["iii_integrable"].ok


def test_fitted_m_matches_negative_kappa():
    rep = damping.check_hypotheses(damping.power_law(1.0, -0.5))
    assert rep.fitted_m == pytest.approx(0.5, abs=1e-5)
    rep2 = damping.check_hypotheses(damping.power_law(1.0, 1.0 / 3.0))
    assert rep2.fitted_m == pytest.approx(0.0, abs=1e-9)


def test_blowup_hypothesis_constant_term():
    rep = damping.check_hypotheses(damping.constant(1.0))
    assert rep.hyp_blowup.ok
    assert rep.liminf_bprime_over_b2 > -1.0


def test_report_serializes():
    rep = damping.check_hypotheses(damping.constant(1.0))
    import json
    payload = json.loads(rep.to_json())
    assert payload["term_label"]
    assert "i_positive" in payload["hyp_b_items"]


def test_term_from_config_round_trip():
    term = damping.power_law(2.0, -0.25, label="x")
    again = damping.term_from_config(term.to_config())
    assert damping.eval_term(again, 3.0, 0) == damping.eval_term(term, 3.0, 0)


def test_eval_term_rejects_negative_time():
    term = damping.power_law(1.0, 0.5)
    with pytest.raises((ValueError, NonFiniteValue)):
        damping.eval_term(term, -2.0, 0)


@settings(max_examples=40, deadline=None)
@given(kappa=st.floats(-0.9, 0.9), t=st.floats(0.0, 1e6))
def test_power_law_positivity_property(kappa, t):
    term = damping.power_law(1.0, kappa)
    assert damping.eval_term(term, t, 0) > 0.0


@settings(max_examples=25, deadline=None)
@given(kappa=st.floats(-0.75, 0.75), t=st.floats(0.5, 1e3))
def test_symbolic_derivative_matches_finite_difference(kappa, t):
    term = damping.power_law(1.0, kappa)
    h = 1e-5 * (1.0 + t)
    fd = (damping.eval_term(term, t + h, 0) - damping.eval_term(term, t - h, 0)) / (2 * h)
    assert damping.eval_term(term, t, 1) == pytest.approx(fd, rel=1e-6, abs=1e-12)
