import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from damping_lab import analysis
from damping_lab.errors import HypothesisNotSatisfied


def test_theta_endpoints():
    assert analysis.theta_q(3, 2.0) == 0.0
    assert analysis.theta_q(2, math.inf) == 1.0
    assert analysis.theta_q(1, 4.0) == pytest.approx(0.25)


def test_fujita_exponent():
    assert analysis.p_fujita(1) == pytest.approx(3.0)
    assert analysis.p_fujita(2) == pytest.approx(2.0)
    assert analysis.p_fujita(3) == pytest.approx(5.0 / 3.0)


def test_gn_exponent():
    assert analysis.p_gn(1) == math.inf
    assert analysis.p_gn(2) == math.inf
    assert analysis.p_gn(3) == pytest.approx(3.0)
    assert analysis.p_gn(4) == pytest.approx(2.0)


def test_admissible_main_ranges():
    assert analysis.admissible(1, 4.0, "Main")[0]
    assert not analysis.admissible(1, 3.0, "Main")[0]
    assert analysis.admissible(2, 2.5, "Main")[0]
    assert analysis.admissible(3, 2.0, "Main")[0]
    assert not analysis.admissible(3, 3.5, "Main")[0]


def test_admissible_low_ranges():
    assert analysis.admissible(3, 2.0, "Low")[0]
    assert analysis.admissible(3, 3.0, "Low")[0]
    assert not analysis.admissible(3, 1.9, "Low")[0]
    assert analysis.admissible(4, 2.0, "Low")[0]
    assert not analysis.admissible(4, 2.1, "Low")[0]
    ok, reasons = analysis.admissible(5, 2.0, "Low")
    assert not ok and reasons


def test_exponent_identity_agreement():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        p = float(1.0 + 4.0 * rng.random() + 1e-3)
        res = analysis.exponent_identity_check(n, p)
        worst = max(worst, max(res["residuals"]))
    assert worst <= 1e-12


def test_exponent_identity_sign_tracks_fujita():
    res_super = analysis.exponent_identity_check(1, 4.0)
    assert res_super["supercritical"] and res_super["sign"] < 0
    res_sub = analysis.exponent_identity_check(1, 2.0)
    assert not res_sub["supercritical"] and res_sub["sign"] > 0


def test_bump_ensemble_reproducible():
    f1, dx1, _ = analysis.bump_ensemble(1, 5, seed=3)
    f2, dx2, _ = analysis.bump_ensemble(1, 5, seed=3)
    assert dx1 == dx2
    for a, b in zip(f1, f2):
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("variant", ["i", "ii", "iv"])
def test_gn_variants_hold_on_ensemble(variant):
    funcs, dx, r2 = analysis.bump_ensemble(1, 20, seed=11)
    psi = 0.25 * r2
    for v in funcs:
        kw = {"c_t": 0.5} if variant == "iv" else {}
        res = analysis.gn_check(v, psi, dx, sigma=1.0, variant=variant, **kw)
        assert res["holds"], variant


def test_gn_variant_iii_records_constant():
    funcs, dx, r2 = analysis.bump_ensemble(1, 5, seed=2)
    res = analysis.gn_check(funcs[0], 0.25 * r2, dx, sigma=1.0, q=4.0, variant="iii")
    assert res["holds"] is None
    assert res["constant"] > 0.0


def test_gn_rejects_negative_weight():
    funcs, dx, r2 = analysis.bump_ensemble(1, 1, seed=1)
    with pytest.raises(HypothesisNotSatisfied):
        analysis.gn_check(funcs[0], -np.ones_like(r2), dx, sigma=1.0, variant="i")


def test_fit_loglog_exact_power():
    x = np.geomspace(1.0, 1e4, 40)
    y = 3.0 * x ** -0.75
    fit = analysis.fit_loglog(x, y)
    assert fit.slope == pytest.approx(-0.75, abs=1e-12)
    assert math.exp(fit.intercept) == pytest.approx(3.0, rel=1e-12)
    assert fit.residual <= 1e-12


def test_fit_loglog_window():
    x = np.geomspace(1.0, 1e4, 60)
    y = np.where(x < 100.0, 1.0, x ** -0.5 * 10.0)
    fit = analysis.fit_loglog(x, y, window=(200.0, 1e4))
    assert fit.slope == pytest.approx(-0.5, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 6), p=st.floats(1.01, 8.0))
def test_identity_property(n, p):
    res = analysis.exponent_identity_check(n, p)
    assert max(res["residuals"]) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 4), q1=st.floats(2.0, 10.0), dq=st.floats(0.1, 10.0))
def test_theta_monotone_in_q(n, q1, dq):
    assert analysis.theta_q(n, q1 + dq) > analysis.theta_q(n, q1)
