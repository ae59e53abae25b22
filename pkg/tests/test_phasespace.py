import math

import numpy as np
import pytest

from damping_lab import damping, phasespace as ps
from damping_lab.errors import NonMonotoneEta


CFG = ps.ZoneConfig()


def test_eta_is_half_damping():
    term = damping.power_law(2.0, 0.5)
    assert ps.eta(term, 3.0) == pytest.approx(damping.eval_term(term, 3.0, 0) / 2.0)


def test_m_symbol_constant_term():
    term = damping.constant(1.0)
    # m = |xi|^2 - b^2/4 - b'/2 = |xi|^2 - 1/4
    assert ps.m_symbol(term, 5.0, 1.0) == pytest.approx(0.75, rel=1e-12)
    assert ps.m_symbol(term, 5.0, 0.25) == pytest.approx(0.0625 - 0.25, rel=1e-12)


def test_chi_plateaus():
    assert ps.chi(0.3) == 1.0
    assert ps.chi(0.5) == 1.0
    assert ps.chi(1.0) == 0.0
    assert ps.chi(2.0) == 0.0
    mid = ps.chi(0.75)
    assert 0.0 < mid < 1.0


def test_classify_large_frequency_hyperbolic():
    term = damping.constant(1.0)
    zp = ps.classify(term, CFG, 10.0, 10.0)
    assert zp.label is ps.ZoneLabel.HYPERBOLIC


def test_classify_small_frequency_elliptic():
    term = damping.constant(1.0)
    zp = ps.classify(term, CFG, 10.0, 0.01)
    assert zp.label is ps.ZoneLabel.ELLIPTIC


def test_classify_near_eta_reduced():
    term = damping.constant(1.0)
    # |xi| just above eta = 1/2 with bracket ratio below eps
    xi = 0.5 * math.sqrt(1.0 + 0.5 * CFG.eps**2)
    zp = ps.classify(term, CFG, 1.0, xi)
    assert zp.label is ps.ZoneLabel.REDUCED


def test_classify_pseudodifferential_band():
    term = damping.constant(1.0)
    # bracket ratio between eps and N: |xi| = eta sqrt(1 + c^2), c = 1
    xi = 0.5 * math.sqrt(2.0)
    zp = ps.classify(term, CFG, 1.0, xi)
    assert zp.label is ps.ZoneLabel.PSEUDO_DIFF


def test_h_symbol_reduced_plateau():
    term = damping.constant(1.0)
    eta = 0.5
    xi = eta * math.sqrt(1.0 + (0.4 * CFG.eps) ** 2)
    h = ps.h_symbol(term, CFG, 1.0, xi)
    assert h == pytest.approx(CFG.eps * eta, rel=1e-12)


def test_h_symbol_far_field_is_bracket():
    term = damping.constant(1.0)
    h = ps.h_symbol(term, CFG, 1.0, 10.0)
    assert h == pytest.approx(math.sqrt(abs(ps.m_symbol(term, 1.0, 10.0))), rel=1e-10)


def test_separating_time_power_law_closed_form():
    term = damping.power_law(1.0, 1.0 / 3.0)
    xi = 0.05
    t_xi = ps.separating_time(term, CFG, xi)
    # eta(t) = (1+t)^{-1/3}/2 equals xi/sqrt(1-eps^2)
    expected = (math.sqrt(1.0 - CFG.eps**2) / (2.0 * xi)) ** 3.0 - 1.0
    assert t_xi == pytest.approx(expected, rel=1e-8)


def test_separating_time_constant_eta_no_crossing():
    term = damping.constant(1.0)
    assert ps.separating_time(term, CFG, 0.1) is None


def test_separating_time_requires_monotone_eta():
    term = damping.custom(lambda t: 2.0 + math.sin(t))
    with pytest.raises(NonMonotoneEta):
        ps.separating_time(term, CFG, 0.1)


def test_transition_sequence_decreasing_eta():
    term = damping.power_law(1.0, 1.0 / 3.0)
    itinerary = ps.transition_sequence(term, CFG, 0.0, 0.05, 1e6)
    labels = [lab for lab, _ in itinerary]
    # decreasing eta: a low frequency starts elliptic and ends hyperbolic
    assert labels[0] is ps.ZoneLabel.ELLIPTIC
    assert labels[-1] is ps.ZoneLabel.HYPERBOLIC
    times = [t for _, t in itinerary]
    assert times == sorted(times)


def test_transition_sequence_static_zone():
    term = damping.power_law(1.0, 1.0 / 3.0)
    itinerary = ps.transition_sequence(term, CFG, 0.0, 50.0, 100.0)
    assert len(itinerary) == 1
    assert itinerary[0][0] is ps.ZoneLabel.HYPERBOLIC


def test_zone_map_csv(tmp_path):
    term = damping.power_law(1.0, 1.0 / 3.0)
    path = tmp_path / "zones.csv"
    ps.zone_map_csv(term, CFG, np.geomspace(0.1, 100.0, 10),
                    np.geomspace(0.01, 5.0, 10), str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,xi,label,m,h"
    assert len(lines) == 101


def test_config_validation():
    with pytest.raises(ValueError):
        ps.ZoneConfig(eps=0.6, N=4.0, c_red=1.0)
