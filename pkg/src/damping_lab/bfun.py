"""Calculus of the damping primitive B(t,s) = integral of 1/b over [s,t].

Closed forms are used for power-law and constant coefficients; everything
else goes through cached adaptive quadrature.  The damping exponential
lambda(t) = exp((1/2) int_0^t b) is handled purely in log space because it
overflows double precision already for moderate times.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .damping import DampingTerm, Kind, check_hypotheses, eval_term
from .errors import BetaNotIntegrable, HypothesisNotSatisfied, OrderViolation

__all__ = [
    "BProfile",
    "DampingExponentials",
    "EquivalenceProperty",
    "EquivalenceReport",
    "make_profile",
    "B",
    "damping_exponentials",
    "verify_equivalence",
    "blowup_data_functional",
    "default_pair_grid",
]


class EquivalenceProperty(str, enum.Enum):
    """Asymptotic equivalences of B(t,s) and b(t) under the admissibility hypotheses."""

    BTS_BEHAV2 = "Btsbehav2"    # B(t,s) ~ t/b(t) - s/b(s)
    B_ALPHA_LOWER = "balphac"   # b(alpha t) >= alpha^m b(t)
    B_ALPHA_UPPER = "balphaC"   # b(alpha t) <= alpha^{-M} b(t)
    BS_BT = "bsbt"              # b(s) ~ b(t) on [alpha t, t]
    BT_ALPHA_T = "Btalphat"     # B(t, alpha t) <= B(t,0), bounded below by c B(t,0)
    B_ALPHA_T0 = "Balphat0"     # B(alpha t, 0) <= B(t,0), bounded below by c B(t,0)
    BS0_LARGE = "Bs0large"      # B(s,0) ~ B(t,0) for s in [t/2, t]
    BTS_SMALL = "Btssmall"      # B(t,s) ~ B(t,0) for s in [0, t/2]
    BTS_LARGE = "Btslarge"      # B(t,s) ~ (t-s)/b(t) for s in [t/2, t]
    B_TIMES_1PB = "bminus1B"    # b(t)(1 + B(t,0)) ~ 1 + t


_ONE_SIDED = {
    EquivalenceProperty.B_ALPHA_LOWER,
    EquivalenceProperty.B_ALPHA_UPPER,
    EquivalenceProperty.BT_ALPHA_T,
    EquivalenceProperty.B_ALPHA_T0,
}


@dataclass
class BProfile:
    term: DampingTerm
    closed_form: Optional[str] = None
    quadrature_tol: float = 1e-10
    # sorted (t, B(t,0)) knots, grown lazily
    _knots_t: list = field(default_factory=lambda: [0.0], repr=False)
    _knots_B: list = field(default_factory=lambda: [0.0], repr=False)
    _hyp_report: object = field(default=None, repr=False)

    def hypotheses(self):
        if self._hyp_report is None:
            self._hyp_report = check_hypotheses(self.term)
        return self._hyp_report


def make_profile(term: DampingTerm, quadrature_tol: float = 1e-10) -> BProfile:
    tag = None
    if term.kind is Kind.CONSTANT:
        tag = "constant"
    elif term.kind is Kind.POWER_LAW and term.kappa != -1.0:
        tag = "power"
    return BProfile(term=term, closed_form=tag, quadrature_tol=quadrature_tol)


def _B0_closed(profile: BProfile, t: np.ndarray) -> np.ndarray:
    term = profile.term
    if profile.closed_form == "constant":
        return t / term.mu
    ka = term.kappa
    return ((1.0 + t) ** (1.0 + ka) - 1.0) / (term.mu * (1.0 + ka))


def _B0_numeric(profile: BProfile, t: float) -> float:
    kt, kB = profile._knots_t, profile._knots_B
    # integrate from the nearest knot below, then memoize
    i = int(np.searchsorted(kt, t))
    lo_t, lo_B = kt[i - 1], kB[i - 1]
    if lo_t == t:
        return lo_B
    val, _ = integrate.quad(lambda tau: 1.0 / float(eval_term(profile.term, tau, 0)),
                            lo_t, t, epsabs=profile.quadrature_tol,
                            epsrel=profile.quadrature_tol, limit=300)
    out = lo_B + val
    kt.insert(i, t)
    kB.insert(i, out)
    return out


def B(profile: BProfile, t, s) -> float | np.ndarray:
    """B(t,s); vectorized over broadcastable t, s with 0 <= s <= t."""
    t_arr = np.asarray(t, dtype=float)
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr > t_arr):
        raise OrderViolation("B(t,s) requires s <= t")
    if np.any(s_arr < 0):
        raise OrderViolation("B(t,s) requires s >= 0")
    if profile.closed_form is not None:
        out = _B0_closed(profile, t_arr) - _B0_closed(profile, s_arr)
    else:
        f = np.vectorize(lambda x: _B0_numeric(profile, float(x)), otypes=[float])
        out = f(t_arr) - f(s_arr)
    return out if t_arr.ndim or s_arr.ndim else float(out)


# -- damping exponentials ---------------------------------------------------


@dataclass
class DampingExponentials:
    profile: BProfile
    beta_l1: float
    b_hat_1: float
    _knots_t: list = field(default_factory=lambda: [0.0], repr=False)
    _knots_L: list = field(default_factory=lambda: [0.0], repr=False)

    def log_lambda(self, t: float) -> float:
        """(1/2) int_0^t b(tau) dtau, cached cumulatively."""
        kt, kL = self._knots_t, self._knots_L
        i = int(np.searchsorted(kt, t))
        lo_t, lo_L = kt[i - 1], kL[i - 1]
        if lo_t == t:
            return lo_L
        val, _ = integrate.quad(lambda tau: 0.5 * float(eval_term(self.profile.term, tau, 0)),
                                lo_t, t, epsabs=1e-12, epsrel=1e-12, limit=300)
        out = lo_L + val
        kt.insert(i, t)
        kL.insert(i, out)
        return out

    def log_beta(self, t: float) -> float:
        return -2.0 * self.log_lambda(t)


def _beta_l1(term: DampingTerm, tol: float = 1e-12, max_doublings: int = 60) -> float:
    """||exp(-int_0^t b)||_{L1(0,inf)} by interval doubling on the tail."""
    total = 0.0
    lo, hi = 0.0, 1.0
    log_acc = 0.0  # int_0^lo b
    for _ in range(max_doublings):
        seg, _ = integrate.quad(
            lambda t: math.exp(-(log_acc + _quad_b(term, lo, t))), lo, hi,
            epsabs=1e-14, epsrel=1e-12, limit=300)
        total += seg
        if seg < tol * max(total, 1e-300) and hi > 8.0:
            return total
        log_acc += _quad_b(term, lo, hi)
        if log_acc > 745.0:  # exp underflows; remaining tail is negligible
            return total
        lo, hi = hi, 2.0 * hi
    raise BetaNotIntegrable("tail of the beta integral did not converge")


def _quad_b(term: DampingTerm, lo: float, hi: float) -> float:
    val, _ = integrate.quad(lambda tau: float(eval_term(term, tau, 0)), lo, hi,
                            epsabs=1e-13, epsrel=1e-13, limit=300)
    return val


def damping_exponentials(profile: BProfile) -> DampingExponentials:
    beta_l1 = _beta_l1(profile.term)
    if not (beta_l1 > 0 and math.isfinite(beta_l1)):
        raise BetaNotIntegrable("beta integral is not positive and finite")
    return DampingExponentials(profile=profile, beta_l1=beta_l1, b_hat_1=1.0 / beta_l1)


# -- equivalence properties -------------------------------------------------


@dataclass
class EquivalenceReport:
    property_id: EquivalenceProperty
    r_min: float
    r_max: float
    bounded: bool
    one_sided: bool
    worst_slack: Optional[float] = None     # signed; >= 0 means the inequality held
    slack_sign: Optional[int] = None
    alpha: Optional[float] = None
    n_points: int = 0


def default_pair_grid(t_lo: float = 1.0, t_hi: float = 1e4, n: int = 60):
    """Logarithmic t grid with, per t, a linear fan of s values in [0, t]."""
    ts = np.logspace(math.log10(t_lo), math.log10(t_hi), n)
    return ts


def _require(profile: BProfile, prop: EquivalenceProperty):
    rep = profile.hypotheses()
    if not rep.hyp_b_ok:
        raise HypothesisNotSatisfied(f"admissibility hypotheses fail for {profile.term.label}")
    if prop is not EquivalenceProperty.B_ALPHA_UPPER and not rep.hyp_further.ok:
        raise HypothesisNotSatisfied(f"slope hypothesis t b' <= m b fails for {profile.term.label}")
    return rep


def verify_equivalence(profile: BProfile, property_id: EquivalenceProperty,
                       grid: Optional[np.ndarray] = None,
                       alpha: float = 0.5) -> EquivalenceReport:
    """Empirical ratio range (or one-sided slack) for one asymptotic property."""
    prop = EquivalenceProperty(property_id)
    rep = _require(profile, prop)
    ts = default_pair_grid() if grid is None else np.asarray(grid, dtype=float)
    term = profile.term
    m = rep.fitted_m

    ratios: list[float] = []
    slacks: list[float] = []
    b_of = lambda x: eval_term(term, x, 0)

    if prop is EquivalenceProperty.B_TIMES_1PB:
        for t in ts:
            ratios.append(b_of(t) * (1.0 + B(profile, t, 0.0)) / (1.0 + t))
    elif prop is EquivalenceProperty.BTS_BEHAV2:
        for t in ts:
            for s in np.linspace(0.0, 0.9 * t, 8):
                rhs = t / b_of(t) - s / b_of(s) if s > 0 else t / b_of(t)
                ratios.append(B(profile, t, s) / rhs)
    elif prop is EquivalenceProperty.B_ALPHA_LOWER:
        for t in ts:
            slacks.append(b_of(alpha * t) - alpha**m * b_of(t))
            ratios.append(b_of(alpha * t) / (alpha**m * b_of(t)))
    elif prop is EquivalenceProperty.B_ALPHA_UPPER:
        grid_t = np.concatenate([[0.0], np.logspace(-2, math.log10(ts.max()), 400)])
        bb = eval_term(term, grid_t, 0)
        b1 = eval_term(term, grid_t, 1)
        M = float(np.max(np.abs(b1) * (1.0 + grid_t) / bb))
        for t in ts:
            slacks.append(alpha ** (-M) * b_of(t) - b_of(alpha * t))
            ratios.append(b_of(alpha * t) / (alpha ** (-M) * b_of(t)))
    elif prop is EquivalenceProperty.BS_BT:
        for t in ts:
            for s in np.linspace(alpha * t, t, 8):
                ratios.append(b_of(s) / b_of(t))
    elif prop is EquivalenceProperty.BT_ALPHA_T:
        for t in ts:
            num = B(profile, t, alpha * t)
            den = B(profile, t, 0.0)
            slacks.append(den - num)
            ratios.append(num / den)
    elif prop is EquivalenceProperty.B_ALPHA_T0:
        for t in ts:
            num = B(profile, alpha * t, 0.0)
            den = B(profile, t, 0.0)
            slacks.append(den - num)
            ratios.append(num / den)
    elif prop is EquivalenceProperty.BS0_LARGE:
        for t in ts:
            for s in np.linspace(0.5 * t, t, 8):
                ratios.append(B(profile, s, 0.0) / B(profile, t, 0.0))
    elif prop is EquivalenceProperty.BTS_SMALL:
        for t in ts:
            for s in np.linspace(0.0, 0.5 * t, 8):
                ratios.append(B(profile, t, s) / B(profile, t, 0.0))
    elif prop is EquivalenceProperty.BTS_LARGE:
        for t in ts:
            for s in np.linspace(0.5 * t, 0.999 * t, 8):
                ratios.append(B(profile, t, s) * b_of(t) / (t - s))
    else:
        raise AssertionError(prop)

    arr = np.asarray(ratios, dtype=float)
    r_min, r_max = float(arr.min()), float(arr.max())
    bounded = bool(np.all(np.isfinite(arr)) and r_min > 0.0)
    out = EquivalenceReport(property_id=prop, r_min=r_min, r_max=r_max,
                            bounded=bounded, one_sided=prop in _ONE_SIDED,
                            alpha=alpha, n_points=int(arr.size))
    if prop in _ONE_SIDED:
        worst = float(np.min(slacks))
        out.worst_slack = worst
        out.slack_sign = int(np.sign(worst)) if worst != 0.0 else 0
    return out


# -- blow-up data functional ------------------------------------------------


def blowup_data_functional(profile: BProfile, u0_integral: float, u1_integral: float,
                           swap_roles: bool = False) -> dict:
    """Sign functional for the blow-up criterion.

    The default pairs the weight 1/||beta||_1 with the velocity integral;
    swap_roles=True pairs it with the position integral instead (the two
    conventions both appear in the literature).
    """
    exps = damping_exponentials(profile)
    if swap_roles:
        functional = u1_integral + exps.b_hat_1 * u0_integral
    else:
        functional = u0_integral + exps.b_hat_1 * u1_integral
    return {
        "b_hat_1": exps.b_hat_1,
        "functional": functional,
        "positive": functional > 0.0,
        "swapped": swap_roles,
    }
