"""Per-frequency propagators for the damped mode equation.

The mode multiplier Phi(t,s,xi) solves

    Phi'' + |xi|^2 Phi + b(t) Phi' = 0,  Phi(s)=0, Phi'(s)=1.

Steps use the exact flow of the constant-coefficient oscillator with b
frozen at the substep midpoint.  The flow is evaluated through the scaled
exponentials exp((+-nu - b/2) h), nu = sqrt(b^2/4 - xi^2), which stay
bounded for every branch (oscillatory, overdamped, critical), so the
scheme is unconditionally stable and exact when b is constant; the only
error source is the variation of b inside a step.  Amplitudes are carried
as (unit value, log scale) pairs because Phi decays through hundreds of
orders of magnitude.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import phasespace as ps
from .bfun import B, BProfile, DampingExponentials, damping_exponentials
from .damping import DampingTerm, eval_term
from .errors import DomainViolation, StepUnderflow

__all__ = [
    "oscillator_flow",
    "ModePropagator",
    "propagate",
    "propagate_ensemble",
    "step_matrices",
    "BoundId",
    "BoundReport",
    "check_bound",
    "fundamental_matrix",
    "trace_csv",
    "bound_report_csv",
]


def oscillator_flow(b0: float, xi2, h: float):
    """Exact flow matrix of v'' + b0 v' + xi2 v = 0 over a step h.

    Returns (m11, m12, m21, m22) acting on (v, v'), vectorized over xi2.
    """
    xi2 = np.asarray(xi2, dtype=float)
    nu = np.sqrt(np.asarray(b0**2 / 4.0 - xi2, dtype=complex))
    ep = np.exp((nu - b0 / 2.0) * h)    # |.| <= 1 in the damped branches
    em = np.exp((-nu - b0 / 2.0) * h)
    cA = 0.5 * (ep + em)
    z = nu * h
    small = np.abs(z) < 1e-6
    # sA = exp(-b0 h/2) sinh(nu h)/nu, series near the double root
    with np.errstate(divide="ignore", invalid="ignore"):
        sA = np.where(small,
                      h * math.exp(-b0 * h / 2.0) * (1.0 + z**2 / 6.0 + z**4 / 120.0),
                      0.5 * (ep - em) / np.where(small, 1.0, nu))
    m11 = (cA + (b0 / 2.0) * sA).real
    m12 = sA.real
    m21 = (-xi2 * sA).real
    m22 = (cA - (b0 / 2.0) * sA).real
    return m11, m12, m21, m22


# -- scalar adaptive propagator ----------------------------------------------


@dataclass
class ModePropagator:
    term: DampingTerm
    profile: BProfile
    s: float
    xi_norm: float
    integrator_tol: float
    ts: np.ndarray
    phi_unit: np.ndarray
    phip_unit: np.ndarray
    log_scale: np.ndarray

    def phi(self) -> np.ndarray:
        return self.phi_unit * np.exp(self.log_scale)

    def phi_prime(self) -> np.ndarray:
        return self.phip_unit * np.exp(self.log_scale)

    def log_abs_phi(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.phi_unit)) + self.log_scale

    def log_abs_phi_prime(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.phip_unit)) + self.log_scale

    def residuals(self) -> np.ndarray:
        """|Phi'' + xi^2 Phi + b Phi'| / scale at interior knots, Phi'' by central differences."""
        t, u, v = self.ts, self.phi(), self.phi_prime()
        if t.size < 3:
            return np.zeros(0)
        dv = (v[2:] - v[:-2]) / (t[2:] - t[:-2])
        b = eval_term(self.term, t[1:-1], 0)
        res = dv + self.xi_norm**2 * u[1:-1] + b * v[1:-1]
        scale = np.maximum(np.abs(v[1:-1]), np.abs(u[1:-1]) * max(self.xi_norm, 1.0)) + 1e-300
        return np.abs(res) / scale


def _one_step(b_mid: float, xi2: float, h: float, u: float, v: float):
    m11, m12, m21, m22 = oscillator_flow(b_mid, xi2, h)
    return m11 * u + m12 * v, m21 * u + m22 * v


def propagate(term: DampingTerm, profile: BProfile, s: float, xi_norm: float,
              t_grid, integrator_tol: float = 1e-10) -> ModePropagator:
    """Adaptive step-doubling integration; knots land exactly on t_grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid[0] != s:
        raise ValueError("t_grid must start at s")
    xi2 = xi_norm**2
    out_u = np.empty_like(t_grid)
    out_v = np.empty_like(t_grid)
    out_ls = np.empty_like(t_grid)
    u, v, ls = 0.0, 1.0, 0.0
    out_u[0], out_v[0], out_ls[0] = u, v, ls
    t = s
    h = 1e-3 * (1.0 + s)
    for k in range(1, t_grid.size):
        target = t_grid[k]
        while t < target:
            h = min(h, target - t)
            if h < 1e-14 * (1.0 + t):
                raise StepUnderflow(f"step underflow at t={t}", t=t)
            b_full = float(eval_term(term, t + h / 2.0, 0))
            u1, v1 = _one_step(b_full, xi2, h, u, v)
            bq1 = float(eval_term(term, t + h / 4.0, 0))
            bq3 = float(eval_term(term, t + 3.0 * h / 4.0, 0))
            ua, va = _one_step(bq1, xi2, h / 2.0, u, v)
            u2, v2 = _one_step(bq3, xi2, h / 2.0, ua, va)
            scale = max(abs(u2) * max(xi_norm, 1.0), abs(v2), 1e-300)
            err = max(abs(u2 - u1) * max(xi_norm, 1.0), abs(v2 - v1)) / scale
            if err <= integrator_tol:
                t += h
                u, v = u2, v2
                mag = max(abs(u), abs(v))
                if mag > 0 and (mag < 1e-120 or mag > 1e120):
                    ls += math.log(mag)
                    u /= mag
                    v /= mag
                grow = 2.0 if err == 0 else min(2.0, 0.9 * (integrator_tol / err) ** (1.0 / 3.0))
                h *= max(grow, 1.0)
            else:
                h *= max(0.1, 0.9 * (integrator_tol / err) ** (1.0 / 3.0))
        out_u[k], out_v[k], out_ls[k] = u, v, ls
    return ModePropagator(term=term, profile=profile, s=s, xi_norm=xi_norm,
                          integrator_tol=integrator_tol, ts=t_grid,
                          phi_unit=out_u, phip_unit=out_v, log_scale=out_ls)


# -- vectorized ensembles -----------------------------------------------------


def _schedule(s: float, t_end: float, rel_step: float) -> np.ndarray:
    """Geometric step schedule dt ~ rel_step * (1 + t)."""
    ts = [s]
    t = s
    while t < t_end:
        t = min(t + rel_step * (1.0 + t), t_end)
        ts.append(t)
    return np.asarray(ts)


def propagate_ensemble(term: DampingTerm, s: float, xi_array, checkpoints,
                       rel_step: float = 0.004):
    """Fixed-schedule frozen-coefficient propagation over a frequency array.

    Returns (log_abs_phi, log_abs_phi_prime), each of shape
    (len(checkpoints), len(xi_array)); magnitudes are exact in log scale
    down to arbitrarily small values.
    """
    xi = np.asarray(xi_array, dtype=float)
    xi2 = xi**2
    checkpoints = np.asarray(checkpoints, dtype=float)
    u = np.zeros_like(xi)
    v = np.ones_like(xi)
    ls = np.zeros_like(xi)
    la = np.empty((checkpoints.size, xi.size))
    lap = np.empty((checkpoints.size, xi.size))
    t = s
    idx = 0
    with np.errstate(divide="ignore"):
        while idx < checkpoints.size and checkpoints[idx] <= s:
            la[idx] = np.log(np.abs(u)) + ls
            lap[idx] = np.log(np.abs(v)) + ls
            idx += 1
        while idx < checkpoints.size:
            target = checkpoints[idx]
            h = min(rel_step * (1.0 + t), target - t)
            b_mid = float(eval_term(term, t + h / 2.0, 0))
            m11, m12, m21, m22 = oscillator_flow(b_mid, xi2, h)
            u, v = m11 * u + m12 * v, m21 * u + m22 * v
            t += h
            mag = np.maximum(np.abs(u), np.abs(v))
            safe = np.where(mag > 0, mag, 1.0)
            ls += np.log(safe)
            u /= safe
            v /= safe
            while idx < checkpoints.size and t >= checkpoints[idx] * (1.0 - 1e-15):
                la[idx] = np.log(np.abs(u)) + ls
                lap[idx] = np.log(np.abs(v)) + ls
                idx += 1
    return la, lap


def step_matrices(term: DampingTerm, t_nodes, xi_array):
    """Per-interval flow matrices over [t_j, t_{j+1}] for each frequency.

    Returns an array of shape (len(t_nodes)-1, 2, 2, len(xi_array)); used by
    the Duhamel accumulation, which multiplies them backwards in time.
    """
    t_nodes = np.asarray(t_nodes, dtype=float)
    xi2 = np.asarray(xi_array, dtype=float) ** 2
    out = np.empty((t_nodes.size - 1, 2, 2, xi2.size))
    for j in range(t_nodes.size - 1):
        h = t_nodes[j + 1] - t_nodes[j]
        b_mid = float(eval_term(term, t_nodes[j] + h / 2.0, 0))
        m11, m12, m21, m22 = oscillator_flow(b_mid, xi2, h)
        out[j, 0, 0], out[j, 0, 1] = m11, m12
        out[j, 1, 0], out[j, 1, 1] = m21, m22
    return out


# -- zone-wise multiplier bounds ----------------------------------------------


class BoundId(str, enum.Enum):
    PHI_ELL = "Phiestell"
    PHI_ELL_HYP = "Phiestellhyp"
    PHI_HYP = "Phiesthyp"
    PHI_HYP_ELL = "Phiesthypell"
    PHI1_HYP = "Phi1esthyp"
    PHI1_ELL = "Phi1estell"
    PHI1_ELL_HYP = "Phi1estellhyp"
    PHI1_HYP_ELL = "Phi1esthypell"
    PHI_ELL_ALL = "Phiellall"
    PHI1_ELL_ALL = "Phi1ellall"


_DERIVATIVE_BOUNDS = {BoundId.PHI1_HYP, BoundId.PHI1_ELL, BoundId.PHI1_ELL_HYP,
                      BoundId.PHI1_HYP_ELL, BoundId.PHI1_ELL_ALL}
_SMALL_FREQ = {BoundId.PHI_ELL, BoundId.PHI_ELL_HYP, BoundId.PHI1_ELL, BoundId.PHI1_ELL_HYP}
_AFTER_CROSSING = {BoundId.PHI_ELL_HYP, BoundId.PHI_HYP_ELL,
                   BoundId.PHI1_ELL_HYP, BoundId.PHI1_HYP_ELL}
_HAS_EXPONENTIAL = {BoundId.PHI_ELL, BoundId.PHI_ELL_HYP, BoundId.PHI_HYP_ELL,
                    BoundId.PHI1_ELL, BoundId.PHI1_ELL_HYP, BoundId.PHI1_HYP_ELL,
                    BoundId.PHI_ELL_ALL, BoundId.PHI1_ELL_ALL}


@dataclass
class BoundSample:
    t: float
    s: float
    xi: float
    t_xi: Optional[float]
    log_lhs: float


@dataclass
class BoundReport:
    bound_id: BoundId
    delta: float
    samples: list
    sup_ratio: float
    fitted_C: float
    fitted_C_prime: Optional[float]
    n_samples: int


def _log_rhs_shape(bound: BoundId, term: DampingTerm, profile: BProfile,
                   exps: DampingExponentials, t: float, s: float, xi: float,
                   t_xi: Optional[float], delta: float, c_prime: float) -> float:
    """log of the bound shape with prefactor constant 1."""
    lb = lambda x: math.log(float(eval_term(term, x, 0)))
    L = exps.log_lambda
    pw = 1.0 - 2.0 * delta
    if bound in (BoundId.PHI_ELL, BoundId.PHI_ELL_ALL):
        return -lb(s) - c_prime * xi**2 * float(B(profile, t, s))
    if bound in (BoundId.PHI1_ELL, BoundId.PHI1_ELL_ALL):
        return 2.0 * math.log(xi) - lb(s) - lb(t) - c_prime * xi**2 * float(B(profile, t, s))
    if bound is BoundId.PHI_HYP:
        return -math.log(xi) + pw * (L(s) - L(t))
    if bound is BoundId.PHI1_HYP:
        return pw * (L(s) - L(t))
    if bound is BoundId.PHI_ELL_HYP:
        return -lb(s) - c_prime * xi**2 * float(B(profile, t_xi, s)) + pw * (L(t_xi) - L(t))
    if bound is BoundId.PHI1_ELL_HYP:
        return math.log(xi) - lb(s) - c_prime * xi**2 * float(B(profile, t_xi, s)) \
            + pw * (L(t_xi) - L(t))
    if bound is BoundId.PHI_HYP_ELL:
        return -math.log(xi) + pw * (L(s) - L(t_xi)) - c_prime * xi**2 * float(B(profile, t, t_xi))
    if bound is BoundId.PHI1_HYP_ELL:
        return pw * (L(s) - L(t_xi)) + math.log(xi) - lb(t) \
            - c_prime * xi**2 * float(B(profile, t, t_xi))
    raise AssertionError(bound)


def _check_domain(bound: BoundId, term: DampingTerm, cfg: ps.ZoneConfig,
                  t: float, s: float, xi: float, t_xi: Optional[float]) -> None:
    thr = float(ps.eta(term, s)) * math.sqrt(1.0 - cfg.eps**2)
    tol = 1e-12
    if bound in (BoundId.PHI_ELL_ALL, BoundId.PHI1_ELL_ALL):
        theta = max(float(ps.eta(term, s)), float(ps.eta(term, t))) * math.sqrt(1.0 - cfg.eps**2)
        if xi > theta * (1 + tol):
            raise DomainViolation(f"|xi|={xi} above Theta(t,s)={theta}")
        return
    small = bound in _SMALL_FREQ
    if small and xi > thr * (1 + tol):
        raise DomainViolation(f"|xi|={xi} not a small frequency (threshold {thr})")
    if not small and xi < thr * (1 - tol):
        raise DomainViolation(f"|xi|={xi} not a large frequency (threshold {thr})")
    after = bound in _AFTER_CROSSING
    if after:
        if t_xi is None or t < t_xi * (1 - tol):
            raise DomainViolation("sample requires t >= separating time")
    elif t_xi is not None and t > t_xi * (1 + tol):
        raise DomainViolation("sample requires t <= separating time")


def _default_samples(bound: BoundId, term: DampingTerm, cfg: ps.ZoneConfig,
                     s_list, t_max: float, n_t: int, n_xi: int):
    """(t, s, xi, t_xi) triples inside the bound's domain of validity."""
    sqr = math.sqrt(1.0 - cfg.eps**2)
    triples = []
    for s in s_list:
        eta_s = float(ps.eta(term, s))
        thr = eta_s * sqr
        if bound in (BoundId.PHI_ELL_ALL, BoundId.PHI1_ELL_ALL):
            for t in np.geomspace(s + 1.0, t_max, n_t):
                theta = max(eta_s, float(ps.eta(term, t))) * sqr
                for frac in np.linspace(0.15, 0.95, n_xi):
                    triples.append((float(t), s, float(frac * theta), None))
            continue
        small = bound in _SMALL_FREQ
        after = bound in _AFTER_CROSSING
        if small:
            xis = np.linspace(0.15, 0.95, n_xi) * thr
        else:
            xis = np.array([1.05, 1.5, 3.0, 8.0][:n_xi]) * thr
        for xi in xis:
            try:
                t_xi = ps.separating_time(term, cfg, float(xi), t_lo=s, t_hi=10.0 * t_max)
            except ValueError:
                t_xi = None
            if after:
                if t_xi is None or t_xi >= t_max:
                    continue
                t_vals = np.geomspace(max(t_xi * 1.05, t_xi + 0.1), t_max, n_t)
            else:
                hi = t_max if t_xi is None else min(t_max, t_xi)
                if hi <= s + 0.1:
                    continue
                t_vals = np.geomspace(s + 0.1, hi, n_t)
            for t in t_vals:
                triples.append((float(t), s, float(xi), t_xi))
    return triples


def check_bound(term: DampingTerm, profile: BProfile, bound_id, cfg: ps.ZoneConfig,
                delta: float = 0.25, s_list=(0.0, 1.0, 10.0), t_max: float = 1e3,
                refine: int = 1, integrator_tol: float = 1e-6,
                samples=None) -> BoundReport:
    """Empirical constants for one zone-wise multiplier estimate.

    The exponential rate C' is first estimated by regressing the log ratio
    against |xi|^2 B, then refined by a golden-section scan minimizing the
    spread of log(lhs/shape); the prefactor constant is the resulting sup.
    """
    bound = BoundId(bound_id)
    exps = damping_exponentials(profile)
    n_t = 8 * refine
    n_xi = 4 * refine
    if samples is None:
        samples = _default_samples(bound, term, cfg, s_list, t_max, n_t, n_xi)
    for (t, s, xi, t_xi) in samples:
        _check_domain(bound, term, cfg, t, s, xi, t_xi)
    if not samples:
        return BoundReport(bound_id=bound, delta=delta, samples=[], sup_ratio=0.0,
                           fitted_C=0.0, fitted_C_prime=None, n_samples=0)

    # group by (s, xi): one propagation serves all its t knots
    groups: dict[tuple[float, float], list[int]] = {}
    for i, (t, s, xi, t_xi) in enumerate(samples):
        groups.setdefault((s, xi), []).append(i)
    log_lhs = np.empty(len(samples))
    want_deriv = bound in _DERIVATIVE_BOUNDS
    for (s, xi), idxs in groups.items():
        t_knots = sorted({samples[i][0] for i in idxs})
        grid = np.concatenate([[s], t_knots])
        prop = propagate(term, profile, s, xi, grid, integrator_tol=integrator_tol)
        vals = prop.log_abs_phi_prime() if want_deriv else prop.log_abs_phi()
        lookup = {t: vals[k + 1] for k, t in enumerate(t_knots)}
        for i in idxs:
            log_lhs[i] = lookup[samples[i][0]]

    if bound not in _HAS_EXPONENTIAL:
        log_sh = np.array([_log_rhs_shape(bound, term, profile, exps, t, s, xi, t_xi,
                                          delta, 0.0)
                           for (t, s, xi, t_xi) in samples])
        y = log_lhs - log_sh
        finite = np.isfinite(y)
        sup = float(np.exp(np.max(y[finite]))) if finite.any() else 0.0
        return BoundReport(bound_id=bound, delta=delta,
                           samples=[BoundSample(t, s, xi, t_xi, ll)
                                    for (t, s, xi, t_xi), ll in zip(samples, log_lhs)],
                           sup_ratio=sup, fitted_C=sup, fitted_C_prime=None,
                           n_samples=len(samples))

    # y(C') = log lhs - log shape(C') = y0 + C' * x with x = |xi|^2 B >= 0
    log_sh0 = np.array([_log_rhs_shape(bound, term, profile, exps, t, s, xi, t_xi,
                                       delta, 0.0)
                        for (t, s, xi, t_xi) in samples])
    def _exp_clock(t, s, xi, t_xi):
        if bound in (BoundId.PHI_HYP_ELL, BoundId.PHI1_HYP_ELL):
            return xi**2 * float(B(profile, t, t_xi))
        if bound in (BoundId.PHI_ELL_HYP, BoundId.PHI1_ELL_HYP):
            return xi**2 * float(B(profile, t_xi, s))
        return xi**2 * float(B(profile, t, s))

    x = np.array([_exp_clock(*smp) for smp in samples])
    y0 = log_lhs - log_sh0
    finite = np.isfinite(y0)
    xf, yf = x[finite], y0[finite]
    # per-mode decay rates; C' must not exceed the slowest mode, otherwise the
    # prefactor blows up with the time horizon
    rates = []
    for idxs in groups.values():
        ii = [i for i in idxs if finite[i]]
        if len(ii) < 3 or np.ptp(x[ii]) < 1e-9:
            continue
        rates.append(-float(np.polyfit(x[ii], y0[ii], 1)[0]))
    c_min = max(min(rates), 1e-6) if rates else 0.25

    def spread(cp: float) -> float:
        z = yf + cp * xf
        return float(z.max() - z.min())

    lo, hi = 0.25 * c_min, c_min
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    a, b_ = lo, hi
    c1, c2 = b_ - gr * (b_ - a), a + gr * (b_ - a)
    f1, f2 = spread(c1), spread(c2)
    for _ in range(60):
        if f1 < f2:
            b_, c2, f2 = c2, c1, f1
            c1 = b_ - gr * (b_ - a)
            f1 = spread(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + gr * (b_ - a)
            f2 = spread(c2)
    c_best = 0.5 * (a + b_)
    sup = float(np.exp(np.max(yf + c_best * xf)))
    return BoundReport(bound_id=bound, delta=delta,
                       samples=[BoundSample(t, s, xi, t_xi, ll)
                                for (t, s, xi, t_xi), ll in zip(samples, log_lhs)],
                       sup_ratio=sup, fitted_C=sup, fitted_C_prime=float(c_best),
                       n_samples=len(samples))


# -- fundamental matrix -------------------------------------------------------


def fundamental_matrix(term: DampingTerm, profile: BProfile, cfg: ps.ZoneConfig,
                       s: float, t: float, xi_norm: float,
                       rel_step: float = 0.001) -> np.ndarray:
    """E(t,s,xi) for V = (i h(t,xi) y, y')^T, y'' + m(t,xi) y = 0.

    Computed as D(t) K(t,s) D(s)^{-1} where K is the frozen-coefficient flow
    of the second-order equation and D = diag(i h, 1).
    """
    if t < s:
        raise ValueError("t must be >= s")
    nodes = _schedule(s, t, rel_step)
    K = np.eye(2)
    for j in range(nodes.size - 1):
        h = nodes[j + 1] - nodes[j]
        m_mid = float(ps.m_symbol(term, nodes[j] + h / 2.0, xi_norm))
        m11, m12, m21, m22 = oscillator_flow(0.0, m_mid, h)
        K = np.array([[m11, m12], [m21, m22]]) @ K
    h_t = float(ps.h_symbol(term, cfg, t, xi_norm))
    h_s = float(ps.h_symbol(term, cfg, s, xi_norm))
    D_t = np.array([[1j * h_t, 0.0], [0.0, 1.0]])
    D_s_inv = np.array([[1.0 / (1j * h_s), 0.0], [0.0, 1.0]])
    return D_t @ K.astype(complex) @ D_s_inv


# -- exports -------------------------------------------------------------------


def trace_csv(prop: ModePropagator, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "s", "xi", "phi", "phi_prime", "log_abs_phi", "log_abs_phi_prime"])
        la, lap = prop.log_abs_phi(), prop.log_abs_phi_prime()
        for k, t in enumerate(prop.ts):
            w.writerow([f"{t:.17g}", f"{prop.s:.17g}", f"{prop.xi_norm:.17g}",
                        f"{prop.phi()[k]:.17g}", f"{prop.phi_prime()[k]:.17g}",
                        f"{la[k]:.17g}", f"{lap[k]:.17g}"])


def bound_report_csv(report: BoundReport, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bound_id", "t", "s", "xi", "t_xi", "log_lhs"])
        for smp in report.samples:
            w.writerow([report.bound_id.value, f"{smp.t:.17g}", f"{smp.s:.17g}",
                        f"{smp.xi:.17g}",
                        "" if smp.t_xi is None else f"{smp.t_xi:.17g}",
                        f"{smp.log_lhs:.17g}"])
