"""Four-zone decomposition of the extended phase space (t, |xi|).

The mode equation y'' + m(t, xi) y = 0 with m = |xi|^2 - (b^2/4 + b'/2) is
oscillatory, transitional, degenerate or damped depending on where |xi|
sits relative to eta(t) = b(t)/2.  This module carries the zone predicates,
the blended symbol h(t, xi), separating times, and zone itineraries along a
fixed-frequency ray.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .damping import DampingTerm, eval_term
from .errors import NonMonotoneEta

__all__ = [
    "ZoneLabel",
    "ZoneConfig",
    "ZonePoint",
    "eta",
    "m_symbol",
    "chi",
    "h_symbol",
    "classify",
    "separating_time",
    "transition_sequence",
    "zone_map_csv",
]


class ZoneLabel(str, enum.Enum):
    HYPERBOLIC = "Hyperbolic"
    PSEUDO_DIFF = "PseudoDiff"
    REDUCED = "Reduced"
    ELLIPTIC = "Elliptic"


@dataclass(frozen=True)
class ZoneConfig:
    eps: float = 0.1
    N: float = 4.0
    # config bound: delta = C_red * eps must stay below 1/2 in the
    # reduced-zone estimate; C_red is recorded from bound reports
    c_red: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0):
            raise ValueError("eps must lie in (0,1)")
        if self.N <= 0:
            raise ValueError("N must be positive")
        if self.c_red * self.eps >= 0.5:
            raise ValueError("c_red * eps must stay below 1/2")


@dataclass(frozen=True)
class ZonePoint:
    t: float
    xi_norm: float
    eta: float
    m_val: float
    h_val: float
    label: ZoneLabel


def eta(term: DampingTerm, t) -> float | np.ndarray:
    return eval_term(term, t, 0) / 2.0


def m_symbol(term: DampingTerm, t, xi_norm) -> float | np.ndarray:
    b = eval_term(term, t, 0)
    b1 = eval_term(term, t, 1)
    return np.asarray(xi_norm, dtype=float) ** 2 - (b**2 / 4.0 + b1 / 2.0)


def _bracket(xi_norm, et):
    """<xi>_eta = sqrt(| |xi|^2 - eta^2 |)."""
    return np.sqrt(np.abs(np.asarray(xi_norm, dtype=float) ** 2 - np.asarray(et) ** 2))


def chi(zeta) -> float | np.ndarray:
    """Cutoff: 1 on [0,1/2], 0 on [1,inf), C^1 cubic smoothstep between."""
    x = np.clip((np.asarray(zeta, dtype=float) - 0.5) * 2.0, 0.0, 1.0)
    out = 1.0 - (3.0 * x**2 - 2.0 * x**3)
    return out if out.ndim else float(out)


def h_symbol(term: DampingTerm, cfg: ZoneConfig, t, xi_norm) -> float | np.ndarray:
    et = eta(term, t)
    br = _bracket(xi_norm, et)
    c = chi(br / (cfg.eps * et))
    return c * cfg.eps * et + (1.0 - c) * np.sqrt(np.abs(m_symbol(term, t, xi_norm)))


def classify(term: DampingTerm, cfg: ZoneConfig, t: float, xi_norm: float) -> ZonePoint:
    """Zone label with boundary ties resolved Reduced, Elliptic, PseudoDiff, Hyperbolic."""
    et = float(eta(term, t))
    br = float(_bracket(xi_norm, et))
    ratio = br / et
    if ratio <= cfg.eps:
        label = ZoneLabel.REDUCED
    elif xi_norm <= et:
        label = ZoneLabel.ELLIPTIC
    elif ratio <= cfg.N:
        label = ZoneLabel.PSEUDO_DIFF
    else:
        label = ZoneLabel.HYPERBOLIC
    return ZonePoint(
        t=float(t),
        xi_norm=float(xi_norm),
        eta=et,
        m_val=float(m_symbol(term, t, xi_norm)),
        h_val=float(h_symbol(term, cfg, t, xi_norm)),
        label=label,
    )


def _monotone_direction(term: DampingTerm, t_lo: float, t_hi: float) -> int:
    """+1 increasing, -1 decreasing, 0 constant; raises if eta is not monotone."""
    ts = np.concatenate([[t_lo], np.geomspace(max(t_lo, 1e-6) + 1e-6, t_hi, 400)])
    ev = eta(term, ts)
    d = np.diff(ev)
    tol = 1e-14 * np.abs(ev[:-1]).max()
    if np.all(np.abs(d) <= tol):
        return 0
    if np.all(d >= -tol):
        return 1
    if np.all(d <= tol):
        return -1
    raise NonMonotoneEta("eta(t) = b(t)/2 is not monotone on the search interval")


def _solve_eta_equals(term: DampingTerm, level: float, t_lo: float, t_hi: float,
                      rel_tol: float = 1e-10) -> Optional[float]:
    """Monotone bisection for eta(t) = level on [t_lo, t_hi]; None if no crossing."""
    f = lambda tt: float(eta(term, tt)) - level
    a, b_ = t_lo, t_hi
    fa, fb = f(a), f(b_)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b_
    if fa * fb > 0:
        return None
    while (b_ - a) > rel_tol * max(1.0, abs(b_)):
        mid = 0.5 * (a + b_)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if fa * fm < 0:
            b_ = mid
        else:
            a, fa = mid, fm
    return 0.5 * (a + b_)


def separating_time(term: DampingTerm, cfg: ZoneConfig, xi_norm: float,
                    t_lo: float = 0.0, t_hi: float = 1e8) -> Optional[float]:
    """Solve eta(t) * sqrt(1 - eps^2) = |xi|; None when |xi| never meets the curve."""
    if xi_norm <= 0:
        raise ValueError("xi_norm must be positive")
    _monotone_direction(term, t_lo, t_hi)
    level = xi_norm / math.sqrt(1.0 - cfg.eps**2)
    return _solve_eta_equals(term, level, t_lo, t_hi)


def _boundary_functions(term: DampingTerm, cfg: ZoneConfig, xi_norm: float):
    """Signed boundary functions whose roots are zone-entry times along the ray."""
    def g(t):
        et = float(eta(term, t))
        return float(_bracket(xi_norm, et)) / et

    return g


def transition_sequence(term: DampingTerm, cfg: ZoneConfig, s: float, xi_norm: float,
                        t_max: float) -> list[tuple[ZoneLabel, float]]:
    """Ordered zone itinerary of the ray {(t, |xi|): t in [s, t_max]}.

    Candidate crossing times are the roots of eta = |xi| / sqrt(1 + c^2) for
    the threshold values c in {eps, N} on either side of the curve |xi| = eta,
    refined by bisection; the itinerary is read off by classifying between
    consecutive crossings.
    """
    if s > t_max:
        raise ValueError("s must not exceed t_max")
    # crossing levels: ratio = eps, N with |xi| >= eta gives eta = |xi|/sqrt(1+c^2);
    # ratio = eps with |xi| <= eta gives eta = |xi|/sqrt(1-eps^2); |xi| = eta itself
    levels = [
        xi_norm / math.sqrt(1.0 + cfg.N**2),
        xi_norm / math.sqrt(1.0 + cfg.eps**2),
        xi_norm,
        xi_norm / math.sqrt(1.0 - cfg.eps**2),
    ]
    cross: list[float] = []
    for lv in levels:
        r = _solve_eta_equals(term, lv, s, t_max)
        if r is not None and s < r < t_max:
            cross.append(r)
    cross = sorted(set(cross))
    edges = [s] + cross + [t_max]
    itinerary: list[tuple[ZoneLabel, float]] = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        label = classify(term, cfg, mid, xi_norm).label
        if not itinerary or itinerary[-1][0] is not label:
            itinerary.append((label, lo))
    return itinerary


def zone_map_csv(term: DampingTerm, cfg: ZoneConfig, t_grid, xi_grid, path: str) -> None:
    """Export (t, xi, label, m, h) samples for plotting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "xi", "label", "m", "h"])
        for t in t_grid:
            for xi in xi_grid:
                zp = classify(term, cfg, float(t), float(xi))
                w.writerow([f"{zp.t:.17g}", f"{zp.xi_norm:.17g}", zp.label.value,
                            f"{zp.m_val:.17g}", f"{zp.h_val:.17g}"])
