"""Exponent arithmetic, interpolation-inequality checks, and rate fitting.

Critical exponents and the algebraic identities between decay exponents are
pure arithmetic; the weighted Gagliardo-Nirenberg inequalities are checked
by grid quadrature on ensembles of random bump functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import HypothesisNotSatisfied

__all__ = [
    "theta_q",
    "p_fujita",
    "p_gn",
    "ExponentTable",
    "exponent_table",
    "admissible",
    "exponent_identity_check",
    "gn_check",
    "bump_ensemble",
    "LogLogFit",
    "fit_loglog",
]


def theta_q(n: int, q: float) -> float:
    """Interpolation weight n(1/2 - 1/q) between L2 and the homogeneous H1 norm."""
    return n * (0.5 - 1.0 / q)


def p_fujita(n: int) -> float:
    return 1.0 + 2.0 / n


def p_gn(n: int) -> float:
    return math.inf if n <= 2 else n / (n - 2.0)


@dataclass(frozen=True)
class ExponentTable:
    n: int
    p: float
    p_fuj: float
    p_gn: float
    admissible_main: bool
    admissible_low: bool
    gn_q_max: float  # largest q for which the L2-H1 interpolation applies

    def theta(self, q: float) -> float:
        return theta_q(self.n, q)


def admissible(n: int, p: float, theorem: str) -> tuple[bool, list[str]]:
    """Exponent admissibility for the two existence theorems, with reasons."""
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    reasons: list[str] = []
    pf, pg = p_fujita(n), p_gn(n)
    if theorem == "Main":
        if p <= pf:
            reasons.append(f"p <= p_fuj({n}) = {pf}")
        if n >= 3 and p > pg:
            reasons.append(f"p > p_gn({n}) = {pg}")
    elif theorem == "Low":
        if n in (1, 2):
            if p <= pf:
                reasons.append(f"p <= p_fuj({n}) = {pf}")
        elif n == 3:
            if not (2.0 <= p <= 3.0):
                reasons.append("n=3 requires 2 <= p <= 3")
        elif n == 4:
            if p != 2.0:
                reasons.append("n=4 admits only p = 2")
        else:
            reasons.append("no admissible p for n >= 5")
    else:
        raise ValueError("theorem must be 'Main' or 'Low'")
    return (not reasons, reasons)


def exponent_table(n: int, p: float) -> ExponentTable:
    return ExponentTable(
        n=n, p=p, p_fuj=p_fujita(n), p_gn=p_gn(n),
        admissible_main=admissible(n, p, "Main")[0],
        admissible_low=admissible(n, p, "Low")[0],
        gn_q_max=math.inf if n <= 2 else 2.0 * n / (n - 2.0),
    )


def exponent_identity_check(n: int, p: float) -> dict:
    """Chain of decay-exponent identities from the contraction argument.

    The first expression carries a factor p/(p+1) relative to the other two,
    so it is rescaled by (p+1)/p before comparison; all three then agree to
    rounding. The sign of the common value is negative exactly above the
    Fujita exponent.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    th = lambda q: theta_q(n, q)
    e1 = (1.0 - th(p + 1.0)) / 2.0 - (1.0 - 2.0 / (p + 1.0)) * (n / 4.0 + 0.5)
    e1_scaled = e1 * (p + 1.0) / p
    e2 = (n / 4.0 + 1.0) / p + (1.0 - th(2.0 * p)) / 2.0 - (n / 4.0 + 0.5)
    e3 = (1.0 - (p - 1.0) * n / 2.0) / p
    return {
        "expr_interp": e1,
        "expr_interp_scaled": e1_scaled,
        "expr_duhamel": e2,
        "expr_closed": e3,
        "residuals": (abs(e1_scaled - e2), abs(e2 - e3), abs(e1_scaled - e3)),
        "sign": -1 if e3 < 0 else (0 if e3 == 0 else 1),
        "supercritical": p > p_fujita(n),
    }


# -- weighted Gagliardo-Nirenberg checks ------------------------------------


def _lq(f: np.ndarray, dx: float, q: float) -> float:
    return float((np.sum(np.abs(f) ** q) * dx ** f.ndim) ** (1.0 / q))


def _grad(f: np.ndarray, dx: float) -> list[np.ndarray]:
    g = np.gradient(f, dx)
    return g if isinstance(g, list) else [g]


def _grad_mag(f: np.ndarray, dx: float) -> np.ndarray:
    return np.sqrt(sum(gi**2 for gi in _grad(f, dx)))


def _laplacian(f: np.ndarray, dx: float) -> np.ndarray:
    out = np.zeros_like(f)
    for axis in range(f.ndim):
        out += np.gradient(np.gradient(f, dx, axis=axis), dx, axis=axis)
    return out


def gn_check(v: np.ndarray, psi: np.ndarray, dx: float, sigma: float,
             q: float = 2.0, variant: str = "i", j: int = 0,
             c_t: Optional[float] = None) -> dict:
    """One weighted interpolation inequality evaluated by grid quadrature.

    Variants: "i" interpolation in the weight exponent (constant 1);
    "ii" gradient commutes with the weight up to sign (constant 1, needs
    laplacian(psi) >= 0); "iii" weighted Lq interpolation (constant
    recorded, never asserted); "iv" Lq bound through the positive
    laplacian floor c_t = inf laplacian(psi) (asserted at sigma = 1).
    """
    if not (0.0 <= sigma <= 1.0):
        raise ValueError("sigma must lie in [0,1]")
    n = v.ndim
    th = theta_q(n, q)
    w_sigma = np.exp(sigma * psi)
    slack = 1.0 + 1e-8

    if variant == "i":
        if np.min(psi) < -1e-12:
            raise HypothesisNotSatisfied("variant (i) needs psi >= 0")
        base = v if j == 0 else _grad_mag(v, dx)
        lhs = _lq(w_sigma * base, dx, 2.0)
        rhs = _lq(base, dx, 2.0) ** (1.0 - sigma) * _lq(np.exp(psi) * base, dx, 2.0) ** sigma
        return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs * slack, "constant": None}

    if variant == "ii":
        if np.min(_laplacian(psi, dx)) < -1e-6 * max(1.0, np.abs(psi).max()):
            raise HypothesisNotSatisfied("variant (ii) needs laplacian(psi) >= 0")
        lhs = _lq(_grad_mag(w_sigma * v, dx), dx, 2.0)
        rhs = _lq(w_sigma * _grad_mag(v, dx), dx, 2.0)
        return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs * slack, "constant": None}

    if variant == "iii":
        if np.min(_laplacian(psi, dx)) < -1e-6 * max(1.0, np.abs(psi).max()):
            raise HypothesisNotSatisfied("variant (iii) needs laplacian(psi) >= 0")
        lhs = _lq(w_sigma * v, dx, q)
        shape = (_lq(w_sigma * v, dx, 2.0) ** (1.0 - th)
                 * _lq(w_sigma * _grad_mag(v, dx), dx, 2.0) ** th)
        return {"lhs": lhs, "rhs": shape, "holds": None,
                "constant": lhs / shape if shape > 0 else math.inf}

    if variant == "iv":
        if np.min(psi) < -1e-12:
            raise HypothesisNotSatisfied("variant (iv) needs psi >= 0")
        if c_t is None:
            c_t = float(np.min(_laplacian(psi, dx)))
        if c_t <= 0:
            raise HypothesisNotSatisfied("variant (iv) needs inf laplacian(psi) > 0")
        lhs = _lq(w_sigma * v, dx, q)
        rhs = c_t ** (-(1.0 - th) / 2.0) * _lq(w_sigma * _grad_mag(v, dx), dx, 2.0)
        return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs * slack, "constant": lhs / rhs}

    raise ValueError(f"unknown variant {variant!r}")


def bump_ensemble(n_dim: int, count: int, seed: int, half_width: float = 8.0,
                  points: int = 256) -> tuple[list[np.ndarray], float, np.ndarray]:
    """Seeded smooth compactly supported bumps on a uniform grid.

    Returns (functions, dx, coordinate_radius_squared_grid).
    """
    rng = np.random.default_rng(seed)
    xs = np.linspace(-half_width, half_width, points, endpoint=False)
    dx = float(xs[1] - xs[0])
    if n_dim == 1:
        r2 = xs**2
        coords = (xs,)
    elif n_dim == 2:
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        r2 = X**2 + Y**2
        coords = (X, Y)
    else:
        raise ValueError("bump ensembles support n_dim in {1, 2}")
    funcs = []
    for _ in range(count):
        amp = rng.uniform(0.2, 3.0)
        width = rng.uniform(0.5, half_width / 3.0)
        center = rng.uniform(-half_width / 3.0, half_width / 3.0, size=n_dim)
        rr = sum((c - c0) ** 2 for c, c0 in zip(coords, center)) / width**2
        v = np.where(rr < 1.0, np.exp(-1.0 / np.maximum(1.0 - rr, 1e-300)), 0.0)
        funcs.append(amp * v)
    return funcs, dx, r2


# -- rate fitting ------------------------------------------------------------


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    residual: float  # RMS of log-space residuals
    n_points: int


def fit_loglog(abscissa, values, window: Optional[tuple[float, float]] = None) -> LogLogFit:
    """Least-squares slope of log(values) against log(abscissa)."""
    x = np.asarray(abscissa, dtype=float)
    y = np.asarray(values, dtype=float)
    mask = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if window is not None:
        mask &= (x >= window[0]) & (x <= window[1])
    lx, ly = np.log(x[mask]), np.log(y[mask])
    if lx.size < 3:
        raise ValueError("need at least 3 points for a rate fit")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return LogLogFit(slope=float(slope), intercept=float(intercept),
                     residual=float(np.sqrt(np.mean(resid**2))), n_points=int(lx.size))
