"""Catalog of time-dependent damping coefficients b(t) and hypothesis checkers.

Catalog shapes are built symbolically once per term, so derivatives up to
order 3 are exact closed forms.  Custom coefficients fall back to central
finite differences with a stated step.
"""
from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional, Sequence

import numpy as np
import sympy as sp
from scipy import integrate

from .errors import GridTooShort, NonFiniteValue

__all__ = [
    "Kind",
    "DampingTerm",
    "Tolerances",
    "HypothesisReport",
    "power_law",
    "log_modified",
    "log_divided",
    "iterated_log",
    "constant",
    "custom",
    "default_c_shift",
    "default_grid",
    "eval_term",
    "check_hypotheses",
    "catalog",
    "term_from_config",
]


class Kind(str, enum.Enum):
    POWER_LAW = "PowerLaw"
    LOG_MODIFIED = "LogModified"
    LOG_DIVIDED = "LogDivided"
    ITERATED_LOG = "IteratedLog"
    CONSTANT = "Constant"
    CUSTOM = "Custom"


def default_c_shift(kappa: float, gamma: float) -> float:
    """Lower bound on the log shift c, padded by 1%.

    For kappa != 0 both the monotonicity constraint c > e^(gamma/|kappa|)
    and the slope constraint c > e^(gamma/(1+kappa)) must hold; for
    kappa = 0 only the slope constraint c > e^gamma remains.
    """
    if kappa != 0.0:
        return 1.01 * max(math.exp(gamma / abs(kappa)), math.exp(gamma / (1.0 + kappa)))
    return 1.01 * math.exp(gamma)


@dataclass(frozen=True)
class DampingTerm:
    """An immutable damping coefficient with exact derivatives up to order 3."""

    kind: Kind
    mu: float = 1.0
    kappa: float = 0.0
    gamma_powers: tuple[float, ...] = ()
    c_shifts: tuple[float, ...] = ()
    derivative_order: int = 3
    custom_fn: Optional[Callable[[float], float]] = None
    fd_step_scale: float = 1e-4
    label: str = ""

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.derivative_order < 3:
            raise ValueError("derivative_order must be >= 3")
        k = self.kind
        if k is Kind.POWER_LAW and not (-1.0 < self.kappa <= 1.0):
            raise ValueError("PowerLaw requires kappa in (-1, 1]")
        if k in (Kind.LOG_MODIFIED, Kind.LOG_DIVIDED, Kind.ITERATED_LOG):
            if not self.gamma_powers:
                raise ValueError(f"{k.value} requires at least one gamma power")
            if any(c <= 1.0 for c in self.c_shifts):
                raise ValueError("all c shifts must exceed 1")
            if len(self.c_shifts) != len(self.gamma_powers):
                raise ValueError("need one c shift per gamma power")
        if k is Kind.LOG_MODIFIED:
            if not (-1.0 < self.kappa <= 1.0):
                raise ValueError("LogModified requires kappa in (-1, 1]")
            if self.kappa == 1.0 and self.gamma_powers[0] <= 1.0:
                raise ValueError("LogModified with kappa=1 requires gamma > 1")
        if k in (Kind.LOG_DIVIDED, Kind.ITERATED_LOG) and not (-1.0 < self.kappa < 1.0):
            raise ValueError(f"{k.value} requires kappa in (-1, 1)")
        if k is Kind.CUSTOM and self.custom_fn is None:
            raise ValueError("Custom kind requires custom_fn")
        object.__setattr__(self, "_derivs", self._build_derivs())

    def _symbolic(self) -> sp.Expr:
        t = sp.Symbol("t", nonnegative=True)
        mu, ka = sp.Float(self.mu), sp.Rational(self.kappa) if float(self.kappa).is_integer() else sp.Float(self.kappa)
        base = mu * (1 + t) ** (-ka)
        g = [sp.Float(x) for x in self.gamma_powers]
        c = [sp.Float(x) for x in self.c_shifts]
        if self.kind is Kind.CONSTANT:
            return mu
        if self.kind is Kind.POWER_LAW:
            return base
        if self.kind is Kind.LOG_MODIFIED:
            return base * sp.log(c[0] + t) ** g[0]
        if self.kind is Kind.LOG_DIVIDED:
            return base / sp.log(c[0] + t) ** g[0]
        if self.kind is Kind.ITERATED_LOG:
            # L_1 = log(c_1 + t), L_{j+1} = log(c_{j+1} + L_j); b = base * prod L_j^g_j
            expr = sp.Integer(1)
            level = t
            for cj, gj in zip(c, g):
                level = sp.log(cj + level)
                expr = expr * level ** gj
            return base * expr
        raise AssertionError(self.kind)

    def _build_derivs(self):
        if self.kind is Kind.CUSTOM:
            return None
        t = sp.Symbol("t", nonnegative=True)
        expr = self._symbolic()
        fns = []
        for k in range(4):
            fns.append(sp.lambdify(t, sp.diff(expr, t, k), modules="numpy"))
        return tuple(fns)

    # -- evaluation -------------------------------------------------------

    def __call__(self, t, order: int = 0):
        return eval_term(self, t, order)

    def is_catalog(self) -> bool:
        return self.kind is not Kind.CUSTOM

    def to_config(self) -> dict:
        return {
            "kind": self.kind.value,
            "mu": self.mu,
            "kappa": self.kappa,
            "gammas": list(self.gamma_powers),
            "cs": list(self.c_shifts),
        }


def eval_term(term: DampingTerm, t, order: int = 0):
    """Evaluate b^(order)(t); vectorized over t."""
    if order < 0 or order > term.derivative_order:
        raise ValueError(f"order {order} outside 0..{term.derivative_order}")
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("t must be >= 0")
    if term.kind is Kind.CUSTOM:
        out = _fd_eval(term, arr, order)
    else:
        out = np.asarray(term._derivs[order](arr), dtype=float)
        out = np.broadcast_to(out, arr.shape).copy() if out.shape != arr.shape else out
    if not np.all(np.isfinite(out)):
        raise NonFiniteValue(f"b^({order}) not finite on given grid for {term.kind.value}")
    return out if arr.ndim else float(out)


def _fd_eval(term: DampingTerm, t: np.ndarray, order: int) -> np.ndarray:
    f = np.vectorize(term.custom_fn, otypes=[float])
    if order == 0:
        return f(t)
    h = term.fd_step_scale * (1.0 + t)
    # central stencils, second-order accurate
    if order == 1:
        return (f(t + h) - f(np.maximum(t - h, 0.0))) / (t + h - np.maximum(t - h, 0.0))
    if order == 2:
        return (f(t + h) - 2 * f(t) + f(np.abs(t - h))) / h**2
    return (f(t + 2 * h) - 2 * f(t + h) + 2 * f(np.abs(t - h)) - f(np.abs(t - 2 * h))) / (2 * h**3)


# -- catalog constructors --------------------------------------------------


def power_law(mu: float = 1.0, kappa: float = 0.0, label: str = "") -> DampingTerm:
    return DampingTerm(Kind.POWER_LAW, mu=mu, kappa=kappa, label=label or f"power(mu={mu},kappa={kappa})")


def log_modified(mu: float = 1.0, kappa: float = 0.0, gamma: float = 1.0,
                 c: Optional[float] = None, label: str = "") -> DampingTerm:
    c = default_c_shift(kappa, gamma) if c is None else c
    return DampingTerm(Kind.LOG_MODIFIED, mu=mu, kappa=kappa, gamma_powers=(gamma,),
                       c_shifts=(c,), label=label or f"logmod(kappa={kappa},gamma={gamma})")


def log_divided(mu: float = 1.0, kappa: float = 0.0, gamma: float = 1.0,
                c: Optional[float] = None, label: str = "") -> DampingTerm:
    c = default_c_shift(kappa, gamma) if c is None else c
    return DampingTerm(Kind.LOG_DIVIDED, mu=mu, kappa=kappa, gamma_powers=(gamma,),
                       c_shifts=(c,), label=label or f"logdiv(kappa={kappa},gamma={gamma})")


def iterated_log(mu: float = 1.0, kappa: float = 0.0, gammas: Sequence[float] = (1.0, 1.0),
                 cs: Optional[Sequence[float]] = None, label: str = "") -> DampingTerm:
    if cs is None:
        cs = tuple(default_c_shift(kappa, g) + 2.0 for g in gammas)
    return DampingTerm(Kind.ITERATED_LOG, mu=mu, kappa=kappa, gamma_powers=tuple(gammas),
                       c_shifts=tuple(cs), label=label or "iterlog")


def constant(mu: float = 1.0, label: str = "") -> DampingTerm:
    return DampingTerm(Kind.CONSTANT, mu=mu, label=label or f"constant(mu={mu})")


def custom(fn: Callable[[float], float], fd_step_scale: float = 1e-4, label: str = "custom") -> DampingTerm:
    return DampingTerm(Kind.CUSTOM, custom_fn=fn, fd_step_scale=fd_step_scale, label=label)


def catalog() -> dict[str, DampingTerm]:
    """Default admissible terms used throughout the acceptance suite."""
    return {
        "constant": constant(1.0, label="constant"),
        "power_1_3": power_law(1.0, 1.0 / 3.0, label="power_1_3"),
        "power_m1_3": power_law(1.0, -1.0 / 3.0, label="power_m1_3"),
        "power_m1_2": power_law(1.0, -1.0 / 2.0, label="power_m1_2"),
        "log_modified": log_modified(1.0, 1.0, 2.0, label="log_modified"),
    }


_KIND_BUILDERS = {
    "PowerLaw": lambda cfg: power_law(cfg.get("mu", 1.0), cfg.get("kappa", 0.0)),
    "Constant": lambda cfg: constant(cfg.get("mu", 1.0)),
    "LogModified": lambda cfg: log_modified(cfg.get("mu", 1.0), cfg.get("kappa", 0.0),
                                            cfg.get("gammas", [1.0])[0],
                                            (cfg.get("cs") or [None])[0]),
    "LogDivided": lambda cfg: log_divided(cfg.get("mu", 1.0), cfg.get("kappa", 0.0),
                                          cfg.get("gammas", [1.0])[0],
                                          (cfg.get("cs") or [None])[0]),
    "IteratedLog": lambda cfg: iterated_log(cfg.get("mu", 1.0), cfg.get("kappa", 0.0),
                                            cfg.get("gammas", [1.0, 1.0]), cfg.get("cs")),
}


def term_from_config(cfg: dict) -> DampingTerm:
    """Build a catalog term from a {kind, mu, kappa, gammas[], cs[]} record."""
    kind = cfg.get("kind")
    if kind not in _KIND_BUILDERS:
        raise ValueError(f"unknown damping kind {kind!r}")
    return _KIND_BUILDERS[kind](cfg)


# -- hypothesis checking ---------------------------------------------------


@dataclass(frozen=True)
class Tolerances:
    monotone_slack: float = 1e-10
    osc_growth: float = 1.10
    integral_tail: float = 1e-8
    m_upper: float = 1.0 - 1e-9
    liminf_margin: float = -1.0


@dataclass
class CheckItem:
    ok: bool
    witness_t: float
    witness_value: float
    detail: str = ""


@dataclass
class HypothesisReport:
    term_label: str
    hyp_b_items: dict[str, CheckItem]
    hyp_further: CheckItem
    fitted_m: float
    hyp_blowup: CheckItem
    liminf_bprime_over_b2: float
    hyp_shape: Optional[CheckItem]
    grid_min: float
    grid_max: float
    grid_size: int
    certified: bool
    tolerances: Tolerances = field(default_factory=Tolerances)

    @property
    def hyp_b_ok(self) -> bool:
        return all(item.ok for item in self.hyp_b_items.values())

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=str)


def default_grid(t_max: float = 1e6, size: int = 800) -> np.ndarray:
    """Time grid: t = 0 plus a log-spaced tail up to t_max."""
    return np.concatenate([[0.0], np.logspace(-3, math.log10(t_max), size)])


def _worst(ok_mask: np.ndarray, grid: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    """Witness point: extremal violated value when any, extremal value otherwise."""
    if not np.all(ok_mask):
        idx = int(np.argmax(np.where(ok_mask, -np.inf, np.abs(values))))
    else:
        idx = int(np.argmax(np.abs(values)))
    return float(grid[idx]), float(values[idx])


def _tail_converges_1_over_t2b(term: DampingTerm) -> Optional[bool]:
    """Closed-form tail verdict for integrability of ((1+t)^2 b)^{-1}."""
    if term.kind is Kind.CONSTANT:
        return True
    if term.kind is Kind.POWER_LAW:
        return term.kappa < 1.0
    if term.kind is Kind.LOG_MODIFIED:
        return term.kappa < 1.0 or term.gamma_powers[0] > 1.0
    if term.kind in (Kind.LOG_DIVIDED, Kind.ITERATED_LOG):
        return term.kappa < 1.0
    return None  # Custom: undecidable without tail structure


def _tail_tb_to_infinity(term: DampingTerm) -> Optional[bool]:
    if term.kind is Kind.CONSTANT:
        return True
    if term.kind is Kind.POWER_LAW:
        return term.kappa < 1.0
    if term.kind is Kind.LOG_MODIFIED:
        return term.kappa < 1.0 or term.gamma_powers[0] > 0.0
    if term.kind in (Kind.LOG_DIVIDED, Kind.ITERATED_LOG):
        return term.kappa < 1.0
    return None


def _tail_one_over_b_diverges(term: DampingTerm) -> Optional[bool]:
    if term.is_catalog():
        return term.kappa > -1.0 or term.kind is Kind.CONSTANT
    return None


def check_hypotheses(term: DampingTerm, grid: Optional[np.ndarray] = None,
                     tol: Optional[Tolerances] = None,
                     shape_fn: Optional[Callable[[float], float]] = None) -> HypothesisReport:
    """Verify the admissibility assumptions on b(t) on a finite grid.

    Asymptotic statements combine a grid check with a closed-form tail
    verdict for catalog kinds; Custom terms get a best-effort grid verdict
    with certified=False.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    tol = tol or Tolerances()
    t_max = float(grid.max())
    if t_max < 1e3:
        raise GridTooShort("grid must reach at least t = 1e3")

    b = eval_term(term, grid, 0)
    b1 = eval_term(term, grid, 1)
    items: dict[str, CheckItem] = {}
    certified = term.is_catalog()

    # (i) positivity
    wt, wv = _worst(b > 0, grid, b)
    items["i_positive"] = CheckItem(bool(np.all(b > 0)), wt, wv, "min b(t) on grid")

    # (ii) monotone and t b(t) -> infinity
    diffs = np.diff(b)
    mono = bool(np.all(diffs <= tol.monotone_slack * np.abs(b[:-1]) + 1e-300) or
                np.all(diffs >= -tol.monotone_slack * np.abs(b[:-1]) - 1e-300))
    tb = grid * b
    tail_tb = _tail_tb_to_infinity(term)
    if tail_tb is None:
        # best effort: t b(t) grew across the last two decades
        last = tb[grid >= t_max / 10.0]
        prev = tb[(grid >= t_max / 100.0) & (grid < t_max / 10.0)]
        tail_tb = bool(last.min() > prev.max() and last.max() > 10.0)
        certified = False
    items["ii_effective"] = CheckItem(mono and tail_tb, t_max, float(tb[-1]),
                                      "monotone on grid; t*b(t) tail verdict")

    # (iii) ((1+t)^2 b)^{-1} integrable
    conv = _tail_converges_1_over_t2b(term)
    integrand = lambda tt: 1.0 / ((1.0 + tt) ** 2 * float(eval_term(term, tt, 0)))
    with warnings.catch_warnings():
        # the partial integral is reported even when the tail diverges
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        head, _ = integrate.quad(integrand, 0.0, t_max, limit=400)
    if conv is None:
        # doubling test on partial integrals
        parts = []
        hi = t_max
        for _ in range(4):
            val, _ = integrate.quad(integrand, hi, 2 * hi, limit=200)
            parts.append(val)
            hi *= 2
        ratios = [parts[k + 1] / parts[k] if parts[k] > 0 else 0.0 for k in range(3)]
        if all(r < 0.75 for r in ratios):
            conv = True
        elif all(r > 0.95 for r in ratios):
            conv = False
        else:
            raise GridTooShort("tail of ((1+t)^2 b)^{-1} neither converged nor diverged")
        certified = False
    items["iii_integrable"] = CheckItem(bool(conv), t_max, head,
                                        "partial integral of ((1+t)^2 b)^{-1} on [0, t_max]")

    # (iv) oscillation bounds |b^(k)| / b <= C (1+t)^{-k}, k = 1, 2, 3
    osc_ok = True
    osc_sup, osc_t = 0.0, 0.0
    for k in (1, 2, 3):
        bk = eval_term(term, grid, k)
        ratio = np.abs(bk) * (1.0 + grid) ** k / b
        sup_all = float(ratio.max())
        last = ratio[grid >= t_max / 10.0]
        prev = ratio[(grid >= t_max / 100.0) & (grid < t_max / 10.0)]
        stable = float(last.max()) <= tol.osc_growth * max(float(prev.max()), 1e-12) + 1e-12
        osc_ok = osc_ok and np.all(np.isfinite(ratio)) and stable
        if sup_all > osc_sup:
            osc_sup, osc_t = sup_all, float(grid[int(np.argmax(ratio))])
    items["iv_oscillation"] = CheckItem(bool(osc_ok), osc_t, osc_sup,
                                        "sup_k sup_t (1+t)^k |b^(k)|/b")

    # (v) 1/b not integrable
    div = _tail_one_over_b_diverges(term)
    Bpart = float(np.trapezoid(1.0 / b[1:], grid[1:]))
    if div is None:
        decs = []
        edges = [t_max / 1000.0, t_max / 100.0, t_max / 10.0, t_max]
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(lambda tt: 1.0 / float(eval_term(term, tt, 0)), lo, hi, limit=200)
            decs.append(val)
        div = bool(decs[-1] >= 0.5 * decs[-2])
        certified = False
    items["v_one_over_b_not_L1"] = CheckItem(bool(div), t_max, Bpart,
                                             "partial integral of 1/b on grid")

    # Hypothesis 2: t b'(t) <= m b(t) with m in [0, 1)
    slope = grid * b1 / b
    m_fit = max(0.0, float(slope.max()))
    further_ok = m_fit < tol.m_upper
    wt, wv = _worst(slope < tol.m_upper, grid, slope)
    further = CheckItem(bool(further_ok), wt, wv, "sup t b'/b")

    # blow-up hypothesis: |b'| <= C b^2, liminf b'/b^2 > -1
    r = b1 / b**2
    sup_abs = float(np.abs(r).max())
    tail_mask = grid >= t_max / 10.0
    liminf = float(r[tail_mask].min())
    blow_ok = np.all(np.isfinite(r)) and liminf > tol.liminf_margin
    blow = CheckItem(bool(blow_ok), float(grid[int(np.argmax(np.abs(r)))]), sup_abs,
                     "sup |b'|/b^2; liminf over last decade")

    shape_item = None
    if shape_fn is not None:
        eta = np.array([shape_fn(float(tt)) for tt in grid])
        closeness = np.abs(b / eta - 2.0) * (1.0 + grid)
        shape_item = CheckItem(bool(np.all(np.isfinite(closeness))),
                               float(grid[int(np.argmax(closeness))]),
                               float(closeness.max()),
                               "sup (1+t) |b/eta - 2| (recorded constant)")

    return HypothesisReport(
        term_label=term.label or term.kind.value,
        hyp_b_items=items,
        hyp_further=further,
        fitted_m=m_fit,
        hyp_blowup=blow,
        liminf_bprime_over_b2=liminf,
        hyp_shape=shape_item,
        grid_min=float(grid.min()),
        grid_max=t_max,
        grid_size=int(grid.size),
        certified=certified,
        tolerances=tol,
    )
