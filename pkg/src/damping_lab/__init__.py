"""Numerical laboratory for wave equations with time-dependent damping.

Modules: damping (coefficient catalog and admissibility checks), bfun
(the diffusion clock B(t,s) and its calculus), phasespace (zone splitting
of the (t, |xi|) plane), modes (Fourier mode propagation and multiplier
bounds), linear (decay-rate verification for the linear flow), semilinear
(spectral box solver, dichotomy runs, Picard iteration), analysis
(exponent algebra and weighted interpolation inequalities), cli and
reporting (scenario orchestration and artifacts).
"""
from . import (analysis, bfun, damping, errors, linear, modes, phasespace,
               reporting, semilinear)

__all__ = ["analysis", "bfun", "damping", "errors", "linear", "modes",
           "phasespace", "reporting", "semilinear"]

__version__ = "0.1.0"
