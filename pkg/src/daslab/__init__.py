"""daslab: a numerical laboratory for digital adiabatic simulation.

Dense exact-diagonalization propagators (exact, discretized, Trotterized),
the fidelity-error decomposition and adiabatic-theorem bound, the propagator
expansion in instantaneous eigenframes, discrete oscillatory-sum decay
bounds, the near-degeneracy (Zeno) test with critical-Trotter-step search,
and ground-projector calculus checks.
"""

from . import (
    eigenframes,
    errors,
    evolve,
    exceptions,
    linalg,
    model,
    projectors,
    riemann_lebesgue,
    zeno,
)

__version__ = "0.1.0"

__all__ = [
    "eigenframes",
    "errors",
    "evolve",
    "exceptions",
    "linalg",
    "model",
    "projectors",
    "riemann_lebesgue",
    "zeno",
    "__version__",
]
