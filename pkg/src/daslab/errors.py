"""Fidelity/norm error metrics, their triangle decomposition, and the
adiabatic-theorem bound with scaling-index estimation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DegenerateEndpoint,
    DegenerateGround,
    DimensionMismatch,
    GapClosure,
    InsufficientData,
)
from .linalg import ground_state, hermitian_eig, operator_norm
from .model import AdiabaticPath, path_at
from .evolve import (
    EvolutionSpec,
    discrete_evolution,
    exact_evolution,
    exact_state_evolution,
    trotter_evolution,
)

TRIANGLE_SLACK = 1e-9
GAP_FLOOR = 1e-9


def fidelity_error(phi: np.ndarray, psi: np.ndarray) -> float:
    """sqrt(1 - |<phi|psi>|^2), clamped to [0, 1] against rounding.

    Immune to global phases on either state.
    """
    phi = np.asarray(phi, dtype=complex).ravel()
    psi = np.asarray(psi, dtype=complex).ravel()
    if phi.shape != psi.shape:
        raise DimensionMismatch(f"state dims {phi.shape} vs {psi.shape}")
    overlap = abs(np.vdot(phi, psi)) ** 2
    return float(np.sqrt(min(1.0, max(0.0, 1.0 - overlap))))


@dataclass(frozen=True)
class ErrorTriplet:
    """Total, adiabatic and Trotter fidelity errors plus the norm distance."""

    eps_tot: float
    eps_adb: float
    eps_tro: float
    norm_dist: float
    total_time: float
    steps: int
    dt: float

    def __post_init__(self):
        for name in ("eps_tot", "eps_adb", "eps_tro"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} = {value} outside [0, 1]")
        if self.eps_tot > self.eps_adb + self.eps_tro + TRIANGLE_SLACK:
            raise ValueError(
                f"triangle inequality violated: {self.eps_tot} > "
                f"{self.eps_adb} + {self.eps_tro}"
            )


def endpoint_states(path: AdiabaticPath, gap_tol: float = GAP_FLOOR):
    """Ground states of H_i and H_f; endpoints must be non-degenerate."""
    try:
        psi_i = ground_state(path.h_initial.matrix, gap_tol)
        psi_f = ground_state(path.h_final.matrix, gap_tol)
    except DegenerateGround as exc:
        raise DegenerateEndpoint(str(exc)) from exc
    return psi_i, psi_f


def error_triplet(
    spec: EvolutionSpec,
    exact_method: str = "ode",
    exact_tol: float = 1e-8,
    rtol: float = 1e-10,
) -> ErrorTriplet:
    """All three errors for one run, plus the discrete/Trotter norm distance.

    eps_adb compares the exactly-evolved initial state against the target
    ground state, eps_tro compares exact against Trotterized evolution of the
    initial state, and eps_tot compares the Trotterized result against the
    target.  exact_method selects the exact route: "ode" (adaptive state
    integration) or "midpoint" (self-converged operator product).
    """
    psi_i, psi_f = endpoint_states(spec.path)
    a_tro = trotter_evolution(spec).matrix
    a_d = discrete_evolution(spec).matrix
    if exact_method == "ode":
        exact_state = exact_state_evolution(spec.path, spec.total_time, psi_i, rtol=rtol)
    elif exact_method == "midpoint":
        exact_state = exact_evolution(spec, tol=exact_tol).matrix @ psi_i
    else:
        raise ValueError(f"unknown exact_method {exact_method!r}")
    tro_state = a_tro @ psi_i
    return ErrorTriplet(
        eps_tot=fidelity_error(psi_f, tro_state),
        eps_adb=fidelity_error(psi_f, exact_state),
        eps_tro=fidelity_error(exact_state, tro_state),
        norm_dist=operator_norm(a_d - a_tro),
        total_time=spec.total_time,
        steps=spec.steps,
        dt=spec.dt,
    )


@dataclass(frozen=True)
class BoundReport:
    """Adiabatic-theorem upper bound split into its three parts."""

    boundary_start: float
    boundary_end: float
    integral_term: float
    total: float

    def __post_init__(self):
        parts = (self.boundary_start, self.boundary_end, self.integral_term)
        if any(p < 0 for p in parts):
            raise ValueError("bound parts must be nonnegative")
        if abs(self.total - sum(parts)) > 1e-12 * max(1.0, abs(self.total)):
            raise ValueError("total must equal the sum of its parts")


def adiabatic_bound(
    path: AdiabaticPath,
    total_time: float,
    quad_points: int = 201,
    gap_floor: float = GAP_FLOOR,
) -> BoundReport:
    """Adiabatic-theorem bound: two 1/(T gap^2) boundary terms plus the
    integral of (7 ||H'||^2 / gap^3 + ||H''|| / gap^2) / T over s in [0, 1].

    Composite Simpson quadrature; the node count is forced odd.
    """
    if quad_points < 3:
        raise ValueError("need at least 3 quadrature points")
    if quad_points % 2 == 0:
        quad_points += 1
    s_nodes = np.linspace(0.0, 1.0, quad_points)

    diff_norm = operator_norm(path.h_final.matrix - path.h_initial.matrix)
    dp = np.abs(np.asarray(path.schedule.dp(s_nodes), dtype=float))
    ddp = np.abs(np.asarray(path.schedule.ddp(s_nodes), dtype=float))
    d1 = dp * diff_norm
    d2 = ddp * diff_norm

    gaps = np.empty(quad_points)
    for i, s in enumerate(s_nodes):
        values = hermitian_eig(path_at(path, float(s)).matrix).eigenvalues
        gaps[i] = values[1] - values[0]
        if gaps[i] < gap_floor:
            raise GapClosure(f"gap {gaps[i]:.3e} below {gap_floor:.1e} at s = {s:.6f}")

    integrand = 7.0 * d1**2 / gaps**3 + d2 / gaps**2
    h = s_nodes[1] - s_nodes[0]
    weights = np.ones(quad_points)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    integral = float(np.dot(weights, integrand) * h / 3.0)

    b0 = d1[0] / (total_time * gaps[0] ** 2)
    b1 = d1[-1] / (total_time * gaps[-1] ** 2)
    integral_term = integral / total_time
    return BoundReport(b0, b1, integral_term, b0 + b1 + integral_term)


def scaling_index(samples) -> float:
    """Negative least-squares slope of log(eps) against log(T).

    samples: iterable of (T, eps) pairs with T strictly increasing, eps > 0.
    """
    pairs = [(float(t), float(e)) for t, e in samples]
    if len(pairs) < 4:
        raise InsufficientData(f"need >= 4 samples, got {len(pairs)}")
    t = np.array([p[0] for p in pairs])
    eps = np.array([p[1] for p in pairs])
    if np.any(eps <= 0):
        raise ValueError("eps values must be positive")
    if np.any(np.diff(t) <= 0):
        raise ValueError("T values must be strictly increasing")
    slope = np.polyfit(np.log(t), np.log(eps), 1)[0]
    return float(-slope)
