"""The three propagators: exact time-ordered, discretized, and Trotterized.

The discretized product takes one exponential of the full H(s_j) per step;
the Trotterized product splits each step into per-layer exponentials.  The
exact propagator is a midpoint-sampled product refined by substep doubling
until self-convergence; a state-level ODE integrator is provided as an
independent second route for large problems.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .exceptions import NoConvergence
from .linalg import (
    normalized_state,
    operator_norm,
    principal_log_hamiltonian,
    unitarity_defect,
)
from .model import AdiabaticPath, HermitianOperator, path_at, path_matrix

GRIDS = ("endpoints", "left", "midpoint")

UNITARY_RESULT_TOL = 1e-9


def grid_points(steps: int, grid: str = "endpoints") -> np.ndarray:
    """Sample points s_j, j = 1..L, for the requested grid policy.

    endpoints: s_j = (j-1)/(L-1), so s_1 = 0 and s_L = 1 (s = [0] when L = 1).
    left:      s_j = (j-1)/L.
    midpoint:  s_j = (j-1/2)/L.
    """
    if grid not in GRIDS:
        raise ValueError(f"grid must be one of {GRIDS}, got {grid!r}")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if grid == "endpoints":
        if steps == 1:
            return np.array([0.0])
        return np.linspace(0.0, 1.0, steps)
    if grid == "left":
        return np.arange(steps) / steps
    return (np.arange(steps) + 0.5) / steps


@dataclass(frozen=True)
class Layer:
    """One term H_k(s) of the step Hamiltonian.

    The common case is a fixed matrix with a scalar weight, H_k(s) =
    weight(s) * matrix, which lets the step exponentials reuse a single
    eigendecomposition.  A callable ``generate`` overrides that for layers
    that are not scalar multiples of a fixed operator.
    """

    matrix: np.ndarray | None = None
    weight: Callable | None = None
    generate: Callable | None = None
    label: str = ""

    def __post_init__(self):
        if self.generate is None and (self.matrix is None or self.weight is None):
            raise ValueError("layer needs either (matrix, weight) or generate")

    def operator_at(self, s: float) -> np.ndarray:
        if self.generate is not None:
            return self.generate(s)
        return float(self.weight(s)) * self.matrix


def interpolation_layers(path: AdiabaticPath) -> tuple[Layer, Layer]:
    """Standard two-layer split: (1 - p(s)) H_i followed by p(s) H_f."""
    p = path.schedule.p
    return (
        Layer(matrix=path.h_initial.matrix, weight=lambda s: 1.0 - float(p(s)), label="initial"),
        Layer(matrix=path.h_final.matrix, weight=lambda s: float(p(s)), label="final"),
    )


def full_hamiltonian_layer(path: AdiabaticPath) -> tuple[Layer]:
    """Single layer equal to the whole H(s); Trotterization becomes exact."""
    return (Layer(generate=lambda s: path_at(path, s).matrix, label="full"),)


@dataclass
class EvolutionSpec:
    """Run parameters for one evolution: path, total time T, steps L, grid, layers."""

    path: AdiabaticPath
    total_time: float
    steps: int
    grid: str = "endpoints"
    layers: tuple[Layer, ...] = ()

    def __post_init__(self):
        if self.total_time <= 0:
            raise ValueError(f"total_time must be positive, got {self.total_time}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.grid not in GRIDS:
            raise ValueError(f"grid must be one of {GRIDS}, got {self.grid!r}")
        if not self.layers:
            self.layers = interpolation_layers(self.path)

    @property
    def dt(self) -> float:
        return self.total_time / self.steps

    def grid_points(self) -> np.ndarray:
        return grid_points(self.steps, self.grid)

    @cached_property
    def _layer_eigs(self):
        """Eigendecompositions of fixed layer matrices (None for generate layers)."""
        out = []
        for layer in self.layers:
            if layer.matrix is None:
                out.append(None)
            else:
                w, v = np.linalg.eigh(layer.matrix)
                out.append((w, v))
        return tuple(out)


@dataclass
class UnitaryOperator:
    """A propagator matrix tagged with the method that produced it."""

    matrix: np.ndarray
    method: str
    spec: EvolutionSpec | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        defect = unitarity_defect(self.matrix)
        if defect > UNITARY_RESULT_TOL:
            raise ValueError(
                f"{self.method} propagator not unitary: defect {defect:.3e}"
            )
        self.meta.setdefault("unitarity_defect", defect)


def ordered_product(mats: np.ndarray) -> np.ndarray:
    """Product mats[-1] @ ... @ mats[0]; the first entry acts first.

    Pairwise tree reduction: deterministic association, fewer sequential
    matmuls, and better rounding than a left fold.
    """
    mats = np.asarray(mats)
    if mats.shape[0] == 0:
        raise ValueError("empty product")
    while mats.shape[0] > 1:
        n = mats.shape[0]
        even = n - (n % 2)
        pairs = mats[:even].reshape(even // 2, 2, *mats.shape[1:])
        out = pairs[:, 1] @ pairs[:, 0]
        if n % 2:
            out = np.concatenate([out, mats[-1:]], axis=0)
        mats = out
    return mats[0]


def _batched_unitaries(h_stack: np.ndarray, t) -> np.ndarray:
    """exp(-i H t) for a stack of Hermitian matrices (t scalar or per-matrix)."""
    w, v = np.linalg.eigh(h_stack)
    t = np.asarray(t, dtype=float).reshape(-1, 1)
    phases = np.exp(-1j * w * t)
    return (v * phases[:, None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def _midpoint_product(path: AdiabaticPath, total_time: float, substeps: int) -> np.ndarray:
    dim = path.dim
    chunk = max(16, (1 << 22) // (dim * dim))
    dt = total_time / substeps
    out = None
    for start in range(0, substeps, chunk):
        stop = min(start + chunk, substeps)
        mids = (np.arange(start, stop) + 0.5) / substeps
        us = _batched_unitaries(path_matrix(path, mids), dt)
        part = ordered_product(us)
        out = part if out is None else part @ out
    return out


def exact_evolution(
    spec: EvolutionSpec,
    tol: float = 1e-10,
    start_substeps: int = 64,
    max_substeps: int = 2**20,
) -> UnitaryOperator:
    """Time-ordered propagator over s in [0, 1], total time T.

    Midpoint-sampled product with the substep count doubled from
    ``start_substeps`` until two successive refinements differ by less than
    tol in spectral norm.
    """
    if tol < 1e-12:
        raise ValueError(f"tol must be >= 1e-12, got {tol}")
    previous = None
    substeps = start_substeps
    while substeps <= max_substeps:
        current = _midpoint_product(spec.path, spec.total_time, substeps)
        if previous is not None:
            delta = operator_norm(current - previous)
            if delta < tol:
                return UnitaryOperator(
                    current, "exact", spec, {"substeps": substeps, "delta": delta}
                )
        previous = current
        substeps *= 2
    raise NoConvergence(
        f"midpoint product did not self-converge to {tol:.1e} within "
        f"{max_substeps} substeps"
    )


def exact_state_evolution(
    path: AdiabaticPath,
    total_time: float,
    psi: np.ndarray,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> np.ndarray:
    """Evolve a single state through the exact time-ordered dynamics.

    Adaptive high-order ODE integration of d psi/ds = -i T H(s) psi; an
    independent route from the midpoint product, and much cheaper when only
    the final state is needed.
    """
    psi = normalized_state(psi)
    hi = path.h_initial.matrix
    diff = path.h_final.matrix - hi
    p = path.schedule.p

    def rhs(s, y):
        return -1j * total_time * ((hi + float(p(s)) * diff) @ y)

    solution = solve_ivp(
        rhs, (0.0, 1.0), psi, method="DOP853", rtol=rtol, atol=atol
    )
    if not solution.success:
        raise NoConvergence(f"state integration failed: {solution.message}")
    return normalized_state(solution.y[:, -1])


def discrete_evolution(spec: EvolutionSpec) -> UnitaryOperator:
    """Ordered product of whole-step exponentials exp(-i H(s_j) dt), j = 1..L."""
    s_values = spec.grid_points()
    us = _batched_unitaries(path_matrix(spec.path, s_values), spec.dt)
    return UnitaryOperator(ordered_product(us), "discrete", spec)


def trotter_step_unitary(spec: EvolutionSpec, s: float) -> np.ndarray:
    """Single Trotter step at s: layer k = 1 applied first (rightmost factor)."""
    step = None
    for layer, eig in zip(spec.layers, spec._layer_eigs):
        if eig is None:
            h = layer.operator_at(s)
            w, v = np.linalg.eigh(h)
            factor = (v * np.exp(-1j * w * spec.dt)[None, :]) @ v.conj().T
        else:
            w, v = eig
            phase = np.exp(-1j * w * float(layer.weight(s)) * spec.dt)
            factor = (v * phase[None, :]) @ v.conj().T
        step = factor if step is None else factor @ step
    return step


def trotter_evolution(spec: EvolutionSpec) -> UnitaryOperator:
    """Trotterized propagator: per step, layer exponentials in layer order."""
    if not spec.layers:
        raise ValueError("trotter evolution needs at least one layer")
    s_values = spec.grid_points()
    steps = None
    for layer, eig in zip(spec.layers, spec._layer_eigs):
        if eig is None:
            hs = np.stack([layer.operator_at(s) for s in s_values])
            factors = _batched_unitaries(hs, spec.dt)
        else:
            w, v = eig
            weights = np.array([float(layer.weight(s)) for s in s_values])
            phases = np.exp(-1j * np.outer(weights, w) * spec.dt)
            factors = (v[None, :, :] * phases[:, None, :]) @ v.conj().T[None, :, :]
        steps = factors if steps is None else factors @ steps
    return UnitaryOperator(ordered_product(steps), "trotter", spec)


def effective_hamiltonian(spec: EvolutionSpec, s: float) -> HermitianOperator:
    """Hermitian generator of one Trotter step: the step's principal log / dt.

    A :class:`BranchAmbiguityWarning` from the log propagates to the caller
    when eigenphases approach the branch cut.
    """
    step = trotter_step_unitary(spec, s)
    h = principal_log_hamiltonian(step, spec.dt)
    return HermitianOperator(h, label=f"effective@s={s:g},dt={spec.dt:g}")
