"""Discrete propagator in the instantaneous eigenframes of the path.

Each step's exponential is diagonal in the eigenbasis of H(s_j); merging
neighboring bases into transition matrices expresses the whole discretized
propagator as a product of diagonal phase matrices and near-identity
transition matrices.  The expansion of that product in the off-diagonal
parts of the transitions gives the first-order transition amplitudes into
excited levels and the exact discrete adiabatic error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .exceptions import DegeneratePath, GapClosure, NoConvergence
from .linalg import _fix_column_phases, unitarity_defect
from .model import AdiabaticPath, path_matrix
from .evolve import EvolutionSpec

GROUND_GAP_TOL = 1e-9
CLUSTER_TOL = 1e-9


@dataclass(frozen=True)
class EigenFrame:
    """Eigendecomposition of H(s_j) in the transported gauge."""

    s: float
    energies: np.ndarray
    basis: np.ndarray

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    @property
    def lambdas(self) -> np.ndarray:
        """Level spacings above the ground state; lambdas[0] = 0."""
        return self.energies - self.energies[0]

    @property
    def dim(self) -> int:
        return len(self.energies)


def _clusters(values: np.ndarray, tol: float):
    n = len(values)
    start = 0
    for i in range(1, n + 1):
        if i == n or values[i] - values[i - 1] >= tol:
            yield start, i
            start = i


def _align_block(reference: np.ndarray, block: np.ndarray) -> np.ndarray:
    """Rotate a degenerate-cluster basis so its overlap with the reference
    columns is Hermitian positive semidefinite (polar alignment)."""
    overlap = reference.conj().T @ block
    u, _, vh = np.linalg.svd(overlap)
    return block @ (u @ vh).conj().T


def _transport_gauge(
    energies: np.ndarray, bases: np.ndarray, cluster_tol: float
) -> np.ndarray:
    """Parallel-transport gauge along the frame sequence.

    Non-degenerate columns of frame j+1 are rephased so their overlap with
    the matching column of frame j is real nonnegative.  Degenerate clusters
    are polar-aligned as blocks; the leading frame's clusters are aligned
    against frame 1 so the first transition is as smooth as the rest.
    """
    bases = bases.copy()
    n_frames = len(bases)
    bases[0] = _fix_column_phases(bases[0])
    if n_frames == 1:
        return bases
    for lo, hi in _clusters(energies[0], cluster_tol):
        if hi - lo > 1:
            bases[0][:, lo:hi] = _align_block(bases[1][:, lo:hi], bases[0][:, lo:hi])
    for j in range(1, n_frames):
        prev = bases[j - 1]
        cur = bases[j]
        for lo, hi in _clusters(energies[j], cluster_tol):
            if hi - lo > 1:
                cur[:, lo:hi] = _align_block(prev[:, lo:hi], cur[:, lo:hi])
            else:
                z = np.vdot(prev[:, lo], cur[:, lo])
                if abs(z) > 0:
                    cur[:, lo] *= z.conj() / abs(z)
        bases[j] = cur
    return bases


def eigenframe_sequence(
    spec: EvolutionSpec,
    strict: bool = False,
    cluster_tol: float = CLUSTER_TOL,
    ground_gap_tol: float = GROUND_GAP_TOL,
) -> list[EigenFrame]:
    """Transported eigenframes of H(s_j) over the spec's grid.

    Raises :class:`DegeneratePath` when a ground state degenerates anywhere
    on the grid.  With strict=True any pair of levels closer than
    ground_gap_tol triggers the same error; the default tolerates degenerate
    excited levels, which the standard spin-chain endpoints have.
    """
    s_values = spec.grid_points()
    energies, bases = np.linalg.eigh(path_matrix(spec.path, s_values))
    for j in range(len(s_values)):
        gaps = np.diff(energies[j])
        if energies.shape[1] > 1 and gaps[0] <= ground_gap_tol:
            raise DegeneratePath(
                f"ground state degenerate at step {j} (s = {s_values[j]:.6f})",
                step=j,
                level_a=0,
                level_b=1,
            )
        if strict and np.any(gaps <= ground_gap_tol):
            level = int(np.argmax(gaps <= ground_gap_tol))
            raise DegeneratePath(
                f"levels {level} and {level + 1} degenerate at step {j}",
                step=j,
                level_a=level,
                level_b=level + 1,
            )
    bases = _transport_gauge(energies, bases, cluster_tol)
    return [
        EigenFrame(s=float(s_values[j]), energies=energies[j], basis=bases[j])
        for j in range(len(s_values))
    ]


def transition_matrices(frames: list[EigenFrame]) -> list[np.ndarray]:
    """Overlap matrices between consecutive frames: S_j = B_{j+1}^dag B_j."""
    return [
        frames[j + 1].basis.conj().T @ frames[j].basis
        for j in range(len(frames) - 1)
    ]


@dataclass(frozen=True)
class PropagatorExpansion:
    """Frame-basis propagator, its leading orders, and derived error data.

    ``matrix`` is the full product of step phases and transition matrices;
    its (0, 0) element is the surviving ground amplitude, the rest of column
    0 holds the transition amplitudes into excited levels.  ``amplitudes``
    carries the first-order estimate of those transition amplitudes when the
    caller computed it.
    """

    matrix: np.ndarray
    zeroth_order: np.ndarray
    first_order: np.ndarray
    adiabatic_error: float
    total_time: float
    dt: float
    amplitudes: np.ndarray | None = None

    def __post_init__(self):
        defect = unitarity_defect(self.matrix)
        if defect > 1e-9:
            raise ValueError(f"frame propagator not unitary: defect {defect:.3e}")
        column = np.abs(self.matrix[:, 0]) ** 2
        if abs(column.sum() - 1.0) > 1e-9:
            raise ValueError("first column of the frame propagator must be normalized")
        expected = float(np.sqrt(max(0.0, 1.0 - abs(self.matrix[0, 0]) ** 2)))
        if abs(self.adiabatic_error - expected) > 1e-12:
            raise ValueError("adiabatic_error inconsistent with the (0,0) element")

    @property
    def first_order_error(self) -> float:
        """Adiabatic-error estimate from the first-order amplitudes."""
        if self.amplitudes is None:
            raise ValueError("amplitudes were not computed for this expansion")
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))


def propagator_expansion(
    frames: list[EigenFrame],
    transitions: list[np.ndarray],
    total_time: float,
    amplitudes: np.ndarray | None = None,
) -> PropagatorExpansion:
    """Assemble the frame-basis propagator and its first two expansion orders.

    The step phases use the raw frame energies, so the full reconstruction
    B_L matrix B_1^dag equals the discrete propagator including its ground
    phase.  The first-order term keeps the step-k phase factor on the
    incoming side, which is where it lands when the product is expanded.
    """
    n_frames = len(frames)
    if len(transitions) != n_frames - 1:
        raise ValueError(
            f"expected {n_frames - 1} transition matrices, got {len(transitions)}"
        )
    dt = total_time / n_frames
    energies = np.stack([frame.energies for frame in frames])
    phases = np.exp(-1j * dt * energies)

    gamma = np.diag(phases[0]).astype(complex)
    for j in range(1, n_frames):
        gamma = phases[j][:, None] * (transitions[j - 1] @ gamma)

    zeroth = np.diag(np.exp(-1j * dt * energies.sum(axis=0)))

    dim = frames[0].dim
    first = np.zeros((dim, dim), dtype=complex)
    if n_frames > 1:
        cumulative = np.cumsum(energies, axis=0)
        total = cumulative[-1]
        eye = np.eye(dim)
        for k in range(n_frames - 1):
            incoming = np.exp(-1j * dt * cumulative[k])
            outgoing = np.exp(-1j * dt * (total - cumulative[k]))
            first += outgoing[:, None] * (transitions[k] - eye) * incoming[None, :]

    err = float(np.sqrt(max(0.0, 1.0 - abs(gamma[0, 0]) ** 2)))
    return PropagatorExpansion(
        matrix=gamma,
        zeroth_order=zeroth,
        first_order=first,
        adiabatic_error=err,
        total_time=total_time,
        dt=dt,
        amplitudes=amplitudes,
    )


def reconstruct_discrete(frames: list[EigenFrame], expansion: PropagatorExpansion) -> np.ndarray:
    """Rebuild the discrete propagator from the frame-basis product."""
    return frames[-1].basis @ expansion.matrix @ frames[0].basis.conj().T


def transition_amplitudes(spec: EvolutionSpec, frames: list[EigenFrame]) -> np.ndarray:
    """First-order transition amplitudes into levels l = 1..dim-1.

    Discrete oscillatory sum of the coupling matrix elements
    <0(k)|H'(s_k)|l(k)> / lambda_l(k) against the accumulated level-spacing
    phases.  The phase prefix includes step k itself, matching where the
    step-k phase sits in the expanded product; the weight is the actual grid
    spacing.
    """
    n_frames = len(frames)
    dim = frames[0].dim
    if n_frames < 2 or dim < 2:
        return np.zeros(max(dim - 1, 0), dtype=complex)
    dt = spec.total_time / n_frames
    spacing = frames[1].s - frames[0].s

    lambdas = np.stack([frame.lambdas for frame in frames])
    prefix = np.cumsum(lambdas, axis=0)

    diff = spec.path.h_final.matrix - spec.path.h_initial.matrix
    amplitudes = np.zeros(dim - 1, dtype=complex)
    for k in range(n_frames - 1):
        frame = frames[k]
        dp = float(spec.path.schedule.dp(frame.s))
        coupling = (frame.basis[:, 0].conj() @ diff @ frame.basis[:, 1:]) * dp
        theta = coupling / lambdas[k, 1:]
        amplitudes += theta * np.exp(-1j * dt * prefix[k, 1:])
    return spacing * amplitudes


def first_order_error(amplitudes: np.ndarray) -> float:
    """Adiabatic-error estimate sqrt(sum_l |amplitude_l|^2)."""
    return float(np.sqrt(np.sum(np.abs(amplitudes) ** 2)))


def gamma_expansion(spec: EvolutionSpec, strict: bool = False) -> PropagatorExpansion:
    """One-stop driver: frames, transitions, expansion, and amplitudes."""
    frames = eigenframe_sequence(spec, strict=strict)
    transitions = transition_matrices(frames)
    amplitudes = transition_amplitudes(spec, frames)
    return propagator_expansion(frames, transitions, spec.total_time, amplitudes)


def _chunked_level_data(
    path: AdiabaticPath, s_values: np.ndarray, level: int, chunk: int = 8192
):
    """Eigendata for columns 0 and `level` along a dense grid, chunked."""
    n = len(s_values)
    dim = path.dim
    gaps = np.empty(n)
    v0 = np.empty((n, dim), dtype=complex)
    vl = np.empty((n, dim), dtype=complex)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        w, v = np.linalg.eigh(path_matrix(path, s_values[start:stop]))
        gaps[start:stop] = w[:, level] - w[:, 0]
        v0[start:stop] = v[:, :, 0]
        vl[start:stop] = v[:, :, level]
    return gaps, v0, vl


def _transport_phases(vectors: np.ndarray) -> np.ndarray:
    """Cumulative phase factors making consecutive overlaps real nonnegative."""
    overlaps = np.einsum("ij,ij->i", vectors[:-1].conj(), vectors[1:])
    mags = np.abs(overlaps)
    corrections = np.where(mags > 0, overlaps.conj() / np.where(mags > 0, mags, 1.0), 1.0)
    return np.concatenate([[1.0 + 0.0j], np.cumprod(corrections)])


def transition_amplitude_continuum(
    path: AdiabaticPath,
    total_time: float,
    level: int,
    rel_tol: float = 1e-8,
    start_nodes: int = 2048,
    max_nodes: int = 2**20,
    gap_floor: float = 1e-9,
) -> complex:
    """Continuum limit of one transition amplitude.

    Oscillatory integral of theta_level(s) exp(-i T Omega_level(s)) over
    [0, 1] with Omega the accumulated level spacing, evaluated on doubling
    uniform grids until self-convergence.  Eigenvectors along the grid are
    transported to the smooth gauge, so the integrand's phase is continuous.
    """
    if level < 1 or level >= path.dim:
        raise ValueError(f"level {level} outside [1, {path.dim})")
    diff = path.h_final.matrix - path.h_initial.matrix
    previous = None
    nodes = start_nodes
    while nodes <= max_nodes:
        s_values = np.linspace(0.0, 1.0, nodes + 1)
        gaps, v0, vl = _chunked_level_data(path, s_values, level)
        if gaps.min() <= gap_floor:
            raise GapClosure(
                f"level {level} spacing {gaps.min():.3e} at or below {gap_floor:.1e}"
            )
        g0 = _transport_phases(v0)
        gl = _transport_phases(vl)
        dp = np.asarray(path.schedule.dp(s_values), dtype=float)
        coupling = np.einsum("id,de,ie->i", v0.conj(), diff, vl)
        theta = g0.conj() * gl * dp * coupling / gaps
        h = s_values[1] - s_values[0]
        omega = cumulative_simpson(gaps, dx=h, initial=0.0)
        integrand = theta * np.exp(-1j * total_time * omega)
        value = complex(simpson(integrand, dx=h))
        if previous is not None and abs(value - previous) <= rel_tol * max(1.0, abs(value)):
            return value
        previous = value
        nodes *= 2
    raise NoConvergence(
        f"oscillatory integral did not self-converge within {max_nodes} nodes"
    )
