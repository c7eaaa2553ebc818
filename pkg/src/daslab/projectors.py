"""Ground-state projector calculus: pseudo-inverse, derivative identities,
and the two-level commutator check.

Conventions: for a Hermitian H with unique ground energy E0, the shifted
Hamiltonian is H - E0 I (so it annihilates the ground projector P), and the
pseudo-inverse G sums P_k / (E_k - E0) over excited levels.  Derivatives of
H entering the identities are the shifted ones, H' - <0|H'|0> I; the ground
projector identity is insensitive to that shift but the pseudo-inverse
identity and the two-level commutator are not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateGround, GapClosure, WrongDimension
from .linalg import hermitian_eig, operator_norm
from .model import AdiabaticPath, HermitianOperator, path_at

GAP_TOL = 1e-9


@dataclass(frozen=True)
class ProjectorFrame:
    """Rank-1 ground projector and the pseudo-inverse of the shifted H."""

    projector: np.ndarray
    pseudo_inverse: np.ndarray
    ground_energy: float


def _matrix_of(h) -> np.ndarray:
    if isinstance(h, HermitianOperator):
        return h.matrix
    return np.asarray(h, dtype=complex)


def projector_frame(h, gap_tol: float = GAP_TOL) -> ProjectorFrame:
    """Build the projector frame of a Hermitian operator.

    Requires a unique ground state: raises :class:`DegenerateGround` when
    the first gap is at or below gap_tol.
    """
    dec = hermitian_eig(_matrix_of(h))
    w, v = dec.eigenvalues, dec.eigenvectors
    if len(w) < 2 or w[1] - w[0] <= gap_tol:
        raise DegenerateGround(
            f"ground gap {(w[1] - w[0]) if len(w) > 1 else 0.0:.3e} "
            f"at or below {gap_tol:.1e}"
        )
    ground = v[:, 0]
    projector = np.outer(ground, ground.conj())
    excited = v[:, 1:]
    weights = 1.0 / (w[1:] - w[0])
    pseudo_inverse = (excited * weights[None, :]) @ excited.conj().T
    return ProjectorFrame(
        projector=projector,
        pseudo_inverse=pseudo_inverse,
        ground_energy=float(w[0]),
    )


def shifted_derivative(path: AdiabaticPath, s: float) -> np.ndarray:
    """H'(s) minus its ground expectation value times the identity."""
    dh = path_at(path, s, 1).matrix
    ground = hermitian_eig(path_at(path, s).matrix).eigenvectors[:, 0]
    drift = float(np.real(ground.conj() @ dh @ ground))
    return dh - drift * np.eye(len(dh))


def derivative_identity_residuals(
    path: AdiabaticPath, s: float, h: float, gap_tol: float = 1e-6
) -> tuple[float, float]:
    """Residual norms of the closed-form P' and G' against central differences.

    P' = -G H' P - P H' G and G' = P H' G^2 - G H' G + G^2 H' P with H' the
    shifted derivative.  Both residuals are O(h^2) for smooth gapped paths.
    """
    if not (0.0 <= s - h and s + h <= 1.0):
        raise ValueError(f"need [s - h, s + h] inside [0, 1], got s = {s}, h = {h}")
    for probe in (s - h, s, s + h):
        gap = _gap_at(path, probe)
        if gap <= gap_tol:
            raise GapClosure(f"gap {gap:.3e} at s = {probe:g} below {gap_tol:.1e}")

    forward = projector_frame(path_at(path, s + h).matrix)
    backward = projector_frame(path_at(path, s - h).matrix)
    center = projector_frame(path_at(path, s).matrix)

    dP = (forward.projector - backward.projector) / (2 * h)
    dG = (forward.pseudo_inverse - backward.pseudo_inverse) / (2 * h)

    p, g = center.projector, center.pseudo_inverse
    dh_s = shifted_derivative(path, s)
    p_closed = -g @ dh_s @ p - p @ dh_s @ g
    g_closed = p @ dh_s @ g @ g - g @ dh_s @ g + g @ g @ dh_s @ p

    return operator_norm(dP - p_closed), operator_norm(dG - g_closed)


def _gap_at(path: AdiabaticPath, s: float) -> float:
    values = hermitian_eig(path_at(path, s).matrix).eigenvalues
    return float(values[1] - values[0])


def commutator_norm(path: AdiabaticPath, s: float) -> float:
    """Norm of [G, H' P H'] at s, with H' the shifted derivative."""
    frame = projector_frame(path_at(path, s).matrix)
    dh_s = shifted_derivative(path, s)
    sandwich = dh_s @ frame.projector @ dh_s
    commutator = frame.pseudo_inverse @ sandwich - sandwich @ frame.pseudo_inverse
    return operator_norm(commutator)


def two_level_commutator_norm(path: AdiabaticPath, s: float) -> float:
    """[G, H' P H'] norm for a two-level path; must vanish to rounding.

    The sandwich H' P H' is diagonal in the eigenbasis once H' is shifted,
    so it commutes with G whenever there is only one excited level.  Higher
    dimensions are rejected; use :func:`commutator_norm` for control runs.
    """
    if path.dim != 2:
        raise WrongDimension(f"two-level check needs dim 2, got {path.dim}")
    return commutator_norm(path, s)
