"""Dense complex matrix kernel: eigendecompositions, exp/log, norms, states.

All routines are pure functions on ``numpy`` arrays.  Tolerances are module
constants with the documented defaults and can be overridden per call.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    BranchAmbiguityWarning,
    ConvergenceFailure,
    DegenerateGround,
    NotHermitian,
    NotUnitary,
)

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-8
DEGENERACY_CLUSTER_TOL = 1e-9
BRANCH_CUT_TOL = 1e-8
GAUGE_TIE_TOL = 1e-12
STATE_NORM_TOL = 1e-12


def as_complex_matrix(m) -> np.ndarray:
    """Coerce to a square complex128 array with finite entries."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def hermiticity_defect(m) -> float:
    m = np.asarray(m)
    return float(np.abs(m - m.conj().T).max())


def unitarity_defect(u) -> float:
    u = np.asarray(u)
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())


def require_hermitian(m, tol: float = HERMITIAN_TOL) -> None:
    defect = hermiticity_defect(m)
    if defect > tol:
        raise NotHermitian(f"max |M - M^dag| = {defect:.3e} exceeds tol {tol:.3e}")


def require_unitary(u, tol: float = UNITARY_TOL) -> None:
    defect = unitarity_defect(u)
    if defect > tol:
        raise NotUnitary(f"max |U^dag U - I| = {defect:.3e} exceeds tol {tol:.3e}")


def operator_norm(m) -> float:
    """Largest singular value (spectral norm)."""
    m = np.asarray(m, dtype=np.complex128)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def normalized_state(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).ravel()
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return v / norm


def _eigenvalue_clusters(values: np.ndarray, tol: float):
    """Yield (start, stop) index ranges of eigenvalues closer than tol."""
    n = len(values)
    start = 0
    for i in range(1, n + 1):
        if i == n or values[i] - values[i - 1] >= tol:
            yield start, i
            start = i


def _fix_column_phases(v: np.ndarray, tie_tol: float = GAUGE_TIE_TOL) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive.

    Entries within tie_tol of the column maximum tie; the lowest row index
    wins so repeated calls are bit-identical.
    """
    mags = np.abs(v)
    top = mags.max(axis=0)
    pivot_rows = np.argmax(mags >= (top - tie_tol)[None, :], axis=0)
    pivots = v[pivot_rows, np.arange(v.shape[1])]
    phases = pivots / np.abs(pivots)
    return v * phases.conj()[None, :]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues with a gauge-fixed orthonormal eigenbasis."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gauge: str = "largest-entry-real-positive"

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)


def hermitian_eig(
    h,
    tol: float = HERMITIAN_TOL,
    cluster_tol: float = DEGENERACY_CLUSTER_TOL,
) -> SpectralDecomposition:
    """Diagonalize a Hermitian matrix as H = V diag(w) V^dag.

    Eigenvalues come back ascending.  Columns inside a degenerate cluster
    (spacing below cluster_tol) are re-orthonormalized by QR, then every
    column gets the deterministic largest-entry phase gauge.
    """
    h = as_complex_matrix(h)
    require_hermitian(h, tol)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"eigh failed to converge: {exc}") from exc
    for lo, hi in _eigenvalue_clusters(w, cluster_tol):
        if hi - lo > 1:
            q, r = np.linalg.qr(v[:, lo:hi])
            diag = np.diag(r).copy()
            diag[diag == 0] = 1.0
            v[:, lo:hi] = q * (diag / np.abs(diag))[None, :]
    v = _fix_column_phases(v)
    return SpectralDecomposition(eigenvalues=w, eigenvectors=v)


def unitary_eig(
    u,
    tol: float = UNITARY_TOL,
    cluster_tol: float = DEGENERACY_CLUSTER_TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize a unitary as U = V diag(exp(-i theta)) V^dag.

    Returns (theta, V) with theta ascending in (-pi, pi].  The Hermitian part
    (U + U^dag)/2 is diagonalized first; clusters that it cannot separate are
    split by the skew part restricted to the cluster subspace.  Both stages
    are plain Hermitian eigenproblems, so the basis is orthonormal by
    construction even through phase collisions.
    """
    u = as_complex_matrix(u)
    require_unitary(u, tol)
    cos_part = (u + u.conj().T) / 2
    sin_part = (u - u.conj().T) / 2j
    try:
        c, v = np.linalg.eigh(cos_part)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"eigh failed to converge: {exc}") from exc
    for lo, hi in _eigenvalue_clusters(c, cluster_tol):
        if hi - lo > 1:
            block = v[:, lo:hi]
            k = block.conj().T @ sin_part @ block
            _, y = np.linalg.eigh((k + k.conj().T) / 2)
            v[:, lo:hi] = block @ y
    diag = np.einsum("ij,ij->j", v.conj(), u @ v)
    theta = -np.angle(diag)
    theta[theta <= -np.pi + 1e-15] = np.pi
    order = np.argsort(theta, kind="stable")
    theta = theta[order]
    v = _fix_column_phases(v[:, order])
    return theta, v


def matrix_exp_hermitian(h, t: float, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """exp(-i H t) for Hermitian H via eigendecomposition."""
    h = as_complex_matrix(h)
    require_hermitian(h, tol)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)[None, :]) @ v.conj().T


def principal_log_hamiltonian(
    u,
    dt: float,
    tol: float = UNITARY_TOL,
    branch_tol: float = BRANCH_CUT_TOL,
) -> np.ndarray:
    """Hermitian generator H with exp(-i H dt) = U, eigenphases in (-pi, pi].

    Emits :class:`BranchAmbiguityWarning` when an eigenphase sits within
    branch_tol of the cut at +/- pi; the result is still returned so callers
    can observe large-step breakdown instead of dying on it.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    theta, v = unitary_eig(u, tol)
    if np.any(np.pi - np.abs(theta) < branch_tol):
        warnings.warn(
            f"eigenphase within {branch_tol:.1e} of the +/-pi branch cut; "
            "the recovered generator depends on the branch choice",
            BranchAmbiguityWarning,
            stacklevel=2,
        )
    h = (v * (theta / dt)[None, :]) @ v.conj().T
    return (h + h.conj().T) / 2


def ground_state(h, gap_tol: float = DEGENERACY_CLUSTER_TOL) -> np.ndarray:
    """Lowest eigenvector of a Hermitian matrix; unique ground state required."""
    dec = hermitian_eig(h)
    if dec.dim > 1 and dec.eigenvalues[1] - dec.eigenvalues[0] <= gap_tol:
        raise DegenerateGround(
            f"ground gap {dec.eigenvalues[1] - dec.eigenvalues[0]:.3e} "
            f"below tol {gap_tol:.3e}"
        )
    return dec.eigenvectors[:, 0].copy()
