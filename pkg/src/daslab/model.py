"""Pauli-sum Hamiltonians, interpolated adiabatic paths, and gap evaluation.

Matrices are dense; site 0 is the leftmost Kronecker factor.  Schedules carry
their first two derivatives analytically so path derivatives are exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import DimensionTooLarge, OutOfRange
from .linalg import as_complex_matrix, hermitian_eig, require_hermitian

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

MIN_SITES = 2
MAX_SITES = 12


@dataclass(frozen=True)
class PauliTerm:
    """A real coefficient times a product of single-site Pauli factors."""

    coefficient: float
    factors: tuple[tuple[int, str], ...]

    def __post_init__(self):
        seen = set()
        for site, axis in self.factors:
            if axis not in ("X", "Y", "Z"):
                raise ValueError(f"unknown Pauli axis {axis!r}")
            if site < 0:
                raise ValueError(f"negative site index {site}")
            if site in seen:
                raise ValueError(f"site {site} appears twice in one term")
            seen.add(site)


def pauli_term_matrix(term: PauliTerm, n_sites: int) -> np.ndarray:
    axes = dict(term.factors)
    for site in axes:
        if site >= n_sites:
            raise ValueError(f"site {site} outside [0, {n_sites})")
    out = np.array([[term.coefficient]], dtype=complex)
    for site in range(n_sites):
        out = np.kron(out, PAULI[axes.get(site, "I")])
    return out


def pauli_sum_matrix(terms: Sequence[PauliTerm], n_sites: int) -> np.ndarray:
    dim = 2**n_sites
    out = np.zeros((dim, dim), dtype=complex)
    for term in terms:
        out += pauli_term_matrix(term, n_sites)
    return out


@dataclass(frozen=True)
class HermitianOperator:
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = as_complex_matrix(self.matrix)
        require_hermitian(m)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Schedule:
    """Monotone reparametrization p(s) of [0, 1] with analytic p' and p''.

    The callables must accept numpy arrays (all built-in schedules do).
    """

    name: str
    p: Callable
    dp: Callable
    ddp: Callable

    def __post_init__(self):
        if abs(float(self.p(0.0))) > 1e-12 or abs(float(self.p(1.0)) - 1.0) > 1e-12:
            raise ValueError("schedule must satisfy p(0) = 0 and p(1) = 1")


def linear_schedule() -> Schedule:
    return Schedule(
        name="linear",
        p=lambda s: np.asarray(s, dtype=float) + 0.0,
        dp=lambda s: np.ones_like(np.asarray(s, dtype=float)),
        ddp=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
    )


def polynomial_schedule(coefficients: Sequence[float]) -> Schedule:
    """Schedule p(s) = sum_m c_m s^m given low-to-high coefficients."""
    poly = np.polynomial.Polynomial(list(coefficients))
    dpoly = poly.deriv()
    ddpoly = dpoly.deriv()
    schedule = Schedule(name="custom-polynomial", p=poly, dp=dpoly, ddp=ddpoly)
    return schedule


@dataclass(frozen=True)
class AdiabaticPath:
    """Interpolation H(s) = (1 - p(s)) H_i + p(s) H_f on s in [0, 1]."""

    h_initial: HermitianOperator
    h_final: HermitianOperator
    schedule: Schedule = field(default_factory=linear_schedule)

    def __post_init__(self):
        if self.h_initial.dim != self.h_final.dim:
            raise ValueError(
                f"endpoint dimensions differ: {self.h_initial.dim} vs {self.h_final.dim}"
            )

    @property
    def dim(self) -> int:
        return self.h_initial.dim


def build_tfim(n_sites: int, periodic: bool = False) -> tuple[HermitianOperator, HermitianOperator]:
    """Transverse-field Ising pair: H_X = -sum X_j and H_Z = -sum (Z_j + Z_j Z_{j+1}).

    Open boundary by default; periodic adds the wrap-around coupling.
    """
    if not MIN_SITES <= n_sites <= MAX_SITES:
        raise DimensionTooLarge(
            f"n_sites = {n_sites} outside supported range [{MIN_SITES}, {MAX_SITES}]"
        )
    x_terms = [PauliTerm(-1.0, ((j, "X"),)) for j in range(n_sites)]
    z_terms = [PauliTerm(-1.0, ((j, "Z"),)) for j in range(n_sites)]
    bonds = n_sites if periodic else n_sites - 1
    z_terms += [
        PauliTerm(-1.0, ((j, "Z"), ((j + 1) % n_sites, "Z"))) for j in range(bonds)
    ]
    h_x = HermitianOperator(pauli_sum_matrix(x_terms, n_sites), label="tfim-x")
    h_z = HermitianOperator(pauli_sum_matrix(z_terms, n_sites), label="tfim-z")
    return h_x, h_z


def tfim_path(
    n_sites: int, periodic: bool = False, schedule: Schedule | None = None
) -> AdiabaticPath:
    h_x, h_z = build_tfim(n_sites, periodic)
    return AdiabaticPath(h_x, h_z, schedule or linear_schedule())


def path_at(path: AdiabaticPath, s: float, order: int = 0) -> HermitianOperator:
    """H(s), H'(s) or H''(s) depending on order in {0, 1, 2}."""
    if not 0.0 <= s <= 1.0:
        raise OutOfRange(f"s = {s} outside [0, 1]")
    if order not in (0, 1, 2):
        raise OutOfRange(f"derivative order {order} not in {{0, 1, 2}}")
    hi = path.h_initial.matrix
    hf = path.h_final.matrix
    if order == 0:
        weight = float(path.schedule.p(s))
        matrix = (1.0 - weight) * hi + weight * hf
    elif order == 1:
        matrix = float(path.schedule.dp(s)) * (hf - hi)
    else:
        matrix = float(path.schedule.ddp(s)) * (hf - hi)
    return HermitianOperator(matrix, label=f"path-order{order}@s={s:g}")


def path_matrix(path: AdiabaticPath, s_values: np.ndarray) -> np.ndarray:
    """Stacked H(s) for an array of s values, shape (len(s), dim, dim)."""
    s_values = np.asarray(s_values, dtype=float)
    weights = np.asarray(path.schedule.p(s_values), dtype=float)
    hi = path.h_initial.matrix
    hf = path.h_final.matrix
    return hi[None, :, :] + weights[:, None, None] * (hf - hi)[None, :, :]


def spectral_gap(path: AdiabaticPath, s: float, level: int = 1) -> float:
    """E_level(s) - E_0(s) from the dense eigendecomposition."""
    if level < 1 or level >= path.dim:
        raise OutOfRange(f"level {level} outside [1, {path.dim})")
    values = hermitian_eig(path_at(path, s).matrix).eigenvalues
    return float(values[level] - values[0])


_SCHEDULE_NAMES = ("linear", "custom-polynomial")


def _terms_from_json(raw, where: str) -> list[PauliTerm]:
    if not isinstance(raw, list) or not raw:
        raise ValueError(f"{where}: expected a non-empty list of terms")
    terms = []
    for entry in raw:
        try:
            coeff = float(entry["coeff"])
            factors = tuple((int(site), str(axis)) for site, axis in entry["factors"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{where}: malformed term {entry!r}") from exc
        terms.append(PauliTerm(coeff, factors))
    return terms


def load_path_json(source) -> AdiabaticPath:
    """Build an AdiabaticPath from a Hamiltonian definition file.

    Accepts a file path, an open file object, or an already-parsed dict::

        {
          "n_sites": 4,
          "h_initial": [{"coeff": -1.0, "factors": [[0, "X"]]}, ...],
          "h_final":   [{"coeff": -1.0, "factors": [[0, "Z"], [1, "Z"]]}, ...],
          "schedule":  {"name": "linear"}
                    or {"name": "custom-polynomial", "coefficients": [0, 1]}
        }
    """
    if isinstance(source, dict):
        data = source
    elif hasattr(source, "read"):
        data = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as handle:
            data = json.load(handle)

    try:
        n_sites = int(data["n_sites"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError("missing or malformed 'n_sites'") from exc
    h_i = pauli_sum_matrix(_terms_from_json(data.get("h_initial"), "h_initial"), n_sites)
    h_f = pauli_sum_matrix(_terms_from_json(data.get("h_final"), "h_final"), n_sites)

    sched_spec = data.get("schedule", {"name": "linear"})
    name = sched_spec.get("name")
    if name not in _SCHEDULE_NAMES:
        raise ValueError(f"schedule name must be one of {_SCHEDULE_NAMES}, got {name!r}")
    if name == "linear":
        schedule = linear_schedule()
    else:
        schedule = polynomial_schedule(sched_spec.get("coefficients", ()))

    return AdiabaticPath(
        HermitianOperator(h_i, label="h-initial"),
        HermitianOperator(h_f, label="h-final"),
        schedule,
    )
