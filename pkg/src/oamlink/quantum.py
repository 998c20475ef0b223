"""Small dense state algebra for one and two qubits.

Basis conventions (fixed throughout the package):

* single OAM qubit: ``(R, L)`` with ``R = |+l>``, ``L = |-l>``
* single polarization qubit: ``(h, v)``
* two bodies: row-major Kronecker order, first operand is the first-listed
  subsystem, so an OAM pair is ordered ``(RR, RL, LR, LL)`` and a hybrid pair
  ``(hR, hL, vR, vL)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ValidationError

ALLOWED_DIMS = (2, 4)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
NORM_TOL = 1e-9

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_0, SIGMA_X, SIGMA_Y, SIGMA_Z)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex, copy=True)
    array.setflags(write=False)
    return array


def _check_dim(dim: int) -> None:
    if dim not in ALLOWED_DIMS:
        raise ValidationError(f"dimension must be one of {ALLOWED_DIMS}, got {dim}")


@dataclass(frozen=True, eq=False)
class Ket:
    """State vector. Use :meth:`normalized` when the input may not be unit norm."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1:
            raise ValidationError(f"ket amplitudes must be 1-D, got shape {amps.shape}")
        _check_dim(amps.shape[0])
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def normalized(cls, amplitudes) -> "Ket":
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValidationError("cannot normalize a zero vector")
        return cls(amps / norm)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "Ket") -> complex:
        """``<self|other>``."""
        if other.dim != self.dim:
            raise ValidationError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def equals_up_to_phase(self, other: "Ket", atol: float = 1e-12) -> bool:
        return abs(abs(self.inner(other)) - self.norm * other.norm) <= atol

    def __repr__(self):
        return f"Ket({np.array2string(self.amplitudes, precision=4)})"


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix with no constraint beyond shape."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"operator must be square, got shape {m.shape}")
        object.__setattr__(self, "entries", _frozen(m))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator.

    Validation runs on construction. Eigenvalues in ``(-PSD_TOL, 0)`` are
    accepted and reported as zero by :meth:`eigenvalues`.
    """

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"density matrix must be square, got shape {m.shape}")
        _check_dim(m.shape[0])
        herm_err = np.max(np.abs(m - m.conj().T))
        if herm_err > HERMITIAN_TOL:
            raise ValidationError(f"density matrix not Hermitian (max deviation {herm_err:.3e})")
        tr = np.trace(m)
        if abs(tr - 1) > TRACE_TOL:
            raise ValidationError(f"density matrix trace is {tr.real:.15g}, expected 1")
        min_eig = np.linalg.eigvalsh(m).min()
        if min_eig < -PSD_TOL:
            raise ValidationError(f"density matrix not PSD (min eigenvalue {min_eig:.3e})")
        object.__setattr__(self, "entries", _frozen(m))

    @classmethod
    def from_array(cls, m) -> "DensityMatrix":
        """Hermitize and renormalize ``m`` before validating (for numerically noisy input)."""
        m = np.asarray(m, dtype=complex)
        m = 0.5 * (m + m.conj().T)
        return cls(m / np.trace(m).real)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        ev = np.linalg.eigvalsh(self.entries)
        return np.where(ev < 0, 0.0, ev)

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def expectation(self, op) -> complex:
        m = op.entries if isinstance(op, Operator) else np.asarray(op)
        return complex(np.trace(self.entries @ m))

    def __repr__(self):
        return f"DensityMatrix(\n{np.array2string(self.entries, precision=4)})"


State = Union[Ket, DensityMatrix]


def maximally_mixed(dim: int) -> DensityMatrix:
    _check_dim(dim)
    return DensityMatrix(np.eye(dim) / dim)


def density_from_ket(psi: Ket) -> DensityMatrix:
    """Pure-state projector ``|psi><psi|``."""
    if abs(psi.norm - 1.0) > NORM_TOL:
        raise ValidationError(f"ket is not normalized (norm {psi.norm:.12g})")
    a = psi.amplitudes
    return DensityMatrix.from_array(np.outer(a, a.conj()))


def as_density(state: State) -> DensityMatrix:
    return density_from_ket(state) if isinstance(state, Ket) else state


def tensor(a: State, b: State) -> State:
    """Kronecker product, ``a`` is the first subsystem.

    Both operands must be of the same kind (two kets or two density matrices).
    """
    if a.dim != 2 or b.dim != 2:
        raise ValidationError(f"tensor expects two qubit operands, got dims {a.dim} and {b.dim}")
    if isinstance(a, Ket) and isinstance(b, Ket):
        return Ket(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.entries, b.entries))
    raise ValidationError("tensor operands must both be kets or both density matrices")


def fidelity(rho: DensityMatrix, phi: Ket) -> float:
    """Overlap ``<phi|rho|phi>`` with a pure target."""
    if rho.dim != phi.dim:
        raise ValidationError(f"dimension mismatch: rho is {rho.dim}, phi is {phi.dim}")
    v = phi.amplitudes
    value = np.vdot(v, rho.entries @ v)
    if abs(value.imag) > 1e-10:
        raise ValidationError(f"fidelity has imaginary residue {value.imag:.3e}")
    return float(min(1.0, max(0.0, value.real)))


_KEEP = {"first": 0, "a": 0, "signal": 0, 0: 0, "second": 1, "b": 1, "idler": 1, 1: 1}


def partial_trace(rho: DensityMatrix, keep="first") -> DensityMatrix:
    """Reduced state of one subsystem of a two-qubit density matrix.

    ``keep`` selects the surviving subsystem: ``"first"``/``0`` or ``"second"``/``1``.
    """
    if rho.dim != 4:
        raise ValidationError(f"partial_trace expects a 4-dim state, got {rho.dim}")
    try:
        k = _KEEP[keep]
    except (KeyError, TypeError):
        raise ValidationError(f"unknown subsystem label {keep!r}") from None
    r = rho.entries.reshape(2, 2, 2, 2)
    reduced = np.einsum("ijkj->ik", r) if k == 0 else np.einsum("jijk->ik", r)
    return DensityMatrix.from_array(reduced)


def mix(states, weights) -> DensityMatrix:
    """Convex combination of density matrices."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise ValidationError("mixture weights must be non-negative and sum to 1")
    m = sum(w * as_density(s).entries for w, s in zip(weights, states))
    return DensityMatrix.from_array(m)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return float(0.5 * np.abs(np.linalg.eigvalsh(a.entries - b.entries)).sum())
