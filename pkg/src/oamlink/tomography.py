"""Density-matrix reconstruction from projection counts.

Both maximum-likelihood fitters minimise

    L = sum_i (N p_i - n_i)^2 / (2 N p_i)

over a triangular factorisation of rho, so every iterate is a physical
state. ``N`` is the total count in one orthogonal pair of projectors (the
first two single-qubit bases, or the four products of the orthogonal pairs
for two qubits). ``p_i`` is floored at ``PROB_FLOOR`` inside ``L``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, ValidationError
from .measurement import MeasurementSetting, ProjectorSpec, describe_spec, resolve_ket
from .quantum import PAULI, DensityMatrix, Operator
from .simplex import nelder_mead

PROB_FLOOR = 1e-12
N_STARTS = 8
MAX_EVALS = 100_000

SQRT_HALF = 1 / np.sqrt(2)
# Projection vectors for single-qubit tomography, in measurement order R, L, H, A.
QUBIT_BASIS = ("R", "L", "H", "A")
CHI = np.array([[1, 0], [0, 1], [SQRT_HALF, SQRT_HALF], [SQRT_HALF, -1j * SQRT_HALF]], dtype=complex)

OAM_SIDE = ("R", "L", "H", "D")
POL_SIDE = ("h", "v", "d", "r")


@dataclass(frozen=True)
class TomographyCounts:
    """Counts aligned with ``basis_labels``.

    For one qubit the labels are projector specs (default ``R, L, H, A``);
    for two qubits they are :class:`MeasurementSetting` pairs. Counts may be
    non-integer (background-subtracted data).
    """

    basis_labels: tuple
    counts: tuple

    def __post_init__(self):
        labels = tuple(self.basis_labels)
        counts = tuple(float(c) for c in self.counts)
        if len(labels) != len(counts):
            raise ValidationError(f"{len(labels)} basis labels but {len(counts)} counts")
        if len(counts) not in (4, 16):
            raise ValidationError(f"expected 4 or 16 counts, got {len(counts)}")
        if any(c < 0 or not np.isfinite(c) for c in counts):
            raise ValidationError("counts must be finite and >= 0")
        object.__setattr__(self, "basis_labels", labels)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def qubit(cls, counts, labels: Sequence[ProjectorSpec] = QUBIT_BASIS) -> "TomographyCounts":
        return cls(tuple(labels), tuple(counts))

    @classmethod
    def two_qubit(cls, counts, side_a=OAM_SIDE, side_b=OAM_SIDE) -> "TomographyCounts":
        return cls(two_qubit_settings(side_a, side_b), tuple(counts))

    @property
    def normalization(self) -> float:
        if len(self.counts) == 4:
            return self.counts[0] + self.counts[1]
        idx = _two_qubit_design(self.basis_labels)[1]
        return float(sum(self.counts[i] for i in idx))

    def as_dict(self) -> dict:
        return {
            "basis_labels": [_label(b) for b in self.basis_labels],
            "counts": list(self.counts),
        }


def _label(b) -> str:
    return b.label() if isinstance(b, MeasurementSetting) else describe_spec(b)


def two_qubit_settings(side_a=OAM_SIDE, side_b=OAM_SIDE) -> tuple:
    """The 16 product settings in row-major ``side_a x side_b`` order."""
    return tuple(MeasurementSetting(a, b) for a, b in itertools.product(side_a, side_b))


@dataclass
class MleResult:
    rho: DensityMatrix
    params: np.ndarray
    objective: float
    evaluations: int
    start_index: int
    objectives: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Linear inversion


def stokes_reconstruct(p_R: float, p_L: float, p_H: float, p_D: float, tol: float = 1e-9) -> Operator:
    """Linear inversion ``rho = 1/2 sum_i (S_i/S_0) sigma_i``.

    ``S_0 = p_R + p_L``, ``S_3 = p_R - p_L`` (sigma_z diagonal in R/L),
    ``S_1 = 2 p_H - S_0`` and ``S_2 = 2 p_D - S_0``. The result is Hermitian
    with unit trace but may have a negative eigenvalue, so it is returned
    as an :class:`Operator`; wrap it in :class:`DensityMatrix` when it is
    physical.
    """
    probs = (p_R, p_L, p_H, p_D)
    if any(not 0.0 <= p <= 1.0 for p in probs):
        raise ValidationError(f"probabilities must lie in [0, 1], got {probs}")
    s0 = p_R + p_L
    if abs(s0 - 1) > tol:
        raise ValidationError(f"p_R + p_L = {s0:.12g}, expected 1 within {tol}")
    stokes = (s0, 2 * p_H - s0, 2 * p_D - s0, p_R - p_L)
    rho = 0.5 * sum(s / s0 * sigma for s, sigma in zip(stokes, PAULI))
    return Operator(rho)


def stokes_from_counts(counts) -> Operator:
    """Linear inversion from ``(n_R, n_L, n_H, n_A)`` normalised by ``n_R + n_L``."""
    n_r, n_l, n_h, n_a = (float(c) for c in counts)
    total = n_r + n_l
    if total <= 0:
        raise ValidationError("n_R + n_L must be positive")
    clip = lambda x: min(1.0, max(0.0, x))  # noqa: E731
    return stokes_reconstruct(n_r / total, n_l / total, clip(n_h / total), clip(1 - n_a / total))


# ---------------------------------------------------------------------------
# One qubit


@dataclass(frozen=True)
class MleParamsQubit:
    """Entries of the lower factor ``[[t1, 0], [t3 + i t4, t2]]``."""

    t1: float
    t2: float
    t3: float
    t4: float

    @classmethod
    def from_vector(cls, t) -> "MleParamsQubit":
        t1, t2, t3, t4 = (float(x) for x in t)
        if t1 < 0:
            # (t1, t3, t4) -> -(t1, t3, t4) leaves rho unchanged
            t1, t3, t4 = -t1, -t3, -t4
        return cls(t1, abs(t2), t3, t4)

    def lower(self) -> np.ndarray:
        return np.array([[self.t1, 0], [self.t3 + 1j * self.t4, self.t2]], dtype=complex)

    def rho(self) -> DensityMatrix:
        lo = self.lower()
        # product with the conjugate-transpose factor [[t1, t3 - i t4], [0, t2]]
        m = lo @ lo.conj().T
        tr = np.trace(m).real
        if tr <= 0:
            raise ValidationError("degenerate parameters: tr(alpha beta) = 0")
        return DensityMatrix.from_array(m / tr)


def qubit_probabilities(params: MleParamsQubit) -> np.ndarray:
    """``p_i = chi_i^dag rho chi_i`` for the R, L, H, A projection vectors."""
    rho = params.rho().entries
    return np.real(np.einsum("ki,ij,kj->k", CHI.conj(), rho, CHI))


def likelihood_loss(p, n, total: float) -> float:
    """``sum (N p - n)^2 / (2 N p)`` with ``p`` floored at ``PROB_FLOOR``."""
    p = np.maximum(p, PROB_FLOOR)
    expected = total * p
    return float(np.sum((expected - n) ** 2 / (2 * expected)))


def _start_points(base: np.ndarray, seed: int, starts: int, scale: float) -> list:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    points = [base.copy()]
    for _ in range(starts - 1):
        points.append(base + rng.normal(scale=scale, size=base.size))
    return points


def _check_counts(data: TomographyCounts, size: int) -> tuple:
    if len(data.counts) != size:
        raise ValidationError(f"expected {size} counts, got {len(data.counts)}")
    n = np.asarray(data.counts, dtype=float)
    if not n.any():
        raise ValidationError("all counts are zero")
    total = data.normalization
    if total <= 0:
        raise ValidationError("normalization N is zero; the orthogonal-pair counts are all zero")
    return n, total


def _qubit_loss(t, n, total) -> float:
    t1, t2, t3, t4 = t
    tr = t1 * t1 + t2 * t2 + t3 * t3 + t4 * t4
    if tr == 0.0:
        return math.inf
    probs = (t1 * t1 / tr, 1 - t1 * t1 / tr, 0.5 + t1 * t3 / tr, 0.5 - t1 * t4 / tr)
    loss = 0.0
    for p, ni in zip(probs, n):
        expected = total * (p if p > PROB_FLOOR else PROB_FLOOR)
        loss += (expected - ni) ** 2 / (2 * expected)
    return loss


def qubit_mle_fit(
    data: TomographyCounts,
    seed: int = 0,
    starts: int = N_STARTS,
    max_evals: int = MAX_EVALS,
    x0=None,
) -> MleResult:
    """Nelder-Mead minimisation of ``L`` over ``(t1, t2, t3, t4)``.

    Start 0 is ``x0`` or the identity-scaled ``(1, 1, 0, 0)``; the others
    perturb it with Gaussian noise drawn from ``seed``. Each run stops once
    ``L`` varies by less than 1e-12 across the simplex. The lowest ``L``
    wins, earliest start on ties.
    """
    if tuple(_label(b) for b in data.basis_labels) != QUBIT_BASIS:
        raise ValidationError(f"single-qubit tomography needs bases {QUBIT_BASIS}, got {data.basis_labels}")
    n, total = _check_counts(data, 4)
    n = tuple(float(x) for x in n)
    loss = lambda t: _qubit_loss(t, n, total)  # noqa: E731

    base = np.array([1.0, 1.0, 0.0, 0.0]) if x0 is None else np.asarray(x0, dtype=float)
    best = None
    objectives = []
    evals = 0
    converged = False
    for k, start in enumerate(_start_points(base, seed, starts, 0.5)):
        res = nelder_mead(loss, start.tolist(), fatol=1e-12, max_evals=max_evals)
        evals += res.nfev
        objectives.append(res.fun)
        converged |= res.converged
        if best is None or res.fun < best[0]:
            best = (res.fun, np.array(res.x), k)
    params = MleParamsQubit.from_vector(best[1])
    if not converged:
        raise ConvergenceError(
            f"Nelder-Mead hit the {max_evals}-evaluation cap on every start",
            best=params.rho(), best_params=params, objective=best[0],
        )
    return MleResult(params.rho(), best[1], best[0], evals, best[2], objectives)


def qubit_mle(data: TomographyCounts, seed: int = 0, **kwargs) -> DensityMatrix:
    return qubit_mle_fit(data, seed=seed, **kwargs).rho


# ---------------------------------------------------------------------------
# Two qubits

_TRIL = np.tril_indices(4, -1)
_DIAG = np.diag_indices(4)


@dataclass(frozen=True)
class MleParamsTwoQubit:
    """16 reals: the diagonal of ``T``, then real and imaginary parts of its
    strictly lower triangle (row-major). ``rho = T^dag T / tr(T^dag T)``."""

    t: tuple

    def __post_init__(self):
        if len(self.t) != 16:
            raise ValidationError(f"two-qubit parameters need 16 reals, got {len(self.t)}")

    def factor(self) -> np.ndarray:
        return _factor(np.asarray(self.t, dtype=float))

    def rho(self) -> DensityMatrix:
        T = self.factor()
        m = T.conj().T @ T
        tr = np.trace(m).real
        if tr <= 0:
            raise ValidationError("degenerate parameters: tr(T^dag T) = 0")
        return DensityMatrix.from_array(m / tr)


def _factor(t: np.ndarray) -> np.ndarray:
    T = np.zeros((4, 4), dtype=complex)
    T[_DIAG] = t[:4]
    T[_TRIL] = t[4:10] + 1j * t[10:16]
    return T


def _side_vectors(labels) -> np.ndarray:
    return np.array([resolve_ket(x).amplitudes for x in labels])


def _two_qubit_design(settings) -> tuple:
    """Validate a 16-setting product design.

    Returns ``(vectors, pair_indices)``: the product kets as rows, and the
    indices of the four settings built from the first orthogonal pair on
    each side.
    """
    if len(settings) != 16 or not all(isinstance(s, MeasurementSetting) for s in settings):
        raise ValidationError("two-qubit tomography needs 16 MeasurementSetting entries")
    side_a = list(dict.fromkeys(_label(s.side_a) for s in settings))
    side_b = list(dict.fromkeys(_label(s.side_b) for s in settings))
    pairs = {(_label(s.side_a), _label(s.side_b)) for s in settings}
    if len(side_a) != 4 or len(side_b) != 4 or len(pairs) != 16:
        raise ValidationError("settings are not the 16 products of four bases per side")

    specs_a = {_label(s.side_a): s.side_a for s in settings}
    specs_b = {_label(s.side_b): s.side_b for s in settings}
    pair_idx = []
    for specs, names in ((specs_a, side_a), (specs_b, side_b)):
        vecs = _side_vectors([specs[x] for x in names])
        projs = np.array([np.outer(v, v.conj()).ravel() for v in vecs])
        if np.linalg.matrix_rank(projs, tol=1e-9) < 4:
            raise ValidationError(f"bases {names} are not tomographically complete")
        orth = [(i, j) for i, j in itertools.combinations(range(4), 2) if abs(np.vdot(vecs[i], vecs[j])) < 1e-9]
        if not orth:
            raise ValidationError(f"bases {names} contain no orthogonal pair")
        pair_idx.append([names[k] for k in orth[0]])

    wanted = set(itertools.product(*pair_idx))
    idx = [k for k, s in enumerate(settings) if (_label(s.side_a), _label(s.side_b)) in wanted]
    vectors = np.array([np.kron(resolve_ket(s.side_a).amplitudes, resolve_ket(s.side_b).amplitudes) for s in settings])
    return vectors, idx


def two_qubit_probabilities(rho: DensityMatrix, settings) -> np.ndarray:
    vectors = np.array(
        [np.kron(resolve_ket(s.side_a).amplitudes, resolve_ket(s.side_b).amplitudes) for s in settings]
    )
    return np.real(np.einsum("ki,ij,kj->k", vectors.conj(), rho.entries, vectors))


def _two_qubit_loss_and_grad(t, vectors, n, total):
    T = _factor(t)
    w = vectors @ T.T  # row k is T chi_k
    q = np.sum(np.abs(w) ** 2, axis=1)
    s = np.sum(np.abs(T) ** 2)
    p = q / s
    floored = p < PROB_FLOOR
    p = np.maximum(p, PROB_FLOOR)
    loss = float(np.sum((total * p - n) ** 2 / (2 * total * p)))
    g = total / 2 - n ** 2 / (2 * total * p ** 2)
    g[floored] = 0.0
    # Wirtinger derivative with respect to conj(T)
    G = (w.T * g) @ vectors.conj() / s - (g @ q) * T / s ** 2
    grad = np.concatenate([2 * G[_DIAG].real, 2 * G[_TRIL].real, 2 * G[_TRIL].imag])
    return loss, grad


def two_qubit_loss(t, data: TomographyCounts) -> float:
    vectors, idx = _two_qubit_design(data.basis_labels)
    n = np.asarray(data.counts, dtype=float)
    return _two_qubit_loss_and_grad(np.asarray(t, dtype=float), vectors, n, n[idx].sum())[0]


def two_qubit_mle_fit(
    data: TomographyCounts,
    seed: int = 0,
    starts: int = N_STARTS,
    max_evals: int = MAX_EVALS,
    x0=None,
) -> MleResult:
    """Minimise ``L`` over the 16 factor parameters.

    Each start runs L-BFGS with the analytic gradient of ``L``. Start 0 is
    ``x0`` or the identity factor; the rest are seeded perturbations.
    """
    vectors, idx = _two_qubit_design(data.basis_labels)
    n, total = _check_counts(data, 16)

    base = np.concatenate([np.ones(4), np.zeros(12)]) if x0 is None else np.asarray(x0, dtype=float)
    best = None
    objectives = []
    evals = 0
    converged = False
    for k, start in enumerate(_start_points(base, seed, starts, 0.5)):
        res = minimize(
            _two_qubit_loss_and_grad,
            start,
            args=(vectors, n, total),
            jac=True,
            method="L-BFGS-B",
            options={"maxfun": max_evals, "maxiter": max_evals, "ftol": 1e-15, "gtol": 1e-10 * max(1.0, total)},
        )
        evals += res.nfev
        objectives.append(float(res.fun))
        converged |= res.nfev < max_evals
        if best is None or res.fun < best[0]:
            best = (float(res.fun), res.x, k)
    params = MleParamsTwoQubit(tuple(float(x) for x in best[1]))
    if not converged:
        raise ConvergenceError(
            f"L-BFGS hit the {max_evals}-evaluation cap on every start",
            best=params.rho(), best_params=params, objective=best[0],
        )
    return MleResult(params.rho(), np.array(best[1]), best[0], evals, best[2], objectives)


def two_qubit_mle(data: TomographyCounts, seed: int = 0, **kwargs) -> DensityMatrix:
    return two_qubit_mle_fit(data, seed=seed, **kwargs).rho


def forward_counts(rho: DensityMatrix, basis=None, total: float = 1e4) -> TomographyCounts:
    """Exact expected counts for ``rho``, scaled so the normalization ``N`` equals ``total``."""
    if rho.dim == 2:
        basis = QUBIT_BASIS if basis is None else tuple(basis)
        vecs = _side_vectors(basis)
        p = np.real(np.einsum("ki,ij,kj->k", vecs.conj(), rho.entries, vecs))
        norm = p[0] + p[1]
    else:
        basis = two_qubit_settings() if basis is None else tuple(basis)
        vecs, idx = _two_qubit_design(basis)
        p = np.real(np.einsum("ki,ij,kj->k", vecs.conj(), rho.entries, vecs))
        norm = p[idx].sum()
    p = np.maximum(p, 0.0)
    return TomographyCounts(tuple(basis), tuple(total * p / norm))


def mle(data: TomographyCounts, seed: int = 0, **kwargs) -> DensityMatrix:
    """Dispatch to the one- or two-qubit fitter by data size."""
    if len(data.counts) == 4:
        return qubit_mle(data, seed=seed, **kwargs)
    return two_qubit_mle(data, seed=seed, **kwargs)

