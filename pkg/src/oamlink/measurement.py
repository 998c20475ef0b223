"""Projective coincidence measurements, background, and Poisson sampling.

Random numbers come from numpy's PCG64. Sub-stream ``i`` of a run seeded
with ``seed`` is ``SeedSequence(seed, spawn_key=(i,))``, which is the same
stream as ``SeedSequence(seed).spawn(n)[i]``. Each coincidence record owns
one sub-stream, so records can be sampled in any order or concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import ValidationError
from .quantum import DensityMatrix, Ket, Operator
from .states import basis_state, theta_state

ProjectorSpec = Union[str, float, int, dict]


@dataclass(frozen=True)
class NoiseModel:
    singles_a: float = 0.0
    singles_b: float = 0.0
    coincidence_window: float = 1.6e-9
    werner_v: float = 1.0
    crosstalk_eps: float = 0.0

    def __post_init__(self):
        if self.singles_a < 0 or self.singles_b < 0:
            raise ValidationError("singles rates must be >= 0")
        if self.coincidence_window < 0:
            raise ValidationError("coincidence window must be >= 0")
        for name in ("werner_v", "crosstalk_eps"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {value}")


NOISELESS = NoiseModel(coincidence_window=0.0)


def resolve_ket(spec: ProjectorSpec) -> Ket:
    """Projector spec to ket: a basis label, a bare angle, or ``{"theta": angle}``."""
    if isinstance(spec, str):
        return basis_state(spec)
    if isinstance(spec, dict):
        if set(spec) != {"theta"}:
            raise ValidationError(f"projector dict must have exactly the key 'theta', got {sorted(spec)}")
        spec = spec["theta"]
    if isinstance(spec, bool) or not isinstance(spec, (int, float)):
        raise ValidationError(f"invalid projector spec {spec!r}")
    if not math.isfinite(spec):
        raise ValidationError(f"theta must be finite, got {spec}")
    return theta_state(float(spec))


def describe_spec(spec: ProjectorSpec) -> str:
    if isinstance(spec, str):
        return spec
    theta = spec["theta"] if isinstance(spec, dict) else spec
    return f"theta={float(theta):.12g}"


@dataclass(frozen=True)
class MeasurementSetting:
    """Projector pair; ``side_a`` acts on the first subsystem."""

    side_a: ProjectorSpec
    side_b: ProjectorSpec

    def __post_init__(self):
        resolve_ket(self.side_a)
        resolve_ket(self.side_b)

    def label(self) -> str:
        return f"{describe_spec(self.side_a)}|{describe_spec(self.side_b)}"


@dataclass(frozen=True)
class CoincidenceRecord:
    """Counts for one setting.

    ``expected`` is the state-driven mean, ``accidental`` the uncorrelated
    background mean. ``sampled`` holds the Poisson draw of their sum, or
    ``None`` in analytic mode, where :attr:`raw` is the exact mean instead.
    """

    setting: object
    duration: float
    expected: float
    accidental: float
    sampled: Optional[int] = None

    def __post_init__(self):
        if self.expected < 0 or self.accidental < 0:
            raise ValidationError("expected and accidental counts must be >= 0")
        if self.sampled is not None and self.sampled < 0:
            raise ValidationError("sampled counts must be >= 0")

    @property
    def raw(self) -> float:
        if self.sampled is None:
            return self.expected + self.accidental
        return float(self.sampled)

    @property
    def net(self) -> float:
        return subtract_background(self.raw, self.accidental)[0]

    @property
    def clamped(self) -> bool:
        return subtract_background(self.raw, self.accidental)[1]


def projector(spec: ProjectorSpec, crosstalk_eps: float = 0.0) -> Operator:
    """Rank-1 projector onto the state named by ``spec``.

    With ``crosstalk_eps > 0`` the result is ``(1-eps) P + eps (I - P)``,
    which is no longer rank-1.
    """
    v = resolve_ket(spec).amplitudes
    p = np.outer(v, v.conj())
    if crosstalk_eps:
        p = (1 - crosstalk_eps) * p + crosstalk_eps * (np.eye(2) - p)
    return Operator(p)


def _prob(rho: np.ndarray, op: np.ndarray) -> float:
    value = np.trace(rho @ op)
    return float(min(1.0, max(0.0, value.real)))


def single_probability(rho: DensityMatrix, spec: ProjectorSpec, crosstalk_eps: float = 0.0) -> float:
    """``tr(rho P)`` for a one-qubit state."""
    if rho.dim != 2:
        raise ValidationError(f"single_probability expects a qubit, got dim {rho.dim}")
    return _prob(rho.entries, projector(spec, crosstalk_eps).entries)


def coincidence_probability(rho: DensityMatrix, s: MeasurementSetting, crosstalk_eps: float = 0.0) -> float:
    """``tr(rho P_a (x) P_b)`` for a two-qubit state."""
    if rho.dim != 4:
        raise ValidationError(f"coincidence_probability expects a 4-dim state, got {rho.dim}")
    op = np.kron(projector(s.side_a, crosstalk_eps).entries, projector(s.side_b, crosstalk_eps).entries)
    return _prob(rho.entries, op)


def apply_noise_state(rho: DensityMatrix, n: NoiseModel) -> DensityMatrix:
    """Werner mixing ``V rho + (1 - V) I/dim``."""
    if n.werner_v == 1.0:
        return rho
    v = n.werner_v
    return DensityMatrix.from_array(v * rho.entries + (1 - v) * np.eye(rho.dim) / rho.dim)


def expected_counts(prob: float, pair_rate: float, duration: float) -> float:
    if prob < 0 or pair_rate < 0 or duration < 0:
        raise ValidationError("probability, pair rate and duration must be >= 0")
    return prob * pair_rate * duration


def accidental_coincidences(n: NoiseModel, duration: float) -> float:
    """Uncorrelated singles landing in the same window: ``S_a S_b tau T``."""
    if duration < 0:
        raise ValidationError("duration must be >= 0")
    return n.singles_a * n.singles_b * n.coincidence_window * duration


def substream(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for sub-stream ``index`` of ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


def sample_counts(expected: float, seed: int, index: int = 0) -> int:
    """One Poisson draw with mean ``expected`` from sub-stream ``(seed, index)``."""
    if expected < 0 or not math.isfinite(expected):
        raise ValidationError(f"expected counts must be finite and >= 0, got {expected}")
    if expected == 0:
        return 0
    return int(substream(seed, index).poisson(expected))


def subtract_background(raw: float, accidental: float) -> tuple[float, bool]:
    """Net counts ``max(0, raw - accidental)`` and whether the floor was hit."""
    if raw < 0 or accidental < 0:
        raise ValidationError("raw and accidental counts must be >= 0")
    diff = raw - accidental
    if diff < 0:
        return 0.0, True
    return float(diff), False


def measure(
    settings,
    rho: DensityMatrix,
    noise: NoiseModel,
    pair_rate: float,
    duration: float,
    seed: Optional[int] = None,
    first_index: int = 0,
) -> list[CoincidenceRecord]:
    """Simulate a record per setting.

    Werner noise is applied to ``rho`` once, crosstalk to every projector.
    ``settings`` holds :class:`MeasurementSetting` for two-qubit states or
    bare projector specs for one qubit. With ``seed=None`` no sampling is
    done (analytic mode); otherwise record ``k`` draws from sub-stream
    ``first_index + k``.
    """
    noisy = apply_noise_state(rho, noise)
    acc = accidental_coincidences(noise, duration)
    records = []
    for k, s in enumerate(settings):
        if isinstance(s, MeasurementSetting):
            prob = coincidence_probability(noisy, s, noise.crosstalk_eps)
        else:
            prob = single_probability(noisy, s, noise.crosstalk_eps)
        mean = expected_counts(prob, pair_rate, duration)
        sampled = None if seed is None else sample_counts(mean + acc, seed, first_index + k)
        records.append(CoincidenceRecord(s, duration, mean, acc, sampled))
    return records
