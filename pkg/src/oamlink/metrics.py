"""Fringe fits, entanglement witness, CHSH correlations and Poisson error bars."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import ResamplingError, UndefinedCorrelationError, ValidationError
from .measurement import MeasurementSetting, coincidence_probability, substream
from .quantum import DensityMatrix

HALF_PI = math.pi / 2


@dataclass(frozen=True)
class FringeScan:
    angles: tuple
    counts: tuple
    duration: float = 1.0

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        counts = tuple(float(c) for c in self.counts)
        if len(angles) != len(counts):
            raise ValidationError(f"{len(angles)} angles but {len(counts)} counts")
        if len(angles) < 5:
            raise ValidationError(f"a fringe scan needs at least 5 points, got {len(angles)}")
        if any(c < 0 for c in counts):
            raise ValidationError("fringe counts must be >= 0")
        # span plus one mean step, so k*pi/n for k < n counts as a full period
        span = max(angles) - min(angles)
        if span * len(angles) / (len(angles) - 1) < math.pi - 1e-9:
            raise ValidationError("fringe scan must cover at least one full pi period")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "counts", counts)


@dataclass(frozen=True)
class FringeFit:
    visibility: float
    phase: float
    baseline: float
    amplitude: float
    residual_norm: float
    clamped: bool = False
    degenerate: bool = False


def _fringe_model(params, theta):
    b, v, phi = params
    return b * (1 + v * np.cos(2 * theta - phi))


def fit_fringe(scan: FringeScan, rtol: float = 1e-10, max_iter: int = 100) -> FringeFit:
    """Fit ``C(theta) = B (1 + V cos(2 theta - phi))``.

    Cosine/sine quadrature regression seeds Gauss-Newton on ``(B, V, phi)``,
    which stops when the relative step falls below ``rtol``. ``V`` outside
    ``[0, 1]`` is clamped and flagged; a flat scan returns ``V = 0`` with
    ``degenerate`` set.
    """
    theta = np.asarray(scan.angles)
    c = np.asarray(scan.counts)
    design = np.column_stack([np.ones_like(theta), np.cos(2 * theta), np.sin(2 * theta)])
    (a0, a1, a2), *_ = np.linalg.lstsq(design, c, rcond=None)
    amp = math.hypot(a1, a2)
    noise_floor = 1e-12 * max(1.0, float(np.max(np.abs(c))))
    if a0 <= 0 or amp <= noise_floor:
        resid = float(np.linalg.norm(c - max(a0, 0.0)))
        return FringeFit(0.0, 0.0, float(max(a0, 0.0)), 0.0, resid, clamped=False, degenerate=True)

    params = np.array([a0, amp / a0, math.atan2(a2, a1)])
    for _ in range(max_iter):
        b, v, phi = params
        arg = 2 * theta - phi
        resid = c - _fringe_model(params, theta)
        jac = np.column_stack([1 + v * np.cos(arg), b * np.cos(arg), b * v * np.sin(arg)])
        step, *_ = np.linalg.lstsq(jac, resid, rcond=None)
        params = params + step
        if np.linalg.norm(step) <= rtol * np.linalg.norm(params):
            break

    b, v, phi = params
    if v < 0:
        v, phi = -v, phi + math.pi
    phi = math.remainder(phi, 2 * math.pi)
    resid = float(np.linalg.norm(c - _fringe_model((b, v, phi), theta)))
    clamped = v > 1
    return FringeFit(min(v, 1.0), phi, float(b), float(b * v), resid, clamped=clamped)


def visibility(counts: Sequence[float], angles: Sequence[float]) -> float:
    return fit_fringe(FringeScan(tuple(angles), tuple(counts))).visibility


def witness(v_da: float, v_rl: float) -> float:
    """Sum of the two fringe visibilities; above 1 rules out separability."""
    for v in (v_da, v_rl):
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"visibilities must lie in [0, 1], got {v}")
    return v_da + v_rl


def correlation_E(c_ab: float, c_ab_perp: float, c_a_perp_b: float, c_a_b_perp: float) -> float:
    """Correlation from the four counts ``C(a, b)``, ``C(a+pi/2, b+pi/2)``,
    ``C(a+pi/2, b)``, ``C(a, b+pi/2)``."""
    total = c_ab + c_ab_perp + c_a_perp_b + c_a_b_perp
    if total <= 0:
        raise UndefinedCorrelationError("all four coincidence counts are zero")
    return (c_ab + c_ab_perp - c_a_perp_b - c_a_b_perp) / total


@dataclass(frozen=True)
class ChshSettings:
    theta_a: float = 0.0
    theta_a_prime: float = math.pi / 4
    theta_b: float = math.pi / 8
    theta_b_prime: float = 3 * math.pi / 8

    def pairs(self) -> tuple:
        """The four ``(theta_A, theta_B)`` pairs in the order they enter S."""
        a, ap, b, bp = self.theta_a, self.theta_a_prime, self.theta_b, self.theta_b_prime
        return ((a, b), (a, bp), (ap, b), (ap, bp))

    def count_angles(self) -> tuple:
        """All 16 analyser angle pairs: for each S pair, the four counts of a correlation."""
        out = []
        for a, b in self.pairs():
            out += [(a, b), (a + HALF_PI, b + HALF_PI), (a + HALF_PI, b), (a, b + HALF_PI)]
        return tuple(out)

    def settings(self) -> tuple:
        return tuple(MeasurementSetting({"theta": a}, {"theta": b}) for a, b in self.count_angles())


STANDARD_CHSH = ChshSettings()
CHSH_SIGNS = (1, -1, 1, 1)


@dataclass(frozen=True)
class ChshResult:
    S: float
    abs_S: float
    correlations: tuple


def chsh_S(s: ChshSettings = STANDARD_CHSH, rho: Optional[DensityMatrix] = None, counts=None) -> ChshResult:
    """``S = E(a, b) - E(a, b') + E(a', b) + E(a', b')``, sign kept.

    Pass either a two-qubit ``rho`` (exact probabilities) or ``counts``: 16
    numbers ordered as :meth:`ChshSettings.count_angles`, or a mapping keyed
    by those angle pairs.
    """
    if (rho is None) == (counts is None):
        raise ValidationError("pass exactly one of rho or counts")
    if rho is not None:
        values = [coincidence_probability(rho, st) for st in s.settings()]
    elif isinstance(counts, Mapping):
        missing = [k for k in s.count_angles() if k not in counts]
        if missing:
            raise ValidationError(f"missing CHSH counts for angle pairs {missing}")
        values = [float(counts[k]) for k in s.count_angles()]
    else:
        values = [float(c) for c in counts]
        if len(values) != 16:
            raise ValidationError(f"CHSH needs 16 counts, got {len(values)}")
    corr = tuple(correlation_E(*values[4 * k: 4 * k + 4]) for k in range(4))
    total = sum(sign * e for sign, e in zip(CHSH_SIGNS, corr))
    return ChshResult(total, abs(total), corr)


@dataclass(frozen=True)
class MetricWithError:
    value: float
    sigma: float
    resamples: int
    dropped: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")

    def as_dict(self) -> dict:
        return {"value": self.value, "sigma": self.sigma, "resamples": self.resamples, "dropped": self.dropped}


RESAMPLE_FAILURES = (ValueError, ArithmeticError, RuntimeError)


def poisson_error(
    metric: Callable[[np.ndarray], float],
    counts: Sequence[float],
    resamples: int = 1000,
    seed: int = 0,
    transform: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> MetricWithError:
    """Parametric bootstrap of ``metric`` under Poisson counting noise.

    Resample ``j`` replaces every count by a Poisson draw with that count as
    mean, using sub-stream ``(seed, j)``. ``transform`` is applied to each
    resampled vector before ``metric`` (e.g. background subtraction).
    Resamples on which the metric raises are dropped; more than 10% dropped
    is an error.
    """
    if resamples < 100:
        raise ValidationError(f"need at least 100 resamples, got {resamples}")
    counts = np.asarray(counts, dtype=float)
    prepare = transform or (lambda x: x)
    value = float(metric(prepare(counts)))
    samples = []
    dropped = 0
    for j in range(resamples):
        draw = substream(seed, j).poisson(counts).astype(float)
        try:
            m = float(metric(prepare(draw)))
        except RESAMPLE_FAILURES:
            dropped += 1
            continue
        if not math.isfinite(m):
            dropped += 1
            continue
        samples.append(m)
    if dropped > 0.1 * resamples:
        raise ResamplingError(f"metric failed on {dropped} of {resamples} resamples")
    samples = np.asarray(samples)
    sigma = 0.0 if np.all(samples == samples[0]) else float(np.std(samples, ddof=1))
    return MetricWithError(value, sigma, resamples, dropped)
