"""Named states: OAM qubits, phase-mask theta states, Bell states, and mode capacity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .quantum import Ket

SQRT_HALF = 1 / math.sqrt(2)


@dataclass(frozen=True)
class QubitSpec:
    """Amplitudes on ``(|+l>, |-l>)``; ``l`` is metadata only."""

    alpha: complex
    beta: complex
    l: int = 1

    def __post_init__(self):
        norm2 = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm2 - 1) > 1e-12:
            raise ValidationError(f"|alpha|^2 + |beta|^2 = {norm2:.15g}, expected 1")


@dataclass(frozen=True)
class ThetaSetting:
    """Phase-mask rotation. ``theta`` is reduced mod pi; ``raw`` keeps the input."""

    raw: float
    theta: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", math.fmod(self.raw, math.pi) % math.pi)


@dataclass(frozen=True)
class BeamGeometry:
    """Gaussian waist ``w0`` and aperture/overlap limit ``w_max``, both in micrometers."""

    w0: float
    w_max: float

    def __post_init__(self):
        if not self.w0 > 0:
            raise ValidationError(f"w0 must be positive, got {self.w0}")
        if self.w_max < self.w0:
            raise ValidationError(f"w_max ({self.w_max}) must be >= w0 ({self.w0})")


def make_qubit(spec: QubitSpec) -> Ket:
    return Ket([spec.alpha, spec.beta])


# Single-qubit basis states. Upper case is the OAM qubit, lower case polarization;
# both are written in their own (first, second) basis: (R, L) or (h, v).
_BASIS = {
    "R": (1, 0),
    "L": (0, 1),
    "H": (SQRT_HALF, SQRT_HALF),
    "V": (SQRT_HALF, -SQRT_HALF),
    "D": (SQRT_HALF, 1j * SQRT_HALF),
    "A": (SQRT_HALF, -1j * SQRT_HALF),
    "h": (1, 0),
    "v": (0, 1),
    "d": (SQRT_HALF, SQRT_HALF),
    "a": (SQRT_HALF, -SQRT_HALF),
    "r": (SQRT_HALF, 1j * SQRT_HALF),
    "l": (SQRT_HALF, -1j * SQRT_HALF),
}

BASIS_LABELS = tuple(_BASIS)


def basis_state(label: str) -> Ket:
    """Named single-qubit state.

    OAM: ``R, L, H, V, D, A`` with ``H = (R+L)/sqrt2``, ``D = (R+iL)/sqrt2``,
    ``A = (R-iL)/sqrt2``. Polarization: ``h, v, d, a, r, l`` with
    ``d = (h+v)/sqrt2`` and ``r = (h+iv)/sqrt2``.
    """
    try:
        return Ket(_BASIS[label])
    except (KeyError, TypeError):
        raise ValidationError(f"unknown basis label {label!r}; expected one of {BASIS_LABELS}") from None


def theta_state(t) -> Ket:
    """``(e^{i theta}|R> + e^{-i theta}|L>)/sqrt2`` for the phase-mask angle."""
    theta = t.theta if isinstance(t, ThetaSetting) else float(t)
    return Ket([SQRT_HALF * np.exp(1j * theta), SQRT_HALF * np.exp(-1j * theta)])


BELL_KINDS = ("pol-plus", "pol-minus", "hybrid-plus", "hybrid-minus", "oam-plus", "oam-minus")


def bell_state(kind: str) -> Ket:
    """Two-photon Bell states.

    ``pol-*``: ``(|hv> +- |vh>)/sqrt2`` in ``(hh, hv, vh, vv)``;
    ``hybrid-*``: ``(|h,R> +- |v,L>)/sqrt2`` in ``(hR, hL, vR, vL)``;
    ``oam-*``: ``(|R,L> +- |L,R>)/sqrt2`` in ``(RR, RL, LR, LL)``.
    """
    if kind not in BELL_KINDS:
        raise ValidationError(f"unknown Bell state {kind!r}; expected one of {BELL_KINDS}")
    family, sign = kind.split("-")
    s = 1.0 if sign == "plus" else -1.0
    if family == "hybrid":
        amps = [1, 0, 0, s]
    else:
        amps = [0, 1, s, 0]
    return Ket(np.asarray(amps, dtype=complex) * SQRT_HALF)


def beam_radius(w0: float, l: int) -> float:
    """Radius of an OAM beam of charge ``l``: ``sqrt(|l| + 1) * w0``."""
    return math.sqrt(abs(l) + 1) * w0


def mode_capacity(g: BeamGeometry) -> int:
    """Number of OAM modes ``l = -l_max..l_max`` whose radius fits inside ``w_max``."""
    ratio = (g.w_max / g.w0) ** 2 - 1
    # guard against ratios like 24.999999999 from float division
    l_max = math.floor(ratio + 1e-9)
    return 2 * l_max + 1
