"""Sum-frequency up-conversion channel and the apparatus efficiency chain."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ValidationError
from .quantum import DensityMatrix, Operator


@dataclass(frozen=True)
class SfgParams:
    """Dimensionless interaction area ``xi * t``; ``l`` rides along unchanged."""

    xi_t: float
    l: int = 1

    def __post_init__(self):
        if self.xi_t < 0:
            raise ValidationError(f"xi_t must be >= 0, got {self.xi_t}")


@dataclass(frozen=True)
class EfficiencyStage:
    name: str
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValidationError(f"stage {self.name!r}: eta must lie in [0, 1], got {self.eta}")


@dataclass(frozen=True)
class SpectralWindows:
    """Source bandwidth and SFG acceptance bandwidth, both in nm."""

    bw_source: float
    bw_sfg: float

    def __post_init__(self):
        if not (self.bw_source > 0 and self.bw_sfg > 0):
            raise ValidationError("both bandwidths must be positive")


def sfg_mode_rotation(p: SfgParams) -> Operator:
    """Heisenberg map of the (input, converted) mode pair.

    The row for the input mode reads ``a1(t) = a1 cos - a2 sin``, the row for
    the converted mode ``a2(t) = a1 sin + a2 cos``.
    """
    c, s = math.cos(p.xi_t), math.sin(p.xi_t)
    return Operator(np.array([[c, -s], [s, c]]))


def conversion_efficiency(p: SfgParams) -> float:
    """Fraction of input photons transferred to the sum-frequency mode, ``sin^2(xi t)``."""
    return math.sin(p.xi_t) ** 2


def apply_conversion(rho: DensityMatrix, eta: float, subsystem="first"):
    """Heralded conversion of one photon of ``rho``.

    OAM is carried over unchanged, so the post-selected state is ``rho``
    itself; ``eta`` is the probability that the conversion event occurs.
    Returns ``(rho, eta)``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValidationError(f"eta must lie in [0, 1], got {eta}")
    if subsystem not in ("first", "second", 0, 1):
        raise ValidationError(f"unknown subsystem {subsystem!r}")
    return rho, float(eta)


def spectral_acceptance(w: SpectralWindows) -> float:
    """Flat-top overlap of the source spectrum with the SFG acceptance window."""
    return min(1.0, w.bw_sfg / w.bw_source)


def efficiency_budget(stages: Iterable[EfficiencyStage]) -> float:
    """Overall efficiency of a chain of independent loss stages."""
    return math.prod(s.eta for s in stages)


# Per-photon chains of the up-conversion apparatus.
SIGNAL_CHAIN = (
    EfficiencyStage("collection", 0.26),
    EfficiencyStage("mode conversion + free space", 0.80),
    EfficiencyStage("quantum conversion", 0.002),
    EfficiencyStage("mode detection", 0.48),
    EfficiencyStage("detector", 0.50),
)

IDLER_CHAIN = (
    EfficiencyStage("collection", 0.26),
    EfficiencyStage("mode converter", 0.40),
    EfficiencyStage("mode detection", 0.50),
    EfficiencyStage("detector", 0.20),
)

SOURCE_WINDOWS = SpectralWindows(bw_source=2.5, bw_sfg=0.5)

# Coherent narrow-band conversion efficiency measured with a laser; the
# single-photon value is this times the spectral acceptance.
LASER_CONVERSION_EFFICIENCY = 0.01
