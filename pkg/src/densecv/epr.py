"""Bright two-mode entangled source with tunable quadrature correlation.

The pair (a, b) has anticorrelated amplitudes and correlated phases,
parameterized by a correlation factor ``gamma`` in (0, 1]:

    V(X_a) = V(Y_a) = V(X_b) = V(Y_b) = (gamma + 1/gamma) / 2
    V(X_a + X_b) = V(Y_a - Y_b) = 2 gamma

gamma = 1 is two independent vacua; smaller gamma drives the joint
combinations below the two-mode shot-noise limit of 2 while each single
beam gets noisier.  The realization uses four fresh unit-variance
sources mixed with coefficients s = 1/sqrt(2 gamma), t = sqrt(gamma/2);
only the variance identities above are contractual, not the mixing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .gaussian import LinearGaussianForm, OpticalMode, SourceKind, SourceRegistry

# Guards the 1/gamma energy divergence; far below any practical squeezing.
GAMMA_MIN = 1e-6


@dataclass(frozen=True)
class EprPair:
    """Signal beam `a`, idler beam `b`, and the correlation factor used."""

    a: OpticalMode
    b: OpticalMode
    gamma: float


def individual_variance(gamma: float) -> float:
    """Single-beam quadrature variance (gamma + 1/gamma) / 2."""
    return (gamma + 1.0 / gamma) / 2.0


def correlation_variance(gamma: float) -> float:
    """Two-mode correlation variance V(X_a + X_b) = V(Y_a - Y_b) = 2 gamma."""
    return 2.0 * gamma


def make_epr_pair(gamma: float, registry: SourceRegistry,
                  label: str = "epr") -> EprPair:
    """Build an entangled pair over four fresh unit sources.

    Raises ValueError for gamma outside [GAMMA_MIN, 1].
    """
    if not GAMMA_MIN <= gamma <= 1.0:
        raise ValueError(
            f"correlation factor must be in [{GAMMA_MIN}, 1], got {gamma}")
    s = 1.0 / math.sqrt(2.0 * gamma)
    t = math.sqrt(gamma / 2.0)

    u = registry.add_source(SourceKind.EPR, 1.0, f"{label}.u")
    v = registry.add_source(SourceKind.EPR, 1.0, f"{label}.v")
    up = registry.add_source(SourceKind.EPR, 1.0, f"{label}.u'")
    vp = registry.add_source(SourceKind.EPR, 1.0, f"{label}.v'")

    a = OpticalMode(
        x=LinearGaussianForm(registry, {u: s, v: t}),
        y=LinearGaussianForm(registry, {up: s, vp: t}),
    )
    b = OpticalMode(
        x=LinearGaussianForm(registry, {u: -s, v: t}),
        y=LinearGaussianForm(registry, {up: s, vp: -t}),
    )
    return EprPair(a=a, b=b, gamma=gamma)
