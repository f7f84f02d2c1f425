"""Ioffe-Pritchard field magnitude, trapping potential and offset check.

The trap is taken in the separable form used throughout the cloud and
dynamics modules: linear radial confinement with gradient B', harmonic
axial confinement with curvature B'' and axial offset B0.  Convention:
B(0,0,z) = B0 + B'' z^2 / 2, i.e. the axial potential is mu B'' z^2 / 2
(curvature conventions in the literature differ by factors of two).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .species import (
    GRAVITY,
    Species,
    gauss_per_cm2_to_si,
    gauss_per_cm_to_si,
    gauss_to_si,
)

# Offset below which Majorana spin flips are not suppressed (40 mG; at the
# radial parameters considered here this keeps the flip rate under 0.1/s).
MAJORANA_MIN_OFFSET = 4e-6  # T


@dataclass(frozen=True)
class IpTrapConfig:
    """Static trap parameters plus the background one-body loss rate."""

    radial_gradient: float      # T/m
    axial_curvature: float      # T/m^2
    offset_field: float = 0.0   # T, may be negative
    background_loss_rate: float = 0.0  # 1/s

    def __post_init__(self) -> None:
        if self.radial_gradient <= 0:
            raise ValueError("radial_gradient must be positive")
        if self.axial_curvature <= 0:
            raise ValueError("axial_curvature must be positive")
        if self.background_loss_rate < 0:
            raise ValueError("background_loss_rate must be >= 0")

    @classmethod
    def from_gauss(cls, b_prime_g_per_cm: float, b_dprime_g_per_cm2: float,
                   b0_mg: float = 0.0, gamma_d_per_s: float = 0.0) -> "IpTrapConfig":
        """Build from the Gauss-unit boundary keys."""
        return cls(
            radial_gradient=gauss_per_cm_to_si(b_prime_g_per_cm),
            axial_curvature=gauss_per_cm2_to_si(b_dprime_g_per_cm2),
            offset_field=gauss_to_si(b0_mg * 1e-3),
            background_loss_rate=gamma_d_per_s,
        )


def field_magnitude(cfg: IpTrapConfig, x: float, y: float, z: float) -> float:
    """|B| at (x, y, z) for the separable IP form (no radial cross terms)."""
    radial = cfg.radial_gradient ** 2 * (x * x + y * y)
    axial = cfg.offset_field + 0.5 * cfg.axial_curvature * z * z
    return math.sqrt(radial + axial * axial)


def potential_energy(species: Species, cfg: IpTrapConfig,
                     x: float, y: float, z: float,
                     include_gravity: bool = False) -> float:
    """Trapping potential mu B' rho + mu B'' z^2 / 2 (+ m g y), zero at the
    origin with gravity off."""
    mu = species.magnetic_moment
    u = mu * cfg.radial_gradient * math.hypot(x, y)
    u += 0.5 * mu * cfg.axial_curvature * z * z
    if include_gravity:
        u += species.mass * GRAVITY * y
    return u


def majorana_safe(cfg: IpTrapConfig) -> bool:
    """True iff the offset field is at or above the 40 mG suppression
    threshold.  Threshold check only; no spin-flip rate model."""
    return cfg.offset_field >= MAJORANA_MIN_OFFSET
