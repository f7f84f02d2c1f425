"""Thermal density distributions, scale lengths, volumes and projections.

The magnetic-trap density is exponential in the radial plane (scale xi1),
tilted by gravity along -y (scale xi2) and Gaussian along the axis
(sigma_z):

    n(x, y, z) = n0 exp(-sqrt(x^2+y^2)/xi1 - y/xi2 - z^2/(2 sigma_z^2))

All in-plane integrals are done by adaptive quadrature over a bounding box
of +/- 30 effective scale lengths; the axial Gaussian factor integrates
analytically, so no 3D quadrature is ever needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .bessel import scaled_x_k1
from .species import BOLTZMANN, GRAVITY, Species
from .trap import IpTrapConfig

_QUAD_RTOL = 1e-8
# Box truncation at u scale lengths leaves a relative tail ~ (u+1) e^-u;
# 30 scale lengths keep it below 1e-11.
_BOX_SCALES = 30.0


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


def _dblquad_checked(f, box_x, box_y) -> float:
    """Two-pass adaptive double integral with a self-consistency check.

    The rough first pass anchors an absolute tolerance for the accurate
    second pass (QUADPACK's own error estimate is unusable for these
    sharply peaked integrands); agreement between the passes is the
    convergence criterion.
    """
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        rough, _ = integrate.dblquad(f, *box_x, *box_y,
                                     epsabs=0.0, epsrel=1e-4)
        if not math.isfinite(rough) or rough == 0.0:
            raise QuadratureError("rough quadrature pass returned %r" % rough)
        val, _ = integrate.dblquad(f, *box_x, *box_y,
                                   epsabs=1e-2 * _QUAD_RTOL * abs(rough),
                                   epsrel=1e-2 * _QUAD_RTOL)
    achieved = abs(val - rough) / max(abs(val), 1e-300)
    if not math.isfinite(val) or achieved > 1e-3:
        raise QuadratureError(
            f"quadrature passes disagree: achieved relative tolerance "
            f"{achieved:.2e}, requested {_QUAD_RTOL:.0e}")
    return val


@dataclass(frozen=True)
class ThermalCloud:
    """Trapped ensemble in the magnetic trap.

    xi2 = math.inf represents the gravity-free shape.  peak_density is the
    normalizing n0 such that the density integrates to atom_number.
    """

    atom_number: float
    temperature: float   # K
    xi1: float           # m
    xi2: float           # m (inf: gravity off)
    sigma_z: float       # m
    peak_density: float  # 1/m^3

    def __post_init__(self) -> None:
        for name in ("atom_number", "temperature", "xi1", "xi2", "sigma_z",
                     "peak_density"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class GaussianCloud:
    """MOT ensemble: Gaussian with 1/sqrt(e) radii sigma_radial, sigma_axial."""

    atom_number: float
    temperature: float
    sigma_radial: float
    sigma_axial: float

    def __post_init__(self) -> None:
        for name in ("atom_number", "temperature", "sigma_radial", "sigma_axial"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


# --- in-plane quadrature ----------------------------------------------------

def _planar_box(xi1: float, xi2: float) -> float:
    # Slowest decay is along -y where the rate is 1/xi1 - 1/xi2.
    if math.isinf(xi2):
        return _BOX_SCALES * xi1
    return _BOX_SCALES * xi1 * xi2 / (xi2 - xi1)


def _planar_integral(xi1: float, xi2: float, power: float) -> float:
    """Integral of exp(-power*(rho/xi1 + y/xi2)) over the radial plane."""
    if not math.isinf(xi2) and xi2 <= xi1:
        raise ValueError("untrapped cloud: gravity scale xi2 must exceed xi1")
    inv2 = 0.0 if math.isinf(xi2) else 1.0 / xi2

    def f(y, x):
        return math.exp(-power * (math.hypot(x, y) / xi1 + y * inv2))

    box = _planar_box(xi1, xi2) / power
    return _dblquad_checked(f, (-box, box), (-box, box))


def make_thermal_cloud(species: Species, cfg: IpTrapConfig,
                       n: float, t: float,
                       include_gravity: bool = True) -> ThermalCloud:
    """Build the trap cloud for atom number n at temperature t.

    Scale lengths follow from the trap and species; the peak density is set
    by numerical normalization of the (gravity-modified) distribution.
    """
    if n <= 0 or t <= 0:
        raise ValueError("atom number and temperature must be positive")
    kt = BOLTZMANN * t
    mu = species.magnetic_moment
    xi1 = kt / (mu * cfg.radial_gradient)
    xi2 = kt / (species.mass * GRAVITY) if include_gravity else math.inf
    sigma_z = math.sqrt(kt / (mu * cfg.axial_curvature))
    norm = _planar_integral(xi1, xi2, 1.0) * math.sqrt(2 * math.pi) * sigma_z
    return ThermalCloud(atom_number=n, temperature=t, xi1=xi1, xi2=xi2,
                        sigma_z=sigma_z, peak_density=n / norm)


def mt_density(cloud: ThermalCloud, x, y, z):
    """Magnetic-trap density at (x, y, z); accepts scalars or arrays."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    z = np.asarray(z, float)
    inv2 = 0.0 if math.isinf(cloud.xi2) else 1.0 / cloud.xi2
    arg = (-np.hypot(x, y) / cloud.xi1 - y * inv2
           - z * z / (2 * cloud.sigma_z ** 2))
    out = cloud.peak_density * np.exp(arg)
    return float(out) if out.ndim == 0 else out


def column_density(cloud: ThermalCloud, y, z):
    """Line-of-sight integral of mt_density along x, in closed form:

    2 n0 xi1 * (|y|/xi1) K1(|y|/xi1) * exp(-y/xi2 - z^2/(2 sigma_z^2)),
    with the removable y = 0 singularity replaced by its limit 2 n0 xi1.
    """
    y = np.asarray(y, float)
    z = np.asarray(z, float)
    inv2 = 0.0 if math.isinf(cloud.xi2) else 1.0 / cloud.xi2
    radial = np.vectorize(scaled_x_k1, otypes=[float])(np.abs(y) / cloud.xi1)
    out = (2 * cloud.peak_density * cloud.xi1 * radial
           * np.exp(-y * inv2 - z * z / (2 * cloud.sigma_z ** 2)))
    return float(out) if out.ndim == 0 else out


def mot_density(cloud: GaussianCloud, x, y, z):
    """Normalized Gaussian MOT density."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    z = np.asarray(z, float)
    sr, sa = cloud.sigma_radial, cloud.sigma_axial
    peak = cloud.atom_number / ((2 * math.pi) ** 1.5 * sr * sr * sa)
    out = peak * np.exp(-(x * x + y * y) / (2 * sr * sr) - z * z / (2 * sa * sa))
    return float(out) if out.ndim == 0 else out


def occupied_volume(cloud: ThermalCloud) -> float:
    """Density-weighted volume N^2 / integral(n^2) by quadrature.

    With gravity off this reduces to 16 pi^(3/2) xi1^2 sigma_z.
    """
    i2 = (cloud.peak_density ** 2 * _planar_integral(cloud.xi1, cloud.xi2, 2.0)
          * math.sqrt(math.pi) * cloud.sigma_z)
    return cloud.atom_number ** 2 / i2


def effective_volume(mot: GaussianCloud, mt: ThermalCloud,
                     mode: str = "quadrature",
                     offset: tuple[float, float, float] = (0.0, 0.0, 0.0)) -> float:
    """Overlap volume N_MOT N_MT / integral(n_MOT n_MT).

    mode "quadrature" evaluates the overlap integral with the MOT centered
    at `offset` relative to the trap center; mode "approximation" returns
    the trap volume itself (valid when the MOT is much smaller than the
    magnetic trap, where V_eff is dominated by the larger volume).
    """
    if mode == "approximation":
        return occupied_volume(mt)
    if mode != "quadrature":
        raise ValueError(f"unknown mode {mode!r}")

    x0, y0, z0 = offset
    sr, sa = mot.sigma_radial, mot.sigma_axial
    inv2 = 0.0 if math.isinf(mt.xi2) else 1.0 / mt.xi2

    # Axial factor: product of two Gaussians, analytic.
    s2 = sa * sa + mt.sigma_z ** 2
    axial = math.sqrt(2 * math.pi * sa * sa * mt.sigma_z ** 2 / s2) \
        * math.exp(-z0 * z0 / (2 * s2))

    def f(y, x):
        g = math.exp(-((x - x0) ** 2 + (y - y0) ** 2) / (2 * sr * sr))
        return g * math.exp(-math.hypot(x, y) / mt.xi1 - y * inv2)

    # Product is localized by the MOT Gaussian around its center.
    box = 10 * sr
    val = _dblquad_checked(f, (x0 - box, x0 + box), (y0 - box, y0 + box))

    mot_peak = mot.atom_number / ((2 * math.pi) ** 1.5 * sr * sr * sa)
    overlap = mot_peak * mt.peak_density * val * axial
    return mot.atom_number * mt.atom_number / overlap


def tof_radius(sigma0: float, t_temp: float, species: Species, t: float) -> float:
    """Ballistic-expansion 1/sqrt(e) radius sqrt(sigma0^2 + (kT/m) t^2)."""
    if t < 0:
        raise ValueError("expansion time must be >= 0")
    return math.sqrt(sigma0 ** 2 + BOLTZMANN * t_temp / species.mass * t * t)
