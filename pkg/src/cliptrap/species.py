"""Atomic species data, physical constants and unit conversions.

SI units everywhere inside the package; Gauss-derived units (G, G/cm,
G/cm^2) and cm^3 appear only at interface boundaries.  Keep this module
free of heavy imports so every other layer can use it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

# CODATA 2018 reference values
BOLTZMANN = 1.380649e-23          # J/K (exact since 2019 SI)
BOHR_MAGNETON = 9.2740100783e-24  # J/T
GRAVITY = 9.80665                 # m/s^2, standard acceleration
ATOMIC_MASS = 1.66053906660e-27   # kg


@dataclass(frozen=True)
class Constants:
    """Fundamental constants used by the trap and cloud formulas."""

    boltzmann_constant: float = BOLTZMANN
    bohr_magneton: float = BOHR_MAGNETON
    gravitational_acceleration: float = GRAVITY
    atomic_mass_unit: float = ATOMIC_MASS


CONSTANTS = Constants()


# --- unit conversions (exact scale factors) ---------------------------------

def gauss_per_cm_to_si(v: float) -> float:
    """G/cm -> T/m."""
    return v * 1e-2


def si_to_gauss_per_cm(v: float) -> float:
    """T/m -> G/cm."""
    return v * 1e2


def gauss_per_cm2_to_si(v: float) -> float:
    """G/cm^2 -> T/m^2 (the two units coincide)."""
    return v * 1.0


def si_to_gauss_per_cm2(v: float) -> float:
    """T/m^2 -> G/cm^2."""
    return v * 1.0


def gauss_to_si(v: float) -> float:
    """G -> T."""
    return v * 1e-4


def si_to_gauss(v: float) -> float:
    """T -> G."""
    return v * 1e4


def cm3_to_si(v: float) -> float:
    """cm^3 -> m^3 (also converts cm^3/s rate coefficients)."""
    return v * 1e-6


def si_to_cm3(v: float) -> float:
    """m^3 -> cm^3."""
    return v * 1e6


# --- species ----------------------------------------------------------------

@dataclass(frozen=True)
class Species:
    """Atomic constants entering the loading model.

    gamma_eg is the angular linewidth of the strong cycling transition
    (rad/s); gamma_ed is the leak rate into the metastable trapped state
    (1/s).  branching_ratio_mg_md is informational only (an alternative
    pumping path); no formula consumes it.
    """

    name: str
    mass: float                  # kg
    magnetic_moment: float       # J/T
    gamma_eg: float              # rad/s
    gamma_ed: float              # 1/s
    branching_ratio_eg_ed: float
    saturation_intensity: float  # W/m^2
    mot_wavelength: float        # m
    branching_ratio_mg_md: float | None = None

    def __post_init__(self) -> None:
        if self.mass <= 0 or self.magnetic_moment <= 0 or self.gamma_eg <= 0:
            raise ValueError("mass, magnetic_moment and gamma_eg must be positive")
        if self.gamma_ed <= 0 or self.branching_ratio_eg_ed <= 0:
            raise ValueError("gamma_ed and branching_ratio_eg_ed must be positive")
        ratio = self.gamma_eg / self.gamma_ed
        if abs(ratio - self.branching_ratio_eg_ed) > 0.01 * self.branching_ratio_eg_ed:
            raise ValueError(
                "inconsistent rates: gamma_eg/gamma_ed = %.4g but "
                "branching_ratio_eg_ed = %.4g" % (ratio, self.branching_ratio_eg_ed)
            )


def chromium_52() -> Species:
    """The built-in default species: bosonic 52Cr."""
    gamma_eg = 2 * math.pi * 5.02e6
    branching = 2.5e5
    return Species(
        name="52Cr",
        mass=52 * ATOMIC_MASS,
        magnetic_moment=6 * BOHR_MAGNETON,
        gamma_eg=gamma_eg,
        gamma_ed=gamma_eg / branching,
        branching_ratio_eg_ed=branching,
        saturation_intensity=85.2,       # 8.52 mW/cm^2
        mot_wavelength=425.6e-9,
        branching_ratio_mg_md=5200.0,
    )


_SPECIES_KEYS = (
    "name", "mass_amu", "mu_bohr", "gamma_eg_hz",
    "branching_eg_ed", "isat_mw_cm2", "wavelength_nm",
)


def load_species(path: str | Path) -> Species:
    """Load species data from a flat key = value text file.

    Required keys: name, mass_amu, mu_bohr, gamma_eg_hz (linewidth in Hz,
    i.e. gamma_eg / 2 pi), branching_eg_ed, isat_mw_cm2, wavelength_nm.
    Optional: branching_mg_md.  '#' comment lines are skipped.
    """
    raw: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed species line: {line!r}")
        key, value = line.split("=", 1)
        raw[key.strip()] = value.strip()
    missing = [k for k in _SPECIES_KEYS if k not in raw]
    if missing:
        raise ValueError(f"species file missing keys: {', '.join(missing)}")
    gamma_eg = 2 * math.pi * float(raw["gamma_eg_hz"])
    branching = float(raw["branching_eg_ed"])
    mg_md = float(raw["branching_mg_md"]) if "branching_mg_md" in raw else None
    return Species(
        name=raw["name"],
        mass=float(raw["mass_amu"]) * ATOMIC_MASS,
        magnetic_moment=float(raw["mu_bohr"]) * BOHR_MAGNETON,
        gamma_eg=gamma_eg,
        gamma_ed=gamma_eg / branching,
        branching_ratio_eg_ed=branching,
        saturation_intensity=float(raw["isat_mw_cm2"]) * 10.0,  # mW/cm^2 -> W/m^2
        mot_wavelength=float(raw["wavelength_nm"]) * 1e-9,
        branching_ratio_mg_md=mg_md,
    )


# --- MOT light parameters ---------------------------------------------------

@dataclass(frozen=True)
class MotBeamParams:
    """MOT operating point and cloud shape.

    total_saturation is I/I_sat summed over all beams; math.inf selects the
    fully saturated limit (excited fraction exactly 1/2).  detuning is the
    angular detuning delta (rad/s), negative for red.
    """

    total_saturation: float
    detuning: float
    n_mot: float
    temperature: float    # K
    sigma_radial: float   # m, 1/sqrt(e) radius
    sigma_axial: float    # m

    def __post_init__(self) -> None:
        if self.total_saturation < 0:
            raise ValueError("total_saturation must be >= 0")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.sigma_radial <= 0 or self.sigma_axial <= 0:
            raise ValueError("cloud sizes must be positive")


def excited_fraction(beams: MotBeamParams, species: Species) -> float:
    """Steady-state excited-state fraction of the two-level MOT transition.

    s/2 / (1 + s + (2 delta/Gamma)^2); tends to 1/2 as s -> inf.
    """
    s = beams.total_saturation
    if math.isinf(s):
        return 0.5
    d = 2 * beams.detuning / species.gamma_eg
    return 0.5 * s / (1 + s + d * d)
