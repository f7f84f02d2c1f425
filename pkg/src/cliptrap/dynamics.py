"""Rate-equation model for continuous loading of the magnetic trap.

The governing equation for the trapped atom number N is

    dN/dt = R - (gamma_d + gamma_ed) N - 2 beta_dd N^2 / V_MT

where R is the optical loading rate, gamma_ed the effective one-body loss
from collisions with excited MOT atoms and beta_dd the two-body loss
coefficient among trapped atoms.  The factor 2 on the two-body term
reflects that each inelastic collision removes two atoms; published beta
conventions differ by exactly this factor.

Note: published closed forms for the steady state and the accumulation
efficiency of this model often carry a factor-2 slip relative to the
equation they solve; here both are the exact algebraic solutions of the
ODE above, so evolve(), steady_state() and accumulation_efficiency() are
mutually consistent to rounding error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .species import MotBeamParams, Species, excited_fraction
from .trap import IpTrapConfig

# Relative size of 8 beta R V against (gamma V)^2 below which the
# cancellation-free series expansion of the steady state is used.
_SERIES_SWITCH = 1e-8

DEFAULT_ETA = 0.3  # theoretical optical-pumping transfer efficiency


@dataclass(frozen=True)
class RateCoefficients:
    """Transfer efficiency and loss coefficients of the loading model."""

    eta: float = DEFAULT_ETA   # transfer efficiency, (0, 1]
    beta_ed: float = 0.0       # m^3/s, excited-MOT / trapped collisions
    beta_dd: float = 0.0       # m^3/s, trapped / trapped collisions
    gamma_d: float = 0.0       # 1/s, background gas loss

    def __post_init__(self) -> None:
        # eta = 0 is allowed so switched-off loading is representable
        if not 0 <= self.eta <= 1:
            raise ValueError("eta must be in [0, 1]")
        if self.beta_ed < 0 or self.beta_dd < 0 or self.gamma_d < 0:
            raise ValueError("loss coefficients must be >= 0")


@dataclass(frozen=True)
class LoadingScenario:
    """Everything the rate equation needs, volumes included.

    v_mt and v_eff may come from cloud-module geometry or be supplied
    directly (e.g. measured values).
    """

    species: Species
    trap: IpTrapConfig
    coefficients: RateCoefficients
    mot: MotBeamParams
    mt_temperature: float  # K
    v_mt: float            # m^3
    v_eff: float           # m^3

    def __post_init__(self) -> None:
        if self.v_mt <= 0 or self.v_eff <= 0:
            raise ValueError("volumes must be positive")
        if self.mt_temperature <= 0:
            raise ValueError("mt_temperature must be positive")

    @property
    def n_mot_excited(self) -> float:
        return excited_fraction(self.mot, self.species) * self.mot.n_mot


def loading_rate(scenario: LoadingScenario) -> float:
    """R = eta N*_MOT Gamma_ed (atoms/s)."""
    return (scenario.coefficients.eta * scenario.n_mot_excited
            * scenario.species.gamma_ed)


def gamma_ed_loss(n_star: float, beta_ed: float, v_eff: float) -> float:
    """Effective one-body loss rate N* beta_ed / V_eff (1/s)."""
    if v_eff <= 0:
        raise ValueError("v_eff must be positive")
    return n_star * beta_ed / v_eff


def _rates(scenario: LoadingScenario) -> tuple[float, float, float, float]:
    c = scenario.coefficients
    r = loading_rate(scenario)
    gamma = c.gamma_d + gamma_ed_loss(scenario.n_mot_excited, c.beta_ed,
                                      scenario.v_eff)
    return r, gamma, c.beta_dd, scenario.v_mt


def steady_state(scenario: LoadingScenario) -> float:
    """Closed-form stationary atom number of the rate equation.

    N_inf = [-gamma V + sqrt(gamma^2 V^2 + 8 beta R V)] / (4 beta); for
    8 beta R V << (gamma V)^2 the series limit
    R/gamma - 2 beta R^2 / (V gamma^3) avoids catastrophic cancellation.
    """
    r, gamma, beta, v = _rates(scenario)
    return _steady_state_raw(r, gamma, beta, v)


def _steady_state_raw(r: float, gamma: float, beta: float, v: float) -> float:
    if r == 0:
        return 0.0
    if beta == 0:
        if gamma == 0:
            raise ValueError("no steady state: loading without any loss channel")
        return r / gamma
    if gamma > 0 and 8 * beta * r * v < _SERIES_SWITCH * (gamma * v) ** 2:
        return r / gamma - 2 * beta * r * r / (v * gamma ** 3)
    gv = gamma * v
    return (-gv + math.sqrt(gv * gv + 8 * beta * r * v)) / (4 * beta)


def evolve(scenario: LoadingScenario, n0: float, t_end: float,
           samples: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the rate equation from N(0) = n0 over [0, t_end].

    Returns (t, N) on a uniform grid of `samples` points; adaptive stepping
    with relative tolerance 1e-8 and absolute tolerance 1e-3 atoms.
    """
    if n0 < 0:
        raise ValueError("n0 must be >= 0")
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    r, gamma, beta, v = _rates(scenario)

    def rhs(_t, n):
        return r - gamma * n[0] - 2 * beta * n[0] * n[0] / v

    t_eval = np.linspace(0.0, t_end, samples)
    sol = solve_ivp(rhs, (0.0, t_end), [float(n0)], method="DOP853",
                    t_eval=t_eval, rtol=1e-8, atol=1e-3)
    if not sol.success:
        raise RuntimeError(
            f"rate-equation integration failed: {sol.message} "
            f"(nfev={sol.nfev}, last t={sol.t[-1] if sol.t.size else 0.0:g})")
    return sol.t, np.maximum(sol.y[0], 0.0)


def kappa_of_abscissa(x, beta_dd: float, beta_ed: float):
    """Accumulation efficiency as a function of x = R V_MT / N_MOT^2.

    kappa = [-beta_ed + sqrt(beta_ed^2 + 32 beta_dd x)] / (8 beta_dd), the
    steady state per MOT atom under gamma_d = 0, V_eff = V_MT and a
    saturated MOT (N* = N_MOT / 2).  The beta_dd -> 0 series limit
    2 x / beta_ed - 16 beta_dd x^2 / beta_ed^3 is used to avoid
    cancellation.  Vectorized over x.
    """
    x = np.asarray(x, float)
    if beta_dd == 0 or (beta_ed > 0 and
                        np.all(32 * beta_dd * x < _SERIES_SWITCH * beta_ed ** 2)):
        if beta_ed == 0:
            raise ValueError("kappa undefined with both beta coefficients zero")
        out = 2 * x / beta_ed - 16 * beta_dd * x * x / beta_ed ** 3
    else:
        out = ((-beta_ed + np.sqrt(beta_ed ** 2 + 32 * beta_dd * x))
               / (8 * beta_dd))
    return float(out) if out.ndim == 0 else out


def accumulation_efficiency(scenario: LoadingScenario) -> float:
    """kappa = N_inf / N_MOT under the saturated, gamma_d = 0 assumptions."""
    c = scenario.coefficients
    n_mot = scenario.mot.n_mot
    r = loading_rate(scenario)
    return kappa_of_abscissa(r * scenario.v_mt / n_mot ** 2,
                             c.beta_dd, c.beta_ed)


def effective_loading_time(n_mt: float, r: float) -> float:
    """tau = N_MT / R, the single-number loss measure."""
    if r <= 0:
        raise ValueError("loading rate must be positive")
    return n_mt / r


def decay(n0: float, gamma: float, beta: float, v: float, t):
    """Closed-form solution of dN/dt = -gamma N - 2 beta N^2 / V.

    N(t) = gamma n0 e^{-gamma t} / (gamma + (2 beta n0 / V)(1 - e^{-gamma t}));
    for gamma t < 1e-8 the pure two-body limit n0 / (1 + 2 beta n0 t / V)
    is used.  Vectorized over t.
    """
    if n0 < 0:
        raise ValueError("n0 must be >= 0")
    if v <= 0:
        raise ValueError("v must be positive")
    t = np.asarray(t, float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    b = 2 * beta * n0 / v
    small = gamma * t < 1e-8
    with np.errstate(over="ignore"):
        et = np.exp(-gamma * t)
    full = np.where(small, 1.0,
                    gamma * n0 * et / np.where(small, 1.0,
                                               gamma + b * (1.0 - et)))
    lim = n0 / (1.0 + b * t)
    out = np.where(small, lim, full)
    return float(out) if out.ndim == 0 else out


def mt_temperature_prediction(t_mot: float, thermalized: bool = True):
    """Virial-theorem temperature after transfer from the MOT center.

    Thermalized: energy balance (3/2) k T_MOT = 4 k T gives T = 3/8 T_MOT
    (linear 2D potential contributes 2kT, harmonic 1D kT/2).  Without
    thermalization the per-axis result is (T_MOT/2, T_MOT/3) for
    (axial, radial).  Heating beyond this is not modelled, so these are
    lower bounds.
    """
    if t_mot <= 0:
        raise ValueError("t_mot must be positive")
    if thermalized:
        return 0.375 * t_mot
    return 0.5 * t_mot, t_mot / 3.0
