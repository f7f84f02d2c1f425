"""Scenario construction, trap-parameter sweeps and synthetic data.

Sweeps rebuild the cloud geometry for every swept value and recompute the
rate-model outputs.  The MOT atom number is never predicted from trap
parameters (the model contains no MOT physics); it is held constant or
supplied per point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import cloud, dynamics
from .dynamics import LoadingScenario
from .estimation import DataSet
from .trap import majorana_safe

SWEEPABLE = ("radial_gradient", "axial_curvature", "offset_field")
OUTPUTS = ("n_mot", "n_mt_steady", "loading_rate", "tau_eff", "v_mt",
           "kappa", "kappa_abscissa", "t_mt_prediction", "majorana_safe")


@dataclass(frozen=True)
class SweepSpec:
    """One swept trap parameter, its values (SI) and the requested outputs."""

    swept_parameter: str
    values: Sequence[float]
    base_scenario: LoadingScenario
    outputs: Sequence[str] = ("n_mot", "n_mt_steady", "loading_rate",
                              "tau_eff", "v_mt", "kappa")
    n_mot_per_point: Sequence[float] | None = None

    def __post_init__(self) -> None:
        if self.swept_parameter not in SWEEPABLE:
            raise ValueError(f"swept_parameter must be one of {SWEEPABLE}")
        vals = list(self.values)
        if not vals:
            raise ValueError("values must be non-empty")
        diffs = np.diff(vals)
        if len(vals) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("values must be strictly monotone")
        if self.swept_parameter != "offset_field" and min(vals) <= 0:
            raise ValueError(f"{self.swept_parameter} values must be positive")
        if (self.n_mot_per_point is not None
                and len(self.n_mot_per_point) != len(vals)):
            raise ValueError("n_mot_per_point length must match values")
        unknown = set(self.outputs) - set(OUTPUTS)
        if unknown:
            raise ValueError(f"unknown outputs: {sorted(unknown)}")


def scenario_at(base: LoadingScenario, parameter: str, value: float,
                n_mot: float | None = None) -> LoadingScenario:
    """Rebuild the scenario with one trap parameter changed.

    The cloud geometry (hence V_MT) is recomputed at the scenario's trap
    temperature; V_eff uses the trap-volume approximation.
    """
    trap_cfg = replace(base.trap, **{parameter: value})
    mot = base.mot if n_mot is None else replace(base.mot, n_mot=n_mot)
    cl = cloud.make_thermal_cloud(base.species, trap_cfg, n=1.0,
                                  t=base.mt_temperature)
    v_mt = cloud.occupied_volume(cl)
    return replace(base, trap=trap_cfg, mot=mot, v_mt=v_mt, v_eff=v_mt)


def _row_outputs(scenario: LoadingScenario, outputs: Sequence[str]) -> dict:
    row: dict[str, float | bool] = {}
    lazy = {
        "n_mot": lambda: scenario.mot.n_mot,
        "n_mt_steady": lambda: dynamics.steady_state(scenario),
        "loading_rate": lambda: dynamics.loading_rate(scenario),
        "tau_eff": lambda: dynamics.effective_loading_time(
            dynamics.steady_state(scenario), dynamics.loading_rate(scenario)),
        "v_mt": lambda: scenario.v_mt,
        "kappa": lambda: dynamics.accumulation_efficiency(scenario),
        "kappa_abscissa": lambda: (dynamics.loading_rate(scenario)
                                   * scenario.v_mt / scenario.mot.n_mot ** 2),
        "t_mt_prediction": lambda: dynamics.mt_temperature_prediction(
            scenario.mot.temperature),
        "majorana_safe": lambda: majorana_safe(scenario.trap),
    }
    for name in outputs:
        row[name] = lazy[name]()
    return row


def run_sweep(spec: SweepSpec) -> list[dict]:
    """One row per swept value with the requested outputs.

    Per-point failures are recorded in the row's 'error' field and the
    sweep continues.
    """
    rows = []
    for i, value in enumerate(spec.values):
        n_mot = (spec.n_mot_per_point[i]
                 if spec.n_mot_per_point is not None else None)
        row: dict = {"value": float(value), "error": ""}
        try:
            scen = scenario_at(spec.base_scenario, spec.swept_parameter,
                               value, n_mot)
            row.update(_row_outputs(scen, spec.outputs))
        except Exception as exc:  # per-point isolation is the contract
            row["error"] = str(exc)
            row.update({name: math.nan for name in spec.outputs})
        rows.append(row)
    return rows


def kappa_curve(points: Sequence[LoadingScenario]) -> DataSet:
    """Master-curve coordinates (R V_MT / N_MOT^2, kappa) per scenario."""
    if not points:
        raise ValueError("need at least one scenario")
    xs, ys = [], []
    for scen in points:
        r = dynamics.loading_rate(scen)
        xs.append(r * scen.v_mt / scen.mot.n_mot ** 2)
        ys.append(dynamics.accumulation_efficiency(scen))
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    return DataSet(x=xs, y=ys, sigma_y=np.maximum(np.abs(ys), 1.0) * 1e-3,
                   x_label="rv_over_nmot2_m3_per_s", y_label="kappa")


def synthesize_measurements(scenario: LoadingScenario, kind: str,
                            noise: float = 0.0, seed: int = 0,
                            points: int = 30,
                            t_end: float | None = None) -> DataSet:
    """Forward-model data with multiplicative Gaussian noise.

    kinds: loading_curve (t, N), decay_curve (t, N), tof_series (t, sigma),
    kappa_points (R V/N^2, kappa).  Deterministic for a given seed.
    """
    if noise < 0:
        raise ValueError("noise must be >= 0")
    rng = np.random.default_rng(seed)
    r = dynamics.loading_rate(scenario)
    n_inf = dynamics.steady_state(scenario)

    if kind == "loading_curve":
        if t_end is None:
            t_end = 10 * dynamics.effective_loading_time(n_inf, r)
        t, n = dynamics.evolve(scenario, 0.0, t_end, samples=points)
        x, y = t, n
        labels = ("t_s", "n_atoms")
    elif kind == "decay_curve":
        if t_end is None:
            t_end = 150.0
        t = np.geomspace(0.05, t_end, points)
        t[0] = 0.0  # anchor the initial atom number
        y = dynamics.decay(n_inf, scenario.coefficients.gamma_d,
                           scenario.coefficients.beta_dd, scenario.v_mt, t)
        x = t
        labels = ("t_s", "n_atoms")
    elif kind == "tof_series":
        t = np.linspace(1e-3, 8e-3, max(points, 3))
        kt = scenario.mt_temperature
        sigma0 = _mt_radial_scale(scenario)
        y = np.array([cloud.tof_radius(sigma0, kt, scenario.species, ti)
                      for ti in t])
        x = t
        labels = ("t_s", "sigma_m")
    elif kind == "kappa_points":
        x0 = r * scenario.v_mt / scenario.mot.n_mot ** 2
        x = np.geomspace(0.1 * x0, 10 * x0, points)
        y = dynamics.kappa_of_abscissa(x, scenario.coefficients.beta_dd,
                                       scenario.coefficients.beta_ed)
        labels = ("rv_over_nmot2_m3_per_s", "kappa")
    else:
        raise ValueError(f"unknown kind {kind!r}")

    y = np.asarray(y, float)
    if noise > 0:
        y = y * (1.0 + noise * rng.standard_normal(y.shape))
    sigma = np.maximum(np.abs(y) * max(noise, 1e-6), 1e-300)
    return DataSet(x=np.asarray(x, float), y=y, sigma_y=sigma,
                   x_label=labels[0], y_label=labels[1])


def _mt_radial_scale(scenario: LoadingScenario) -> float:
    """xi1 of the trap cloud; used as the pre-expansion size in TOF data."""
    from .species import BOLTZMANN
    return (BOLTZMANN * scenario.mt_temperature
            / (scenario.species.magnetic_moment * scenario.trap.radial_gradient))
