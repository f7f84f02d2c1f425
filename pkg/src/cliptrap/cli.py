"""Command-line interface: predict, simulate, sweep, synth, fit.

Configuration is a flat key = value text file ('#' comments allowed);
--set KEY=VALUE flags override file keys, and --paper-defaults loads the
built-in optimum operating point.  All physical quantities cross the CLI
boundary in Gauss-derived units (G/cm, G/cm^2, mG, cm^3, cm^3/s, uK);
everything internal is SI.  Exit codes: 0 success, 2 configuration or
input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import cloud, dynamics, sweeps
from .cloud import QuadratureError, make_thermal_cloud, occupied_volume
from .dynamics import LoadingScenario, RateCoefficients
from .estimation import (DataSet, fit_decay, fit_kappa, fit_loading_rate,
                         fit_tof)
from .species import (MotBeamParams, chromium_52, cm3_to_si, load_species,
                      si_to_cm3)
from .trap import IpTrapConfig, majorana_safe

DEFAULT_SEED = 20021114

# Optimum operating point: B' = 12.5 G/cm, B'' = 10.5 G/cm^2, offset ~ 0,
# 5e6 MOT atoms at 140 uK, trap cloud at 100 uK, fitted loss coefficients.
PAPER_DEFAULTS: dict[str, str] = {
    "species": "cr52",
    "b_prime_g_per_cm": "12.5",
    "b_dprime_g_per_cm2": "10.5",
    "b0_mg": "0.0",
    "gamma_d_per_s": "0.0",
    "eta": "0.3",
    "beta_ed_cm3_per_s": "6e-10",
    "beta_dd_cm3_per_s": "1.3e-11",
    "n_mot": "5e6",
    "mot_saturation": "inf",
    "mot_detuning_gamma": "-2.0",
    "t_mot_uk": "140.0",
    "t_mt_uk": "100.0",
    "sigma_mot_radial_mm": "0.1",
    "sigma_mot_axial_mm": "0.1",
    "seed": str(DEFAULT_SEED),
    "t_end_s": "10.0",
    "samples": "200",
    "n0_atoms": "0.0",
    "synth_kind": "kappa_points",
    "synth_noise": "0.1",
    "synth_points": "30",
    "fit_window_s": "0.25",
}


class ConfigError(Exception):
    """Bad configuration or input data."""


def parse_config_file(path: str | Path) -> dict[str, str]:
    cfg: dict[str, str] = {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    for lineno, line in enumerate(p.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


def _get_float(cfg: dict[str, str], key: str, default: float | None = None) -> float:
    raw = cfg.get(key, "")
    if raw == "":
        if default is None:
            raise ConfigError(f"missing required config key: {key}")
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"config key {key}: not a number: {raw!r}") from exc


def build_config(args) -> dict[str, str]:
    cfg = dict(PAPER_DEFAULTS) if args.paper_defaults else {}
    if args.config:
        cfg.update(parse_config_file(args.config))
    if not cfg:
        raise ConfigError("no configuration: pass --config or --paper-defaults")
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        cfg[key.strip()] = value.strip()
    if args.seed is not None:
        cfg["seed"] = str(args.seed)
    return cfg


def scenario_from_config(cfg: dict[str, str]) -> LoadingScenario:
    name = cfg.get("species", "cr52")
    if name in ("cr52", "52Cr", "chromium_52"):
        species = chromium_52()
    else:
        if not Path(name).exists():
            raise ConfigError(f"species file not found: {name}")
        species = load_species(name)

    trap_cfg = IpTrapConfig.from_gauss(
        _get_float(cfg, "b_prime_g_per_cm"),
        _get_float(cfg, "b_dprime_g_per_cm2"),
        _get_float(cfg, "b0_mg", 0.0),
        _get_float(cfg, "gamma_d_per_s", 0.0),
    )
    coeff = RateCoefficients(
        eta=_get_float(cfg, "eta", dynamics.DEFAULT_ETA),
        beta_ed=cm3_to_si(_get_float(cfg, "beta_ed_cm3_per_s", 0.0)),
        beta_dd=cm3_to_si(_get_float(cfg, "beta_dd_cm3_per_s", 0.0)),
        gamma_d=trap_cfg.background_loss_rate,
    )
    t_mot = _get_float(cfg, "t_mot_uk") * 1e-6
    mot = MotBeamParams(
        total_saturation=_get_float(cfg, "mot_saturation", math.inf),
        detuning=_get_float(cfg, "mot_detuning_gamma", -2.0) * species.gamma_eg,
        n_mot=_get_float(cfg, "n_mot"),
        temperature=t_mot,
        sigma_radial=_get_float(cfg, "sigma_mot_radial_mm", 0.1) * 1e-3,
        sigma_axial=_get_float(cfg, "sigma_mot_axial_mm", 0.1) * 1e-3,
    )
    t_mt = _get_float(cfg, "t_mt_uk", 0.0) * 1e-6
    if t_mt <= 0:
        t_mt = dynamics.mt_temperature_prediction(t_mot)

    v_mt = _get_float(cfg, "v_mt_cm3", 0.0)
    if v_mt > 0:
        v_mt = cm3_to_si(v_mt)
    else:
        cl = make_thermal_cloud(species, trap_cfg, n=1.0, t=t_mt)
        v_mt = occupied_volume(cl)
    v_eff = _get_float(cfg, "v_eff_cm3", 0.0)
    v_eff = cm3_to_si(v_eff) if v_eff > 0 else v_mt

    return LoadingScenario(species=species, trap=trap_cfg, coefficients=coeff,
                           mot=mot, mt_temperature=t_mt, v_mt=v_mt,
                           v_eff=v_eff)


def _write_atomic(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."),
                               prefix=target.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(rows: list[list], header: list[str]) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, bool):
                cells.append("1" if v else "0")
            elif isinstance(v, float):
                cells.append(f"{v:.12g}")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# --- subcommands ------------------------------------------------------------

def cmd_predict(cfg: dict[str, str], out: str | None) -> None:
    scen = scenario_from_config(cfg)
    r = dynamics.loading_rate(scen)
    g_ed = dynamics.gamma_ed_loss(scen.n_mot_excited,
                                  scen.coefficients.beta_ed, scen.v_eff)
    n_inf = dynamics.steady_state(scen)
    kappa = dynamics.accumulation_efficiency(scen)
    cl_off = make_thermal_cloud(scen.species, scen.trap, n=1.0,
                                t=scen.mt_temperature, include_gravity=False)
    v_off = occupied_volume(cl_off)
    tau = dynamics.effective_loading_time(n_inf, r) if r > 0 else math.inf
    t_pred = dynamics.mt_temperature_prediction(scen.mot.temperature)
    lines = [
        f"loading_rate_atoms_per_s = {r:.6g}",
        f"gamma_ed_per_s = {g_ed:.6g}",
        f"v_mt_cm3 = {si_to_cm3(scen.v_mt):.6g}",
        f"v_mt_cm3_no_gravity = {si_to_cm3(v_off):.6g}",
        f"v_eff_cm3 = {si_to_cm3(scen.v_eff):.6g}",
        f"n_steady_atoms = {n_inf:.6g}",
        f"kappa = {kappa:.6g}",
        f"tau_eff_s = {tau:.6g}",
        f"t_mt_virial_prediction_uk = {t_pred * 1e6:.6g}",
        f"majorana_safe = {majorana_safe(scen.trap)}",
    ]
    _write_atomic(out, "\n".join(lines) + "\n")


def cmd_simulate(cfg: dict[str, str], out: str | None) -> None:
    scen = scenario_from_config(cfg)
    t, n = dynamics.evolve(scen, _get_float(cfg, "n0_atoms", 0.0),
                           _get_float(cfg, "t_end_s", 10.0),
                           int(_get_float(cfg, "samples", 200)))
    _write_atomic(out, _csv([[ti, ni] for ti, ni in zip(t, n)],
                            ["t_s", "n_atoms"]))


_SWEEP_UNIT = {  # Gauss-unit boundary -> SI, per swept parameter
    "radial_gradient": ("g_per_cm", 1e-2),
    "axial_curvature": ("g_per_cm2", 1.0),
    "offset_field": ("mg", 1e-7),
}


def cmd_sweep(cfg: dict[str, str], out: str | None) -> None:
    scen = scenario_from_config(cfg)
    parameter = cfg.get("sweep_parameter", "radial_gradient")
    if parameter not in _SWEEP_UNIT:
        raise ConfigError(f"sweep_parameter must be one of {sorted(_SWEEP_UNIT)}")
    unit_name, scale = _SWEEP_UNIT[parameter]
    if cfg.get("sweep_values", ""):
        values_b = [float(v) for v in cfg["sweep_values"].split(",")]
    else:
        start = _get_float(cfg, "sweep_start")
        stop = _get_float(cfg, "sweep_stop")
        num = int(_get_float(cfg, "sweep_points", 10))
        values_b = list(np.linspace(start, stop, num))
    outputs = tuple(s.strip() for s in cfg.get(
        "sweep_outputs",
        "n_mot,n_mt_steady,loading_rate,tau_eff,v_mt,kappa").split(","))
    n_mot_pp = None
    if cfg.get("sweep_nmot_csv", ""):
        table = DataSet.from_csv(cfg["sweep_nmot_csv"])
        lookup = dict(zip(np.round(table.x, 9), table.y))
        try:
            n_mot_pp = [lookup[round(v, 9)] for v in values_b]
        except KeyError as exc:
            raise ConfigError(f"sweep_nmot_csv has no row for value {exc}")
    try:
        spec = sweeps.SweepSpec(
            swept_parameter=parameter,
            values=[v * scale for v in values_b],
            base_scenario=scen, outputs=outputs, n_mot_per_point=n_mot_pp)
    except ValueError as exc:
        raise ConfigError(str(exc))
    rows = sweeps.run_sweep(spec)

    header = [f"{parameter}_{unit_name}"] + list(outputs) + ["error"]
    csv_rows = []
    for vb, row in zip(values_b, rows):
        cells: list = [float(vb)]
        for name in outputs:
            v = row[name]
            if name == "v_mt" and isinstance(v, float):
                v = si_to_cm3(v)
            cells.append(v)
        cells.append(row["error"])
        csv_rows.append(cells)
    _write_atomic(out, _csv(csv_rows, header))


def cmd_synth(cfg: dict[str, str], out: str | None) -> None:
    scen = scenario_from_config(cfg)
    data = sweeps.synthesize_measurements(
        scen, cfg.get("synth_kind", "kappa_points"),
        noise=_get_float(cfg, "synth_noise", 0.0),
        seed=int(_get_float(cfg, "seed", DEFAULT_SEED)),
        points=int(_get_float(cfg, "synth_points", 30)))
    _write_atomic(out, _csv(
        [[x, y, s] for x, y, s in zip(data.x, data.y, data.sigma_y)],
        [data.x_label, data.y_label, f"sigma_{data.y_label}"]))


def cmd_fit(cfg: dict[str, str], kind: str, data_path: str,
            out: str | None) -> None:
    if not data_path:
        raise ConfigError("fit requires --data PATH")
    if not Path(data_path).exists():
        raise ConfigError(f"data file not found: {data_path}")
    try:
        data = (_read_kappa_csv(data_path) if kind == "kappa"
                else DataSet.from_csv(data_path))
    except ValueError as exc:
        raise ConfigError(f"{data_path}: {exc}")

    if kind == "loading-rate":
        rate = fit_loading_rate(data, _get_float(cfg, "fit_window_s", 0.25))
        text = f"loading_rate_atoms_per_s = {rate:.6g}\n"
    elif kind == "kappa":
        res = fit_kappa(data)
        text = (
            f"beta_dd_cm3_per_s = {si_to_cm3(res['beta_dd']):.6g}\n"
            f"beta_dd_sigma_cm3_per_s = {si_to_cm3(res.sigma('beta_dd')):.6g}\n"
            f"beta_ed_cm3_per_s = {si_to_cm3(res['beta_ed']):.6g}\n"
            f"beta_ed_sigma_cm3_per_s = {si_to_cm3(res.sigma('beta_ed')):.6g}\n"
            f"correlation = {res.correlation[0, 1]:.4f}\n"
            f"converged = {res.converged}\n")
    elif kind == "decay":
        v = _get_float(cfg, "v_mt_cm3", 0.0)
        if v <= 0:
            scen = scenario_from_config(cfg)
            v_si = scen.v_mt
        else:
            v_si = cm3_to_si(v)
        res = fit_decay(data, v_si)
        text = (
            f"gamma_per_s = {res['gamma']:.6g}\n"
            f"gamma_sigma_per_s = {res.sigma('gamma'):.6g}\n"
            f"beta_dd_cm3_per_s = {si_to_cm3(res['beta_dd']):.6g}\n"
            f"beta_dd_sigma_cm3_per_s = {si_to_cm3(res.sigma('beta_dd')):.6g}\n"
            f"converged = {res.converged}\n")
    elif kind == "tof":
        name = cfg.get("species", "cr52")
        species = chromium_52() if name in ("cr52", "52Cr", "chromium_52") \
            else load_species(name)
        res = fit_tof(data, species)
        text = (
            f"temperature_uk = {res['temperature'] * 1e6:.6g}\n"
            f"temperature_sigma_uk = {res.sigma('temperature') * 1e6:.6g}\n"
            f"sigma0_mm = {res['sigma0'] * 1e3:.6g}\n"
            + (f"note: {res.message}\n" if res.message else ""))
    elif kind == "profile":
        scen = scenario_from_config(cfg)
        y, z, image = _read_profile_csv(data_path)
        from .estimation import fit_column_profile
        res = fit_column_profile(y, z, image, scen.species, scen.trap)
        text = (
            f"temperature_uk = {res['temperature'] * 1e6:.6g}\n"
            f"peak_density_per_cm3 = {res['n0'] * 1e-6:.6g}\n"
            f"center_y_mm = {res['center_y'] * 1e3:.6g}\n"
            f"center_z_mm = {res['center_z'] * 1e3:.6g}\n"
            f"converged = {res.converged}\n")
    else:
        raise ConfigError(f"unknown fit kind: {kind}")
    _write_atomic(out, text)


def _read_kappa_csv(path: str) -> DataSet:
    """Kappa data with columns located by header name.

    Accepts synth output (abscissa, kappa, sigma_kappa), plain 3-column
    CSV, and sweep output, whose extra columns and error field would break
    positional parsing; rows without usable numbers are skipped.
    """
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ConfigError(f"{path}: 0 data rows")
    header = [c.strip() for c in lines[0].split(",")]
    if "kappa" not in header:
        return DataSet.from_csv(path)
    iy = header.index("kappa")
    ix = next((header.index(n) for n in
               ("rv_over_nmot2_m3_per_s", "kappa_abscissa") if n in header),
              None)
    if ix is None:
        raise ConfigError(f"{path}: no abscissa column for the kappa fit")
    isig = header.index("sigma_kappa") if "sigma_kappa" in header else None
    xs, ys, ss = [], [], []
    for line in lines[1:]:
        cells = [c.strip() for c in line.split(",")]
        try:
            x = float(cells[ix])
            y = float(cells[iy])
            s = float(cells[isig]) if isig is not None else abs(y) * 1e-3
        except (ValueError, IndexError):
            continue
        if not (math.isfinite(x) and math.isfinite(y)):
            continue
        xs.append(x)
        ys.append(y)
        ss.append(max(s, 1e-300))
    if len(xs) < 3:
        raise ConfigError(f"{path}: fewer than 3 usable data rows")
    return DataSet(np.array(xs), np.array(ys), np.array(ss),
                   x_label=header[ix], y_label="kappa")


def _read_profile_csv(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Long-format profile table: y_mm, z_mm, column_density columns."""
    rows = []
    header = None
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = line
            continue
        rows.append([float(c) for c in line.split(",")])
    if not rows:
        raise ConfigError(f"no data rows in {path}")
    arr = np.asarray(rows, float)
    y = np.unique(arr[:, 0]) * 1e-3
    z = np.unique(arr[:, 1]) * 1e-3
    if y.size * z.size != arr.shape[0]:
        raise ConfigError("profile table is not a complete y/z grid")
    image = np.full((y.size, z.size), np.nan)
    yi = np.searchsorted(y, arr[:, 0] * 1e-3)
    zi = np.searchsorted(z, arr[:, 1] * 1e-3)
    image[yi, zi] = arr[:, 2]
    return y, z, image


# --- entry point ------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cliptrap",
        description="Continuously loaded Ioffe-Pritchard trap toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_data in (("predict", False), ("simulate", False),
                             ("sweep", False), ("synth", False),
                             ("fit", True)):
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--paper-defaults", action="store_true",
                       help="start from the built-in optimum operating point")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        if needs_data:
            p.add_argument("kind", choices=("loading-rate", "kappa", "decay",
                                            "tof", "profile"))
            p.add_argument("--data", default=None, help="input data CSV")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "predict":
            cmd_predict(cfg, args.out)
        elif args.command == "simulate":
            cmd_simulate(cfg, args.out)
        elif args.command == "sweep":
            cmd_sweep(cfg, args.out)
        elif args.command == "synth":
            cmd_synth(cfg, args.out)
        elif args.command == "fit":
            cmd_fit(cfg, args.kind, args.data, args.out)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, RuntimeError, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
