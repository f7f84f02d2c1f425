"""Least-squares machinery and the toolkit's fitting procedures.

The core engine is a damped Gauss-Newton iteration (Levenberg-style
damping, numeric Jacobian) that reports covariance, correlation and a
convergence flag.  Positivity-constrained rate coefficients are fitted in
log space; their covariance is mapped back with the delta method.
Only statistical uncertainty is reported; systematic density calibration
errors are outside the fitter's scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import decay, kappa_of_abscissa
from .species import BOLTZMANN, Species
from .trap import IpTrapConfig

_MAX_ITER = 200
_STEP_REL = 1e-6
_STEP_ABS = 1e-12
_PTOL = 1e-9
_RTOL = 1e-12


@dataclass
class DataSet:
    """Measured or synthetic (x, y, sigma_y) points with axis labels."""

    x: np.ndarray
    y: np.ndarray
    sigma_y: np.ndarray
    x_label: str = "x"
    y_label: str = "y"

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, float)
        self.y = np.asarray(self.y, float)
        self.sigma_y = np.asarray(self.sigma_y, float)
        if not (self.x.shape == self.y.shape == self.sigma_y.shape):
            raise ValueError("x, y and sigma_y must have identical shapes")
        if np.any(self.sigma_y <= 0):
            raise ValueError("all sigma_y must be positive")

    def __len__(self) -> int:
        return self.x.size

    def to_csv(self, path: str | Path) -> None:
        header = f"{self.x_label},{self.y_label},sigma_{self.y_label}"
        lines = [header]
        for xi, yi, si in zip(self.x, self.y, self.sigma_y):
            lines.append(f"{xi:.12g},{yi:.12g},{si:.12g}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "DataSet":
        rows = []
        header = None
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in line.split(",")]
                continue
            rows.append([float(c) for c in line.split(",")])
        if header is None or not rows:
            raise ValueError(f"no data rows in {path}")
        data = np.asarray(rows, float)
        if data.shape[1] < 3:
            raise ValueError("expected at least 3 columns (x, y, sigma_y)")
        # Optional 4th column: mask, nonzero keeps the row.
        if len(header) >= 4 and header[3] == "mask":
            data = data[data[:, 3] != 0]
            if data.shape[0] == 0:
                raise ValueError("mask column excluded every row")
        return cls(x=data[:, 0], y=data[:, 1], sigma_y=data[:, 2],
                   x_label=header[0], y_label=header[1])


@dataclass
class FitResult:
    """Estimated parameters with covariance and fit diagnostics."""

    names: tuple[str, ...]
    values: np.ndarray
    covariance: np.ndarray
    correlation: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    units: tuple[str, ...] = ()
    message: str = ""

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def sigma(self, name: str) -> float:
        i = self.names.index(name)
        return float(math.sqrt(max(self.covariance[i, i], 0.0)))

    def report(self) -> str:
        units = self.units or ("",) * len(self.names)
        lines = ["parameter, value, sigma, unit"]
        for name, value, unit in zip(self.names, self.values, units):
            lines.append(f"{name}, {value:.6g}, {self.sigma(name):.3g}, {unit}")
        lines.append(f"residual_norm = {self.residual_norm:.6g}")
        lines.append(f"iterations = {self.iterations}")
        lines.append(f"converged = {self.converged}")
        lines.append("correlation:")
        for row in self.correlation:
            lines.append("  " + " ".join(f"{v: .4f}" for v in row))
        if self.message:
            lines.append(f"note: {self.message}")
        return "\n".join(lines)


def _numeric_jacobian(fun, p: np.ndarray) -> np.ndarray:
    r0 = fun(p)
    jac = np.empty((r0.size, p.size))
    for i in range(p.size):
        h = max(_STEP_REL * abs(p[i]), _STEP_ABS)
        pp = p.copy()
        pm = p.copy()
        pp[i] += h
        pm[i] -= h
        jac[:, i] = (fun(pp) - fun(pm)) / (2 * h)
    return jac


def _covariance(jac: np.ndarray) -> np.ndarray:
    a = jac.T @ jac
    try:
        cov = np.linalg.inv(a)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(a)
    return cov


def _correlation(cov: np.ndarray) -> np.ndarray:
    sig = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    denom = np.outer(sig, sig)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.where(denom > 0, cov / denom, 0.0)
    return np.clip(corr, -1.0, 1.0)


def least_squares(model, data: DataSet, initial, bounds=None,
                  names: tuple[str, ...] | None = None,
                  units: tuple[str, ...] = ()) -> FitResult:
    """Damped Gauss-Newton fit of model(x, p) to the weighted data.

    bounds, if given, is a (lower, upper) pair of arrays; candidate steps
    are projected onto the box.  Stops on relative parameter change below
    1e-9 or relative residual change below 1e-12; after 200 iterations the
    best-so-far parameters are returned with converged = False.
    """
    p = np.asarray(initial, float).copy()
    if len(data) < p.size + 1:
        raise ValueError("need at least n_parameters + 1 data points")
    if bounds is not None:
        lo = np.asarray(bounds[0], float)
        hi = np.asarray(bounds[1], float)
        if np.any(p < lo) or np.any(p > hi):
            raise ValueError("initial parameters outside bounds")

    def project(q):
        return np.clip(q, lo, hi) if bounds is not None else q

    w = 1.0 / data.sigma_y

    def residuals(q):
        return (data.y - np.asarray(model(data.x, q), float)) * w

    r = residuals(p)
    if not np.all(np.isfinite(r)):
        raise ValueError("model not evaluable at the initial parameters")
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    jac = None
    it = 0
    for it in range(1, _MAX_ITER + 1):
        jac = _numeric_jacobian(residuals, p)
        a = jac.T @ jac
        g = jac.T @ r
        diag = np.diag(a).copy()
        diag[diag <= 0] = 1.0
        try:
            step = np.linalg.solve(a + lam * np.diag(diag), -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(a + lam * np.diag(diag), -g, rcond=None)[0]
        candidate = project(p + step)
        rc = residuals(candidate)
        cost_c = float(rc @ rc) if np.all(np.isfinite(rc)) else math.inf
        if cost_c <= cost:
            dp = np.max(np.abs(candidate - p) / np.maximum(np.abs(p), _STEP_ABS))
            dr = abs(cost - cost_c) / max(cost, 1e-300)
            p, r, cost = candidate, rc, cost_c
            lam /= 3.0
            if dp < _PTOL or dr < _RTOL:
                converged = True
                break
        else:
            lam *= 10.0

    jac = _numeric_jacobian(residuals, p)
    cov = _covariance(jac)
    names = names or tuple(f"p{i}" for i in range(p.size))
    return FitResult(names=tuple(names), values=p, covariance=cov,
                     correlation=_correlation(cov),
                     residual_norm=float(np.linalg.norm(r)),
                     iterations=it, converged=converged, units=units)


# --- specific fitting procedures -------------------------------------------


def fit_loading_rate(series: DataSet, window: float = 0.25) -> float:
    """Loading rate from an unweighted linear fit over t in [0, window] s.

    The early-time slope of the accumulation curve; the finite window
    introduces a small curvature bias toward lower values.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    sel = (series.x >= 0) & (series.x <= window)
    if np.count_nonzero(sel) < 3:
        raise ValueError("need at least 3 points inside the fit window")
    slope, _ = np.polyfit(series.x[sel], series.y[sel], 1)
    return float(slope)


def fit_kappa(data: DataSet,
              initial: tuple[float, float] = (1e-17, 1e-15)) -> FitResult:
    """Fit the accumulation-efficiency curve for (beta_dd, beta_ed).

    Data abscissa is x = R V_MT / N_MOT^2 (m^3/s).  Both coefficients are
    fitted in log space for positivity; covariance is transformed back via
    the delta method.  The two parameters act on opposite ends of the
    curve but both suppress kappa, so expect strong negative correlation.
    """
    if np.any(data.x <= 0):
        raise ValueError("abscissa values must be positive")
    if initial[0] <= 0 or initial[1] <= 0:
        raise ValueError("initial guesses must be positive")

    def model(x, q):
        return kappa_of_abscissa(x, math.exp(q[0]), math.exp(q[1]))

    res = least_squares(model, data, np.log(np.asarray(initial, float)),
                        names=("beta_dd", "beta_ed"))
    betas = np.exp(res.values)
    jac = np.diag(betas)  # d beta / d log beta
    cov = jac @ res.covariance @ jac
    return FitResult(names=res.names, values=betas, covariance=cov,
                     correlation=_correlation(cov),
                     residual_norm=res.residual_norm,
                     iterations=res.iterations, converged=res.converged,
                     units=("m^3/s", "m^3/s"))


def fit_decay(series: DataSet, v: float, n0: float | None = None) -> FitResult:
    """Fit the one- plus two-body decay curve for (gamma, beta_dd).

    v is the occupied volume; n0 defaults to the earliest sample.  beta_dd
    is fitted in log space, gamma linearly with a non-negativity bound.
    """
    if v <= 0:
        raise ValueError("v must be positive")
    order = np.argsort(series.x)
    t = series.x[order]
    y = series.y[order]
    if n0 is None:
        n0 = float(y[0])
    if n0 <= 0:
        raise ValueError("n0 must be positive")

    # Crude rate split for the starting point: late-time log slope for the
    # one-body channel, early-time excess for the two-body channel.
    t_span = max(t[-1] - t[0], 1e-12)
    tail = max(2, len(t) // 4)
    y_late = max(float(np.mean(y[-tail:])), 1e-300)
    gamma0 = max(math.log(n0 / y_late) / t_span * 0.5, 1e-6)
    r_early = max((y[0] - y[1]) / max(t[1] - t[0], 1e-12) / max(y[0], 1.0), 0.0)
    beta0 = max((r_early - gamma0) * v / (2 * n0), 1e-22)

    def model(tt, q):
        return decay(n0, q[0], math.exp(q[1]), v, tt)

    res = least_squares(model, DataSet(t, y, series.sigma_y[order]),
                        [gamma0, math.log(beta0)],
                        bounds=([0.0, -200.0], [np.inf, 0.0]),
                        names=("gamma", "beta_dd"))
    beta = math.exp(res.values[1])
    jac = np.diag([1.0, beta])
    cov = jac @ res.covariance @ jac
    values = np.array([res.values[0], beta])
    return FitResult(names=res.names, values=values, covariance=cov,
                     correlation=_correlation(cov),
                     residual_norm=res.residual_norm,
                     iterations=res.iterations, converged=res.converged,
                     units=("1/s", "m^3/s"))


def fit_tof(series: DataSet, species: Species) -> FitResult:
    """Time-of-flight thermometry: sigma^2(t) = sigma0^2 + (kT/m) t^2.

    Exact weighted linear solve in t^2, no iteration.  A negative fitted
    sigma0^2 is flagged as degenerate; the temperature is still returned.
    """
    if len(series) < 2:
        raise ValueError("need at least 2 expansion times")
    u = series.x ** 2
    v = series.y ** 2
    # var(sigma^2) = (2 sigma sigma_err)^2
    w = 1.0 / np.maximum(2.0 * np.abs(series.y) * series.sigma_y, 1e-300)
    a = np.column_stack([np.ones_like(u), u]) * w[:, None]
    b = v * w
    coef, *_ = np.linalg.lstsq(a, b, rcond=None)
    cov_lin = _covariance(a)
    intercept, slope = coef
    temperature = species.mass * slope / BOLTZMANN
    degenerate = intercept < 0
    sigma0 = math.sqrt(max(intercept, 0.0))
    # Delta method: d sigma0 / d intercept = 1 / (2 sigma0).
    d0 = 1.0 / (2 * sigma0) if sigma0 > 0 else 0.0
    jac = np.diag([d0, species.mass / BOLTZMANN])
    cov = jac @ cov_lin @ jac
    resid = (v - (intercept + slope * u)) * w
    return FitResult(names=("sigma0", "temperature"),
                     values=np.array([sigma0, temperature]),
                     covariance=cov, correlation=_correlation(cov),
                     residual_norm=float(np.linalg.norm(resid)),
                     iterations=1, converged=True,
                     units=("m", "K"),
                     message="degenerate: fitted sigma0^2 < 0" if degenerate else "")


def fit_column_profile(y: np.ndarray, z: np.ndarray, image: np.ndarray,
                       species: Species, trap: IpTrapConfig,
                       initial_temperature: float | None = None) -> FitResult:
    """Fit the projected trap profile for (n0, temperature, center_y, center_z).

    y, z are the grid coordinate vectors (m) and image the column density
    sampled on their outer product, shape (len(y), len(z)).  All three
    scale lengths derive from the single temperature given species + trap.
    """
    from .cloud import ThermalCloud, column_density
    from .species import GRAVITY

    y = np.asarray(y, float)
    z = np.asarray(z, float)
    image = np.asarray(image, float)
    if image.shape != (y.size, z.size):
        raise ValueError("image shape must be (len(y), len(z))")
    yy, zz = np.meshgrid(y, z, indexing="ij")

    mu = species.magnetic_moment
    peak = float(np.max(image))
    if peak <= 0:
        raise ValueError("image contains no signal")

    if initial_temperature is None:
        initial_temperature = 100e-6

    def cloud_for(t_k, n0):
        kt = BOLTZMANN * t_k
        return ThermalCloud(atom_number=1.0, temperature=t_k,
                            xi1=kt / (mu * trap.radial_gradient),
                            xi2=kt / (species.mass * GRAVITY),
                            sigma_z=math.sqrt(kt / (mu * trap.axial_curvature)),
                            peak_density=n0)

    def model(_x, q):
        n0, t_k, y0, z0 = math.exp(q[0]), math.exp(q[1]), q[2], q[3]
        cl = cloud_for(t_k, n0)
        return column_density(cl, yy - y0, zz - z0).ravel()

    xi1_guess = BOLTZMANN * initial_temperature / (mu * trap.radial_gradient)
    n0_guess = peak / (2 * xi1_guess)
    flat = DataSet(np.arange(image.size, dtype=float), image.ravel(),
                   np.full(image.size, max(peak * 1e-3, 1e-300)))
    res = least_squares(model, flat,
                        [math.log(n0_guess), math.log(initial_temperature),
                         0.0, 0.0],
                        names=("n0", "temperature", "center_y", "center_z"))
    n0, t_k = math.exp(res.values[0]), math.exp(res.values[1])
    jac = np.diag([n0, t_k, 1.0, 1.0])
    cov = jac @ res.covariance @ jac
    values = np.array([n0, t_k, res.values[2], res.values[3]])
    return FitResult(names=res.names, values=values, covariance=cov,
                     correlation=_correlation(cov),
                     residual_norm=res.residual_norm,
                     iterations=res.iterations, converged=res.converged,
                     units=("1/m^3", "K", "m", "m"))
