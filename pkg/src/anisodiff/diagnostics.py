"""Time-series I/O, power-law fits and the scaling-law verdicts."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .grid import AnisotropicCube, GridError, restrict_to_cylinder
from .params import DerivedExponents

SCHEMA_VERSION = 1
BASE_COLUMNS = ("step", "t", "dt", "mass_v", "l1_u", "lalpha1_u", "linf_u")


class DiagnosticError(ValueError):
    """A check was asked to run outside its preconditions."""


def csv_columns(dim: int) -> list[str]:
    return list(BASE_COLUMNS) + [f"supp_{i + 1}" for i in range(dim)]


class CsvWriter:
    def __init__(self, path, dim: int):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(csv_columns(dim))

    def write(self, rec) -> None:
        row = [rec.step] + [repr(float(x)) for x in (rec.t, rec.dt, rec.mass_v, rec.l1_u, rec.lalpha1_u, rec.linf_u)]
        row += [repr(float(x)) for x in rec.supp]
        self._w.writerow(row)
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


@dataclass
class Series:
    """Column view of a solver time series."""

    step: np.ndarray
    t: np.ndarray
    dt: np.ndarray
    mass_v: np.ndarray
    l1_u: np.ndarray
    lalpha1_u: np.ndarray
    linf_u: np.ndarray
    supp: np.ndarray  # shape (n_records, N), user axis order

    @property
    def dim(self) -> int:
        return self.supp.shape[1]

    def __len__(self) -> int:
        return len(self.t)

    @classmethod
    def from_records(cls, records) -> "Series":
        cols = {k: np.array([getattr(r, k) for r in records], dtype=float) for k in BASE_COLUMNS}
        cols["step"] = cols["step"].astype(int)
        supp = np.array([r.supp for r in records], dtype=float)
        return cls(supp=supp, **cols)

    @classmethod
    def read_csv(cls, path) -> "Series":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        dim = len(header) - len(BASE_COLUMNS)
        if dim < 1 or header != csv_columns(dim):
            raise DiagnosticError(f"{path}: unexpected columns {header}")
        data = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(len(body), len(header))
        cols = {k: data[:, j] for j, k in enumerate(BASE_COLUMNS)}
        cols["step"] = cols["step"].astype(int)
        return cls(supp=data[:, len(BASE_COLUMNS):], **cols)

    def window_mask(self, window) -> np.ndarray:
        lo, hi = window
        return (self.t >= lo * (1 - 1e-12)) & (self.t <= hi * (1 + 1e-12))


def last_decade(series: Series) -> tuple[float, float]:
    t_end = float(series.t[-1])
    return (t_end / 10.0, t_end)


@dataclass
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    n_points: int


def fit_power_law(t, y, window=None, min_points: int = 5) -> FitResult:
    """Least-squares fit of log y = intercept + slope * log t inside ``window``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is None:
        window = (float(t.min()), float(t.max()))
    lo, hi = window
    m = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
    t, y = t[m], y[m]
    if t.size < min_points:
        raise DiagnosticError(f"need at least {min_points} points in window {window}, got {t.size}")
    if np.any(y <= 0) or np.any(t <= 0):
        raise DiagnosticError("power-law fit needs t > 0 and y > 0 in the window")
    X, Y = np.log(t), np.log(y)
    xm, ym = X.mean(), Y.mean()
    sxx = float(np.sum((X - xm) ** 2))
    if sxx == 0:
        raise DiagnosticError("all fit times coincide")
    slope = float(np.sum((X - xm) * (Y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_tot = float(np.sum((Y - ym) ** 2))
    ss_res = float(np.sum((Y - intercept - slope * X) ** 2))
    # a flat series has ss_tot at rounding level; call it a perfect fit
    flat = ss_tot <= Y.size * (1e-12 * max(1.0, abs(ym))) ** 2
    r2 = 1.0 if flat else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return FitResult(slope, intercept, r2, (float(lo), float(hi)), int(t.size))


def _rel(measured: float, target: float) -> float:
    return abs(measured - target) / abs(target)


def check_ultracontractivity(series: Series, d: DerivedExponents, window=None, tol: float = 0.15) -> dict:
    """Compare the decay of max|u| with t^(-N/lambda_1)."""
    if not d.ultracontractive:
        raise DiagnosticError("L1-Linf smoothing needs p_bar (1 + 1/N) > alpha + 1; not satisfied")
    if not d.lambda_1 > 0:
        raise DiagnosticError("lambda_1 must be positive")
    window = window or last_decade(series)
    fit = fit_power_law(series.t, series.linf_u, window)
    target = -d.mass_decay_exponent
    m = series.window_mask(window)
    l1_0 = float(series.l1_u[0])
    pref = series.linf_u[m] * series.t[m] ** d.mass_decay_exponent / l1_0**d.mass_gain_exponent
    out = {
        "schema_version": SCHEMA_VERSION,
        "check": "ultracontractivity",
        "target_slope": target,
        "fit": asdict(fit),
        "relative_deviation": _rel(fit.slope, target),
        "tolerance": tol,
        "prefactor_max": float(pref.max()),
        "prefactor_min": float(pref.min()),
        "prefactor_bounded": bool(np.all(np.isfinite(pref)) and pref.min() > 0),
    }
    if d.selfsimilar_decay_exponent is not None:
        ss = -d.selfsimilar_decay_exponent
        out["selfsimilar_slope"] = ss
        out["selfsimilar_relative_deviation"] = _rel(fit.slope, ss)
    out["passed"] = bool(out["relative_deviation"] <= tol and out["prefactor_bounded"])
    return out


def check_support_law(
    series: Series,
    d: DerivedExponents,
    R0: float,
    window=None,
    tol: float = 0.20,
    aborted: bool = False,
    supp=None,
) -> dict:
    """Per-axis growth of (R_i(t) - 2 R0) against the predicted exponents.

    ``supp`` overrides the support columns (e.g. half-widths measured at a
    different threshold during the same run).
    """
    if not d.slow_diffusion:
        raise DiagnosticError("support law needs the slow-diffusion window; not satisfied")
    if aborted:
        raise DiagnosticError("series comes from an aborted run; its window is truncated")
    window = window or last_decade(series)
    supp = series.supp if supp is None else np.asarray(supp, dtype=float)
    m = series.window_mask(window)
    if np.any(supp[m] < 4.0 * R0):
        raise DiagnosticError(f"support must be at least 4 R0 = {4 * R0:g} on every axis inside the window")
    anis = d.anis
    targets = anis.to_user_order(list(d.support_exponent))
    p_user = anis.p_user
    axes = []
    for i in range(series.dim):
        fit = fit_power_law(series.t, supp[:, i] - 2.0 * R0, window)
        axes.append(
            {
                "axis": i + 1,
                "p": p_user[i],
                "target_slope": targets[i],
                "fit": asdict(fit),
                "relative_deviation": _rel(fit.slope, targets[i]),
            }
        )
    if d.selfsimilar_support_exponent is not None:
        ss = anis.to_user_order(list(d.selfsimilar_support_exponent))
        for a, s in zip(axes, ss):
            a["selfsimilar_slope"] = s
    by_p = sorted(axes, key=lambda a: a["p"])
    distinct = all(by_p[k]["p"] < by_p[k + 1]["p"] for k in range(len(by_p) - 1))
    targets_decreasing = all(by_p[k]["target_slope"] > by_p[k + 1]["target_slope"] for k in range(len(by_p) - 1))
    measured_decreasing = all(by_p[k]["fit"]["slope"] > by_p[k + 1]["fit"]["slope"] for k in range(len(by_p) - 1))
    within = all(a["relative_deviation"] <= tol for a in axes)
    return {
        "schema_version": SCHEMA_VERSION,
        "check": "support_law",
        "R0": R0,
        "window": list(window),
        "axes": axes,
        "tolerance": tol,
        "targets_strictly_decreasing": targets_decreasing if distinct else None,
        "measured_strictly_decreasing": measured_decreasing if distinct else None,
        "passed": bool(within and (measured_decreasing or not distinct)),
    }


def check_rectangle_optimality(
    series: Series,
    d: DerivedExponents,
    window=None,
    threshold_abs: float = 0.0,
    domain_volume: float = 0.0,
    lower_ratio: float = 0.01,
) -> dict:
    """Hoelder chain ||u||_1 <= ||u||_inf |supp box| and the size of the upper ratio."""
    window = window or last_decade(series)
    box = np.prod(2.0 * series.supp, axis=1)
    slack = threshold_abs * domain_volume
    lower_ok = series.l1_u <= series.linf_u * box + slack + 1e-14 * series.l1_u
    m = series.window_mask(window)
    ratio = series.linf_u[m] * box[m] / series.l1_u[0]
    gamma = float(ratio.max())
    return {
        "schema_version": SCHEMA_VERSION,
        "check": "rectangle_optimality",
        "lower_chain_holds": bool(np.all(lower_ok)),
        "lower_chain_violations": int(np.sum(~lower_ok)),
        "upper_ratio_min": float(ratio.min()),
        "upper_ratio_max": gamma,
        "empirical_gamma": gamma,
        "lower_bound": lower_ratio,
        "passed": bool(np.all(lower_ok) and ratio.min() >= lower_ratio and math.isfinite(gamma)),
    }


def report_boundedness_bound(snapshots, d: DerivedExponents, center, r: float, sigma: float = 0.5, t_top=None) -> dict:
    """Empirical constant in the supercritical local sup bound on Q_r.

    Evaluates c_hat = sup_{Q_{sigma r}} u / ((1-sigma)^(-(p_N/p_bar)(N+p_bar)) mean_{Q_r} u_+^P)^e
    with e = p_bar / (N (p_bar (1 + (alpha+1)/N) - P)).  Only meaningful when
    the supremum exceeds 1 (the bound is max{1, ...}).
    """
    if not d.supercritical:
        return {
            "schema_version": SCHEMA_VERSION,
            "check": "local_boundedness",
            "refused": True,
            "reason": "subcritical range: boundedness needs extra integrability u in L^m_loc",
            "m_threshold": d.m_threshold,
        }
    times = np.array([t for t, _ in snapshots])
    spec = snapshots[0][1].spec
    t_top = times[-1] if t_top is None else t_top
    p_axes = d.anis.p_user
    outer = restrict_to_cylinder(spec, times, AnisotropicCube(tuple(center), r, p_axes), t_top)
    inner = restrict_to_cylinder(spec, times, AnisotropicCube(tuple(center), sigma * r, p_axes), t_top, sigma * r)
    if outer.time.size < 2:
        raise GridError("need at least two snapshots inside the cylinder")
    P = d.P
    vals = np.array([np.mean(np.maximum(snapshots[k][1].values[outer.space], 0.0) ** P) for k in outer.time])
    tt = times[outer.time]
    mean = float(np.trapezoid(vals, tt) / (tt[-1] - tt[0]))
    sup = max(float(np.max(snapshots[k][1].values[inner.space], initial=0.0)) for k in inner.time)
    N, pb, pN = d.anis.dim, d.p_bar, d.anis.p[-1]
    expo = d.local_bound_exponent()
    base = (1.0 - sigma) ** (-(pN / pb) * (N + pb)) * mean
    bound_core = base**expo if base > 0 else 0.0
    c_hat = sup / bound_core if bound_core > 0 else (0.0 if sup == 0 else math.inf)
    return {
        "schema_version": SCHEMA_VERSION,
        "check": "local_boundedness",
        "refused": False,
        "mean_integral_uP": mean,
        "exponent": expo,
        "ess_sup_inner": sup,
        "bound_core": bound_core,
        "empirical_c": c_hat,
        "trivially_satisfied": bool(sup <= 1.0),
    }
