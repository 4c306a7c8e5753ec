"""Discrete Caccioppoli (energy) inequality on recorded solutions.

A probe fixes a space-time cylinder, a level k, a sign, the spatial cutoff
eta(x) = prod_s eta_s(x_s)^(p_s) and a time cutoff phi vanishing at the
bottom of the window.  Spatial integrals are cell sums times the cell
volume, time integrals use the trapezoid rule over the snapshot times, and
spatial derivatives of the solution are forward differences.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq

from .grid import AnisotropicCube, GridError, GridSpec, cell_sum, restrict_to_cylinder
from .kernels import signed_power

SCHEMA_VERSION = 1
MIN_SNAPSHOTS = 8


class EnergyError(ValueError):
    pass


def smoothstep(z):
    """Quintic 0 -> 1 transition, C^2 at both ends."""
    z = np.clip(z, 0.0, 1.0)
    return z**3 * (10.0 - 15.0 * z + 6.0 * z * z)


def smoothstep_prime(z):
    z = np.asarray(z, dtype=float)
    inside = (z > 0.0) & (z < 1.0)
    return np.where(inside, 30.0 * z * z * (1.0 - z) ** 2, 0.0)


@dataclass(frozen=True)
class EnergyProbe:
    """Cylinder K_r(center) x (t_top - duration, t_top], level k and cutoffs.

    ``p`` is in grid-axis order.  eta_s equals 1 on the inner ``sigma``
    fraction of each half-extent and falls to 0 at the cube face; phi rises
    from 0 at the window start to 1 after the ``ramp`` fraction of it.
    """

    center: tuple[float, ...]
    r: float
    p: tuple[float, ...]
    alpha: float
    t_top: float
    k: float
    sign: str = "plus"
    duration: float | None = None
    sigma: float = 0.5
    ramp: float = 0.5
    intrinsic: bool = True

    def __post_init__(self):
        if self.sign not in ("plus", "minus"):
            raise EnergyError(f"sign must be 'plus' or 'minus', got {self.sign!r}")
        if not 0.0 <= self.sigma < 1.0:
            raise EnergyError("sigma must lie in [0, 1)")
        if not 0.0 < self.ramp <= 1.0:
            raise EnergyError("ramp must lie in (0, 1]")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "p", tuple(float(q) for q in self.p))

    @property
    def cube(self) -> AnisotropicCube:
        return AnisotropicCube(self.center, self.r, self.p, self.intrinsic)

    @property
    def window(self) -> tuple[float, float]:
        dur = self.r if self.duration is None else self.duration
        return (self.t_top - dur, self.t_top)

    def with_level(self, k: float) -> "EnergyProbe":
        from dataclasses import replace

        return replace(self, k=float(k))

    # per-axis profiles
    def _z(self, axis: int, x):
        rho = self.cube.extents[axis]
        return (rho - np.abs(x - self.center[axis])) / ((1.0 - self.sigma) * rho), (1.0 - self.sigma) * rho

    def eta_axis(self, axis: int, x):
        z, _ = self._z(axis, x)
        return smoothstep(z)

    def eta_axis_prime(self, axis: int, x):
        z, width = self._z(axis, x)
        return smoothstep_prime(z) * (-np.sign(x - self.center[axis])) / width

    def phi(self, t):
        lo, hi = self.window
        return smoothstep((np.asarray(t, dtype=float) - lo) / (self.ramp * (hi - lo)))

    def phi_prime(self, t):
        lo, hi = self.window
        w = self.ramp * (hi - lo)
        return smoothstep_prime((np.asarray(t, dtype=float) - lo) / w) / w


@dataclass
class EnergyReport:
    lhs_gradient: float
    lhs_sup: float
    rhs_level: float
    rhs_time: float
    ratio: float | None
    vacuous: bool
    violation_candidate: bool
    n_times: int
    k: float
    sign: str

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class _Block:
    """Solution values and cutoffs on the cylinder cells plus one cell of padding."""

    u: np.ndarray  # (n_times, *block)
    times: np.ndarray
    spec: GridSpec
    coords: list
    eta_axes: list
    deta_axes: list
    cell_volume: float


def _block(snapshots, probe: EnergyProbe) -> _Block:
    if not snapshots:
        raise EnergyError("no snapshots given")
    spec = snapshots[0][1].spec
    if len(probe.p) != spec.dim or len(probe.center) != spec.dim:
        raise EnergyError("probe dimension does not match the snapshots")
    times = np.array([t for t, _ in snapshots], dtype=float)
    lo, hi = probe.window
    view = restrict_to_cylinder(spec, times, probe.cube, hi, hi - lo)
    if view.time.size < MIN_SNAPSHOTS:
        raise EnergyError(f"need at least {MIN_SNAPSHOTS} snapshots inside the window, found {view.time.size}")
    # one padding cell per side keeps forward differences at the cube faces exact (eta = 0 there)
    sl = tuple(slice(s.start - 1, s.stop + 1) for s in view.space)
    u = np.stack([snapshots[k][1].values[sl] for k in view.time])
    coords, eta_axes, deta_axes = [], [], []
    for i, s in enumerate(sl):
        x = spec.centers(i)[s]
        shp = [1] * spec.dim
        shp[i] = x.size
        coords.append(x)
        eta_axes.append(probe.eta_axis(i, x).reshape(shp))
        deta_axes.append(probe.eta_axis_prime(i, x).reshape(shp))
    return _Block(u, times[view.time], spec, coords, eta_axes, deta_axes, spec.cell_volume)


def _eta(block: _Block, p) -> np.ndarray:
    out = 1.0
    for e, q in zip(block.eta_axes, p):
        out = out * e**q
    return out


def _d_eta_root(block: _Block, p, j: int) -> np.ndarray:
    """d_j eta^(1/p_j) = eta_j'(x_j) prod_(s != j) eta_s^(p_s / p_j)."""
    out = block.deta_axes[j]
    for s, (e, q) in enumerate(zip(block.eta_axes, p)):
        if s != j:
            out = out * e ** (q / p[j])
    return out


def _forward(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Forward difference along ``axis`` (last cell uses a zero neighbour; eta vanishes there)."""
    nxt = np.zeros_like(a)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    src[axis] = slice(1, None)
    dst[axis] = slice(0, -1)
    nxt[tuple(dst)] = a[tuple(src)]
    return (nxt - a) / h


def _space_integral(block: _Block, a: np.ndarray) -> float:
    return block.cell_volume * cell_sum(a)


def _time_integral(times: np.ndarray, vals) -> float:
    return float(np.trapezoid(np.asarray(vals, dtype=float), times))


def evaluate_energy(snapshots, probe: EnergyProbe) -> EnergyReport:
    """Both sides of the discrete energy inequality for one probe."""
    blk = _block(snapshots, probe)
    p = probe.p
    N = len(p)
    eta = _eta(blk, p)
    phi = probe.phi(blk.times)
    dphi_plus = np.maximum(probe.phi_prime(blk.times), 0.0)
    e = 0.5 * (probe.alpha + 1.0)
    k = probe.k
    ke = float(signed_power(k, e)) if k != 0 else 0.0
    d_root = [_d_eta_root(blk, p, j) for j in range(N)]
    h = blk.spec.spacing

    grad_t, sup_t, level_t, time_t = [], [], [], []
    for n in range(blk.times.size):
        u = blk.u[n]
        if probe.sign == "plus":
            active = u > k
            trunc = np.where(active, u - k, 0.0)
            bump = np.where(active, np.asarray(signed_power(u, e)) - ke, 0.0)
        else:
            active = u < k
            trunc = np.where(active, k - u, 0.0)
            bump = np.where(active, ke - np.asarray(signed_power(u, e)), 0.0)
        te = trunc * eta
        g = 0.0
        lv = 0.0
        for j in range(N):
            g += _space_integral(blk, np.abs(_forward(te, j, h[j])) ** p[j])
            lv += _space_integral(blk, trunc ** p[j] * np.abs(d_root[j]) ** p[j])
        b2 = _space_integral(blk, bump * bump * eta)
        grad_t.append(g * phi[n])
        level_t.append(lv * phi[n])
        sup_t.append(b2 * phi[n])
        time_t.append(b2 * dphi_plus[n])

    lhs_g = _time_integral(blk.times, grad_t)
    lhs_s = float(max(sup_t))
    rhs_l = _time_integral(blk.times, level_t)
    rhs_t = _time_integral(blk.times, time_t)
    lhs, rhs = lhs_g + lhs_s, rhs_l + rhs_t
    vacuous = lhs == 0.0 and rhs == 0.0
    return EnergyReport(
        lhs_gradient=lhs_g,
        lhs_sup=lhs_s,
        rhs_level=rhs_l,
        rhs_time=rhs_t,
        ratio=(lhs / rhs) if rhs > 0 else None,
        vacuous=bool(vacuous),
        violation_candidate=bool(rhs == 0.0 and lhs > 0.0),
        n_times=int(blk.times.size),
        k=k,
        sign=probe.sign,
    )


def level_sweep(snapshots, probe: EnergyProbe, fractions=(0.1, 0.3, 0.5, 0.7)) -> dict:
    """Probes at k = fraction * max u on the cylinder; reports the fitted constant."""
    blk = _block(snapshots, probe)
    umax = float(blk.u.max())
    reports = [evaluate_energy(snapshots, probe.with_level(f * umax)) for f in fractions]
    lhs_g = [r.lhs_gradient for r in reports]
    lhs_s = [r.lhs_sup for r in reports]
    ratios = [r.ratio for r in reports if r.ratio is not None]
    mono = all(lhs_g[i + 1] <= lhs_g[i] for i in range(len(reports) - 1)) and all(
        lhs_s[i + 1] <= lhs_s[i] for i in range(len(reports) - 1)
    )
    return {
        "schema_version": SCHEMA_VERSION,
        "max_u": umax,
        "fractions": list(fractions),
        "reports": [r.as_dict() for r in reports],
        "fitted_constant": max(ratios) if ratios else None,
        "all_finite": bool(all(r.ratio is not None and math.isfinite(r.ratio) for r in reports)),
        "lhs_monotone_in_k": bool(mono),
    }


# ------------------------------------------------------------ general formula


@dataclass(frozen=True)
class FSpec:
    """f(s) = (s - k)_+  (``linear_truncation``) or (s^2 + eps^2)^((mu-1)/2) s (``regularized_power``)."""

    family: str
    k: float = 0.0
    mu: float = 1.0
    eps: float = 0.0

    def __post_init__(self):
        if self.family not in ("linear_truncation", "regularized_power"):
            raise EnergyError(f"unsupported f family {self.family!r}")
        if self.family == "regularized_power":
            if not self.mu > 0:
                raise EnergyError("mu must be positive")
            if self.eps == 0.0 and self.mu != 1.0:
                raise EnergyError("eps = 0 is only allowed for mu = 1 (f' must stay positive)")

    def f(self, s):
        s = np.asarray(s, dtype=float)
        if self.family == "linear_truncation":
            return np.maximum(s - self.k, 0.0)
        if self.eps == 0.0:
            return s.copy()
        return (s * s + self.eps**2) ** (0.5 * (self.mu - 1.0)) * s

    def f_prime(self, s):
        s = np.asarray(s, dtype=float)
        if self.family == "linear_truncation":
            return (s > self.k).astype(float)
        if self.eps == 0.0:
            return np.ones_like(s)
        q = s * s + self.eps**2
        return q ** (0.5 * (self.mu - 3.0)) * (self.mu * s * s + self.eps**2)

    def g(self, V, alpha: float):
        """g(V) = f(|V|^(1/alpha - 1) V)."""
        return self.f(signed_power(np.asarray(V, dtype=float), 1.0 / alpha))

    def base_point(self, alpha: float) -> float:
        if self.family == "linear_truncation" and self.k > 0:
            return float(signed_power(self.k, alpha))
        return 0.0


class GTable:
    """G(V) = int_{V0}^V g by cumulative trapezoid on a fine table."""

    def __init__(self, fspec: FSpec, alpha: float, vmin: float, vmax: float, n: int = 200_001):
        v0 = fspec.base_point(alpha)
        lo, hi = min(vmin, v0), max(vmax, v0)
        if hi == lo:
            hi = lo + 1.0
        grid = np.linspace(lo, hi, n)
        grid = np.union1d(grid, [v0])
        gv = fspec.g(grid, alpha)
        if fspec.family == "linear_truncation":
            # g vanishes below the base point; pin it so the round trip k -> k^alpha -> k cannot leak
            gv[grid <= v0] = 0.0
        cum = cumulative_trapezoid(gv, grid, initial=0.0)
        cum -= np.interp(v0, grid, cum)
        self.grid, self.cum = grid, cum

    def __call__(self, V):
        return np.interp(V, self.grid, self.cum)


def prototype_gamma(p) -> float:
    """Smallest gamma for which Young's inequality closes the general formula for the prototype flux.

    Per axis one needs ((p_i - 1) / (1 - 1/gamma))^(p_i - 1) <= gamma.
    """

    def need(gamma, q):
        return ((q - 1.0) / (1.0 - 1.0 / gamma)) ** (q - 1.0) - gamma

    out = 1.0
    for q in p:
        out = max(out, brentq(need, 1.0 + 1e-12, 1e6, args=(q,)) if need(1e6, q) < 0 else math.inf)
    return out


def general_formula_check(snapshots, fspec: FSpec, probe: EnergyProbe, gamma: float | None = None) -> dict:
    """Both sides of the general testing formula on [window start, window end].

    LHS = int eta phi G(v(tau2)) + (1/gamma) iint sum |d_i u|^p_i f'(u) eta phi
    RHS = gamma iint chi(grad u != 0) sum |f(u)|^p_i f'(u)^(1-p_i) |d_i eta^(1/p_i)|^p_i phi
          + int eta phi G(v(tau1)) + iint eta phi' G(v)
    with v = |u|^(alpha-1) u.  ``slack`` = (RHS - LHS) / RHS (0 when both vanish).
    """
    blk = _block(snapshots, probe)
    p = probe.p
    N = len(p)
    alpha = probe.alpha
    gamma = prototype_gamma(p) if gamma is None else float(gamma)
    eta = _eta(blk, p)
    phi = probe.phi(blk.times)
    dphi = probe.phi_prime(blk.times)
    d_root = [np.abs(_d_eta_root(blk, p, j)) for j in range(N)]
    h = blk.spec.spacing
    V_all = np.asarray(signed_power(blk.u, alpha))
    G = GTable(fspec, alpha, float(V_all.min()), float(V_all.max()))

    ell, cross, gterm, gval = [], [], [], []
    for n in range(blk.times.size):
        u = blk.u[n]
        fu = fspec.f(u)
        fp = fspec.f_prime(u)
        Gv = G(V_all[n])
        grads = [_forward(u, j, h[j]) for j in range(N)]
        nonzero = np.zeros(u.shape, dtype=bool)
        for gj in grads:
            nonzero |= gj != 0.0
        e_sum = 0.0
        c_sum = 0.0
        safe_fp = np.where(fp > 0, fp, 1.0)
        for j in range(N):
            e_sum += _space_integral(blk, np.abs(grads[j]) ** p[j] * fp * eta)
            cj = np.where(nonzero & (fu != 0.0), np.abs(fu) ** p[j] * safe_fp ** (1.0 - p[j]), 0.0)
            c_sum += _space_integral(blk, cj * d_root[j] ** p[j])
        ell.append(e_sum * phi[n])
        cross.append(c_sum * phi[n])
        gi = _space_integral(blk, eta * Gv)
        gval.append(gi)
        gterm.append(gi * dphi[n])

    lhs = phi[-1] * gval[-1] + _time_integral(blk.times, ell) / gamma
    rhs = gamma * _time_integral(blk.times, cross) + phi[0] * gval[0] + _time_integral(blk.times, gterm)
    if rhs == 0.0 and lhs == 0.0:
        slack = 0.0
    elif rhs > 0:
        slack = (rhs - lhs) / rhs
    else:
        slack = -math.inf
    return {
        "schema_version": SCHEMA_VERSION,
        "family": fspec.family,
        "gamma": gamma,
        "lhs": lhs,
        "rhs": rhs,
        "slack": slack,
        "n_times": int(blk.times.size),
    }
