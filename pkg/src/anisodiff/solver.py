"""Explicit conservative time stepping for the truncated Cauchy problem.

The state is the conserved density v = |u|^(alpha-1) u on a cell-centred
grid.  One step is

    u    = u_from_v(v)
    F_i  = flux(D_i^+ u, p_i, eps)            on the n_i + 1 faces of axis i
    v   += dt * sum_i (F_i[k+1/2] - F_i[k-1/2]) / h_i

with zero extension of u outside the box.  The face-difference form makes
sum(v) * cell_volume invariant up to rounding while the solution stays away
from the boundary collar.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numba
import numpy as np

from .grid import GridFunction, GridSpec, cell_sum, norm_Lq, support_halfwidth, write_gfb1
from .kernels import u_from_v, v_from_u
from .params import Anisotropy

log = logging.getLogger(__name__)

# guard against 0 ** negative in the diffusivity factor; never enters a flux
EPS_V = 1e-300
COLLAR = 2


class SolverAbort(RuntimeError):
    exit_code = 1
    reason = "abort"


class StiffnessFloor(SolverAbort):
    exit_code = 2
    reason = "stiffness floor"


class DomainExhausted(SolverAbort):
    exit_code = 3
    reason = "domain exhausted"


class NonFiniteState(SolverAbort):
    exit_code = 4
    reason = "non-finite state"


@dataclass(frozen=True)
class InitialDatum:
    kind: str
    amplitude: float
    radii: tuple[float, ...]
    center: tuple[float, ...] | None = None

    KINDS = ("box", "cosine_bump", "gaussian_truncated")
    # truncated Gaussians are cut where the scaled radius exceeds this
    GAUSS_CUTOFF = 6.0

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown initial datum kind {self.kind!r}; expected one of {self.KINDS}")
        if any(not r > 0 for r in self.radii):
            raise ValueError(f"radii must be positive, got {self.radii}")
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        if self.center is None:
            object.__setattr__(self, "center", (0.0,) * len(self.radii))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def support_radii(self) -> np.ndarray:
        r = np.asarray(self.radii)
        return r * self.GAUSS_CUTOFF if self.kind == "gaussian_truncated" else r

    @property
    def R0(self) -> float:
        """Half side of the smallest centred cube [-R0, R0]^N containing the support."""
        return float(np.max(np.abs(self.center) + self.support_radii))

    def sample(self, spec: GridSpec) -> GridFunction:
        xs = spec.mesh()
        if len(xs) != len(self.radii):
            raise ValueError("datum dimension does not match the grid")
        if self.kind == "box":
            inside = np.ones(spec.shape, dtype=bool)
            for x, c, r in zip(xs, self.center, self.radii):
                inside = inside & (np.abs(x - c) <= r)
            vals = self.amplitude * inside
        elif self.kind == "cosine_bump":
            vals = np.full(spec.shape, float(self.amplitude))
            for x, c, r in zip(xs, self.center, self.radii):
                s = np.clip((x - c) / r, -1.0, 1.0)
                vals = vals * (0.5 * (1.0 + np.cos(np.pi * s)))
        else:
            q = sum(((x - c) / r) ** 2 for x, c, r in zip(xs, self.center, self.radii))
            vals = self.amplitude * np.exp(-0.5 * q) * (q <= self.GAUSS_CUTOFF**2)
        return GridFunction(spec, np.broadcast_to(vals, spec.shape).astype(float))


@dataclass
class SolverConfig:
    anis: Anisotropy
    grid: GridSpec
    t_end: float
    cfl: float = 0.4
    eps_grad: float = 0.0
    record_every: int = 1
    support_threshold: float = 1e-10  # relative to max |u0|
    dt_min: float = 1e-14
    snapshot_times: Sequence[float] = ()
    t_start: float = 0.0
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not (0.0 < self.cfl <= 1.0):
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.t_end > self.t_start:
            raise ValueError(f"t_end must exceed t_start, got {self.t_end} <= {self.t_start}")
        if self.eps_grad < 0:
            raise ValueError("eps_grad must be >= 0")
        if min(self.anis.p) < 2.0 and self.eps_grad <= 0.0:
            raise ValueError("eps_grad > 0 is required when some p_i < 2")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.support_threshold < 0:
            raise ValueError("support_threshold must be >= 0")
        if not self.dt_min > 0:
            raise ValueError("dt_min must be positive")
        if self.grid.dim != self.anis.dim:
            raise ValueError(f"grid is {self.grid.dim}-d but the parameters are {self.anis.dim}-d")
        st = [float(t) for t in self.snapshot_times]
        if st != sorted(st):
            raise ValueError("snapshot_times must be sorted")
        self.snapshot_times = tuple(st)

    @property
    def p_axes(self) -> tuple[float, ...]:
        """Exponents in grid-axis (user) order."""
        return self.anis.p_user


@dataclass
class TimeSeriesRecord:
    step: int
    t: float
    dt: float
    mass_v: float
    l1_u: float
    lalpha1_u: float
    linf_u: float
    supp: tuple[float, ...]


@dataclass
class RunResult:
    records: list[TimeSeriesRecord]
    snapshots: list[tuple[float, GridFunction]]
    final_v: GridFunction
    t: float
    steps: int
    abort: SolverAbort | None = None
    wall_time: float = 0.0
    u0_linf: float = 0.0
    threshold_abs: float = 0.0
    extra: dict = field(default_factory=dict)
    alpha: float = 1.0

    @property
    def final_u(self) -> GridFunction:
        return GridFunction(self.final_v.spec, u_from_v(self.final_v.values, self.alpha))


def _diffusivity_factor(v: np.ndarray, alpha: float) -> np.ndarray:
    """(1/alpha) |v|^((1-alpha)/alpha), the d u / d v factor of the time term."""
    if alpha == 1.0:
        return None
    if alpha == 0.5:
        return 2.0 * np.abs(v)
    return (1.0 / alpha) * (v * v + EPS_V * EPS_V) ** ((1.0 - alpha) / (2.0 * alpha))


@numba.njit(cache=True)
def _axis_sweep(u, div, rate, p, h, eps):
    """Accumulate one axis of flux divergence and CFL rate on (A, n, B) views."""
    A, n, B = u.shape
    inv_h = 1.0 / h
    inv_h2 = inv_h * inv_h
    c = max(p - 1.0, 1.0) if eps > 0.0 else p - 1.0
    linear = p == 2.0 and eps == 0.0
    F_prev = np.empty(B)
    a_prev = np.empty(B)
    for a in range(A):
        F_prev[:] = 0.0
        a_prev[:] = 0.0
        for k in range(n + 1):
            for b in range(B):
                left = u[a, k - 1, b] if k > 0 else 0.0
                right = u[a, k, b] if k < n else 0.0
                d = (right - left) * inv_h
                if linear:
                    F = d
                    coef = 1.0
                elif eps == 0.0:
                    ad = abs(d)
                    g = ad ** (p - 2.0) if ad > 0.0 else 0.0
                    F = g * d
                    coef = c * g
                else:
                    g = (d * d + eps * eps) ** (0.5 * (p - 2.0))
                    F = g * d
                    coef = c * g
                if k > 0:
                    div[a, k - 1, b] += (F - F_prev[b]) * inv_h
                    rate[a, k - 1, b] += (coef + a_prev[b]) * inv_h2
                F_prev[b] = F
                a_prev[b] = coef


def _as3(arr: np.ndarray, axis: int) -> np.ndarray:
    shp = arr.shape
    A = int(np.prod(shp[:axis], dtype=np.int64))
    B = int(np.prod(shp[axis + 1:], dtype=np.int64))
    return arr.reshape(A, shp[axis], B)


def divergence_and_rate(v: np.ndarray, spec: GridSpec, p: Sequence[float], alpha: float, eps: float):
    """Compiled counterpart of :func:`divergence_and_rate_numpy` (same arithmetic per face)."""
    u = np.ascontiguousarray(u_from_v(v, alpha))
    div = np.zeros_like(v)
    rate = np.zeros_like(v)
    for i, (pi, h) in enumerate(zip(p, spec.spacing)):
        _axis_sweep(_as3(u, i), _as3(div, i), _as3(rate, i), float(pi), float(h), float(eps))
    fac = _diffusivity_factor(v, alpha)
    if fac is not None:
        rate *= fac
    return div, float(rate.max(initial=0.0))


def divergence_and_rate_numpy(v: np.ndarray, spec: GridSpec, p: Sequence[float], alpha: float, eps: float):
    """Return (sum_i D_i^- F_i, max stable rate) for state ``v``.

    The rate is max over cells of factor * sum_i (a_i,left + a_i,right) / h_i^2,
    so that dt = cfl / rate.
    """
    u = u_from_v(v, alpha)
    div = np.zeros_like(v)
    rate = np.zeros_like(v)
    for i, (pi, h) in enumerate(zip(p, spec.spacing)):
        pad = [(0, 0)] * v.ndim
        pad[i] = (1, 1)
        d = np.diff(np.pad(u, pad), axis=i) / h  # n_i + 1 faces
        if pi == 2.0 and eps == 0.0:
            F = d
            a = np.ones_like(d)
        elif eps == 0.0:
            ad = np.abs(d)
            g = ad ** (pi - 2.0) if pi > 2.0 else np.where(ad > 0, ad, 1.0) ** (pi - 2.0)
            F = g * d
            a = (pi - 1.0) * g
        else:
            g = (d * d + eps * eps) ** (0.5 * (pi - 2.0))
            F = g * d
            # bound on |dF/ds| for both p < 2 and p >= 2
            a = max(pi - 1.0, 1.0) * g
        lo = [slice(None)] * v.ndim
        hi = [slice(None)] * v.ndim
        lo[i] = slice(0, -1)
        hi[i] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        div += (F[hi] - F[lo]) / h
        rate += (a[hi] + a[lo]) / (h * h)
    fac = _diffusivity_factor(v, alpha)
    if fac is not None:
        rate *= fac
    return div, float(rate.max(initial=0.0))


def step(v: GridFunction, cfg: SolverConfig, dt_cap: float = math.inf):
    """One explicit step; returns (v_next, dt)."""
    div, rate = divergence_and_rate(v.values, v.spec, cfg.p_axes, cfg.anis.alpha, cfg.eps_grad)
    dt = cfg.cfl / rate if rate > 0 else math.inf
    dt = min(dt, dt_cap)
    if not math.isfinite(dt):
        # zero state (or zero flux everywhere): nothing evolves
        dt = dt_cap if math.isfinite(dt_cap) else 0.0
        return GridFunction(v.spec, v.values.copy()), dt
    return GridFunction(v.spec, v.values + dt * div), dt


def make_record(step_no: int, t: float, dt: float, v: np.ndarray, spec: GridSpec, alpha: float, threshold: float):
    u = u_from_v(v, alpha)
    gu = GridFunction.__new__(GridFunction)
    gu.spec, gu.values = spec, u
    return TimeSeriesRecord(
        step=step_no,
        t=t,
        dt=dt,
        mass_v=spec.cell_volume * cell_sum(v),
        l1_u=norm_Lq(gu, 1.0),
        lalpha1_u=norm_Lq(gu, alpha + 1.0),
        linf_u=float(np.abs(u).max(initial=0.0)),
        supp=tuple(float(x) for x in support_halfwidth(u, threshold, spec)),
    )


def _boundary_touched(u: np.ndarray, threshold: float) -> int | None:
    """First axis whose outer COLLAR cells exceed the threshold, else None."""
    for i in range(u.ndim):
        n = u.shape[i]
        lo = [slice(None)] * u.ndim
        hi = [slice(None)] * u.ndim
        lo[i] = slice(0, COLLAR)
        hi[i] = slice(n - COLLAR, n)
        if np.abs(u[tuple(lo)]).max() > threshold or np.abs(u[tuple(hi)]).max() > threshold:
            return i
    return None


def run(
    cfg: SolverConfig,
    u0: InitialDatum | GridFunction,
    csv_path: str | Path | None = None,
    snapshot_dir: str | Path | None = None,
    keep_snapshots: bool = True,
    observers: Sequence[Callable] = (),
) -> RunResult:
    """Integrate from ``cfg.t_start`` to ``cfg.t_end``.

    A record is appended every ``record_every`` accepted steps (plus the
    initial and final states).  Steps are shortened to land exactly on the
    requested snapshot times.  Aborts are stored on the result; everything
    written so far is kept.  Each observer is called as
    ``obs(t, v_array, spec)`` at every record.
    """
    from .diagnostics import CsvWriter

    wall0 = time.perf_counter()
    spec = cfg.grid
    alpha = cfg.anis.alpha
    g0 = u0.sample(spec) if isinstance(u0, InitialDatum) else u0
    u0_linf = float(np.abs(g0.values).max(initial=0.0))
    thr = cfg.support_threshold * u0_linf
    thr_v = float(v_from_u(thr, alpha))
    v = GridFunction(spec, v_from_u(g0.values, alpha))

    if isinstance(u0, InitialDatum):
        if u0_linf == 0.0 and u0.amplitude != 0.0:
            raise ValueError("initial datum is not resolved by the grid (every cell centre samples to zero)")
        touched = _boundary_touched(g0.values, thr)
        if touched is not None:
            raise ValueError(f"initial datum reaches the boundary collar on axis {touched + 1}")

    writer = CsvWriter(csv_path, spec.dim) if csv_path else None
    snap_dir = Path(snapshot_dir) if snapshot_dir else None
    if snap_dir:
        snap_dir.mkdir(parents=True, exist_ok=True)
    manifest = []

    records: list[TimeSeriesRecord] = []
    snapshots: list[tuple[float, GridFunction]] = []
    pending = [s for s in cfg.snapshot_times if s >= cfg.t_start - 1e-15]

    def emit(step_no, t, dt):
        rec = make_record(step_no, t, dt, v.values, spec, alpha, thr)
        records.append(rec)
        if writer:
            writer.write(rec)
        for obs in observers:
            obs(t, v.values, spec)

    def snap(t):
        gu = GridFunction(spec, u_from_v(v.values, alpha))
        if keep_snapshots:
            snapshots.append((t, gu))
        if snap_dir:
            name = f"snap_{len(manifest):05d}.gfb1"
            write_gfb1(snap_dir / name, gu)
            manifest.append({"file": name, "t": t})
            _write_manifest(snap_dir, manifest)

    t = cfg.t_start
    n = 0
    emit(0, t, 0.0)
    while pending and pending[0] <= t + 1e-15:
        snap(t)
        pending.pop(0)

    abort = None
    last_dt = 0.0
    try:
        while t < cfg.t_end and n < cfg.max_steps:
            target = min(cfg.t_end, pending[0]) if pending else cfg.t_end
            cap = target - t
            v_next, dt = step(v, cfg, dt_cap=cap)
            if dt == 0.0:
                break
            if dt < cfg.dt_min and dt < cap:
                raise StiffnessFloor(f"dt={dt:.3e} fell below dt_min={cfg.dt_min:.3e} at t={t:.6g}")
            if not np.all(np.isfinite(v_next.values)):
                raise NonFiniteState(f"non-finite values after step {n + 1} at t={t:.6g}")
            v = v_next
            n += 1
            last_dt = dt
            t = target if dt == cap else t + dt
            # |u| > thr  <=>  |v| > thr^alpha, so the collar test runs on v directly
            touched = _boundary_touched(v.values, thr_v)
            if touched is not None:
                raise DomainExhausted(
                    f"support reached the {COLLAR}-cell boundary collar on axis {touched + 1} at t={t:.6g}"
                )
            if n % cfg.record_every == 0:
                emit(n, t, dt)
            while pending and pending[0] <= t + 1e-12 * max(1.0, abs(t)):
                snap(t)
                pending.pop(0)
    except SolverAbort as exc:
        abort = exc
        log.warning("run aborted: %s", exc)
    finally:
        if records[-1].step != n and abort is None:
            emit(n, t, last_dt)
        if writer:
            writer.close()

    res = RunResult(
        records=records,
        snapshots=snapshots,
        final_v=v,
        t=t,
        steps=n,
        abort=abort,
        wall_time=time.perf_counter() - wall0,
        u0_linf=u0_linf,
        threshold_abs=thr,
        alpha=alpha,
    )
    return res


def _write_manifest(snap_dir: Path, manifest: list) -> None:
    import json

    (snap_dir / "manifest.json").write_text(json.dumps({"schema_version": 1, "snapshots": manifest}, indent=1))


def load_snapshots(snap_dir) -> list[tuple[float, GridFunction]]:
    import json

    from .grid import read_gfb1

    snap_dir = Path(snap_dir)
    man = json.loads((snap_dir / "manifest.json").read_text())
    return [(float(e["t"]), read_gfb1(snap_dir / e["file"])) for e in man["snapshots"]]
