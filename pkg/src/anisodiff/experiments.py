"""The canonical runs behind the acceptance suite and the scripts.

Each builder returns a ready (SolverConfig, datum) pair; the runners add
the bookkeeping that the checks need (second support threshold, snapshots).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec, support_halfwidth
from .kernels import u_from_v
from .params import Anisotropy
from .solver import InitialDatum, RunResult, SolverConfig, run

# reference 3D problem; the domain keeps the final support >= 4 cells from the collar at 96^3
REF_P = (2.2, 2.4, 2.6)
REF_ALPHA = 0.5
REF_HALF_LENGTH = (21.0, 15.0, 12.0)
REF_T_END = 300.0
REF_DATUM = InitialDatum("cosine_bump", 1000.0, (2.0, 2.0, 2.0))
REF_ENERGY_WINDOW = (150.0, 300.0)
REF_SNAPSHOTS = 12

HEAT_T0 = 0.05
HEAT_T_END = 1.0
HEAT_HALF_LENGTH = 10.0

TWO_D_P = (2.2, 2.4)
TWO_D_ALPHA = 0.8
TWO_D_HALF_LENGTH = (26.0, 18.0)
TWO_D_T_END = 100.0
TWO_D_DATUM = InitialDatum("cosine_bump", 10.0, (2.0, 2.0))

SENSITIVITY_THRESHOLD = 1e-8


@dataclass
class SupportObserver:
    """Records support half-widths at a second relative threshold during a run."""

    relative: float
    u0_linf: float
    alpha: float
    t: list = field(default_factory=list)
    supp: list = field(default_factory=list)

    def __call__(self, t, v, spec):
        u = u_from_v(v, self.alpha)
        self.t.append(t)
        self.supp.append(support_halfwidth(u, self.relative * self.u0_linf, spec))


def reference_setup(cells: int = 96, t_end: float = REF_T_END, snapshots: int = REF_SNAPSHOTS, record_every: int = 10):
    anis = Anisotropy.from_user(3, REF_ALPHA, REF_P)
    spec = GridSpec(REF_HALF_LENGTH, (cells,) * 3)
    lo, hi = REF_ENERGY_WINDOW
    snaps = tuple(np.linspace(lo * t_end / REF_T_END, hi * t_end / REF_T_END, snapshots)) if snapshots else ()
    cfg = SolverConfig(anis, spec, t_end=t_end, record_every=record_every, snapshot_times=snaps)
    return cfg, REF_DATUM


def run_with_sensitivity(cfg: SolverConfig, datum: InitialDatum, **kw) -> tuple[RunResult, SupportObserver]:
    u0_linf = float(np.max(np.abs(datum.sample(cfg.grid).values)))
    obs = SupportObserver(SENSITIVITY_THRESHOLD, u0_linf, cfg.anis.alpha)
    res = run(cfg, datum, observers=[obs], **kw)
    return res, obs


def heat_setup(cells: int = 128, t_end: float = HEAT_T_END, snapshots: int = 0, record_every: int = 1):
    """Heat limit from the exact Gaussian at t0 (variance 2 t0 per axis)."""
    anis = Anisotropy.from_user(2, 1.0, (2.0, 2.0))
    spec = GridSpec((HEAT_HALF_LENGTH,) * 2, (cells,) * 2)
    sigma = math.sqrt(2.0 * HEAT_T0)
    datum = InitialDatum("gaussian_truncated", 1.0 / (4.0 * math.pi * HEAT_T0), (sigma, sigma))
    snaps = tuple(np.linspace(0.5 * t_end, t_end, snapshots)) if snapshots else ()
    cfg = SolverConfig(anis, spec, t_end=t_end, t_start=HEAT_T0, record_every=record_every, snapshot_times=snaps)
    return cfg, datum


def two_d_setup(cells: int = 128, t_end: float = TWO_D_T_END, record_every: int = 5):
    anis = Anisotropy.from_user(2, TWO_D_ALPHA, TWO_D_P)
    spec = GridSpec(TWO_D_HALF_LENGTH, (cells,) * 2)
    return SolverConfig(anis, spec, t_end=t_end, record_every=record_every), TWO_D_DATUM
