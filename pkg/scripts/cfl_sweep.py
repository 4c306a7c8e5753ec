"""Stability of the explicit scheme against the CFL factor.

For each factor, runs a 2D problem and reports positivity, whether max|u|
stays nonincreasing, and whether the L1 norm is nonincreasing.  A factor is
called stable when all three hold.  The step rule dt = cfl / rate is a
monotonicity bound, so every factor up to 1 must be stable; factors above 1
(rejected by SolverConfig, set here after validation) show where the
bound stops being conservative.  The default of 0.4 leaves room for the
coefficients changing within a step.

    python scripts/cfl_sweep.py
"""

import argparse
import json

import numpy as np

from anisodiff.diagnostics import Series
from anisodiff.grid import GridSpec
from anisodiff.params import Anisotropy
from anisodiff.solver import InitialDatum, SolverConfig, run

# (alpha, p, half length); the heat box is wider because its support is unbounded
CASES = {
    "slow_diffusion": (0.5, (2.2, 2.6), 4.0),
    "heat": (1.0, (2.0, 2.0), 12.0),
    "porous_like": (0.3, (3.0, 3.0), 4.0),
}


def sweep(alpha, p, L, factors, cells, t_end):
    spec = GridSpec((L, L), (cells, cells))
    datum = InitialDatum("cosine_bump", 1.0, (1.5, 1.0))
    rows = []
    for c in factors:
        cfg = SolverConfig(Anisotropy.from_user(2, alpha, p), spec, t_end=t_end)
        cfg.cfl = c
        with np.errstate(all="ignore"):
            res = run(cfg, datum)
        s = Series.from_records(res.records)
        u = res.final_u.values
        rows.append(
            {
                "cfl": c,
                "steps": res.steps,
                "min_u": float(np.nanmin(u)) if np.isfinite(u).any() else float("nan"),
                "linf_nonincreasing": bool(np.all(np.diff(s.linf_u) <= 1e-12 * s.linf_u[0])),
                "l1_nonincreasing": bool(np.all(np.diff(s.l1_u) <= 1e-10 * s.l1_u[0])),
                "aborted": None if res.abort is None else res.abort.reason,
            }
        )
        r = rows[-1]
        r["stable"] = bool(r["aborted"] in (None, "domain exhausted") and r["min_u"] >= 0 and r["linf_nonincreasing"] and r["l1_nonincreasing"])
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=48)
    ap.add_argument("--t-end", type=float, default=0.5)
    ap.add_argument("--out")
    args = ap.parse_args()
    factors = (0.1, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.5, 2.0, 2.5)
    out = {}
    for name, (alpha, p, L) in CASES.items():
        rows = sweep(alpha, p, L, factors, args.cells, args.t_end)
        out[name] = rows
        print(f"{name} (alpha={alpha}, p={p})")
        for r in rows:
            print(f"  cfl {r['cfl']:.1f}: steps {r['steps']:5d} min u {r['min_u']:+.2e} abort {r['aborted']} stable {r['stable']}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"schema_version": 1, "cases": out}, fh, indent=1)


if __name__ == "__main__":
    main()
