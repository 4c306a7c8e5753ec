"""Caccioppoli ratios on stored snapshots, at two resolutions.

Evaluates level sweeps for a set of probes on the snapshot directories of
two runs of the same problem (coarse and fine) and reports the fitted
constants and their drift under refinement.

    python scripts/reference_run.py --cells 48 --out runs/ref48
    python scripts/reference_run.py --cells 96 --out runs/ref96
    python scripts/energy_study.py runs/ref48/snapshots runs/ref96/snapshots
"""

import argparse
import json

from anisodiff.energy import EnergyProbe, FSpec, general_formula_check, level_sweep
from anisodiff.experiments import REF_ALPHA, REF_P, REF_T_END
from anisodiff.solver import load_snapshots

PROBES = [((0.0, 0.0, 0.0), 16.0), ((3.0, 2.0, 1.0), 9.0), ((6.0, 0.0, 0.0), 9.0)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("coarse")
    ap.add_argument("fine")
    ap.add_argument("--duration", type=float, default=150.0)
    ap.add_argument("--out")
    args = ap.parse_args()
    runs = {"coarse": load_snapshots(args.coarse), "fine": load_snapshots(args.fine)}
    rows = []
    for center, r in PROBES:
        probe = EnergyProbe(center=center, r=r, p=REF_P, alpha=REF_ALPHA, t_top=REF_T_END, k=0.0, duration=args.duration)
        row = {"center": center, "r": r}
        for name, snaps in runs.items():
            sw = level_sweep(snaps, probe)
            gf = general_formula_check(snaps, FSpec("regularized_power", mu=1.0), probe)
            row[name] = {"fitted_constant": sw["fitted_constant"], "all_finite": sw["all_finite"], "general_formula_slack": gf["slack"]}
        a, b = row["coarse"]["fitted_constant"], row["fine"]["fitted_constant"]
        row["drift"] = max(a, b) / min(a, b)
        rows.append(row)
        print(
            f"probe at {center} r={r}: constant {a:.4f} (coarse) {b:.4f} (fine), drift {row['drift']:.3f}, "
            f"general-formula slack {row['coarse']['general_formula_slack']:.3f} / {row['fine']['general_formula_slack']:.3f}"
        )
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"schema_version": 1, "probes": rows}, fh, indent=1)


if __name__ == "__main__":
    main()
