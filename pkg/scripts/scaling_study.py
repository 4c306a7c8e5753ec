"""Decay and support exponents: measured slopes against the predicted ones.

Runs the heat limit and the 2D slow-diffusion configuration (and reads a
reference-run CSV if given), then prints for each the fitted L_inf slope
over successive time windows next to the predicted -N/lambda_1 and the
self-similar -N/lambda_alpha.  The drift of the fitted slope with the
window shows which of the two the solution approaches.

    python scripts/scaling_study.py --reference runs/reference/series.csv
"""

import argparse
import json

import numpy as np

from anisodiff.diagnostics import Series, fit_power_law
from anisodiff.experiments import REF_ALPHA, REF_DATUM, REF_P, heat_setup, two_d_setup
from anisodiff.params import Anisotropy, derive
from anisodiff.solver import run


def windows(t_end, n=3):
    """Consecutive half-decades ending at t_end."""
    edges = t_end * np.sqrt(10.0) ** -np.arange(n, -1, -1)
    return [(float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]


def study(name, series, d, R0=None):
    row = {"name": name, "target_decay": -d.mass_decay_exponent, "selfsimilar_decay": None, "windows": []}
    if d.selfsimilar_decay_exponent is not None:
        row["selfsimilar_decay"] = -d.selfsimilar_decay_exponent
    for w in windows(float(series.t[-1])):
        if w[0] < series.t[series.t > 0].min():
            continue
        entry = {"window": w, "linf_slope": fit_power_law(series.t, series.linf_u, w).slope}
        if R0 is not None:
            entry["support_slopes"] = [fit_power_law(series.t, series.supp[:, i] - 2 * R0, w).slope for i in range(series.dim)]
        row["windows"].append(entry)
    if R0 is not None:
        row["target_support"] = d.anis.to_user_order(list(d.support_exponent))
        row["selfsimilar_support"] = d.anis.to_user_order(list(d.selfsimilar_support_exponent))
    return row


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reference", help="series.csv of a reference run")
    ap.add_argument("--cells", type=int, default=128)
    ap.add_argument("--out")
    args = ap.parse_args()
    rows = []

    cfg, datum = heat_setup(args.cells)
    rows.append(study("heat", Series.from_records(run(cfg, datum).records), derive(cfg.anis)))
    cfg, datum = two_d_setup(args.cells)
    rows.append(study("two_d", Series.from_records(run(cfg, datum).records), derive(cfg.anis), datum.R0))
    if args.reference:
        d = derive(Anisotropy.from_user(3, REF_ALPHA, REF_P))
        rows.append(study("reference", Series.read_csv(args.reference), d, REF_DATUM.R0))

    for r in rows:
        ss = "" if r["selfsimilar_decay"] is None else f", self-similar {r['selfsimilar_decay']:.4f}"
        print(f"{r['name']}: predicted L_inf slope {r['target_decay']:.4f}{ss}")
        for w in r["windows"]:
            line = f"  t in [{w['window'][0]:8.3f}, {w['window'][1]:8.3f}]  L_inf slope {w['linf_slope']:.4f}"
            if "support_slopes" in w:
                line += "  support slopes " + ", ".join(f"{s:.4f}" for s in w["support_slopes"])
            print(line)
        if "target_support" in r:
            print("  predicted support " + ", ".join(f"{s:.4f}" for s in r["target_support"]))
            print("  self-similar support " + ", ".join(f"{s:.4f}" for s in r["selfsimilar_support"]))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"schema_version": 1, "studies": rows}, fh, indent=1)


if __name__ == "__main__":
    main()
