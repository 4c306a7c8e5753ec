"""Command-line entry point: ``anisodiff <command> ...``.

Exit codes: 0 success, 1 invalid input or failed check, 2 stiffness floor,
3 domain exhausted, 4 non-finite state.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis_checks import run_all_suites
from .config import ConfigError, load_config
from .diagnostics import (
    DiagnosticError,
    Series,
    check_rectangle_optimality,
    check_support_law,
    check_ultracontractivity,
    last_decade,
)
from .energy import EnergyError, EnergyProbe, evaluate_energy
from .grid import GridError
from .params import Anisotropy, ParameterError, derive
from .solver import load_snapshots, run

SCHEMA_VERSION = 1
EXIT_FAIL = 1


def _emit(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=1, default=_json_default)
    if path is None or path == "-":
        print(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text + "\n")


def _json_default(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _anis_from_args(args) -> Anisotropy:
    if args.config:
        cfg = load_config(args.config)
        return cfg.anisotropy()
    if args.dim is None or args.alpha is None or args.p is None:
        raise ParameterError("give --config or all of --dim, --alpha, --p")
    return Anisotropy.from_user(args.dim, args.alpha, _floats(args.p), args.lambda_struct)


def _table(d: dict) -> str:
    width = max(len(k) for k in d)
    rows = []
    for k, v in d.items():
        if isinstance(v, float):
            v = f"{v:.10g}"
        elif isinstance(v, list):
            v = "[" + ", ".join(f"{x:.10g}" if isinstance(x, float) else str(x) for x in v) + "]"
        rows.append(f"{k.ljust(width)}  {v}")
    return "\n".join(rows)


def cmd_derive(args) -> int:
    d = derive(_anis_from_args(args))
    rep = {"schema_version": SCHEMA_VERSION, **d.as_dict()}
    if args.json:
        _emit(rep, args.json)
    if args.json != "-":
        print(_table(rep))
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    cfg.validate()
    scfg = cfg.solver_config()
    res = run(
        scfg,
        cfg.datum(),
        csv_path=cfg.output_csv_path,
        snapshot_dir=cfg.output_snapshot_dir,
        keep_snapshots=False,
    )
    last = res.records[-1]
    summary = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "steps": res.steps,
        "t": res.t,
        "wall_time": res.wall_time,
        "abort": None if res.abort is None else {"reason": res.abort.reason, "message": str(res.abort)},
        "initial": {"mass_v": res.records[0].mass_v, "l1_u": res.records[0].l1_u, "lalpha1_u": res.records[0].lalpha1_u},
        "final": {
            "mass_v": last.mass_v,
            "l1_u": last.l1_u,
            "lalpha1_u": last.lalpha1_u,
            "linf_u": last.linf_u,
            "supp": list(last.supp),
        },
        "threshold_abs": res.threshold_abs,
        "R0": cfg.datum().R0,
    }
    _emit(summary, cfg.output_summary_path or "-")
    if res.abort is not None:
        print(f"run aborted ({res.abort.reason}): {res.abort}", file=sys.stderr)
        return res.abort.exit_code
    return 0


def cmd_fit(args) -> int:
    series = Series.read_csv(args.csv)
    cfg = load_config(args.config)
    d = derive(cfg.anisotropy())
    window = tuple(_floats(args.window)) if args.window else last_decade(series)
    out = {"schema_version": SCHEMA_VERSION, "csv": str(args.csv), "window": list(window), "verdicts": {}}
    v = out["verdicts"]

    def attempt(name, fn):
        try:
            v[name] = fn()
        except DiagnosticError as exc:
            v[name] = {"refused": True, "reason": str(exc)}

    attempt("ultracontractivity", lambda: check_ultracontractivity(series, d, window))
    R0 = args.R0 if args.R0 is not None else cfg.datum().R0
    attempt("support_law", lambda: check_support_law(series, d, R0, window, aborted=args.aborted))
    spec = cfg.grid()
    thr = cfg.solver_support_threshold * float(np.max(np.abs(cfg.datum().sample(spec).values)))
    attempt(
        "rectangle",
        lambda: check_rectangle_optimality(series, d, window, thr, float(np.prod(2 * np.array(spec.half_length)))),
    )
    _emit(out, args.out)
    return 0


def cmd_check(args) -> int:
    rep = run_all_suites(seed=args.seed, trials=args.trials, corrupt=args.expect_fail)
    _emit(rep, args.out)
    failed = not rep["passed"]
    if args.expect_fail:
        # the corrupted harness must fail; anything else is a broken test-of-the-test
        return 0 if failed else EXIT_FAIL
    return EXIT_FAIL if failed else 0


def cmd_energy(args) -> int:
    desc = json.loads(Path(args.probes).read_text())
    snaps = load_snapshots(args.snapshot_dir)
    p = tuple(desc["p"])
    alpha = float(desc["alpha"])
    reports = []
    for pr in desc["probes"]:
        probe = EnergyProbe(p=p, alpha=alpha, **pr)
        reports.append({"schema_version": SCHEMA_VERSION, "probe": pr, **evaluate_energy(snaps, probe).as_dict()})
    _emit(reports, args.out)
    return 0


def cmd_oracle(args) -> int:
    from .oracles import oracle_report

    rep = oracle_report(args.which, args.resolution, args.fine)
    _emit(rep, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="anisodiff", description="Doubly nonlinear anisotropic diffusion laboratory.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="exponents and regime flags")
    p.add_argument("--config")
    p.add_argument("--dim", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--p", help="comma-separated exponents in axis order")
    p.add_argument("--lambda-struct", type=float, default=1.0)
    p.add_argument("--json", help="write the JSON report here ('-' for stdout only)")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("run", help="integrate a run-config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    for name in ("fit", "scaling"):
        p = sub.add_parser(name, help="scaling-law verdicts for a solver CSV")
        p.add_argument("csv")
        p.add_argument("--config", required=True, help="run config the CSV came from")
        p.add_argument("--window", help="t_min,t_max (default: last decade)")
        p.add_argument("--R0", type=float)
        p.add_argument("--aborted", action="store_true", help="the run ended in an abort")
        p.add_argument("--out")
        p.set_defaults(func=cmd_fit)

    p = sub.add_parser("check", help="analysis property suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--expect-fail", action="store_true", help="inject wrong tolerances; succeed only if the suites fail")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("energy", help="discrete energy inequality on stored snapshots")
    p.add_argument("snapshot_dir")
    p.add_argument("probes", help="JSON file: {p, alpha, probes: [{center, r, t_top, k, ...}]}")
    p.add_argument("--out")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("oracle", help="accuracy against closed-form solutions")
    p.add_argument("which", choices=("heat", "barenblatt"))
    p.add_argument("--resolution", type=int, default=128)
    p.add_argument("--fine", type=int, help="second resolution for the observed order")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParameterError, ConfigError, GridError, EnergyError, DiagnosticError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
