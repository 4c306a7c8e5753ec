"""Run-configuration files.

One ``key = value`` pair per line with dotted section names; values are
JSON literals (numbers, lists, quoted strings, true/false/null).  Blank
lines and ``#`` comments are ignored.  Unknown keys are errors.

    dim = 3
    alpha = 0.5
    p = [2.2, 2.4, 2.6]
    domain.half_length = [21, 15, 12]
    domain.cells = [96, 96, 96]
    init.kind = "cosine_bump"
    ...
"""

from __future__ import annotations

import json
from dataclasses import MISSING, dataclass, field, fields
from pathlib import Path

from .grid import GridSpec
from .params import Anisotropy
from .solver import InitialDatum, SolverConfig


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dim: int
    alpha: float
    p: list
    domain_half_length: list
    domain_cells: list
    init_kind: str
    init_amplitude: float
    init_radii: list
    init_center: list | None = None
    lambda_struct: float = 1.0
    solver_cfl: float = 0.4
    solver_t_end: float = 1.0
    solver_t_start: float = 0.0
    solver_eps_grad: float = 0.0
    solver_record_every: int = 1
    solver_dt_min: float = 1e-14
    solver_support_threshold: float = 1e-10
    snapshots_times: list = field(default_factory=list)
    output_csv_path: str | None = None
    output_snapshot_dir: str | None = None
    output_summary_path: str | None = None
    seed: int = 0

    def anisotropy(self) -> Anisotropy:
        return Anisotropy.from_user(self.dim, self.alpha, self.p, self.lambda_struct)

    def grid(self) -> GridSpec:
        return GridSpec(tuple(self.domain_half_length), tuple(self.domain_cells))

    def datum(self) -> InitialDatum:
        c = None if self.init_center is None else tuple(self.init_center)
        return InitialDatum(self.init_kind, self.init_amplitude, tuple(self.init_radii), c)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            anis=self.anisotropy(),
            grid=self.grid(),
            t_end=self.solver_t_end,
            t_start=self.solver_t_start,
            cfl=self.solver_cfl,
            eps_grad=self.solver_eps_grad,
            record_every=self.solver_record_every,
            support_threshold=self.solver_support_threshold,
            dt_min=self.solver_dt_min,
            snapshot_times=tuple(self.snapshots_times),
        )

    def validate(self) -> None:
        """Build every derived object once so errors surface before any allocation of state."""
        if len(self.p) != self.dim:
            raise ConfigError(f"p has {len(self.p)} entries for dim = {self.dim}")
        for name in ("domain_half_length", "domain_cells", "init_radii"):
            if len(getattr(self, name)) != self.dim:
                raise ConfigError(f"{_key(name)} must have {self.dim} entries")
        if self.init_center is not None and len(self.init_center) != self.dim:
            raise ConfigError(f"init.center must have {self.dim} entries")
        self.solver_config()
        self.datum()


_SECTIONS = ("domain", "init", "solver", "snapshots", "output")


def _key(attr: str) -> str:
    for s in _SECTIONS:
        if attr.startswith(s + "_"):
            return s + "." + attr[len(s) + 1:]
    return attr


KEYS = {_key(f.name): f.name for f in fields(RunConfig)}
REQUIRED = [_key(f.name) for f in fields(RunConfig) if f.default is MISSING and f.default_factory is MISSING]


def parse_config(text: str) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = json.loads(val.strip())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {lineno}: value of {key!r} is not a JSON literal ({exc.msg})") from None
    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    cfg = RunConfig(**{KEYS[k]: v for k, v in values.items()})
    _check_types(cfg)
    return cfg


def _check_types(cfg: RunConfig) -> None:
    def num(x):
        return isinstance(x, (int, float)) and not isinstance(x, bool)

    ints = ("dim", "solver_record_every", "seed")
    lists = ("p", "domain_half_length", "domain_cells", "init_radii", "snapshots_times")
    strs = ("init_kind",)
    opt_strs = ("output_csv_path", "output_snapshot_dir", "output_summary_path")
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        k = _key(f.name)
        if f.name in ints:
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(f"{k} must be an integer")
        elif f.name in lists:
            if not isinstance(v, list) or not all(num(x) for x in v):
                raise ConfigError(f"{k} must be a list of numbers")
            if f.name == "domain_cells" and not all(isinstance(x, int) for x in v):
                raise ConfigError(f"{k} must be a list of integers")
        elif f.name == "init_center":
            if v is not None and (not isinstance(v, list) or not all(num(x) for x in v)):
                raise ConfigError(f"{k} must be a list of numbers or null")
        elif f.name in strs:
            if not isinstance(v, str):
                raise ConfigError(f"{k} must be a string")
        elif f.name in opt_strs:
            if v is not None and not isinstance(v, str):
                raise ConfigError(f"{k} must be a string or null")
        elif not num(v):
            raise ConfigError(f"{k} must be a number")


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(cfg):
        lines.append(f"{_key(f.name)} = {json.dumps(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())
