from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from anisodiff.config import KEYS, REQUIRED, ConfigError, RunConfig, dump_config, load_config, parse_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

MINIMAL = """
dim = 2
alpha = 0.5
p = [2.2, 2.6]
domain.half_length = [4, 4]
domain.cells = [32, 32]
init.kind = "cosine_bump"
init.amplitude = 1.0
init.radii = [1.0, 1.0]
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.solver_cfl == 0.4 and cfg.solver_support_threshold == 1e-10
    assert cfg.snapshots_times == [] and cfg.output_csv_path is None
    cfg.validate()
    assert cfg.solver_config().grid.cells == (32, 32)


def test_required_keys():
    assert set(REQUIRED) == {"dim", "alpha", "p", "domain.half_length", "domain.cells", "init.kind", "init.amplitude", "init.radii"}
    assert "solver.t_start" in KEYS and "lambda_struct" in KEYS


@pytest.mark.parametrize(
    "text, msg",
    [
        (MINIMAL + "colour = 3\n", "unknown key"),
        (MINIMAL + "alpha = 0.4\n", "duplicate"),
        (MINIMAL + "solver.cfl = abc\n", "JSON literal"),
        (MINIMAL + "just words\n", "key = value"),
        (MINIMAL.replace("alpha = 0.5\n", ""), "missing required keys: alpha"),
        (MINIMAL.replace("dim = 2", "dim = 2.0"), "integer"),
        (MINIMAL.replace("[32, 32]", "[32.0, 32]"), "integers"),
        (MINIMAL.replace('"cosine_bump"', "3"), "string"),
        (MINIMAL + "solver.t_end = true\n", "number"),
    ],
)
def test_bad_configs(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text)


def test_validate_dimension_mismatch():
    cfg = parse_config(MINIMAL.replace("p = [2.2, 2.6]", "p = [2.2, 2.6, 3.0]"))
    with pytest.raises(ConfigError):
        cfg.validate()


def test_comments_and_blank_lines():
    cfg = parse_config("# header\n\n" + MINIMAL + "  # trailing comment line\n")
    assert cfg.dim == 2


@given(
    st.floats(0.05, 1.0),
    st.floats(0.05, 1.0),
    st.floats(0.1, 100.0),
    st.sampled_from(["box", "cosine_bump", "gaussian_truncated"]),
    st.one_of(st.none(), st.text(st.characters(min_codepoint=32, max_codepoint=126), max_size=20)),
)
def test_round_trip(alpha, cfl, t_end, kind, path):
    cfg = RunConfig(
        dim=2,
        alpha=alpha,
        p=[2.2, 2.6],
        domain_half_length=[4.0, 3.0],
        domain_cells=[32, 24],
        init_kind=kind,
        init_amplitude=1.0,
        init_radii=[1.0, 0.5],
        solver_cfl=cfl,
        solver_t_end=t_end,
        output_csv_path=path,
    )
    assert parse_config(dump_config(cfg)) == cfg


@pytest.mark.parametrize("name", ["reference_3d.cfg", "heat_2d.cfg", "two_d.cfg", "quick_2d.cfg"])
def test_shipped_configs_valid(name):
    load_config(CONFIGS / name).validate()
