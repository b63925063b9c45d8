from __future__ import annotations

import json
from importlib import resources

import pytest

from kgstab.config import ConfigError, json_schema, parse_config, parse_text
from kgstab.damping import Constant, PeriodicPattern

MINIMAL = """
name = "minimal"
s = 2.0
analyses = ["simulate"]

[grid]
d = 1
L = 20.0
N = 32

[damping]
kind = "constant"
level = 1.0
"""


def with_lines(*extra: str, base: str = MINIMAL) -> str:
    return base + "\n" + "\n".join(extra) + "\n"


def error_of(text: str) -> ConfigError:
    with pytest.raises(ConfigError) as info:
        parse_text(text)
    return info.value


def test_minimal_config_parses():
    scn = parse_text(MINIMAL)
    assert scn.name == "minimal"
    assert scn.s == [2.0]
    assert isinstance(scn.build_damping(), Constant)
    assert scn.build_grid().N == 32
    assert scn.simulate.T > 0 and scn.seed == 0


def test_order_list_is_accepted():
    scn = parse_text(MINIMAL.replace("s = 2.0", "s = [1, 2.5, 4]"))
    assert scn.s == [1.0, 2.5, 4.0]


def test_negative_order_names_key():
    err = error_of(MINIMAL.replace("s = 2.0", "s = -1"))
    assert err.kind == "semantic"
    assert "`s`" in str(err)


def test_unknown_key_suggests_spelling():
    err = error_of(MINIMAL.replace("[damping]", "[dampening]"))
    assert "unknown key `dampening`" in str(err)
    assert "did you mean `damping`" in str(err)


def test_nested_unknown_key_path():
    err = error_of(with_lines("[simulate]", "TT = 5.0"))
    assert "`simulate.TT`" in str(err)


def test_empty_analyses_rejected():
    err = error_of(MINIMAL.replace('analyses = ["simulate"]', "analyses = []"))
    assert "`analyses`" in str(err)


def test_duplicate_analyses_rejected():
    assert "twice" in str(error_of(MINIMAL.replace('["simulate"]', '["simulate", "simulate"]')))


def test_syntax_error_reports_line_and_column():
    err = error_of("name = \"x\"\ns = \n")
    assert err.kind == "syntax"
    assert "<config>:2:" in str(err)


def test_dimension_three_rejected():
    assert "grid.d" in str(error_of(MINIMAL.replace("d = 1", "d = 3")))


def test_odd_grid_rejected():
    assert "grid.N" in str(error_of(MINIMAL.replace("N = 32", "N = 33")))


def test_dense_cap_cross_check():
    text = MINIMAL.replace("d = 1", "d = 2").replace("N = 32", "N = 64")
    err = error_of(text)
    assert "`simulate.method`" in str(err)
    scn = parse_text(with_lines("[simulate]", 'method = "strang_split"', base=text))
    assert scn.simulate.method == "strang_split"


def test_periodic_cell_must_divide_box():
    text = MINIMAL.replace("d = 1", "d = 2").replace("N = 32", "N = 16").replace(
        'kind = "constant"\nlevel = 1.0', 'kind = "preset"\nname = "lattice_balls"\nperiod = 3.0'
    )
    assert "period" in str(error_of(text))
    ok = parse_text(text.replace("period = 3.0", "period = 2.0"))
    assert isinstance(ok.build_damping(), PeriodicPattern)


def test_damping_dimension_must_match_grid():
    text = MINIMAL.replace('kind = "constant"\nlevel = 1.0', 'kind = "preset"\nname = "lattice_balls"')
    assert "damping" in str(error_of(text))


def test_damping_variants_parse():
    text = MINIMAL.replace(
        'kind = "constant"\nlevel = 1.0',
        'kind = "indicator_complement"\nlevel = 2.0\n[[damping.balls]]\ncenter = [0.0]\nradius = 1.5',
    )
    spec = parse_text(text).build_damping()
    assert spec.bound == 2.0


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError) as info:
        parse_config(tmp_path / "missing.toml")
    assert info.value.kind == "io"


def test_shipped_schema_matches_models():
    shipped = json.loads(resources.files("kgstab").joinpath("schema/scenario.schema.json").read_text())
    assert shipped == json.loads(json.dumps(json_schema()))


def test_bundled_scenarios_validate():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "scenarios"
    files = sorted(root.glob("*.toml"))
    assert files
    for f in files:
        parse_config(f)
