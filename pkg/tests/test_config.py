import copy
from pathlib import Path

import pytest

from warpcmc.builtins import SCENARIOS
from warpcmc.config import ConfigError, load_config, parse_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASE = {
    "name": "t",
    "space": {"tau": "hyperbolic", "m": 2, "t_max": 10.0},
    "graph": {"kind": "cmc-radial", "c": 0.5},
}


def with_(path, value):
    raw = copy.deepcopy(BASE)
    node = raw
    *head, last = path
    for k in head:
        node = node.setdefault(k, {})
    node[last] = value
    return raw


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_builtin_scenarios_parse(name):
    cfg = parse_config(SCENARIOS[name])
    assert cfg.name == name
    cfg.space.build().validate()


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    assert load_config(path).name == path.stem


def test_defaults():
    cfg = parse_config(BASE)
    assert cfg.fiber.dim == 1 and cfg.fiber.metric == "flat"
    assert cfg.probes.grid_size == 1024
    assert cfg.outputs.formats == ["json", "csv"]
    assert cfg.probes.fd().first > 0


@pytest.mark.parametrize("path, value, where", [
    (("space", "tau"), "cylindrical", "space.tau"),
    (("space", "Psi"), "quartic", "space.Psi"),
    (("space", "m"), "two", "space.m"),
    (("space", "bogus"), 1, "space.bogus"),
    (("graph", "kind"), "helix", "graph.kind"),
    (("fiber", "dim"), 2, "fiber"),
    (("fiber", "metric"), "hyperbolic", "fiber.metric"),
    (("probes", "grid_size"), 16, "probes.grid_size"),
    (("probes", "radii"), [0.5, 11.0], "probes.radii[1]"),
    (("spectral", "setti"), {"alpha": 0.0, "delta": 1.0}, "spectral.setti"),
    (("outputs", "formats"), ["png"], "outputs.formats"),
])
def test_errors_name_the_field(path, value, where):
    with pytest.raises(ConfigError) as exc:
        parse_config(with_(path, value))
    assert exc.value.where == where
    assert str(exc.value).startswith(where)


def test_custom_series_requirements():
    raw = with_(("space",), {"tau": "custom-series", "m": 2, "t_max": 2.0})
    with pytest.raises(ConfigError, match="coefficients"):
        parse_config(raw)
    raw["space"]["coefficients"] = [0.0, 2.0]
    with pytest.raises(ConfigError) as exc:
        parse_config(raw)
    assert exc.value.where == "space"


def test_affine_shape_is_checked():
    raw = with_(("graph",), {"kind": "affine", "matrix": [[1.0, 0.0, 0.0]]})
    with pytest.raises(ConfigError, match=r"\(1, 2\)"):
        parse_config(raw)


def test_unknown_section():
    with pytest.raises(ConfigError, match="plots"):
        parse_config({**BASE, "plots": {}})


def test_yaml_errors_report_line_and_column(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("name: x\nspace:\n  tau: [hyperbolic\n  m: 2\n")
    with pytest.raises(ConfigError) as exc:
        load_config(path)
    assert f"{path}:" in exc.value.where
    line = int(exc.value.where.rsplit(":", 2)[1])
    assert line >= 3


def test_hash_tracks_content():
    a = parse_config(BASE).sha256
    assert a == parse_config(copy.deepcopy(BASE)).sha256
    assert a != parse_config(with_(("graph", "c"), 0.6)).sha256
