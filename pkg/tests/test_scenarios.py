import json

import numpy as np
import pytest

from stokesdtn.scenarios import (
    DEFAULT_TOLERANCES,
    ConfigError,
    generate_metric,
    load_config,
    parse_config,
    scenario_directions,
)


def test_minimal_flat_config():
    cfg = parse_config({"n": 2, "depth": 1, "metric": "flat", "mu": 1.0})
    assert cfg.n == 2 and cfg.depth == 1
    assert cfg.jet_order == 4 and cfg.auto_order
    m = generate_metric(cfg)
    assert (m.tangential - m.space.identity(1)).max_abs() == 0
    assert (m.mu - m.space.constant(1.0)).max_abs() == 0
    assert cfg.tolerances == DEFAULT_TOLERANCES


def test_rejects_one_dimension():
    with pytest.raises(ConfigError, match="n >= 2"):
        parse_config({"n": 1, "depth": 1})


def test_rejects_small_jet_order():
    with pytest.raises(ConfigError, match="jet_order >= 5"):
        parse_config({"n": 2, "depth": 3, "jet_order": 4, "tangential_order": 0})
    with pytest.raises(ConfigError, match="jet_order >= 6"):
        parse_config({"n": 2, "depth": 3, "jet_order": 5})
    assert parse_config({"n": 2, "depth": 3, "jet_order": 6}).jet_order == 6


@pytest.mark.parametrize(
    "doc,field",
    [
        ({"depth": 1}, "'n'"),
        ({"n": "3"}, "'n'"),
        ({"n": 2, "depth": -1}, "'depth'"),
        ({"n": 2, "metric": {"family": "hyperbolic"}}, "metric.family"),
        ({"n": 2, "mu": {"kind": "linear"}}, "mu.kind"),
        ({"n": 2, "mu": {"kind": "constant", "value": -1.0}}, "mu"),
        ({"n": 3, "directions": {"oversampled": 2}}, "directions.oversampled"),
        ({"n": 2, "tolerances": {"speed": 1.0}}, "tolerances.speed"),
        ({"n": 2, "metric": {"family": "random", "scale": 0.7}}, "metric"),
        ({"n": 2, "metric": {"family": "conformal", "coefficients": {"0,0": -1.0}}}, "metric"),
    ],
)
def test_invalid_configs_name_the_field(doc, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        parse_config(doc)


def test_json_errors_report_location(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"n": 2,\n "depth": }\n')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(path)


def test_conformal_family():
    cfg = parse_config({"n": 2, "depth": 1, "metric": {"family": "conformal", "coefficients": {"0,0": 1, "0,1": 1}}})
    m = generate_metric(cfg)
    assert m.tangential[0, 0].to_dict() == {(0, 0): 1, (0, 1): 1}


def test_diagonal_and_table_families():
    cfg = parse_config({"n": 3, "metric": {"family": "diagonal", "entries": [{"1,0,0": 0.1}]}})
    g = generate_metric(cfg).tangential
    assert g[0, 0].to_dict() == {(0, 0, 0): 1, (1, 0, 0): 0.1}
    assert g[1, 1].to_dict() == {(0, 0, 0): 1}
    cfg = parse_config({"n": 3, "metric": {"family": "table", "entries": {
        "0,0": {"0,0,0": 1}, "1,1": {"0,0,0": 2}, "0,1": {"0,0,1": 0.5}}}})
    g = generate_metric(cfg).tangential
    assert g[0, 1].to_dict() == g[1, 0].to_dict() == {(0, 0, 1): 0.5}
    assert g[1, 1].to_dict() == {(0, 0, 0): 2}


def test_random_family_reproducible_and_definite():
    doc = {"n": 3, "depth": 2, "seed": 7, "metric": {"family": "random", "scale": 0.45}, "mu": {"kind": "random"}}
    a, b = generate_metric(parse_config(doc)), generate_metric(parse_config(doc))
    assert np.array_equal(a.g_upper.coeffs, b.g_upper.coeffs)
    assert np.array_equal(a.mu.coeffs, b.mu.coeffs)
    c = generate_metric(parse_config(dict(doc, seed=8)))
    assert not np.array_equal(a.g_upper.coeffs, c.g_upper.coeffs)
    for seed in range(30):
        m = generate_metric(parse_config(dict(doc, seed=seed)))
        base = m.tangential.value.real - np.eye(2)
        assert np.linalg.norm(base, 2) < 0.5


def test_overrides_and_serialized_form():
    cfg = parse_config({"n": 2, "depth": 1, "seed": 3, "output": {"dir": "x"}})
    other = cfg.with_overrides(seed=4, depth=2)
    assert (other.seed, other.depth, other.jet_order, other.output) == (4, 2, 5, {"dir": "x"})
    d = cfg.to_dict()
    assert d["jet_order"] == "auto" and d["resolved_jet_order"] == 4
    json.dumps(d)


def test_directions():
    cfg = parse_config({"n": 3})
    np.testing.assert_array_equal(scenario_directions(cfg), [[1, 0], [0, 1], [1, 1]])
    over = scenario_directions(parse_config({"n": 3, "directions": {"oversampled": 6}}))
    assert over.shape == (6, 2)
