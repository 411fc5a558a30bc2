import json
import os

import numpy as np
import pytest

from growing_consensus import config, io


def test_bundled_scenarios_validate():
    names = [p.stem for p in config.bundled_scenarios()]
    assert len(names) >= 10
    for n in names:
        sc = config.load(n)
        assert sc.name == n and sc.mode in ("micro", "kinetic", "both")


def test_unknown_keys_rejected():
    raw = config.load_raw("constant_inflow")
    raw["numerics"]["speed"] = 3
    with pytest.raises(config.ConfigError, match="numerics"):
        config.from_dict(raw)


def test_semantic_errors_become_config_errors():
    raw = config.set_path(config.load_raw("constant_inflow"), "inflow.x_bound", 0.1)
    with pytest.raises(config.ConfigError):
        config.from_dict(raw)


def test_seed_override_and_set_path():
    assert config.load("variance_envelope", seed=99).sim.seed == 99
    raw = config.load_raw("variance_decay")
    out = config.set_path(raw, "growth.alpha", 1.0)
    assert out["growth"]["alpha"] == 1.0 and raw["growth"]["alpha"] == 0.5
    with pytest.raises(config.ConfigError):
        config.set_path(raw, "nope.alpha", 1.0)


def test_resolve_missing():
    with pytest.raises(config.ConfigError):
        config.resolve("not_a_scenario")


def test_malformed_toml(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("growth = [\n")
    with pytest.raises(config.ConfigError):
        config.load(str(p))


def test_csv_round_trip(tmp_path):
    p = io.write_csv(tmp_path / "a.csv", ["t", "x"], [(0.0, 1), (0.1, np.float64(2.5))])
    cols = io.read_csv_columns(p)
    np.testing.assert_array_equal(cols["t"], [0.0, 0.1])
    np.testing.assert_array_equal(cols["x"], [1.0, 2.5])


def test_json_maps_non_finite(tmp_path):
    p = io.write_json(tmp_path / "s.json", {"a": np.inf, "b": np.array([1.0, np.nan]), "c": np.bool_(True)})
    assert json.loads(p.read_text()) == {"a": None, "b": [1.0, None], "c": True}


def test_dat_format(tmp_path):
    p = io.write_dat(tmp_path / "v.dat", {"t": [0, 1], "V": [2.0, 3.0]})
    assert p.read_text().splitlines() == ["# t V", "0.0 2.0", "1.0 3.0"]


def test_atomic_write_leaves_no_partial_file(tmp_path, monkeypatch):
    target = tmp_path / "out.txt"
    io.atomic_write_text(target, "old")

    def boom(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        io.atomic_write_text(target, "new")
    assert target.read_text() == "old"
    assert os.listdir(tmp_path) == ["out.txt"]
