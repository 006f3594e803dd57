import numpy as np
import pytest

from gpsemi.config import ConfigError, apply_overrides, load_config, parse_value
from gpsemi.io import read_metadata, read_table, write_metadata, write_table


@pytest.mark.parametrize("delim", [",", "\t", " "])
def test_table_roundtrip_exact(tmp_path, delim):
    rng = np.random.default_rng(0)
    cols = {"t": np.linspace(0, 1, 7), "value": rng.normal(size=7) * 1e-300, "big": rng.normal(size=7) * 1e300}
    p = tmp_path / "tab.txt"
    write_table(p, cols, delim)
    back = read_table(p)
    for k, v in cols.items():
        np.testing.assert_array_equal(back[k], v)
    assert p.read_text().splitlines()[0] == delim.join(cols)


def test_table_rejects_ragged(tmp_path):
    with pytest.raises(ValueError):
        write_table(tmp_path / "x.csv", {"a": [1, 2], "b": [1]})


def test_metadata(tmp_path):
    p = tmp_path / "m.json"
    write_metadata(p, {"b": np.float64(1.5), "a": np.arange(3), "z": 1 + 2j})
    m = read_metadata(p)
    assert m["a"] == [0, 1, 2] and m["z"] == [1.0, 2.0] and "code_version" in m
    assert p.read_text().index('"a"') < p.read_text().index('"b"')


def test_parse_value():
    assert parse_value("1.5") == 1.5
    assert parse_value("[1, 2]") == [1, 2]
    assert parse_value('"x"') == "x"
    assert parse_value("hermite 1 0") == "hermite 1 0"


def test_overrides_nested():
    cfg = apply_overrides({"a": {"b": 1}}, ["a.b=2", "a.c.d=true"])
    assert cfg == {"a": {"b": 2, "c": {"d": True}}}
    with pytest.raises(ConfigError):
        apply_overrides({}, ["novalue"])


def test_defaults_load():
    cfg = load_config()
    assert cfg.dim == 3 and cfg.initial["preset"] == "oscillator" and cfg.nu == (0, 0)


def test_file_and_errors(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('[model]\nname = "free"\ndim = 2\n[physics]\nhbar = 0.5\n')
    cfg = load_config(p)
    assert cfg.model == "free" and cfg.hbar == 0.5 and cfg.initial["preset"] == "explicit"
    bad = tmp_path / "bad.toml"
    bad.write_text("[model]\nname = \n")
    with pytest.raises(ConfigError, match="line 2"):
        load_config(bad)


@pytest.mark.parametrize("override, key", [
    ("physics.hbar=0", "physics.hbar"),
    ("physics.g=nan", "physics.g"),
    ("model.k=[1, 0, 1]", "model.k"),
    ("grid.axes=[[0, 1, 1], [0, 1, 5], [0, 1, 5]]", "grid.axes[0]"),
    ("time.t_end=-1", "time.t_end"),
    ('field.backend="spectral"', "field.backend"),
    ("field.nu=[1]", "field.nu"),
    ('model.name="morse"', "model.name"),
    ("initial.P0=[1, 2]", "initial.P0"),
])
def test_validation_names_field(override, key):
    with pytest.raises(ConfigError) as exc:
        load_config(overrides=[override])
    assert exc.value.key == key
