"""Configuration container, validation rules, and file parsing."""

import math

import numpy as np
import pytest

from ialink.config import (ConfigError, SimConfig, config_from_mapping,
                           doppler_from_velocity, read_config)


def test_defaults_are_valid():
    cfg = SimConfig()
    assert cfg.users == 3
    assert cfg.n == 5
    assert cfg.m % cfg.users == 0
    assert math.isclose(sum(cfg.pdp), cfg.n, rel_tol=1e-12)


def test_derived_properties():
    cfg = SimConfig(m=9, t=4, t_d=2)
    assert cfg.m_p == 3
    assert cfg.horizon == 9 + 2 + 4
    np.testing.assert_array_equal(cfg.payload_indices, [12, 13, 14, 15])
    assert math.isclose(cfg.snr_db, 10 * math.log10(cfg.p))


def test_flat_pdp_default():
    cfg = SimConfig(n=5, s=3)
    assert cfg.pdp == (5 / 3, 5 / 3, 5 / 3)


def test_doppler_from_velocity_matches_design_point():
    # 24.2 km/h at 2.5 GHz carrier and 14 kHz symbol rate sits near 0.004
    nu = doppler_from_velocity(24.2)
    assert abs(nu - 0.004) < 5e-5


@pytest.mark.parametrize("kw", [
    dict(users=2),
    dict(users=4),
    dict(n=4),
    dict(n=1),
    dict(s=7),
    dict(m=10),        # not a multiple of users
    dict(m=0),
    dict(t=0),
    dict(t_d=-1),
    dict(nu_d=0.5),
    dict(nu_d=-0.01),
    dict(p=0.0),
    dict(n_d=-1),
    dict(pdp=(1.0, 1.0, 1.0)),     # does not sum to n
    dict(pdp=(6.0, -0.5, -0.5)),
    dict(d_mode=0),
    dict(d_mode="auto"),
    dict(quantizer="vector"),
    dict(quantizer="explicit-rvq", n_d=25),   # table too large
    dict(spectrum="jakes"),
    dict(trials=0),
    dict(rotations=-1),
])
def test_validation_rejects(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw)


def test_d_mode_bounded_by_pilot_count():
    SimConfig(m=9, d_mode=3)
    with pytest.raises(ConfigError):
        SimConfig(m=9, d_mode=4)


def test_replace_snr_db_sets_power():
    cfg = SimConfig().replace(snr_db=20.0)
    assert math.isclose(cfg.p, 100.0)


def test_replace_resets_pdp_when_shape_changes():
    cfg = SimConfig(n=5, s=3)
    cfg2 = cfg.replace(s=2)
    assert cfg2.pdp == (2.5, 2.5)


def test_read_config_roundtrip(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nm = 9\nnu_d = 0.01\nquantizer = perturbation\n")
    raw = read_config(path)
    assert raw == {"m": "9", "nu_d": "0.01", "quantizer": "perturbation"}
    cfg = config_from_mapping(raw)
    assert cfg.m == 9 and cfg.nu_d == 0.01


def test_read_config_rejects_duplicates(tmp_path):
    path = tmp_path / "dup.cfg"
    path.write_text("m = 9\nm = 12\n")
    with pytest.raises(ConfigError):
        read_config(path)


def test_read_config_rejects_bare_lines(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("just a line\n")
    with pytest.raises(ConfigError):
        read_config(path)


def test_mapping_conflicts_and_unknown_keys():
    with pytest.raises(ConfigError):
        config_from_mapping({"p": "100", "snr_db": "20"})
    with pytest.raises(ConfigError):
        config_from_mapping({"nu_d": "0.004", "velocity_kmh": "24.2"})
    with pytest.raises(ConfigError):
        config_from_mapping({"bogus": "1"})


def test_mapping_parses_pdp_list():
    cfg = config_from_mapping({"n": "5", "s": "2", "pdp": "4.0, 1.0"})
    assert cfg.pdp == (4.0, 1.0)
    cfg = config_from_mapping({"pdp": "flat"})
    assert cfg.pdp == cfg.replace().pdp


def test_mapping_velocity_alias():
    cfg = config_from_mapping({"velocity_kmh": "24.2"})
    assert abs(cfg.nu_d - 0.004) < 5e-5
