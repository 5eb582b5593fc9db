import csv
import json
from dataclasses import fields

import pytest

from sdapd.cli import SCHEMAS, main
from sdapd.config import ConfigError, parse_config
from sdapd.detector import DetectorSpec

SATURATION = """\
[detector]
efficiency = 0.14

[experiment]
name = saturation
"""

DEADTIME = """\
[detector]
efficiency = 0.10
afterpulse_total = 0

[experiment]
name = deadtime
mu_list = 0.1, 1, 10
frames = 20000
seed = 42
"""


def test_minimal_saturation_config_uses_documented_defaults():
    cfg = parse_config(SATURATION)
    assert cfg.experiment == "saturation"
    d = cfg.detector
    assert d.efficiency == 0.14
    assert (d.dark_prob, d.afterpulse_total, d.afterpulse_decay, d.sd_residual, d.clock_hz) == \
        (1.67e-5, 0.05, 10.0, 0.0, 1.036e9)
    assert cfg.params["frame_gates"] == 2


def test_deadtime_defaults():
    cfg = parse_config("[experiment]\nname = deadtime\n")
    assert cfg.detector.efficiency == 0.10 and cfg.params["frame_gates"] == 64


def test_out_of_range_names_key_and_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("[detector]\n\nefficiency = 1.5\n[experiment]\nname = deadtime\n")
    assert exc.value.key == "efficiency" and exc.value.line == 3
    assert "efficiency" in str(exc.value)


def test_empty_experiment_section():
    with pytest.raises(ConfigError) as exc:
        parse_config("[detector]\nefficiency = 0.1\n[experiment]\n")
    assert exc.value.key == "name" and exc.value.line == 3


def test_unknown_key_reported_with_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("[experiment]\nname = hbt\nfrobnicate = 1\n[source]\nkind = coherent\n")
    assert exc.value.key == "frobnicate" and exc.value.line == 3


@pytest.mark.parametrize("text,key", [
    ("[experiment]\nname = deadtime\nseparation = 64\n", "separation"),
    ("[experiment]\nname = deadtime\nframes = 100\n", "frames"),
    ("[experiment]\nname = hbt\ndelay = 8\n[source]\nkind = coherent\nmean_photons = 0.1\n",
     "delay"),
    ("[experiment]\nname = hbt\n[source]\nkind = thermal\nmean_photons = 0.1\nmode_count = 0.5\n",
     "mode_count"),
    ("[experiment]\nname = saturation\n[source]\nkind = coherent\n", "source"),
    ("[experiment]\nname = warp\n", "name"),
    ("[experiment]\nname = deadtime\nmu_list = 1, x\n", "mu_list"),
])
def test_invalid_configs(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key


def _body(path):
    return path.read_bytes()


def test_deadtime_run_is_reproducible(tmp_path):
    cfg = tmp_path / "dt.ini"
    cfg.write_text(DEADTIME)
    assert main([str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main([str(cfg), "--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    a, b = tmp_path / "a" / "deadtime.csv", tmp_path / "b" / "deadtime.csv"
    assert _body(a) == _body(b)
    rows = list(csv.reader(a.open()))
    assert tuple(rows[0]) == SCHEMAS["deadtime"]
    assert [float(r[0]) for r in rows[1:]] == [0.1, 1.0, 10.0]
    assert main([str(cfg), "--out", str(tmp_path / "c"), "--seed", "43"]) == 0
    assert _body(tmp_path / "c" / "deadtime.csv") != _body(a)


def test_manifest_lists_every_parameter(tmp_path):
    cfg = tmp_path / "dt.ini"
    cfg.write_text(DEADTIME)
    assert main([str(cfg), "--out", str(tmp_path)]) == 0
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert set(m["detector"]) == {f.name for f in fields(DetectorSpec)}
    assert m["seed"] == 42 and m["frames"] == 20000
    assert set(m["parameters"]) >= {"mu_list", "separation", "frame_gates"}
    assert m["code_version"] and m["wall_time_s"] >= 0
    assert m["outputs"] == ["deadtime.csv"]


def test_delaysweep_schema(tmp_path):
    cfg = tmp_path / "ds.ini"
    cfg.write_text("[detector]\nafterpulse_total = 0\n[experiment]\nname = delaysweep\n"
                   "separations = 1..4\nframes = 10000\n")
    assert main([str(cfg), "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "delaysweep.csv").open()))
    assert tuple(rows[0]) == SCHEMAS["delaysweep"]
    assert [int(r[0]) for r in rows[1:]] == [1, 2, 3, 4]
    assert float(rows[1][1]) == 0.0


def test_saturation_run_reports_asymptote(tmp_path):
    cfg = tmp_path / "sat.ini"
    cfg.write_text(SATURATION + "mu_list = 0, 1, 100\nframes = 5000000\n")
    assert main([str(cfg), "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "saturation.csv").open()))
    assert tuple(rows[0]) == SCHEMAS["saturation"]
    asym = list(csv.reader((tmp_path / "saturation_asymptote.csv").open()))
    assert tuple(asym[0]) == SCHEMAS["saturation_asymptote"]
    assert 487e6 <= float(asym[1][0]) <= 507e6


def test_hbt_run_shows_bunching(tmp_path):
    cfg = tmp_path / "hbt.ini"
    cfg.write_text("[detector]\nafterpulse_total = 0\n[source]\nkind = thermal\n"
                   "mean_photons = 0.1\nmode_count = 2.5\n"
                   "[experiment]\nname = hbt\nframes = 15000000\nmax_lag = 3\n")
    assert main([str(cfg), "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "hbt.csv").open()))
    assert tuple(rows[0]) == SCHEMAS["hbt"]
    g0 = {int(r[0]): float(r[1]) for r in rows[1:]}[0]
    assert g0 == pytest.approx(1.4, abs=0.1)
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["results"]["hbt_flags"]["pileup_fraction"] < 0.01


def test_exit_codes(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nname = deadtime\nefficiency = 2\n")
    assert main([str(bad)]) == 2
    assert main([str(tmp_path / "missing.ini")]) == 2
    good = tmp_path / "dt.ini"
    good.write_text(DEADTIME)
    assert main([str(good), "--frames", "10"]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main([str(good), "--out", str(blocker / "sub")]) == 3
