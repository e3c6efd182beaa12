import csv
import json

import numpy as np
import pytest

from vlclink import cli, harness
from vlclink.codes import build_split_phase, encode
from vlclink.harness import ConfigError


class TestConfigParsing:

    def test_defaults_and_overrides(self):
        cfg = harness.parse_config_text(
            "scheme = cc-bmc   # line code\nk = 100\nebn0_db = 3.0, 4.0\n")
        assert cfg["scheme"] == "cc-bmc"
        assert cfg["k"] == 100
        assert cfg["ebn0_db"] == [3.0, 4.0]
        assert cfg["iterations"] == harness.DEFAULTS["iterations"]

    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError, match="line 2.*turbo"):
            harness.parse_config_text("k = 8\nturbo = yes\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="line 1"):
            harness.parse_config_text("just some words\n")

    def test_bad_int(self):
        with pytest.raises(ConfigError, match="'k'"):
            harness.parse_config_text("k = twelve\n")

    def test_empty_grid(self):
        with pytest.raises(ConfigError, match="empty"):
            harness.parse_config_text("ebn0_db = ,\n")

    def test_unknown_scheme(self):
        with pytest.raises(ConfigError, match="scheme"):
            harness.parse_config_text("scheme = cc-8b10b\n")

    def test_genie_boolean_forms(self):
        for text, want in [("genie = off", False), ("genie = 1", True),
                           ("genie = FALSE", False)]:
            assert harness.parse_config_text(text)["genie"] is want

    def test_preset_layering(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("k = 7\n")
        cfg = harness.load_config(p, preset="dim60",
                                  overrides={"seed": 99})
        assert cfg["scheme"] == "cc-split-phase-dim60"  # from preset
        assert cfg["k"] == 7                             # file beats preset
        assert cfg["seed"] == 99                         # override beats file

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="preset"):
            harness.load_config(None, preset="bench")

    def test_digest_stable_and_sensitive(self):
        a = harness.parse_config_text("k = 64\n")
        b = harness.parse_config_text("k = 64\n")
        c = harness.parse_config_text("k = 65\n")
        assert harness.config_digest(a) == harness.config_digest(b)
        assert harness.config_digest(a) != harness.config_digest(c)


class TestStreamMetrics:

    def test_examples(self):
        m = harness.stream_metrics(np.array([0, 0, 1, 1, 1, 0, 1]))
        assert m.ones_fraction == pytest.approx(4 / 7)
        assert m.max_run_0 == 2
        assert m.max_run_1 == 3
        assert m.run_histogram == {1: 2, 2: 1, 3: 1}

    def test_empty(self):
        m = harness.stream_metrics(np.array([], dtype=np.uint8))
        assert (m.ones_fraction, m.max_run_0, m.max_run_1) == (0.0, 0, 0)

    def test_all_ones(self):
        m = harness.stream_metrics(np.ones(17, dtype=np.uint8))
        assert m.max_run_1 == 17 and m.max_run_0 == 0

    def test_split_phase_stream(self):
        rng = np.random.default_rng(3)
        line = encode(build_split_phase(), rng.integers(0, 2, 4000))
        m = harness.stream_metrics(line)
        assert m.ones_fraction == 0.5
        assert max(m.max_run_0, m.max_run_1) <= 2


def _tiny_cfg(**over):
    cfg = harness.parse_config_text("")
    cfg.update({"k": 128, "iterations": 5, "max_blocks": 4,
                "target_errors": 10 ** 9, "batch": 2,
                "ebn0_db": [6.0], "exit_samples": 4000})
    cfg.update(over)
    return cfg


class TestBerSweep:

    def test_deterministic_across_runs_and_workers(self, tmp_path):
        cfg = _tiny_cfg(ebn0_db=[3.0, 6.0])
        r1 = harness.run_ber_sweep(cfg, out_dir=tmp_path / "a")
        r2 = harness.run_ber_sweep(dict(cfg, workers=2),
                                   out_dir=tmp_path / "b")
        for a, b in zip(r1, r2):
            ra, rb = a.row(), b.row()
            wt = harness.BER_COLUMNS.index("wall_time_s")
            dg = harness.BER_COLUMNS.index("config_digest")
            ra[wt] = rb[wt] = 0.0
            ra[dg] = rb[dg] = ""
            assert ra == rb

    def test_csv_schema(self, tmp_path):
        harness.run_ber_sweep(_tiny_cfg(), out_dir=tmp_path)
        with open(tmp_path / "ber.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == harness.BER_COLUMNS
        assert len(rows) == 2
        rec = dict(zip(rows[0], rows[1]))
        assert float(rec["ebn0_db"]) == 6.0
        assert int(rec["blocks_run"]) == 4
        assert 0.0 <= float(rec["ber"]) <= 1.0
        assert float(rec["ber_ci_lo"]) <= float(rec["ber"]) \
            <= float(rec["ber_ci_hi"])

    def test_manifest_contents(self, tmp_path):
        cfg = _tiny_cfg()
        harness.run_ber_sweep(cfg, out_dir=tmp_path)
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["config_digest"] == harness.config_digest(cfg)
        assert man["rates"]["outer"] == "2/3"
        assert man["mean_symbol_energy"] == 0.5

    def test_target_errors_stops_early(self):
        cfg = _tiny_cfg(ebn0_db=[0.0], max_blocks=50, target_errors=5,
                        batch=1)
        rec = harness.run_ber_sweep(cfg)[0]
        assert rec.bit_errors >= 5
        assert rec.blocks_run < 50


class TestCli:

    def test_presets_lists_all(self, capsys):
        assert cli.main(["presets"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert set(out) == set(harness.PRESETS)

    def test_bad_config_exit_code(self, tmp_path, capsys):
        p = tmp_path / "bad.cfg"
        p.write_text("voltage = 5\n")
        assert cli.main(["ber", "--config", str(p)]) == 2
        assert "voltage" in capsys.readouterr().err

    def test_ber_subcommand(self, tmp_path, capsys):
        p = tmp_path / "c.cfg"
        p.write_text("k = 128\niterations = 5\nmax_blocks = 2\n"
                     "batch = 2\nebn0_db = 6.0\n")
        out = tmp_path / "res"
        assert cli.main(["ber", "--config", str(p),
                         "--out", str(out)]) == 0
        assert (out / "ber.csv").exists()
        assert (out / "manifest.json").exists()
        first = capsys.readouterr().out.splitlines()[0]
        assert first == ",".join(harness.BER_COLUMNS)

    def test_exit_subcommand(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("exit_samples = 3000\nk = 128\niterations = 8\n"
                     "trajectory_blocks = 1\nexit_ebn0_db = 6.0\n")
        out = tmp_path / "res"
        assert cli.main(["exit", "--config", str(p),
                         "--out", str(out)]) == 0
        assert (out / "exit_curves.csv").exists()
        assert (out / "trajectory.csv").exists()
        with open(out / "exit_curves.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == harness.EXIT_COLUMNS
        comps = {r[0] for r in rows[1:]}
        assert comps == {"inner:split-phase", "inner:bmc",
                         "inner:manchester", "inner:4b6b",
                         "outer:cc", "outer:cc-rate-1/2"}

    def test_threshold_subcommand(self, tmp_path, capsys):
        p = tmp_path / "c.cfg"
        p.write_text("exit_samples = 20000\nthreshold_lo_db = 3.0\n"
                     "threshold_hi_db = 6.0\n"
                     "threshold_resolution_db = 0.5\n")
        out = tmp_path / "res"
        assert cli.main(["threshold", "--config", str(p),
                         "--out", str(out)]) == 0
        data = json.loads((out / "thresholds.json").read_text())
        assert set(data) == {"cc-split-phase", "cc-bmc", "cc-4b6b"}
        for rec in data.values():
            assert rec["found"]
            assert 3.0 <= rec["ebn0_db_star"] <= 6.0

    def test_metrics_subcommand(self, capsys, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("scheme = cc-4b6b\nk = 64\n")
        assert cli.main(["metrics", "--config", str(p), "--blocks", "2"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["scheme"] == "cc-4b6b"
        assert data["ones_fraction"] == 0.5
        assert max(data["max_run_0"], data["max_run_1"]) <= 4
