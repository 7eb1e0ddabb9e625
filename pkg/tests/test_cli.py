import io
import math

import pytest

from dualpol.cli import (
    _build_variants,
    list_presets,
    main,
    parse_config,
    preset,
    run_config,
)
from dualpol.errors import InvalidConfigurationError


class TestConfigParser:
    def test_grammar(self):
        cfg = parse_config(
            """
            # a comment
            m = 120
            spread_deg = 15.0   # trailing comment
            schemes = BD, BDS
            grid = true
            chi_dist = uniform:0:0.5
            """
        )
        assert cfg["m"] == 120
        assert cfg["spread_deg"] == 15.0
        assert cfg["schemes"] == ["BD", "BDS"]
        assert cfg["grid"] is True
        assert cfg["chi_dist"] == "uniform:0:0.5"

    def test_rejects_bad_lines(self):
        with pytest.raises(InvalidConfigurationError):
            parse_config("just words\n")
        with pytest.raises(InvalidConfigurationError):
            parse_config(" = 3\n")


class TestPresets:
    def test_list_contains_figure_presets(self):
        assert list_presets() == ["fig11", "fig3", "fig4", "fig5", "fig6",
                                  "fig8", "fig9"]

    def test_unknown_preset(self):
        with pytest.raises(InvalidConfigurationError):
            preset("fig7")

    def test_fig4_dimensions(self):
        cfg = preset("fig4")
        assert cfg["m"] == 120 and cfg["groups"] == 4 and cfg["n_bar"] == 8
        variants = _build_variants(cfg)
        sc = variants[0].scenario
        # B_bar defaults to min(2 n_bar, 2 r)
        assert sc.b_bar == min(2 * sc.n_bar, 2 * min(
            c.effective_rank for c in sc.covariances))
        assert sc.b_bar == 16

    def test_fig3_has_b14_and_three_arrays(self):
        cfg = preset("fig3")
        assert cfg["b_bar"] == 14
        variants = _build_variants(cfg)
        assert [v.scenario_id for v in variants] == [
            "fig3-dual-ds0.5", "fig3-single-ds0.5", "fig3-single-ds0.25"]
        assert all(v.scenario.b_bar == 14 for v in variants)

    def test_fig11_geometry(self):
        cfg = preset("fig11")
        assert cfg["height"] == 60.0
        assert cfg["distances"] == [30.0, 60.0, 100.0]
        assert (cfg["m_e"], cfg["m_a"]) == (10, 50)
        assert 0.22 * 180.0 in cfg["theta_max_ms_deg"]

    def test_every_preset_builds_valid_scenarios(self):
        for name in list_presets():
            variants = _build_variants(preset(name))
            assert variants


def _run(config, **overrides):
    cfg = dict(config)
    cfg.update(overrides)
    buf = io.StringIO()
    run_config(cfg, buf)
    return buf.getvalue()


class TestRun:
    def test_empty_scheme_list_gives_header_only(self):
        out = _run({"scenario_id": "t", "snr_db": 10.0, "schemes": ""})
        assert out.splitlines() == [
            "scenario_id,scheme,snr_db,chi,tau_sq,n_bits,sum_rate,stderr,n_trials,seed"]

    def test_rows_and_determinism(self):
        cfg = {"scenario_id": "t", "m": 24, "groups": 2, "n_bar": 4,
               "spread_deg": 20.0, "snr_db": [0.0, 10.0], "chi": 0.1,
               "schemes": ["BD", "BDS"], "n_trials": 4, "seed": 9}
        out1 = _run(cfg)
        out2 = _run(cfg)
        assert out1 == out2
        lines = out1.splitlines()
        assert len(lines) == 1 + 2 * 2
        assert lines[1].startswith("t,BD,0,0.1,0,,")

    def test_seed_changes_rows(self):
        cfg = {"scenario_id": "t", "m": 24, "groups": 2, "n_bar": 4,
               "spread_deg": 20.0, "snr_db": 10.0, "schemes": ["BD"],
               "n_trials": 4, "seed": 9}
        assert _run(cfg) != _run(cfg, seed=10)

    def test_two_axes_require_grid(self):
        cfg = {"scenario_id": "t", "m": 24, "groups": 2, "n_bar": 4,
               "spread_deg": 20.0, "snr_db": [0.0, 10.0],
               "chi": [0.0, 0.2], "schemes": ["BD"], "n_trials": 2, "seed": 1}
        with pytest.raises(InvalidConfigurationError, match="grid"):
            _run(cfg)
        assert _run(cfg, grid=True)

    def test_asym_rows_have_zero_trials(self):
        cfg = {"scenario_id": "t", "m": 24, "groups": 2, "n_bar": 4,
               "spread_deg": 20.0, "snr_db": 10.0, "tau_sq": 0.1,
               "schemes": ["ASYM_BD", "ASYM_BDS"], "n_trials": 3, "seed": 1}
        rows = _run(cfg).splitlines()[1:]
        assert all(row.split(",")[-2] == "0" for row in rows)
        assert all(row.split(",")[7] == "0" for row in rows)  # stderr

    def test_tau_clamp_is_flagged(self, capsys):
        cfg = {"scenario_id": "t", "m": 24, "groups": 2, "n_bar": 4,
               "spread_deg": 20.0, "snr_db": 10.0, "tau_sq": 1.5,
               "schemes": ["BD"], "n_trials": 2, "seed": 1}
        _run(cfg)
        assert "clamped" in capsys.readouterr().err

    def test_unknown_scheme_rejected(self):
        with pytest.raises(InvalidConfigurationError, match="unknown schemes"):
            _run({"scenario_id": "t", "schemes": ["MRT"]})


class TestMain:
    def test_list_presets_exit_zero(self, capsys):
        assert main(["list-presets"]) == 0
        assert "fig4" in capsys.readouterr().out

    def test_unknown_preset_exit_two(self, capsys):
        assert main(["preset", "fig7"]) == 2
        assert "config error" in capsys.readouterr().err

    def test_preset_roundtrip_and_run(self, tmp_path, capsys):
        cfg_path = tmp_path / "fig4.cfg"
        assert main(["preset", "fig4", "--out", str(cfg_path)]) == 0
        text = cfg_path.read_text()
        assert parse_config(text)["m"] == 120
        out_path = tmp_path / "fig4.csv"
        # trim to a smoke-sized run
        trimmed = text + "snr_db = 10\nchi = 0\n"
        cfg_path.write_text(trimmed)
        assert main(["run", "--config", str(cfg_path), "--trials", "3",
                     "--out", str(out_path)]) == 0
        lines = out_path.read_text().splitlines()
        assert lines[0].startswith("scenario_id,")
        assert len(lines) == 3  # header + BD + BDS

    def test_missing_config_exit_two(self, capsys):
        assert main(["run", "--config", "/nonexistent.cfg"]) == 2

    def test_byte_identical_reruns(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("scenario_id = rerun\nm = 24\ngroups = 2\nn_bar = 4\n"
                       "spread_deg = 20\nsnr_db = 5\nschemes = BD\n"
                       "n_trials = 4\nseed = 3\n")
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["run", "--config", str(cfg), "--out", str(a)]) == 0
        assert main(["run", "--config", str(cfg), "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
