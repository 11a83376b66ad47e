"""CLI: config ingestion, subcommands, CSV schemas and exit codes."""

import math

import pytest

from keyrates.cli import (
    ExperimentConfig,
    ParseError,
    ValidationError,
    bundled_field_config,
    load_config,
    run,
)

FIELD_CFG_TEXT = """
clock_rate_hz = 76.13e6
source_kind = sps
mean_photon_number = 0.292
g2 = 0.00698
eta_qd = 0.71
eta_t = 0.410
channel_loss_db = 14.6
fiber_optics_efficiency = 0.6
detection_efficiency = 0.712
dark_count_rate_cps = 43
gate_width_s = 3.42e-9
misalignment_prob = 0.0254
q_z_tx = 0.9
q_z_rx = 0.9
block_size = 1e8
pre_attenuation = 1.0
eps_pe = 9.1666666667e-11
eps_pa = 4.1666666667e-12
eps_ec = 4.1666666667e-12
eps_cor = 1e-15
f_ec = 1.16
"""


@pytest.fixture
def field_cfg(tmp_path):
    path = tmp_path / "field.cfg"
    path.write_text(FIELD_CFG_TEXT)
    return str(path)


def write_cfg(tmp_path, text, name="case.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestLoadConfig:
    def test_bundled_field_config(self):
        config = load_config(bundled_field_config())
        assert isinstance(config, ExperimentConfig)
        assert config.clock_rate_hz == pytest.approx(76.13e6)
        notes = config.consistency_report()
        assert len(notes) == 1
        assert "consistent" in notes[0]
        assert "0.2911" in notes[0]

    def test_empty_file_lists_required_keys(self, tmp_path):
        path = write_cfg(tmp_path, "")
        with pytest.raises(ValidationError) as excinfo:
            load_config(path)
        message = str(excinfo.value)
        for key in ("clock_rate_hz", "mean_photon_number", "eps_pa", "source_kind"):
            assert key in message

    def test_non_physical_source_named(self, tmp_path):
        text = FIELD_CFG_TEXT.replace("g2 = 0.00698", "g2 = 4.0")
        path = write_cfg(tmp_path, text)
        with pytest.raises(ValidationError) as excinfo:
            load_config(path)
        assert "NonPhysicalSource" in str(excinfo.value)

    def test_unknown_key_rejected_with_line(self, tmp_path):
        path = write_cfg(tmp_path, FIELD_CFG_TEXT + "wavelength_nm = 884.5\n")
        with pytest.raises(ValidationError) as excinfo:
            load_config(path)
        assert "wavelength_nm" in str(excinfo.value)
        assert "line" in str(excinfo.value)

    def test_malformed_line_is_parse_error(self, tmp_path):
        path = write_cfg(tmp_path, "clock_rate_hz 76e6\n")
        with pytest.raises(ParseError):
            load_config(path)

    def test_non_numeric_value_is_parse_error(self, tmp_path):
        path = write_cfg(tmp_path, FIELD_CFG_TEXT.replace("= 0.292", "= fast"))
        with pytest.raises(ParseError):
            load_config(path)

    def test_duplicate_key_rejected(self, tmp_path):
        path = write_cfg(tmp_path, FIELD_CFG_TEXT + "g2 = 0.001\n")
        with pytest.raises(ParseError):
            load_config(path)

    def test_missing_file(self):
        with pytest.raises(ParseError):
            load_config("/nonexistent/path.cfg")


class TestRateCommand:
    def test_reports_field_rate_and_exact_clock_product(self, field_cfg, capsys):
        assert run(["rate", field_cfg]) == 0
        out = capsys.readouterr().out
        values = {}
        for line in out.splitlines():
            if line.startswith("#"):
                continue
            key, _, value = line.partition(" = ")
            values[key] = float(value)
        assert values["rate_per_pulse"] == pytest.approx(1.08e-3, rel=0.25)
        assert values["rate_per_second"] == values["rate_per_pulse"] * 76.13e6
        assert values["rate_per_second"] == pytest.approx(82e3, rel=0.25)
        assert "# consistency:" in out

    def test_validation_failure_exit_code(self, tmp_path):
        path = write_cfg(tmp_path, FIELD_CFG_TEXT.replace("g2 = 0.00698", "g2 = 4.0"))
        assert run(["rate", path]) == 3

    def test_wcp_source_rate(self, tmp_path, capsys):
        text = FIELD_CFG_TEXT.replace("source_kind = sps", "source_kind = wcp")
        text += "mu_signal = 0.5\nmu_decoy = 0.15\np_signal = 0.7\np_decoy = 0.2\n"
        path = write_cfg(tmp_path, text)
        assert run(["rate", path]) == 0
        out = capsys.readouterr().out
        values = {}
        for line in out.strip().splitlines():
            if line.startswith("#"):
                continue
            key, _, value = line.partition(" = ")
            values[key] = value
        assert float(values["rate_per_pulse"]) > 0.0

    def test_wcp_source_without_intensities_fails(self, tmp_path):
        text = FIELD_CFG_TEXT.replace("source_kind = sps", "source_kind = wcp")
        path = write_cfg(tmp_path, text)
        assert run(["rate", path]) == 3

    def test_usage_error_exit_code(self):
        assert run(["rate"]) == 2
        assert run(["unknown-subcommand"]) == 2


class TestSweepCommand:
    def test_csv_schema_and_determinism(self, field_cfg, tmp_path):
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        args = ["sweep", field_cfg, "--loss-min", "0", "--loss-max", "6", "--steps", "3"]
        assert run(args + ["-o", str(out_a)]) == 0
        assert run(args + ["-o", str(out_b)]) == 0
        text = out_a.read_text()
        assert text == out_b.read_text()
        lines = text.strip().splitlines()
        assert lines[0] == "loss_db,r_sps,r_wcp,advantage_db"
        assert len(lines) == 4
        first = lines[1].split(",")
        assert len(first) == 4
        # at least nine significant digits in every numeric cell
        for cell in first:
            mantissa = cell.split("e")[0].replace("-", "").replace(".", "")
            assert len(mantissa) >= 9


class TestBoundaryCommand:
    def test_asymptotic_mode_endpoints(self, field_cfg, capsys):
        code = run(
            [
                "boundary",
                field_cfg,
                "--loss",
                "0",
                "--mode",
                "asymptotic",
                "--grid-min",
                "0.4",
                "--grid-max",
                "1.2",
                "--grid-points",
                "6",
            ]
        )
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "mean_photon_number,g2"
        points = [tuple(map(float, line.split(","))) for line in lines[1:]]
        assert points[0][0] == pytest.approx(1.0 / math.e, abs=1e-5)
        assert max(g2 for _, g2 in points) == pytest.approx(math.e / 4.0, abs=1e-5)

    def test_finite_mode_csv(self, field_cfg, tmp_path):
        out = tmp_path / "finite.csv"
        code = run(
            [
                "boundary",
                field_cfg,
                "--loss",
                "0",
                "--mode",
                "finite",
                "--grid-min",
                "0.1",
                "--grid-max",
                "0.4",
                "--grid-points",
                "3",
                "-o",
                str(out),
            ]
        )
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "mean_photon_number,g2"
        points = [tuple(map(float, line.split(","))) for line in lines[1:]]
        assert points[0][1] == 0.0  # bisected minimum-mean endpoint
        assert points[0][0] == pytest.approx(0.086, rel=0.2)

    def test_empty_curve_exit_code(self, field_cfg):
        code = run(
            [
                "boundary",
                field_cfg,
                "--loss",
                "0",
                "--mode",
                "asymptotic",
                "--grid-min",
                "0.05",
                "--grid-max",
                "0.2",
                "--grid-points",
                "4",
            ]
        )
        assert code == 4


class TestSimulateCommand:
    def test_csv_schema_and_seed_determinism(self, field_cfg, tmp_path):
        cfg = write_cfg(tmp_path, FIELD_CFG_TEXT.replace("block_size = 1e8", "block_size = 1e6"))
        out_a = tmp_path / "sim_a.csv"
        out_b = tmp_path / "sim_b.csv"
        args = ["simulate", cfg, "--reps", "5", "--seed", "11"]
        assert run(args + ["-o", str(out_a)]) == 0
        assert run(args + ["-o", str(out_b)]) == 0
        assert out_a.read_text() == out_b.read_text()
        lines = out_a.read_text().strip().splitlines()
        assert lines[0] == "seed,n_z,m_z,n_x,m_x,key_length,rate"
        assert len(lines) == 6


class TestOptimizeCommand:
    def test_sps_target_improves_on_config(self, field_cfg, capsys):
        code = run(
            ["optimize", field_cfg, "--target", "sps", "--seed", "3",
             "--population", "24", "--generations", "30"]
        )
        assert code == 0
        out = capsys.readouterr().out
        values = dict(
            line.split(" = ") for line in out.strip().splitlines() if " = " in line
        )
        assert float(values["best_rate_per_pulse"]) >= 1.08e-3 * 0.75
        assert 0.5 <= float(values["q_z_tx"]) <= 0.99

    def test_wcp_target_matches_scan_optimizer(self, field_cfg, capsys):
        code = run(
            ["optimize", field_cfg, "--target", "wcp", "--seed", "1",
             "--population", "20", "--generations", "25"]
        )
        assert code == 0
        out = capsys.readouterr().out
        values = dict(
            line.split(" = ") for line in out.strip().splitlines() if " = " in line
        )
        total = (
            float(values["p_signal"]) + float(values["p_decoy"]) + float(values["p_vacuum"])
        )
        assert total == pytest.approx(1.0, abs=1e-9)
        # Two independent optimisers, one stochastic and one a scan,
        # should agree on the achievable rate to within a few percent.
        from keyrates.finite_key import optimized_wcp_rate

        config = load_config(field_cfg)
        scan_rate, _, _ = optimized_wcp_rate(config.channel, config.proto, config.sec)
        assert float(values["best_rate_per_pulse"]) == pytest.approx(scan_rate, rel=0.05)


class TestCompareCommand:
    def test_reports_advantage_and_crossover(self, field_cfg, capsys):
        assert run(["compare", field_cfg]) == 0
        out = capsys.readouterr().out
        values = dict(
            line.split(" = ") for line in out.strip().splitlines() if " = " in line
        )
        assert float(values["advantage_db"]) == pytest.approx(2.53, abs=1.0)
        assert float(values["crossover_loss_db"]) == pytest.approx(19.0, abs=2.0)
        assert float(values["max_advantage_db_near_zero"]) == pytest.approx(5.40, abs=1.0)
