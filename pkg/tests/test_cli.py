"""End-to-end tests for the command-line interface.

Every subcommand is driven through main() with real artifacts in tmp dirs;
exit codes are the documented contract: 0 ok, 1 verdict failure, 2 config,
3 positivity, 4 CFL.
"""

import numpy as np
import pytest

from nsdecay import cli, oracle, runio
from nsdecay.cli import (EXIT_CFL, EXIT_CONFIG, EXIT_OK, EXIT_POSITIVITY,
                         EXIT_VERDICT_FAIL, build_run_config, parse_config_text)
from nsdecay.errors import ConfigError

L4PI = "12.566370614359172"

RUN_CONFIG = f"""
# short smoke run
model = fcns
model.mu = 1.0
model.lambda = 0.0
grid.n = 16
grid.box_length = {L4PI}
time.dt = 0.1
time.t_end = 1.0
time.cadence = 0.5
init.kind = spectrum
init.amplitude = 0.001
seed = 2
"""

SHEAR_ORACLE_CONFIG = """
model = fcns
model.mu = 1.0
model.lambda = 0.0
profile.sigma = 0.0
profile.weight_a = 0.0
profile.weight_u_long = 0.0
profile.weight_theta = 0.0
times.start = 100.0
times.stop = 10000.0
times.count = 30
orders = 0, 1
neg_s = 0.5
"""


def write(path, text):
    path.write_text(text)
    return str(path)


class TestParseConfig:
    def test_scalars_comments_and_lists(self):
        cfg = parse_config_text(
            "a = 1\nb = 2.5  # trailing comment\n# full comment\n\n"
            "c = true\nd = fcns\ne = 0.25, 0.5, 1.0\n")
        assert cfg == {"a": 1, "b": 2.5, "c": True, "d": "fcns",
                       "e": (0.25, 0.5, 1.0)}
        assert isinstance(cfg["a"], int)

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("a = 1\na = 2\n")

    def test_garbage_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("just words\n")
        with pytest.raises(ConfigError):
            parse_config_text("key =\n")


class TestBuildRunConfig:
    def base(self):
        return parse_config_text(RUN_CONFIG)

    def test_fields_and_defaults(self):
        rc = build_run_config(self.base(), out_dir="/tmp/x")
        assert rc.n == 16
        assert rc.box_length == pytest.approx(4 * np.pi)
        assert rc.params.model == "FCNS"
        assert rc.params.gamma == 1.4
        assert rc.s_values == (0.25, 0.5, 1.0, 1.4)
        assert rc.delta == 0.1
        assert rc.split_R == 1.0
        assert rc.seed == 2
        assert rc.out_dir == "/tmp/x"

    def test_unknown_key_rejected(self):
        cfg = self.base()
        cfg["grid.m"] = 3
        with pytest.raises(ConfigError, match="unknown config keys"):
            build_run_config(cfg, out_dir="/tmp/x")

    def test_out_dir_required(self):
        with pytest.raises(ConfigError, match="output directory"):
            build_run_config(self.base())

    def test_model_name_validated(self):
        cfg = self.base()
        cfg["model"] = "euler"
        with pytest.raises(ConfigError, match="model must be"):
            build_run_config(cfg, out_dir="/tmp/x")

    def test_type_errors_become_config_errors(self):
        cfg = self.base()
        cfg["grid.n"] = 16.0
        with pytest.raises(ConfigError, match="integer"):
            build_run_config(cfg, out_dir="/tmp/x")
        cfg = self.base()
        cfg["time.t_end"] = 1.05  # not a multiple of dt
        with pytest.raises(ConfigError):
            build_run_config(cfg, out_dir="/tmp/x")


class TestRunCommand:
    def test_complete_run_artifacts(self, tmp_path):
        cfg = write(tmp_path / "run.cfg", RUN_CONFIG)
        out = tmp_path / "out"
        assert cli.main(["run", cfg, "-o", str(out)]) == EXIT_OK
        assert (out / "series.csv").exists()
        assert (out / "manifest.json").exists()
        assert (out / "events.log").exists()
        manifest = runio.read_json(str(out / "manifest.json"))
        assert manifest["status"] == "completed"
        assert manifest["t_box"] == pytest.approx(4.0)
        cols, data = runio.read_table(str(out / "series.csv"))
        assert cols[0] == "t"
        assert data["t"].tolist() == pytest.approx([0.0, 0.5, 1.0])

    def test_byte_identical_rerun(self, tmp_path):
        cfg = write(tmp_path / "run.cfg", RUN_CONFIG)
        cli.main(["run", cfg, "-o", str(tmp_path / "o1")])
        cli.main(["run", cfg, "-o", str(tmp_path / "o2")])
        b1 = (tmp_path / "o1" / "series.csv").read_bytes()
        b2 = (tmp_path / "o2" / "series.csv").read_bytes()
        assert b1 == b2

    def test_out_dir_from_config(self, tmp_path):
        out = tmp_path / "from_cfg"
        cfg = write(tmp_path / "run.cfg", RUN_CONFIG + f"\nout.dir = {out}\n")
        assert cli.main(["run", cfg]) == EXIT_OK
        assert (out / "series.csv").exists()

    def test_zero_length_run(self, tmp_path):
        cfg = write(tmp_path / "run.cfg",
                    RUN_CONFIG.replace("time.t_end = 1.0", "time.t_end = 0.0"))
        out = tmp_path / "out"
        assert cli.main(["run", cfg, "-o", str(out)]) == EXIT_OK
        _, data = runio.read_table(str(out / "series.csv"))
        assert data["t"].tolist() == [0.0]

    def test_icns_run(self, tmp_path):
        text = RUN_CONFIG.replace("model = fcns", "model = icns")
        cfg = write(tmp_path / "run.cfg", text)
        out = tmp_path / "out"
        assert cli.main(["run", cfg, "-o", str(out)]) == EXIT_OK
        cols, _ = runio.read_table(str(out / "series.csv"))
        assert "e1_sq" in cols and "e2_sq" not in cols

    def test_positivity_exit_code(self, tmp_path):
        text = RUN_CONFIG.replace("init.amplitude = 0.001", "init.amplitude = 0.02")
        cfg = write(tmp_path / "run.cfg", text)
        assert cli.main(["run", cfg, "-o", str(tmp_path / "out")]) == EXIT_POSITIVITY

    def test_cfl_exit_code_with_partial_artifacts(self, tmp_path):
        text = RUN_CONFIG.replace("init.kind = spectrum", "init.kind = manufactured")
        text = text.replace("init.amplitude = 0.001", "init.amplitude = 5.0\n"
                            "init.weight_a = 0.0\ninit.weight_theta = 0.0\n"
                            "init.weight_u_trans = 0.0")
        cfg = write(tmp_path / "run.cfg", text)
        out = tmp_path / "out"
        assert cli.main(["run", cfg, "-o", str(out)]) == EXIT_CFL
        manifest = runio.read_json(str(out / "manifest.json"))
        assert manifest["status"] == "aborted"
        assert (out / "events.log").exists()
        assert (out / "series.csv").exists()

    def test_unknown_key_exit_code(self, tmp_path):
        cfg = write(tmp_path / "run.cfg", RUN_CONFIG + "\nbogus.key = 1\n")
        assert cli.main(["run", cfg, "-o", str(tmp_path / "out")]) == EXIT_CONFIG

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["run", str(tmp_path / "nope.cfg"),
                         "-o", str(tmp_path / "out")]) == EXIT_CONFIG


class TestOracleCommand:
    def test_columns_and_closed_form_values(self, tmp_path):
        cfg = write(tmp_path / "oracle.cfg", SHEAR_ORACLE_CONFIG)
        out = tmp_path / "out"
        assert cli.main(["oracle", cfg, "-o", str(out)]) == EXIT_OK
        cols, data = runio.read_table(str(out / "oracle.csv"))
        assert cols == ["t", "l2_a", "l2_u", "l2_theta", "grad_a", "grad_u",
                        "grad_theta", "neg_a_s0.5", "neg_u_s0.5", "neg_theta_s0.5",
                        "neg_energy_s0.5"]
        # pure shear: the u column is the square root of the diffusion integral
        expected = [np.sqrt(oracle.heat_closed_form(0.0, 1.0, 1.0, 0, t))
                    for t in data["t"]]
        assert np.allclose(data["l2_u"], expected, rtol=1e-10)
        assert np.all(data["l2_a"] == 0.0)
        manifest = runio.read_json(str(out / "manifest.json"))
        assert manifest["kind"] == "oracle"
        assert manifest["columns"] == cols

    def test_times_validation(self, tmp_path):
        bad = SHEAR_ORACLE_CONFIG.replace("times.start = 100.0", "times.start = -1.0")
        cfg = write(tmp_path / "oracle.cfg", bad)
        assert cli.main(["oracle", cfg, "-o", str(tmp_path / "out")]) == EXIT_CONFIG

    def test_explicit_times_list(self, tmp_path):
        text = SHEAR_ORACLE_CONFIG.replace(
            "times.start = 100.0\ntimes.stop = 10000.0\ntimes.count = 30",
            "times.list = 1.0, 2.0, 4.0")
        cfg = write(tmp_path / "oracle.cfg", text)
        out = tmp_path / "out"
        assert cli.main(["oracle", cfg, "-o", str(out)]) == EXIT_OK
        _, data = runio.read_table(str(out / "oracle.csv"))
        assert data["t"].tolist() == [1.0, 2.0, 4.0]


class TestFitCommand:
    @pytest.fixture()
    def oracle_dir(self, tmp_path):
        cfg = write(tmp_path / "oracle.cfg", SHEAR_ORACLE_CONFIG)
        out = tmp_path / "oracle_out"
        assert cli.main(["oracle", cfg, "-o", str(out)]) == EXIT_OK
        return out

    def test_passing_verdict(self, tmp_path, oracle_dir):
        rates = write(tmp_path / "rates.json",
                      '{"rates": [{"column": "l2_u", "theoretical": -0.75, "tol": 0.02}]}')
        csv = str(oracle_dir / "oracle.csv")
        assert cli.main(["fit", csv, "--rates", rates]) == EXIT_OK
        verdicts = runio.read_json(str(oracle_dir / "verdicts.json"))
        assert verdicts["all_pass"] is True
        fit = verdicts["fits"]["l2_u"]
        assert fit["exponent"] == pytest.approx(-0.75, abs=1e-10)
        assert fit["verdict"] is True

    def test_failing_verdict(self, tmp_path, oracle_dir):
        rates = write(tmp_path / "rates.json",
                      '{"rates": [{"column": "l2_u", "theoretical": -2.0, "tol": 0.01}]}')
        assert cli.main(["fit", str(oracle_dir / "oracle.csv"),
                         "--rates", rates]) == EXIT_VERDICT_FAIL

    def test_unknown_column(self, tmp_path, oracle_dir):
        rates = write(tmp_path / "rates.json",
                      '{"rates": [{"column": "nope", "theoretical": -1.0}]}')
        assert cli.main(["fit", str(oracle_dir / "oracle.csv"),
                         "--rates", rates]) == EXIT_CONFIG

    def test_t_box_falls_back_to_sibling_manifest(self, tmp_path):
        cfg = write(tmp_path / "run.cfg",
                    RUN_CONFIG.replace("time.cadence = 0.5", "time.cadence = 0.1"))
        out = tmp_path / "run_out"
        assert cli.main(["run", cfg, "-o", str(out)]) == EXIT_OK
        rates = write(tmp_path / "rates.json",
                      '{"rates": [{"column": "l2_u"}], "window": [0.0, 1.0]}')
        assert cli.main(["fit", str(out / "series.csv"), "--rates", rates]) == EXIT_OK
        verdicts = runio.read_json(str(out / "verdicts.json"))
        assert verdicts["t_box"] == pytest.approx(4.0)
        assert verdicts["fits"]["l2_u"]["verdict"] is None

    def test_rates_file_must_have_entries(self, tmp_path, oracle_dir):
        rates = write(tmp_path / "rates.json", '{"rates": []}')
        assert cli.main(["fit", str(oracle_dir / "oracle.csv"),
                         "--rates", rates]) == EXIT_CONFIG


class TestVerifyCommand:
    def test_battery_passes(self, tmp_path):
        out = str(tmp_path / "verify.json")
        assert cli.main(["verify", "--samples", "5", "-o", out]) == EXIT_OK
        payload = runio.read_json(out)
        assert payload["all_pass"] is True
        assert len(payload["reports"]) == 20

    def test_bad_grid_rejected(self, tmp_path):
        assert cli.main(["verify", "--n", "15",
                         "-o", str(tmp_path / "v.json")]) == EXIT_CONFIG


class TestReportCommand:
    def test_run_report(self, tmp_path):
        cfg = write(tmp_path / "run.cfg", RUN_CONFIG)
        out = tmp_path / "out"
        cli.main(["run", cfg, "-o", str(out)])
        assert cli.main(["report", str(out)]) == EXIT_OK
        report = runio.read_json(str(out / "report.json"))
        assert report["source_kind"] == "run"
        assert report["series_csv"] == "series.csv"
        assert report["manifest"]["status"] == "completed"

    def test_oracle_report(self, tmp_path):
        cfg = write(tmp_path / "oracle.cfg", SHEAR_ORACLE_CONFIG)
        out = tmp_path / "out"
        cli.main(["oracle", cfg, "-o", str(out)])
        assert cli.main(["report", str(out)]) == EXIT_OK
        report = runio.read_json(str(out / "report.json"))
        assert report["source_kind"] == "oracle"
        assert report["series_csv"] == "oracle.csv"

    def test_requires_manifest(self, tmp_path):
        assert cli.main(["report", str(tmp_path)]) == EXIT_CONFIG


class TestEnvironment:
    def test_thread_env_validated(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NSDECAY_THREADS", "many")
        assert cli.main(["verify", "--samples", "2",
                         "-o", str(tmp_path / "v.json")]) == EXIT_CONFIG

    def test_thread_env_accepted(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NSDECAY_THREADS", "2")
        assert cli.main(["verify", "--samples", "2",
                         "-o", str(tmp_path / "v.json")]) == EXIT_OK
