import pytest

from vll.cli import (
    EXIT_BLOWUP,
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    _parse_eps_list,
    main,
)

FAST_TOML = """
[grid]
n = 128

[physics]
epsilon = 0.05
r1 = 0.05

[time]
horizon = 0.02
cadence = 0.005

[reference]
snapshots = 9
"""


@pytest.fixture
def fast_config(tmp_path):
    path = tmp_path / "fast.toml"
    path.write_text(FAST_TOML)
    return str(path)


class TestEpsListParsing:
    def test_plain_floats(self):
        assert _parse_eps_list("0.125,0.0625") == [0.125, 0.0625]

    def test_power_notation(self):
        assert _parse_eps_list("2^-3, 2^-4") == [0.125, 0.0625]


class TestRunVerb:
    def test_run_ok(self, fast_config, tmp_path, capsys):
        out = tmp_path / "artifacts"
        code = main(["run", "--config", fast_config, "--out", str(out)])
        assert code == EXIT_OK
        assert (out / "report.json").exists()
        assert "metric sup" in capsys.readouterr().out

    def test_missing_config_is_config_error(self, capsys):
        code = main(["run", "--config", "/nonexistent/x.toml"])
        assert code == EXIT_CONFIG_ERROR

    def test_invalid_grid_is_config_error(self, tmp_path, capsys):
        path = tmp_path / "bad.toml"
        path.write_text("[grid]\nn = 2\n")
        assert main(["run", "--config", str(path)]) == EXIT_CONFIG_ERROR

    def test_steepening_run_is_blowup_exit(self, tmp_path, capsys):
        path = tmp_path / "steep.toml"
        path.write_text(
            """
[grid]
n = 512

[physics]
epsilon = 0.05
r1 = 0.0

[time]
horizon = 1.5
cadence = 0.05

[datum]
rho_amp = 0.2
u_amp = 0.4

[reference]
snapshots = 49
"""
        )
        assert main(["run", "--config", str(path)]) == EXIT_BLOWUP


class TestSweepVerb:
    def test_sweep_writes_csv(self, fast_config, tmp_path, capsys):
        out = tmp_path / "sweep"
        code = main(
            [
                "sweep", "--config", fast_config, "--out", str(out),
                "--epsilon", "2^-3,2^-4,2^-5", "--jobs", "1",
            ]
        )
        assert code == EXIT_OK
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0].startswith("epsilon,")
        assert len(lines) == 4


class TestCheckVerb:
    def test_check_passes(self, fast_config, capsys):
        code = main(["check", "--config", fast_config])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out


class TestLayerScalingVerb:
    def test_scaling_table(self, tmp_path, capsys):
        out = tmp_path / "scalings"
        code = main(["layer-scaling", "--out", str(out), "--epsilon", "2^-3,2^-4,2^-5,2^-6,2^-7,2^-8,2^-9"])
        assert code == EXIT_OK
        lines = (out / "layer_scaling.csv").read_text().splitlines()
        assert lines[0] == "norm_name,epsilon,value,fitted_exponent,paper_exponent"
        assert "v_bl_L2" in capsys.readouterr().out
