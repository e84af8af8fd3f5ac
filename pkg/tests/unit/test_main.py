"""Unit tests for the command-line entry point."""

import json

import pytest

import main
from core.config_manager import ConfigManager
from core.validation import CheckResult, ValidationReport


def run_cli(*argv):
    return main.main([str(a) for a in argv])


class TestParser:
    def test_epsilon_list(self):
        args = main.create_parser().parse_args(["sweep", "--eps", "0.2,0.1"])

        assert args.mode == "sweep"
        assert args.eps == [0.2, 0.1]

    def test_mode_is_optional(self):
        assert main.create_parser().parse_args([]).mode is None

    @pytest.mark.parametrize(
        "argv", [["--eps", "a,b"], ["--seed", "-1"], ["--seed", "x"], ["plot"]]
    )
    def test_rejects_bad_values(self, argv):
        with pytest.raises(SystemExit):
            main.create_parser().parse_args(argv)

    def test_overrides(self, tmp_path):
        manager = ConfigManager()
        args = main.create_parser().parse_args(
            [
                "nodal",
                "--seed",
                "9",
                "--n",
                "2",
                "--out",
                str(tmp_path),
                "--debug",
                "--export-matrices",
            ]
        )
        main.apply_overrides(manager, args)

        assert manager.get("run.mode") == "nodal"
        assert manager.get("run.seed") == 9
        assert manager.get("solver.n") == 2
        assert manager.get("output.directory") == str(tmp_path)
        assert manager.get("output.export_matrices") is True
        assert manager.get("logging.level") == "DEBUG"
        assert manager.get("run.epsilons") == [0.2, 0.1, 0.05, 0.025]


class TestModes:
    """Each mode on a small planar tube."""

    def test_sweep(self, temp_config_file, tmp_path, capsys):
        assert run_cli("--config", temp_config_file) == 0
        out = tmp_path / "out"

        lines = (out / "report.csv").read_text().splitlines()
        assert lines[0].startswith("# tube_spectra=")
        assert any(line.startswith("epsilon,n,sigma,mu") for line in lines)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["epsilons"] == [0.2, 0.1, 0.05]
        assert summary["run_statistics"]["operations"] == 1
        assert (out / "config.toml").exists()
        assert (out / "tube_spectra.log").exists()
        assert "gap_sigma n=1" in capsys.readouterr().out

    def test_reports_are_deterministic(self, temp_config_file, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        assert run_cli("sweep", "--config", temp_config_file, "--out", first) == 0
        code = run_cli("sweep", "--config", temp_config_file, "--out", second, "--workers", "3")
        assert code == 0

        assert (first / "report.csv").read_bytes() == (second / "report.csv").read_bytes()

    def test_spectrum(self, temp_config_file, tmp_path, capsys):
        out = tmp_path / "matrices"
        code = run_cli("spectrum", "--config", temp_config_file, "--out", out, "--export-matrices")
        assert code == 0

        lines = (out / "report.csv").read_text().splitlines()
        assert "# epsilon=0.20000000000000001" in lines
        assert "n,sigma,mu,lambda,gap,residual,converged" in lines
        for name in ("phi.dat", "psi_1.dat", "psi_2.dat", "laplacian_2.dat"):
            assert (out / name).exists()
        assert (out / "matrices" / "T_eps0.2.coo").exists()
        assert "n=2" in capsys.readouterr().out

    def test_nodal(self, temp_config_file, tmp_path):
        out = tmp_path / "nodal"
        code = run_cli("nodal", "--config", temp_config_file, "--out", out, "--eps", "0.1,0.05")
        assert code == 0

        nodal_2 = (out / "nodal_2.csv").read_text()
        assert "phi_zero" in nodal_2
        assert "psi_crossing" in nodal_2
        summary = json.loads((out / "summary.json").read_text())
        assert set(summary["nodal"]["2"]) == {"0.1", "0.05"}

    def test_validate(self, temp_config_file, tmp_path, mocker, capsys):
        report = ValidationReport(
            [CheckResult("poincare", True), CheckResult("unitarity", False, message="off")]
        )
        run_validation = mocker.patch("main.run_validation", return_value=report)
        out = tmp_path / "val"

        assert run_cli("validate", "--config", temp_config_file, "--out", out, "--seed", "5") == 1
        run_validation.assert_called_once_with(seed=5)
        text = (out / "report.csv").read_text()
        assert "poincare,true," in text
        assert "unitarity,false,off" in text
        assert "validation FAILED" in capsys.readouterr().out


class TestExitCodes:
    def test_config_error(self, tmp_path, capsys):
        assert run_cli("--config", tmp_path / "absent.toml") == 2
        assert "Configuration error" in capsys.readouterr().err

    def test_invalid_override(self, temp_config_file):
        assert run_cli("--config", temp_config_file, "--eps", "0.1,0.2") == 2

    def test_all_rows_failed(self, temp_config_file, tmp_path):
        out = tmp_path / "thick"
        config = ConfigManager(temp_config_file)
        config.set("curve.params", {"value": 2.0})
        config.set("run.epsilons", [0.9])
        config.save(tmp_path / "thick.toml")

        assert run_cli("--config", tmp_path / "thick.toml", "--out", out) == 1
        assert "PreconditionError" in (out / "report.csv").read_text()

    def test_unexpected_error(self, temp_config_file, mocker, capsys):
        mocker.patch("main.sweep_epsilon", side_effect=RuntimeError("kaput"))

        assert run_cli("--config", temp_config_file) == 1
        assert "Fatal error: kaput" in capsys.readouterr().err
