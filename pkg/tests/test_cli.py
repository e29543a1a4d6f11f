"""End-to-end tests of the slm-ghost command line."""
# ruff: noqa: S101, PLR2004

import json
from pathlib import Path
from unittest.mock import patch

import pytest

from src.app import dispatch
from src.settings import Settings


def _manifest(out_dir: Path) -> dict:
    return json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))


def _simulate(out_dir: Path, *extra: str) -> int:
    args = ["simulate", "--size", "32", "--channels", "2", "--acs-lines", "16", "--out-dir", str(out_dir)]
    return dispatch([*args, *extra])


# =============================================================================
# Usage Tests
# =============================================================================


class TestUsage:
    """Tests for help, version and usage errors."""

    def test_no_arguments_prints_usage(self, capsys: pytest.CaptureFixture[str]) -> None:
        """A bare invocation is a usage error."""
        assert dispatch([]) == 1
        assert "Usage" in capsys.readouterr().err

    def test_help(self) -> None:
        """Help exits cleanly."""
        assert dispatch(["--help"]) == 0

    def test_version(self, capsys: pytest.CaptureFixture[str]) -> None:
        """The version option prints the software version."""
        assert dispatch(["--version"]) == 0
        assert "0.1.0" in capsys.readouterr().out

    def test_unknown_subcommand(self) -> None:
        """Unknown subcommands are usage errors."""
        assert dispatch(["denoise"]) == 1

    def test_bad_option_value(self, tmp_path: Path) -> None:
        """Click rejects values outside a choice."""
        assert dispatch(["landscape", "--kind", "X", "--out-dir", str(tmp_path)]) == 1


# =============================================================================
# Subcommand Tests
# =============================================================================


class TestVerifyTheoremCommand:
    """Tests for verify-theorem."""

    def test_passing_suite(self, tmp_path: Path) -> None:
        """The suite passes and its report is listed in the manifest."""
        args = ["verify-theorem", "--size", "8", "--channels", "2", "--radius", "1", "--trials", "3"]
        assert dispatch([*args, "--out-dir", str(tmp_path)]) == 0
        assert "overall PASS" in (tmp_path / "theorem_report.txt").read_text(encoding="utf-8")
        manifest = _manifest(tmp_path)
        assert list(manifest["outputs"]) == ["theorem_report.txt"]
        assert manifest["effective_config"]["channels"] == [2]
        assert manifest["command"][:2] == ["slm-ghost", "verify-theorem"]

    def test_failing_suite_exits_2_after_writing_manifest(self, tmp_path: Path) -> None:
        """An impossible threshold fails every configuration."""
        with patch("src.app.settings", Settings(theorem_threshold=-1.0)):
            args = ["verify-theorem", "--size", "8", "--radius", "1", "--kind", "C", "--trials", "1"]
            code = dispatch([*args, "--out-dir", str(tmp_path)])
        assert code == 2
        assert "overall FAIL" in (tmp_path / "theorem_report.txt").read_text(encoding="utf-8")
        assert (tmp_path / "manifest.json").is_file()


class TestSimulateAndReconstruct:
    """Tests for simulate and reconstruct."""

    def test_pipeline(self, tmp_path: Path) -> None:
        """Simulated data reconstructs with the calibrated formulation."""
        sim, rec = tmp_path / "sim", tmp_path / "rec"
        assert _simulate(sim) == 0
        code = dispatch(
            [
                "reconstruct",
                "--d-plus", str(sim / "d_plus"),
                "--d-minus", str(sim / "d_minus"),
                "--acs", str(sim / "acs"),
                "--mode", "ac_loraks",
                "--radius", "1",
                "--lam", "0",
                "--outer-iters", "3",
                "--cg-iters", "5",
                "--out-dir", str(rec),
            ],
        )  # fmt: skip
        assert code == 0
        assert (rec / "nullspace.cxg.json").is_file()
        assert (rec / "k_plus.cxg.bin").is_file()
        manifest = _manifest(rec)
        assert "d_plus.cxg.bin" in " ".join(manifest["inputs"])
        assert manifest["effective_config"]["mode"] == "ac_loraks"

    def test_perturbed_start_is_recorded(self, tmp_path: Path) -> None:
        """The unconstrained solve starts off the zero-filled data and records the seed it used."""
        sim, rec = tmp_path / "sim", tmp_path / "rec"
        assert _simulate(sim) == 0
        code = dispatch(
            [
                "reconstruct",
                "--d-plus", str(sim / "d_plus"),
                "--d-minus", str(sim / "d_minus"),
                "--regularizer", "rank_residual",
                "--rank", "20",
                "--radius", "1",
                "--init", "perturbed",
                "--seed", "4",
                "--outer-iters", "2",
                "--cg-iters", "3",
                "--out-dir", str(rec),
            ],
        )  # fmt: skip
        assert code == 0
        config = _manifest(rec)["effective_config"]
        assert (config["init"], config["init_seed"]) == ("perturbed", 4)

    def test_missing_input_exits_1(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """A missing stem is a validation error that names the file."""
        missing = tmp_path / "missing"
        code = dispatch(
            ["reconstruct", "--d-plus", str(missing), "--d-minus", str(missing), "--out-dir", str(tmp_path / "out")],
        )
        assert code == 1
        assert "missing.cxg.json" in capsys.readouterr().err

    def test_same_seed_same_outputs(self, tmp_path: Path) -> None:
        """Two runs with one seed produce byte-identical files."""
        assert _simulate(tmp_path / "a", "--seed", "5", "--noise", "0.01") == 0
        assert _simulate(tmp_path / "b", "--seed", "5", "--noise", "0.01") == 0
        assert _manifest(tmp_path / "a")["outputs"] == _manifest(tmp_path / "b")["outputs"]
        assert _manifest(tmp_path / "a")["seed"] == 5


class TestConfigLayering:
    """Tests for --config handling."""

    def test_flags_override_config_file(self, tmp_path: Path) -> None:
        """The config file fills in what flags leave unset."""
        config = tmp_path / "config.json"
        config.write_text(
            json.dumps({"scenario": {"nc": 4, "nx": 32, "ny": 32, "acs_lines": 8, "seed": 3}}),
            encoding="utf-8",
        )
        out_dir = tmp_path / "out"
        assert dispatch(["simulate", "--channels", "1", "--config", str(config), "--out-dir", str(out_dir)]) == 0
        manifest = _manifest(out_dir)
        assert manifest["effective_config"]["nc"] == 1
        assert manifest["effective_config"]["acs_lines"] == 8
        assert manifest["seed"] == 3
        assert "config.json" in " ".join(manifest["inputs"])

    def test_broken_config_exits_1(self, tmp_path: Path) -> None:
        """Invalid JSON is a validation error."""
        config = tmp_path / "config.json"
        config.write_text("{", encoding="utf-8")
        assert dispatch(["spectrum", "--config", str(config), "--out-dir", str(tmp_path)]) == 1

    def test_invalid_value_exits_1(self, tmp_path: Path) -> None:
        """Schema violations are validation errors."""
        assert dispatch(["simulate", "--size", "33", "--out-dir", str(tmp_path)]) == 1

    def test_spectrum_defaults(self, tmp_path: Path) -> None:
        """Without inputs a random pair and its flip are dumped."""
        assert dispatch(["spectrum", "--size", "12", "--radius", "1", "--out-dir", str(tmp_path)]) == 0
        assert (tmp_path / "spectrum_flipped.csv").is_file()
        assert _manifest(tmp_path)["effective_config"]["neighborhood"] == {"radius": 1, "shape": "square"}
