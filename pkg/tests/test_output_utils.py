"""Tests for CSV writers, digests and manifests."""
# ruff: noqa: S101, PLR2004

import hashlib
from pathlib import Path

import numpy as np

from src.utils.output_utils import (
    digests,
    file_digest,
    spectrum_csv,
    write_cost_trace_csv,
    write_landscape_csv,
    write_manifest,
    write_spectrum_csv,
    write_text_atomic,
)
from src.utils.schemas import RunManifest, config_hash


class TestCsvWriters:
    """Tests for spectrum, landscape and cost-trace files."""

    def test_spectrum_is_descending(self) -> None:
        """Values are sorted largest first, one per line."""
        text = spectrum_csv(np.array([1.0, 3.0, 2.0]))
        assert text.splitlines() == ["3.0000000000e+00", "2.0000000000e+00", "1.0000000000e+00"]

    def test_spectrum_file_loads_back(self, tmp_path: Path) -> None:
        """The dump parses with numpy."""
        path = write_spectrum_csv(tmp_path / "spectrum.csv", np.array([0.5, 4.0]))
        np.testing.assert_allclose(np.loadtxt(path), [4.0, 0.5])

    def test_landscape_header(self, tmp_path: Path) -> None:
        """Landscape files start with ``alpha,cost``."""
        path = write_landscape_csv(tmp_path / "landscape.csv", [(0.0, 2.0), (0.5, 1.0)])
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "alpha,cost"
        assert lines[2] == "0.5,1.0000000000e+00"

    def test_cost_trace_rows(self, tmp_path: Path) -> None:
        """One row per recorded iteration, starting at zero."""
        path = write_cost_trace_csv(tmp_path / "cost.csv", [3.0, 2.0, 1.5])
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "iteration,cost"
        assert [line.split(",")[0] for line in lines[1:]] == ["0", "1", "2"]


class TestAtomicWrites:
    """Tests for write_text_atomic."""

    def test_overwrites_and_leaves_no_temp_files(self, tmp_path: Path) -> None:
        """The target is replaced and the directory holds only it."""
        target = tmp_path / "nested" / "out.txt"
        write_text_atomic(target, "first")
        write_text_atomic(target, "second")
        assert target.read_text(encoding="utf-8") == "second"
        assert [p.name for p in target.parent.iterdir()] == ["out.txt"]


class TestDigestsAndManifest:
    """Tests for file digests and the run manifest."""

    def test_file_digest_is_sha256(self, tmp_path: Path) -> None:
        """Digest of the raw bytes."""
        path = tmp_path / "blob.bin"
        path.write_bytes(b"ghost")
        assert file_digest(path) == hashlib.sha256(b"ghost").hexdigest()

    def test_digests_are_keyed_relative_to_root(self, tmp_path: Path) -> None:
        """Keys are sorted POSIX paths relative to the output directory."""
        (tmp_path / "b.txt").write_text("b", encoding="utf-8")
        (tmp_path / "sub").mkdir()
        (tmp_path / "sub" / "a.txt").write_text("a", encoding="utf-8")
        result = digests([tmp_path / "sub" / "a.txt", tmp_path / "b.txt"], tmp_path)
        assert list(result) == ["b.txt", "sub/a.txt"]

    def test_manifest_round_trip(self, tmp_path: Path) -> None:
        """The manifest is valid JSON matching the schema."""
        config = {"nx": 32, "seed": 1}
        manifest = RunManifest(
            command=["slm-ghost", "simulate"],
            config_hash=config_hash(config),
            effective_config=config,
            seed=1,
            software_version="0.1.0",
        )
        path = write_manifest(tmp_path, manifest)
        loaded = RunManifest.model_validate_json(path.read_text(encoding="utf-8"))
        assert loaded == manifest
        assert len(loaded.config_hash) == 64

    def test_config_hash_ignores_key_order(self) -> None:
        """Equal configurations hash equally."""
        assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
        assert config_hash({"a": 1}) != config_hash({"a": 2})
