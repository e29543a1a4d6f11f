"""Options, configuration layering and run manifests shared by every subcommand."""

import json
import sys
import time
from collections.abc import Callable, Iterable
from pathlib import Path
from typing import Any, TypeVar

import click
from loguru import logger

from src.handlers.exceptions import ValidationFailedError
from src.service.workflow import StepOutputs
from src.settings import Settings
from src.utils.cxg_io import cxg_paths
from src.utils.output_utils import digests, write_manifest
from src.utils.schemas import RunManifest, config_hash

F = TypeVar("F", bound=Callable[..., Any])

DEFAULT_SEED = 0


def common_options(func: F) -> F:
    """Add ``--seed``, ``--out-dir`` and ``--config`` to a subcommand."""
    func = click.option(
        "--config",
        "config_path",
        type=click.Path(path_type=Path, dir_okay=False),
        default=None,
        help="JSON config file; command-line flags override its values",
    )(func)
    func = click.option(
        "--out-dir",
        type=click.Path(path_type=Path, file_okay=False),
        default=Path("out"),
        show_default=True,
        help="Directory receiving every output file and the manifest",
    )(func)
    return click.option("--seed", type=int, default=None, help="Seed of the random stream (default 0)")(func)


def load_config_section(path: Path | None, section: str) -> dict[str, Any]:
    """Read one top-level section of a JSON config file (empty without a file).

    Raises:
        ValidationFailedError: If the file is missing, not JSON, or the section is not an object.
    """
    if path is None:
        return {}
    if not path.is_file():
        msg = f"Config file not found: {path}"
        raise ValidationFailedError(msg)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        msg = f"Config file {path} is not valid JSON: {exc}"
        raise ValidationFailedError(msg) from exc
    if not isinstance(document, dict):
        msg = f"Config file {path} must hold a JSON object"
        raise ValidationFailedError(msg)
    value = document.get(section, {})
    if not isinstance(value, dict):
        msg = f"Section '{section}' of {path} must be a JSON object"
        raise ValidationFailedError(msg)
    return value


def given(**values: Any) -> dict[str, Any]:  # noqa: ANN401
    """Flags that were actually passed: ``None``, empty tuples and empty groups are dropped."""
    return {key: value for key, value in values.items() if value is not None and value != () and value != {}}


def layered(*layers: dict[str, Any]) -> dict[str, Any]:
    """Merge layers left to right; nested objects are merged key by key."""
    merged: dict[str, Any] = {}
    for layer in layers:
        for key, value in layer.items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key] = layered(merged[key], value)
            else:
                merged[key] = value
    return merged


def resolve_seed(flag: int | None, section: dict[str, Any]) -> int:
    """Seed from the flag, else the config section, else the default."""
    if flag is not None:
        return flag
    return int(section.get("seed", DEFAULT_SEED))


def neighborhood_defaults(settings: Settings) -> dict[str, Any]:
    """Neighborhood taken from the settings."""
    return {"radius": settings.neighborhood_radius, "shape": settings.neighborhood_shape}


def _input_files(paths: Iterable[Path]) -> list[Path]:
    files = []
    for path in paths:
        if path.is_file():
            files.append(path)
        else:
            files.extend(p for p in cxg_paths(path) if p.is_file())
    return files


class RunRecorder:
    """Times a subcommand and writes its manifest next to the outputs."""

    def __init__(self, settings: Settings) -> None:
        """Start the clock.

        Args:
            settings (Settings): Source of the software version.
        """
        self.settings = settings
        self.start = time.perf_counter()

    def finish(
        self,
        out_dir: Path,
        effective: dict[str, Any],
        seed: int,
        outputs: StepOutputs,
        config_path: Path | None = None,
    ) -> Path:
        """Write ``manifest.json`` with the effective config, its hash and the file digests."""
        inputs = [*outputs.inputs, *([config_path] if config_path is not None else [])]
        manifest = RunManifest(
            command=_command_line(),
            config_hash=config_hash(effective),
            effective_config=effective,
            seed=seed,
            software_version=self.settings.app_version,
            inputs=digests(_input_files(inputs)),
            outputs=digests(outputs.files, root=out_dir),
            wall_time=time.perf_counter() - self.start,
        )
        logger.info(f"{len(manifest.outputs)} output files written to {out_dir}")
        return write_manifest(out_dir, manifest)


def _command_line() -> list[str]:
    ctx = click.get_current_context(silent=True)
    root = ctx.find_root() if ctx is not None else None
    if root is not None and isinstance(root.obj, dict) and "argv" in root.obj:
        return ["slm-ghost", *root.obj["argv"]]
    return ["slm-ghost", *sys.argv[1:]]
