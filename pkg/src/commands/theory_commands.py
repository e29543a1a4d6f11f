"""Sign-flip symmetry commands: theorem suite, cost landscape and singular-value spectrum."""

from pathlib import Path
from typing import Any

import click
from dependency_injector.wiring import Provide, inject

from src.commands.common import (
    RunRecorder,
    common_options,
    given,
    layered,
    load_config_section,
    neighborhood_defaults,
    resolve_seed,
)
from src.commands.groups import cli
from src.containers.containers import AppContainer
from src.service.workflow import WorkflowService, raise_on_failures
from src.settings import Settings
from src.utils.schemas import LandscapeConfig, SpectrumConfig, TheoremSuiteConfig

_KIND = click.Choice(["C", "S"])


@cli.command("verify-theorem")
@common_options
@click.option("--size", type=int, default=None, help="Even grid size of the random pairs")
@click.option("--channels", type=int, multiple=True, help="Channel count (repeatable)")
@click.option("--radius", "radii", type=int, multiple=True, help="Neighborhood radius (repeatable)")
@click.option("--kind", "kinds", type=_KIND, multiple=True, help="Lifted matrix (repeatable)")
@click.option("--trials", type=int, default=None, help="Random pairs per configuration")
@inject
def verify_theorem(  # noqa: PLR0913
    seed: int | None,
    out_dir: Path,
    config_path: Path | None,
    size: int | None,
    channels: tuple[int, ...],
    radii: tuple[int, ...],
    kinds: tuple[str, ...],
    trials: int | None,
    workflow: WorkflowService = Provide[AppContainer.workflow],
    settings: Settings = Provide[AppContainer.settings],
) -> None:
    """Check that flipping the sign of a k-space pair leaves its lifted spectrum unchanged.

    Writes theorem_report.txt; exits with status 2 when any configuration fails.
    """
    recorder = RunRecorder(settings)
    section = load_config_section(config_path, "theorem")
    flags = given(
        size=size,
        channels=list(channels) or None,
        radii=list(radii) or None,
        kinds=list(kinds) or None,
        trials=trials,
    )
    flags["seed"] = resolve_seed(seed, section)
    cfg = TheoremSuiteConfig.model_validate(layered(section, flags))

    reports, outputs = workflow.verify_theorem(cfg, out_dir)
    recorder.finish(out_dir, cfg.model_dump(mode="json"), cfg.seed, outputs, config_path)
    raise_on_failures(reports)


@cli.command("landscape")
@common_options
@click.option("--regularizer", type=click.Choice(["nuclear", "rank_residual"]), default=None, help="Rank penalty")
@click.option("-r", "--rank", type=int, default=None, help="Target rank of the rank_residual penalty")
@click.option("--kind", "matrix_kind", type=_KIND, default=None, help="Lifted matrix")
@click.option("--radius", type=int, default=None, help="Neighborhood radius")
@click.option("--shape", type=click.Choice(["square", "disc"]), default=None, help="Neighborhood shape")
@click.option("--points", type=int, default=None, help="Number of interpolation weights in [0, 1]")
@click.option("--source", type=click.Choice(["random", "scenario"]), default=None, help="Where the pair comes from")
@click.option(
    "--objective",
    type=click.Choice(["lifted", "ac_loraks", "sense"]),
    default=None,
    help="Cost evaluated along the path",
)
@click.option("--size", type=int, default=None, help="Grid size")
@click.option("--channels", type=int, default=None, help="Number of channels")
@click.option("--lam", type=float, default=None, help="Regularization weight of constrained objectives")
@inject
def landscape(  # noqa: PLR0913
    seed: int | None,
    out_dir: Path,
    config_path: Path | None,
    regularizer: str | None,
    rank: int | None,
    matrix_kind: str | None,
    radius: int | None,
    shape: str | None,
    points: int | None,
    source: str | None,
    objective: str | None,
    size: int | None,
    channels: int | None,
    lam: float | None,
    workflow: WorkflowService = Provide[AppContainer.workflow],
    settings: Settings = Provide[AppContainer.settings],
) -> None:
    """Scan the cost on the straight path between a pair (alpha=0) and its flipped pair (alpha=1).

    Writes landscape.csv and landscape.png; the lifted objective adds corollaries.txt.
    """
    recorder = RunRecorder(settings)
    section = load_config_section(config_path, "landscape")
    defaults: dict[str, Any] = {"points": settings.landscape_points, "neighborhood": neighborhood_defaults(settings)}
    flags = given(
        regularizer=given(kind=regularizer, r=rank),
        matrix_kind=matrix_kind,
        neighborhood=given(radius=radius, shape=shape),
        points=points,
        source=source,
        objective=objective,
        size=size,
        channels=channels,
        lam=lam,
    )
    flags["seed"] = resolve_seed(seed, section)
    cfg = LandscapeConfig.model_validate(layered(defaults, section, flags))

    _, outputs = workflow.landscape(cfg, out_dir)
    recorder.finish(out_dir, cfg.model_dump(mode="json"), cfg.seed, outputs, config_path)


@cli.command("spectrum")
@common_options
@click.option(
    "--input",
    "inputs",
    type=click.Path(path_type=Path, dir_okay=False),
    multiple=True,
    help="CXG stem: one grid, or the RO+ and RO- measured data (repeat twice)",
)
@click.option("--kind", "matrix_kind", type=_KIND, default=None, help="Lifted matrix")
@click.option("--radius", type=int, default=None, help="Neighborhood radius")
@click.option("--shape", type=click.Choice(["square", "disc"]), default=None, help="Neighborhood shape")
@click.option("--size", type=int, default=None, help="Grid size of the random pair (no input)")
@click.option("--channels", type=int, default=None, help="Channels of the random pair (no input)")
@inject
def spectrum(  # noqa: PLR0913
    seed: int | None,
    out_dir: Path,
    config_path: Path | None,
    inputs: tuple[Path, ...],
    matrix_kind: str | None,
    radius: int | None,
    shape: str | None,
    size: int | None,
    channels: int | None,
    workflow: WorkflowService = Provide[AppContainer.workflow],
    settings: Settings = Provide[AppContainer.settings],
) -> None:
    """Dump the singular values of a lifted matrix to spectrum.csv (and spectrum.png)."""
    recorder = RunRecorder(settings)
    section = load_config_section(config_path, "spectrum")
    defaults: dict[str, Any] = {"neighborhood": neighborhood_defaults(settings)}
    flags = given(
        matrix_kind=matrix_kind,
        neighborhood=given(radius=radius, shape=shape),
        size=size,
        channels=channels,
    )
    flags["seed"] = resolve_seed(seed, section)
    cfg = SpectrumConfig.model_validate(layered(defaults, section, flags))

    _, outputs = workflow.spectrum(cfg, out_dir, inputs)
    recorder.finish(out_dir, cfg.model_dump(mode="json"), cfg.seed, outputs, config_path)
