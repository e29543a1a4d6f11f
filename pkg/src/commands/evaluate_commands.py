"""Experiment-matrix command."""

from pathlib import Path

import click
from dependency_injector.wiring import Provide, inject

from src.commands.common import RunRecorder, common_options, given, layered, load_config_section, resolve_seed
from src.commands.groups import cli
from src.containers.containers import AppContainer
from src.service.simulation import PHASE_PRESETS
from src.service.workflow import WorkflowService
from src.settings import Settings
from src.utils.schemas import EvaluateConfig


@cli.command("evaluate")
@common_options
@click.option("--suite", type=click.Choice(["standard", "single_channel", "all"]), default=None, help="Scenario suite")
@click.option("--method", "methods", multiple=True, help="Method to score (repeatable, in ranking order)")
@click.option("-R", "--acceleration", "accelerations", type=int, multiple=True, help="Acceleration (repeatable)")
@click.option("--size", type=int, default=None, help="Grid size of the simulated scenarios")
@click.option("--phase", type=click.Choice(sorted(PHASE_PRESETS)), default=None, help="Phase-error preset of RO-")
@click.option("--noise", "noise_sigma", type=float, default=None, help="Complex noise standard deviation")
@click.option("--images", "dump_images", is_flag=True, help="Write graymaps of every reconstruction")
@click.option("--timing", "include_wall_time", is_flag=True, help="Add a wall_time column to report.csv")
@inject
def evaluate(  # noqa: PLR0913
    seed: int | None,
    out_dir: Path,
    config_path: Path | None,
    suite: str | None,
    methods: tuple[str, ...],
    accelerations: tuple[int, ...],
    size: int | None,
    phase: str | None,
    noise_sigma: float | None,
    workflow: WorkflowService = Provide[AppContainer.workflow],
    settings: Settings = Provide[AppContainer.settings],
    *,
    dump_images: bool,
    include_wall_time: bool,
) -> None:
    """Score every method on every scenario and acceleration; write report.csv and ordering.txt.

    Method-ordering violations are reported in ordering.txt, they do not fail the run.
    """
    recorder = RunRecorder(settings)
    section = load_config_section(config_path, "evaluate")
    flags = given(
        suite=suite,
        methods=list(methods) or None,
        accelerations=list(accelerations) or None,
        size=size,
        phase=phase,
        noise_sigma=noise_sigma,
        dump_images=dump_images or None,
        include_wall_time=include_wall_time or None,
    )
    flags["seed"] = resolve_seed(seed, section)
    cfg = EvaluateConfig.model_validate(layered(section, flags))

    _, _, outputs = workflow.evaluate(cfg, out_dir)
    recorder.finish(out_dir, cfg.model_dump(mode="json"), cfg.seed, outputs, config_path)
