"""Simulation command."""

from pathlib import Path

import click
from dependency_injector.wiring import Provide, inject

from src.commands.common import RunRecorder, common_options, given, layered, load_config_section, resolve_seed
from src.commands.groups import cli
from src.containers.containers import AppContainer
from src.service.simulation import PHASE_PRESETS, phase_preset
from src.service.workflow import WorkflowService
from src.settings import Settings
from src.utils.schemas import SimScenario


@cli.command("simulate")
@common_options
@click.option("--scenario-id", default=None, help="Name recorded in reports")
@click.option("--size", type=int, default=None, help="Square grid size (sets nx and ny)")
@click.option("--nx", type=int, default=None, help="Readout samples")
@click.option("--ny", type=int, default=None, help="Phase-encode lines (even)")
@click.option("--channels", "nc", type=int, default=None, help="Number of coils")
@click.option("--shots", "ns", type=int, default=None, help="Number of interleaved shots")
@click.option("-R", "--acceleration", type=int, default=None, help="Acceleration factor")
@click.option("--phantom", type=click.Choice(["shepp_logan", "discs"]), default=None, help="Ground-truth object")
@click.option("--phase", type=click.Choice(sorted(PHASE_PRESETS)), default=None, help="Phase-error preset of RO-")
@click.option("--phase-scale", type=float, default=1.0, show_default=True, help="Multiplier of the preset")
@click.option("--noise", "noise_sigma", type=float, default=None, help="Complex noise standard deviation")
@click.option("--acs-lines", type=int, default=None, help="Central calibration lines (even)")
@inject
def simulate(  # noqa: PLR0913
    seed: int | None,
    out_dir: Path,
    config_path: Path | None,
    scenario_id: str | None,
    size: int | None,
    nx: int | None,
    ny: int | None,
    nc: int | None,
    ns: int | None,
    acceleration: int | None,
    phantom: str | None,
    phase: str | None,
    phase_scale: float,
    noise_sigma: float | None,
    acs_lines: int | None,
    workflow: WorkflowService = Provide[AppContainer.workflow],
    settings: Settings = Provide[AppContainer.settings],
) -> None:
    """Simulate a two-polarity EPI acquisition and write it as CXG files.

    The config file section is ``scenario`` (the fields of a simulation scenario).
    """
    recorder = RunRecorder(settings)
    section = load_config_section(config_path, "scenario")
    flags = given(
        scenario_id=scenario_id,
        nx=nx if nx is not None else size,
        ny=ny if ny is not None else size,
        nc=nc,
        ns=ns,
        acceleration=acceleration,
        phantom=phantom,
        noise_sigma=noise_sigma,
        acs_lines=acs_lines,
    )
    if phase is not None:
        flags["phase_negative"] = [phase_preset(phase, phase_scale).model_dump()]
    flags["seed"] = resolve_seed(seed, section)
    scenario = SimScenario.model_validate(layered(section, flags))

    _, outputs = workflow.simulate(scenario, out_dir)
    recorder.finish(out_dir, scenario.model_dump(mode="json"), scenario.seed, outputs, config_path)
