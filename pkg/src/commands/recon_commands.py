"""Reconstruction command."""

from pathlib import Path
from typing import Any

import click
from dependency_injector.wiring import Provide, inject

from src.commands.common import RunRecorder, common_options, given, layered, load_config_section, resolve_seed
from src.commands.groups import cli
from src.containers.containers import AppContainer
from src.service.workflow import ReconstructInputs, WorkflowService
from src.settings import Settings
from src.utils.schemas import ReconConfig

STEM = click.Path(path_type=Path, dir_okay=False)


@cli.command("reconstruct")
@common_options
@click.option("--d-plus", type=STEM, required=True, help="CXG stem of the RO+ measured data")
@click.option("--d-minus", type=STEM, required=True, help="CXG stem of the RO- measured data")
@click.option("--maps", type=STEM, default=None, help="CXG stem of the coil sensitivity maps (sense mode)")
@click.option("--acs", type=STEM, default=None, help="CXG stem of the calibration region")
@click.option("--nullspace", type=STEM, default=None, help="CXG stem of a precomputed nullspace basis")
@click.option("--init-plus", type=STEM, default=None, help="CXG stem of a RO+ warm start")
@click.option("--init-minus", type=STEM, default=None, help="CXG stem of a RO- warm start")
@click.option(
    "--mode",
    type=click.Choice(["unconstrained", "sense", "ac_loraks", "mussels_baseline"]),
    default=None,
    help="Formulation",
)
@click.option("--matrix-kind", type=click.Choice(["C", "S"]), default=None, help="Lifted matrix")
@click.option("--regularizer", type=click.Choice(["nuclear", "rank_residual"]), default=None, help="Rank penalty")
@click.option("-r", "--rank", type=int, default=None, help="Target rank (0 estimates it from --acs)")
@click.option("--lam", type=float, default=None, help="Regularization weight")
@click.option("--radius", type=int, default=None, help="Neighborhood radius")
@click.option("--shape", type=click.Choice(["square", "disc"]), default=None, help="Neighborhood shape")
@click.option("--outer-iters", type=int, default=None, help="Majorize-minimize iterations")
@click.option("--cg-iters", type=int, default=None, help="Conjugate-gradient iterations per outer step")
@click.option("--nullspace-rank", type=int, default=None, help="Rank of the calibration lifting")
@click.option(
    "--init",
    type=click.Choice(["zero_filled", "perturbed"]),
    default=None,
    help="Starting point when no warm start is given (perturbed uses --seed)",
)
@inject
def reconstruct(  # noqa: PLR0913
    seed: int | None,
    out_dir: Path,
    config_path: Path | None,
    d_plus: Path,
    d_minus: Path,
    maps: Path | None,
    acs: Path | None,
    nullspace: Path | None,
    init_plus: Path | None,
    init_minus: Path | None,
    mode: str | None,
    matrix_kind: str | None,
    regularizer: str | None,
    rank: int | None,
    lam: float | None,
    radius: int | None,
    shape: str | None,
    outer_iters: int | None,
    cg_iters: int | None,
    nullspace_rank: int | None,
    init: str | None,
    workflow: WorkflowService = Provide[AppContainer.workflow],
    settings: Settings = Provide[AppContainer.settings],
) -> None:
    """Recover the RO+/RO- k-space pair from measured CXG data.

    The config file section is ``recon`` (the fields of a reconstruction config).
    """
    recorder = RunRecorder(settings)
    section = load_config_section(config_path, "recon")
    flags: dict[str, Any] = given(
        mode=mode,
        matrix_kind=matrix_kind,
        lam=lam,
        outer_iters=outer_iters,
        cg_iters=cg_iters,
        nullspace_rank=nullspace_rank,
        init=init,
        init_seed=seed,
        regularizer=given(kind=regularizer, r=rank),
        neighborhood=given(radius=radius, shape=shape),
    )
    if init_plus is not None or init_minus is not None:
        flags["init"] = "provided"
    defaults = workflow.reconstructor.default_config().model_dump(mode="json")
    cfg = ReconConfig.model_validate(layered(defaults, section, flags))
    run_seed = resolve_seed(seed, section)

    inputs = ReconstructInputs(
        d_plus=d_plus,
        d_minus=d_minus,
        maps=maps,
        acs=acs,
        nullspace=nullspace,
        init_plus=init_plus,
        init_minus=init_minus,
    )
    _, outputs = workflow.reconstruct(cfg, inputs, out_dir)
    recorder.finish(out_dir, cfg.model_dump(mode="json"), run_seed, outputs, config_path)
