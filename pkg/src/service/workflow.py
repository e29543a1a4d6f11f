"""Workflow service behind the command-line subcommands.

Each method runs one pipeline (simulate, reconstruct, evaluate, theorem suite, landscape
scan, spectrum dump) and writes its machine outputs into an output directory. The caller
records the returned paths in the run manifest.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from loguru import logger

from src.handlers.exceptions import NumericalFailureError, ValidationFailedError
from src.service.evaluation import (
    ExperimentReport,
    OrderingFlag,
    ReconstructionSink,
    calibration_rank,
    check_ordering,
    combined_image,
    default_methods,
    run_experiment_matrix,
    with_rank,
)
from src.service.kspace import ComplexGrid
from src.service.simulation import (
    MIN_PHANTOM_SIZE,
    SimulatedAcquisition,
    phase_preset,
    simulate_epi,
    single_channel_loose_fov,
    single_channel_tight_fov,
    standard_phantom_suite,
)
from src.service.slm import lift, lift_pair, singular_values
from src.service.solvers import (
    ReconResult,
    Reconstructor,
    ac_loraks_objective,
    sense_objective,
    unconstrained_objective,
)
from src.service.stats_chart import generate_landscape_chart, generate_spectrum_chart
from src.service.theory import (
    CorollaryReport,
    FeasiblePair,
    PairObjective,
    TheoremReport,
    check_corollaries,
    format_theorem_report,
    landscape_scan,
    make_feasible_pair,
    make_flipped_pair,
    random_feasible_pair,
    run_theorem_suite,
)
from src.settings import Settings
from src.utils.cxg_io import (
    read_cxg,
    read_maps,
    read_measured,
    read_nullspace,
    write_cxg,
    write_maps,
    write_measured,
    write_nullspace,
)
from src.utils.images_utils import write_graymap, write_grid_graymaps
from src.utils.output_utils import (
    write_cost_trace_csv,
    write_landscape_csv,
    write_spectrum_csv,
    write_text_atomic,
)
from src.utils.schemas import (
    EvaluateConfig,
    LandscapeConfig,
    ReconConfig,
    SimScenario,
    SpectrumConfig,
    TheoremSuiteConfig,
)


@dataclass
class ReconstructInputs:
    """CXG stems consumed by one reconstruction."""

    d_plus: Path
    d_minus: Path
    maps: Path | None = None
    acs: Path | None = None
    nullspace: Path | None = None
    init_plus: Path | None = None
    init_minus: Path | None = None

    def paths(self) -> list[Path]:
        """Every stem that was given."""
        stems = [self.d_plus, self.d_minus, self.maps, self.acs, self.nullspace, self.init_plus, self.init_minus]
        return [stem for stem in stems if stem is not None]


@dataclass
class StepOutputs:
    """Files read and written by one pipeline step."""

    files: list[Path] = field(default_factory=list)
    inputs: list[Path] = field(default_factory=list)


def build_scenarios(cfg: EvaluateConfig) -> list[SimScenario]:
    """Scenarios of an experiment matrix; the acceleration is set later, per run."""
    if cfg.scenarios:
        return list(cfg.scenarios)
    scenarios: list[SimScenario] = []
    if cfg.suite in ("standard", "all"):
        base = standard_phantom_suite((1,), cfg.phase, cfg.seed, cfg.size)[0]
        scenarios.append(base.model_copy(update={"scenario_id": f"phantom8_{cfg.phase}"}))
    if cfg.suite in ("single_channel", "all"):
        scenarios.append(single_channel_loose_fov(cfg.seed, cfg.size, cfg.phase))
        scenarios.append(single_channel_tight_fov(cfg.seed, cfg.size, cfg.phase))
    return [s.model_copy(update={"noise_sigma": cfg.noise_sigma}) for s in scenarios]


class WorkflowService:
    """Service running the simulation, reconstruction and verification pipelines."""

    def __init__(self, reconstructor: Reconstructor, settings: Settings) -> None:
        """Initialize the WorkflowService.

        Args:
            reconstructor (Reconstructor): Solver service.
            settings (Settings): Built-in defaults.
        """
        self.reconstructor = reconstructor
        self.settings = settings

    def simulate(self, scenario: SimScenario, out_dir: Path) -> tuple[SimulatedAcquisition, StepOutputs]:
        """Simulate one acquisition and write its arrays.

        Writes ``d_plus``, ``d_minus``, ``acs``, ``maps``, ``truth`` and the noiseless references
        ``k_plus_ref`` / ``k_minus_ref`` as CXG, plus a magnitude graymap of the truth.
        """
        acq = simulate_epi(scenario)
        nx = scenario.nx
        outputs = StepOutputs()
        outputs.files += write_measured(out_dir / "d_plus", acq.d_plus, nx)
        outputs.files += write_measured(out_dir / "d_minus", acq.d_minus, nx)
        outputs.files += write_cxg(out_dir / "acs", acq.acs)
        outputs.files += write_maps(out_dir / "maps", acq.maps)
        outputs.files += write_cxg(out_dir / "truth", acq.truth)
        outputs.files += write_cxg(out_dir / "k_plus_ref", acq.k_plus_ref)
        outputs.files += write_cxg(out_dir / "k_minus_ref", acq.k_minus_ref)
        outputs.files.append(write_graymap(out_dir / "truth_magnitude.pgm", acq.truth.data[:, :, 0, 0]))
        logger.info(f"Simulation '{scenario.scenario_id}' written to {out_dir}")
        return acq, outputs

    def reconstruct(
        self,
        cfg: ReconConfig,
        inputs: ReconstructInputs,
        out_dir: Path,
    ) -> tuple[ReconResult, StepOutputs]:
        """Reconstruct measured CXG data and write the pair, its cost trace and any SENSE images.

        In ``ac_loraks`` mode with ACS but no nullspace the calibrated basis is written too.
        """
        d_plus = read_measured(inputs.d_plus)
        d_minus = read_measured(inputs.d_minus)
        maps = read_maps(inputs.maps) if inputs.maps is not None else None
        nullspace = read_nullspace(inputs.nullspace) if inputs.nullspace is not None else None
        acs = read_cxg(inputs.acs) if inputs.acs is not None else None
        initial = None
        if (inputs.init_plus is None) != (inputs.init_minus is None):
            msg = "A warm start needs both --init-plus and --init-minus"
            raise ValidationFailedError(msg)
        if inputs.init_plus is not None and inputs.init_minus is not None:
            initial = (read_cxg(inputs.init_plus), read_cxg(inputs.init_minus))

        if _needs_rank(cfg):
            if acs is None:
                msg = "The rank_residual penalty needs --rank, or --acs to estimate it"
                raise ValidationFailedError(msg)
            cfg = with_rank(cfg, calibration_rank(acs, cfg))
            logger.info(f"Rank estimated from the calibration data: r={cfg.regularizer.r}")

        outputs = StepOutputs(inputs=inputs.paths())
        if cfg.mode == "ac_loraks" and nullspace is None and acs is not None:
            nullspace = self.reconstructor.calibrate(acs, cfg)
            outputs.files += write_nullspace(out_dir / "nullspace", nullspace)
        result = self.reconstructor.reconstruct(
            cfg,
            d_plus,
            d_minus,
            maps=maps,
            nullspace=nullspace,
            acs=acs,
            initial=initial,
        )
        outputs.files += write_cxg(out_dir / "k_plus", result.k_plus)
        outputs.files += write_cxg(out_dir / "k_minus", result.k_minus)
        if result.images is not None:
            for name, image in zip(("image_plus", "image_minus"), result.images, strict=True):
                outputs.files += write_cxg(out_dir / name, image)
                outputs.files += write_grid_graymaps(out_dir / "images", name, image)
        outputs.files.append(write_cost_trace_csv(out_dir / "cost_trace.csv", result.cost_trace))
        logger.info(
            f"Reconstruction ({cfg.mode}) finished after {result.iterations} iterations, "
            f"converged={result.converged}",
        )
        return result, outputs

    def evaluate(self, cfg: EvaluateConfig, out_dir: Path) -> tuple[ExperimentReport, list[OrderingFlag], StepOutputs]:
        """Run the experiment matrix and write ``report.csv`` and ``ordering.txt``.

        With ``dump_images`` the combined magnitude and the phase of every reconstruction's
        RO+ image are written as graymaps under ``images/``.
        """
        outputs = StepOutputs()
        sink = _graymap_sink(out_dir / "images", outputs) if cfg.dump_images else None
        report = run_experiment_matrix(
            build_scenarios(cfg),
            default_methods(self.reconstructor, cfg.methods),
            cfg.accelerations,
            self.reconstructor,
            sink,
        )
        flags = check_ordering(report, cfg.methods, self.settings.ordering_margin)
        csv_text = report.to_csv(include_wall_time=cfg.include_wall_time)
        outputs.files.append(write_text_atomic(out_dir / "report.csv", csv_text))
        lines = [f"{f.scenario} R={f.acceleration}: {f.better} vs {f.worse} margin {f.margin:.6g}" for f in flags]
        outputs.files.append(write_text_atomic(out_dir / "ordering.txt", "".join(f"{line}\n" for line in lines)))
        outputs.files.sort()
        logger.info(f"Evaluation finished: {len(report.rows)} rows, {len(flags)} ordering flags")
        return report, flags, outputs

    def verify_theorem(self, cfg: TheoremSuiteConfig, out_dir: Path) -> tuple[list[TheoremReport], StepOutputs]:
        """Run the sign-flip suite and write ``theorem_report.txt``; see :func:`raise_on_failures`."""
        reports = run_theorem_suite(
            cfg.radii,
            cfg.channels,
            cfg.kinds,
            cfg.trials,
            cfg.size,
            cfg.seed,
            self.settings.theorem_threshold,
            show_progress=self.settings.show_progress,
        )
        path = write_text_atomic(out_dir / "theorem_report.txt", format_theorem_report(reports))
        return reports, StepOutputs(files=[path])

    def landscape(self, cfg: LandscapeConfig, out_dir: Path) -> tuple[CorollaryReport | None, StepOutputs]:
        """Scan the cost between a feasible pair and its flipped counterpart.

        Writes ``landscape.csv`` and ``landscape.png``; for the lifted objective also
        ``corollaries.txt`` with the slice summary.
        """
        pair, acq = self._landscape_pair(cfg)
        alphas = np.linspace(0.0, 1.0, cfg.points)
        outputs = StepOutputs()
        report = None
        if cfg.objective == "lifted":
            report = check_corollaries(pair, cfg.regularizer, cfg.neighborhood, cfg.matrix_kind, alphas)
            points = report.landscape
            outputs.files.append(write_text_atomic(out_dir / "corollaries.txt", _format_corollaries(report)))
        else:
            points = landscape_scan(
                pair,
                make_flipped_pair(pair),
                cfg.regularizer,
                cfg.neighborhood,
                cfg.matrix_kind,
                alphas,
                self._constrained_objective(cfg, acq),
            )
        outputs.files.append(write_landscape_csv(out_dir / "landscape.csv", points))
        title = f"{cfg.objective} objective, {cfg.regularizer.kind}"
        outputs.files.append(generate_landscape_chart(points, out_dir / "landscape.png", title))
        return report, outputs

    def _landscape_pair(self, cfg: LandscapeConfig) -> tuple[FeasiblePair, SimulatedAcquisition | None]:
        if cfg.source == "random":
            if cfg.objective != "lifted":
                msg = f"The '{cfg.objective}' objective needs --source scenario"
                raise ValidationFailedError(msg)
            rng = np.random.default_rng(cfg.seed)
            return random_feasible_pair(rng, cfg.size, cfg.size, cfg.channels), None
        scenario = cfg.scenario or SimScenario(
            scenario_id="landscape",
            nx=max(cfg.size, MIN_PHANTOM_SIZE),
            ny=max(cfg.size, MIN_PHANTOM_SIZE),
            nc=cfg.channels,
            phase_negative=[phase_preset("polynomial_2d")],
            seed=cfg.seed,
        )
        acq = simulate_epi(scenario)
        pair = make_feasible_pair(acq.d_plus, acq.d_minus, acq.k_plus_ref.data, acq.k_minus_ref.data)
        return pair, acq

    def _constrained_objective(self, cfg: LandscapeConfig, acq: SimulatedAcquisition | None) -> PairObjective:
        if acq is None:
            msg = "Constrained objectives need simulated data"
            raise ValidationFailedError(msg)
        recon = self.reconstructor.default_config(
            regularizer=cfg.regularizer,
            neighborhood=cfg.neighborhood,
            matrix_kind=cfg.matrix_kind,
            lam=cfg.lam,
        )
        if cfg.objective == "ac_loraks":
            return ac_loraks_objective(self.reconstructor.calibrate(acq.acs, recon), recon)
        if cfg.objective == "sense":
            return sense_objective(acq.d_plus, acq.d_minus, acq.maps, recon)
        return unconstrained_objective(recon)

    def spectrum(
        self,
        cfg: SpectrumConfig,
        out_dir: Path,
        inputs: Sequence[Path] = (),
    ) -> tuple[np.ndarray, StepOutputs]:
        """Dump the singular values of a lifted matrix.

        With no input a random feasible pair is drawn; with one CXG grid it is lifted alone;
        with two measured stems (RO+, RO-) their zero-filled pair is lifted jointly. Pairs
        also get ``spectrum_flipped.csv`` from the sign-flipped pair; every run writes
        ``spectrum.png``.
        """
        outputs = StepOutputs(inputs=list(inputs))
        n, kind = cfg.neighborhood, cfg.matrix_kind
        curves: dict[str, np.ndarray] = {}
        if len(inputs) == 1:
            curves["lifted"] = singular_values(lift(read_cxg(inputs[0]), n, kind))
        elif len(inputs) in (0, 2):
            if inputs:
                pair = make_feasible_pair(read_measured(inputs[0]), read_measured(inputs[1]))
            else:
                pair = random_feasible_pair(np.random.default_rng(cfg.seed), cfg.size, cfg.size, cfg.channels)
            flipped = make_flipped_pair(pair)
            curves["original"] = singular_values(lift_pair(pair.k_plus, pair.k_minus, n, kind))
            curves["flipped"] = singular_values(lift_pair(flipped.k_plus, flipped.k_minus, n, kind))
        else:
            msg = f"spectrum takes zero, one or two inputs, got {len(inputs)}"
            raise ValidationFailedError(msg)
        for label, values in curves.items():
            name = "spectrum_flipped.csv" if label == "flipped" else "spectrum.csv"
            outputs.files.append(write_spectrum_csv(out_dir / name, values))
        outputs.files.append(generate_spectrum_chart(curves, out_dir / "spectrum.png", f"{kind} matrix spectrum"))
        return next(iter(curves.values())), outputs


def _needs_rank(cfg: ReconConfig) -> bool:
    """A rank-residual penalty with no rank set that actually enters the objective."""
    penalized = cfg.mode == "unconstrained" or cfg.lam > 0
    return cfg.regularizer.kind == "rank_residual" and cfg.regularizer.r == 0 and penalized


def _format_corollaries(report: CorollaryReport) -> str:
    lines = [
        f"regularizer {report.regularizer}",
        f"endpoint_costs {report.endpoint_costs[0]:.10e} {report.endpoint_costs[1]:.10e}",
        f"zero_filled_cost {report.zero_filled_cost:.10e}",
        f"slice_min {report.slice_min:.10e}",
        f"slice_max {report.slice_max:.10e}",
        f"slice_bound_holds {report.slice_bound_holds}",
        f"zero_filled_is_slice_min {report.zero_filled_is_slice_min}",
        f"degenerate {report.degenerate}",
        f"status {'PASS' if report.passed else 'FAIL'}",
    ]
    return "\n".join(lines) + "\n"


def _graymap_sink(image_dir: Path, outputs: StepOutputs) -> ReconstructionSink:
    """Write the combined RO+ magnitude and phase of each reconstruction."""

    def sink(acq: SimulatedAcquisition, method: str, k_plus: ComplexGrid, _k_minus: ComplexGrid) -> None:
        stem = f"{acq.scenario.scenario_id}_R{acq.scenario.acceleration}_{method}"
        image = combined_image(k_plus).data[:, :, 0, 0]
        outputs.files.append(write_graymap(image_dir / f"{stem}_magnitude.pgm", image))
        outputs.files.append(write_graymap(image_dir / f"{stem}_phase.pgm", image, "phase"))

    return sink


def raise_on_failures(reports: Sequence[TheoremReport]) -> None:
    """Raise when any configuration of a theorem suite failed.

    Raises:
        NumericalFailureError: Naming the number of failures and the worst discrepancy.
    """
    failed = [r for r in reports if not r.passed]
    if failed:
        worst = max(r.worst_rel_diff for r in failed)
        msg = f"Sign-flip symmetry failed in {len(failed)} configurations (worst discrepancy {worst:.3e})"
        raise NumericalFailureError(msg)
