"""CLI interface for running experiment configurations."""
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional

import click
import inject
import numpy as np
import structlog
from rich import print as rich_print
from rich.table import Table

from srdiff.errors import NonConvergedError, SrdiffError
from srdiff.models.bundled import landmark_example, match_example
from srdiff.models.config import (
    SCHEMA_VERSION,
    ExperimentConfig,
    MatchPayload,
    MoserPayload,
    ShootPayload,
    SteerPayload,
    VerifyPayload,
)
from srdiff.models.frame import BracketWord
from srdiff.models.landmark import LandmarkState
from srdiff.models.matching import MatchProblem, SweepRow
from srdiff.options import SrdiffOptions
from srdiff.services.file_service import FileService
from srdiff.services.flow_service import FlowService
from srdiff.services.frame_service import FrameService
from srdiff.services.integrator_service import IntegratorService
from srdiff.services.matching_service import MatchingService
from srdiff.services.moser_service import MoserService
from srdiff.services.steering_service import SteeringService
from srdiff.services.validation_service import ValidationService
from srdiff.services.verification_service import VerificationService

LOGGER = structlog.get_logger(__name__)

PACKAGE_NAME = "sub-riemannian-diffeo"
UNKNOWN_VERSION = "0+unknown"
MANIFEST_FILE = "manifest.json"

EXIT_SUCCESS = 0
EXIT_FAILURE = 1
EXIT_NOT_CONVERGED = 2


class CommandOutcome(NamedTuple):
    """
    What a command produced.

    * status: Exit status of the command.
    * residuals: Named residuals recorded in the manifest.
    * files: Files written, relative to the output directory.
    """

    status: int
    residuals: Dict[str, Optional[float]]
    files: List[str]


def library_version() -> str:
    """Get the installed version of srdiff."""
    try:
        return version(PACKAGE_NAME)
    except PackageNotFoundError:
        return UNKNOWN_VERSION


class RunOrchestrator:
    """Orchestrator for running experiment configurations."""

    @inject.autoparams()
    def __init__(
        self,
        file_service: FileService,
        validation_service: ValidationService,
        frame_service: FrameService,
        integrator_service: IntegratorService,
        flow_service: FlowService,
        matching_service: MatchingService,
        steering_service: SteeringService,
        moser_service: MoserService,
        verification_service: VerificationService,
        options: SrdiffOptions,
    ) -> None:
        """
        Initialize the orchestrator.

        :param file_service: Service for writing result files.
        :param validation_service: Service for validating prerequisites.
        :param frame_service: Service for resolving frames.
        :param integrator_service: Service for integrating geodesics.
        :param flow_service: Service for advecting particles.
        :param matching_service: Service for inexact matching.
        :param steering_service: Service for local steering.
        :param moser_service: Service for density transport.
        :param verification_service: Service running the verification checks.
        :param options: Runtime options.
        """
        self.file_service = file_service
        self.validation_service = validation_service
        self.frame_service = frame_service
        self.integrator_service = integrator_service
        self.flow_service = flow_service
        self.matching_service = matching_service
        self.steering_service = steering_service
        self.moser_service = moser_service
        self.verification_service = verification_service
        self.options = options

    @property
    def output_dir(self) -> Path:
        """Directory results are written to."""
        return self.options.output_dir

    def run(self, config: ExperimentConfig, config_path: Path) -> int:
        """
        Run an experiment and write its results with a manifest.

        :param config: Validated experiment configuration.
        :param config_path: File the configuration was read from.
        :return: Exit status.
        """
        self.validation_service.validate_output_dir(self.output_dir)
        LOGGER.info("Running experiment", command=config.command.value, output=self.output_dir)
        dispatch = {
            "shoot": lambda: self.shoot(config, config.shoot),
            "match": lambda: self.match(config, config.match),
            "steer": lambda: self.steer(config, config.steer),
            "moser": lambda: self.moser(config, config.moser),
            "verify": lambda: self.verify(config.verify),
        }
        outcome = dispatch[config.command.value]()
        manifest = {
            "schema": SCHEMA_VERSION,
            "version": library_version(),
            "command": config.command.value,
            "config_sha256": self.file_service.sha256(config_path),
            "seed": self.options.seed,
            "status": outcome.status,
            "residuals": outcome.residuals,
            "files": sorted(outcome.files),
        }
        self.file_service.write_json_file(self.output_dir / MANIFEST_FILE, manifest)
        if not self.options.quiet:
            self.display(config.command.value, outcome)
        return outcome.status

    def shoot(self, config: ExperimentConfig, payload: Optional[ShootPayload]) -> CommandOutcome:
        """
        Integrate a geodesic and optionally the flow it generates.

        :param config: Experiment configuration.
        :param payload: Shooting payload.
        :return: Outcome of the command.
        """
        assert payload is not None
        if payload.example is not None:
            example = landmark_example(payload.example)
            spec, state0 = example.spec, example.state
        else:
            assert config.kernel is not None
            spec, state0 = config.kernel, LandmarkState.create(payload.q0, payload.p0)
        steps = payload.steps or self.integrator_service.steps_for(payload.T)
        files = ["trajectory.csv"]
        residuals: Dict[str, Optional[float]] = {}

        if payload.flow or payload.particles:
            seeds = state0.q if payload.flow else np.zeros((0, state0.dim))
            if payload.particles:
                seeds = np.vstack([seeds, np.asarray(payload.particles, dtype=float)])
            record = self.flow_service.advect(
                spec, state0, seeds, payload.T, steps, payload.record_every
            )
            trajectory = record.trajectory
            header, rows = record.particle_csv_rows()
            self.file_service.write_csv_file(self.output_dir / "particles.csv", header, rows)
            files.append("particles.csv")
            if payload.flow:
                residuals["pushforward"] = self.flow_service.pushforward_residual(record)
            residuals["determinant_min"] = record.determinant_range()[0]
        else:
            trajectory = self.integrator_service.geodesic(
                spec, state0, payload.T, steps, payload.record_every
            )

        header, rows = trajectory.csv_rows()
        self.file_service.write_csv_file(self.output_dir / "trajectory.csv", header, rows)
        residuals["energy_drift"] = self.integrator_service.energy_drift(trajectory)
        residuals["action"] = self.integrator_service.action(trajectory)
        residuals["length"] = self.integrator_service.length(trajectory)
        return CommandOutcome(EXIT_SUCCESS, residuals, files)

    def match(self, config: ExperimentConfig, payload: Optional[MatchPayload]) -> CommandOutcome:
        """
        Solve the matching problem for every penalty weight of the payload.

        :param config: Experiment configuration.
        :param payload: Matching payload.
        :return: Outcome of the command.
        """
        assert payload is not None
        if payload.example is not None:
            prob = match_example(payload.example)._replace(
                steps=payload.steps, optimizer=payload.optimizer
            )
        else:
            assert config.kernel is not None
            prob = MatchProblem.create(
                payload.q0,
                payload.q_target,
                config.kernel,
                payload.lambdas[0],
                payload.steps,
                payload.optimizer,
            )

        files = []
        residuals: Dict[str, Optional[float]] = {}
        sweep = []
        all_converged = True
        for index, lambda_ in enumerate(payload.lambdas):
            problem = prob.with_lambda(lambda_)
            result = self.matching_service.match(problem)
            report = result.report
            all_converged = all_converged and report.converged
            stem = f"match_{index}"
            self.file_service.write_json_file(
                self.output_dir / f"{stem}.json",
                {
                    "problem": problem.to_json(),
                    "p0": result.p0.tolist(),
                    "report": report.to_json(),
                },
            )
            header, rows = result.trajectory.csv_rows()
            self.file_service.write_csv_file(self.output_dir / f"{stem}.csv", header, rows)
            files += [f"{stem}.json", f"{stem}.csv"]
            residuals[f"{stem}.gradient_norm"] = report.gradient_norm
            residuals[f"{stem}.transversality"] = report.transversality_residual
            residuals[f"{stem}.endpoint_mismatch"] = report.endpoint_mismatch
            sweep.append(
                SweepRow(
                    lambda_=float(lambda_),
                    endpoint_mismatch=report.endpoint_mismatch,
                    objective=report.objective,
                    converged=report.converged,
                )
            )

        self.file_service.write_csv_file(
            self.output_dir / "lambda_sweep.csv",
            ["lambda", "endpoint_mismatch", "objective", "converged"],
            [
                [row.lambda_, row.endpoint_mismatch, row.objective, int(row.converged)]
                for row in sweep
            ],
        )
        files.append("lambda_sweep.csv")

        if payload.oracle:
            problem = prob.with_lambda(payload.lambdas[0])
            oracle = self.matching_service.oracle(problem, payload.oracle_segments)
            gap = sweep[0].objective - oracle.objective
            self.file_service.write_json_file(
                self.output_dir / "oracle.json",
                {
                    "segments": payload.oracle_segments,
                    "controls": oracle.controls.tolist(),
                    "endpoint": oracle.endpoint.tolist(),
                    "objective": oracle.objective,
                    "shooting_gap": gap,
                    "report": oracle.report.to_json(),
                },
            )
            files.append("oracle.json")
            residuals["oracle.shooting_gap"] = gap
            all_converged = all_converged and oracle.report.converged

        status = EXIT_SUCCESS if all_converged else EXIT_NOT_CONVERGED
        return CommandOutcome(status, residuals, files)

    def steer(self, config: ExperimentConfig, payload: Optional[SteerPayload]) -> CommandOutcome:
        """
        Steer a point along commutator flows and sweep the length bound over distances.

        :param config: Experiment configuration.
        :param payload: Steering payload.
        :return: Outcome of the command.
        """
        assert payload is not None and config.frame is not None
        start = np.asarray(payload.start, dtype=float)
        frame = self.frame_service.resolve(config.frame, start.shape[0])
        families = (
            [BracketWord.of(*word) for word in payload.families]
            if payload.families is not None
            else None
        )
        files = []
        residuals: Dict[str, Optional[float]] = {}
        converged = True

        if payload.target is not None:
            result = self.steering_service.steer_point(
                frame, start, np.asarray(payload.target, dtype=float), families
            )
            self.file_service.write_json_file(self.output_dir / "steer.json", result.to_json())
            files.append("steer.json")
            residuals["steer.residual"] = result.residual
            residuals["steer.length_bound"] = result.plan.total_length_bound
            converged = result.converged

        if payload.deltas and payload.directions:
            directions = {
                label: np.asarray(direction, dtype=float)
                for label, direction in payload.directions.items()
            }
            rows = self.steering_service.length_sweep(
                frame, start, directions, payload.deltas, families
            )
            self.file_service.write_csv_file(
                self.output_dir / "length_sweep.csv",
                ["direction", "delta", "length_bound", "profile_length", "converged", "residual"],
                [
                    [
                        row.direction,
                        row.delta,
                        row.length_bound,
                        row.profile_length,
                        int(row.converged),
                        row.residual,
                    ]
                    for row in rows
                ],
            )
            files.append("length_sweep.csv")
            converged = converged and all(row.converged for row in rows)
            if len(payload.deltas) > 1:
                for label in directions:
                    residuals[f"exponent.{label}"] = self.steering_service.scaling_exponent(
                        rows, label
                    )

        status = EXIT_SUCCESS if converged else EXIT_NOT_CONVERGED
        return CommandOutcome(status, residuals, files)

    def moser(self, config: ExperimentConfig, payload: Optional[MoserPayload]) -> CommandOutcome:
        """
        Transport one density to another along gradient fields of the frame.

        :param config: Experiment configuration.
        :param payload: Moser payload.
        :return: Outcome of the command.
        """
        assert payload is not None and config.frame is not None
        frame = self.frame_service.resolve(config.frame, payload.dim)
        f0 = payload.f0.grid(payload.resolution, payload.dim)
        f1 = payload.f1.grid(payload.resolution, payload.dim)
        result = self.moser_service.moser_transport(
            frame, f0, f1, payload.n_time, payload.horizontal
        )

        self.file_service.write_json_file(self.output_dir / "moser.json", result.to_json())
        self.file_service.write_lines(self.output_dir / "achieved.csv", result.achieved.csv_lines())
        header, rows = result.particle_csv_rows()
        self.file_service.write_csv_file(self.output_dir / "particles.csv", header, rows)
        residuals: Dict[str, Optional[float]] = {
            "moser.error": result.error,
            "moser.max_mass_drift": result.max_mass_drift,
        }
        return CommandOutcome(
            EXIT_SUCCESS, residuals, ["moser.json", "achieved.csv", "particles.csv"]
        )

    def verify(self, payload: Optional[VerifyPayload]) -> CommandOutcome:
        """
        Run the verification checks.

        :param payload: Check selection.
        :return: Outcome of the command; failing checks give a failure status.
        """
        payload = payload or VerifyPayload()
        report = self.verification_service.run(
            self.options.seed, payload.checks, payload.moser, payload.instances
        )
        self.file_service.write_json_file(self.output_dir / "verify.json", report.to_json())
        residuals: Dict[str, Optional[float]] = dict(report.residuals())
        status = EXIT_SUCCESS if report.passed else EXIT_FAILURE
        return CommandOutcome(status, residuals, ["verify.json"])

    def display(self, command: str, outcome: CommandOutcome) -> None:
        """
        Print a summary of the residuals of a command.

        :param command: Command that ran.
        :param outcome: Outcome of the command.
        """
        table = Table(title=f"srdiff {command} (status {outcome.status})")
        table.add_column("Residual")
        table.add_column("Value", justify="right")
        for name, value in outcome.residuals.items():
            table.add_row(name, "-" if value is None else f"{value:.6g}")
        rich_print(table)
        rich_print(f"Results written to [bold]{self.output_dir}[/bold]")


@click.command(context_settings=dict(max_content_width=100))
@click.option(
    "--config",
    "config_file",
    required=True,
    type=click.Path(dir_okay=False),
    help="Experiment configuration (JSON or YAML).",
)
@click.option("--output", type=click.Path(file_okay=False), help="Directory to write results to.")
@click.option("--seed", type=int, help="Seed for randomized checks.")
@click.option("--quiet", is_flag=True, default=False, help="Suppress the summary table.")
@click.pass_context
def run(
    ctx: click.Context,
    config_file: str,
    output: Optional[str],
    seed: Optional[int],
    quiet: bool,
) -> None:
    """
    Run the experiment described by a configuration file.

    Results and a manifest.json listing them are written to the output directory. Command line
    values take precedence over the configuration file, which takes precedence over the local
    defaults in '.srdiff-local.yml'.

    \b
    Exit status:
    * 0: success
    * 1: invalid configuration, failed precondition or failed verification check
    * 2: an iterative method did not converge
    """
    config_path = Path(config_file)
    try:
        validation_service = inject.instance(ValidationService)
        config = validation_service.load_experiment(config_path)
        apply_experiment_options(ctx.obj, config, output, seed)
        if quiet:
            ctx.obj.quiet = True
        orchestrator = inject.instance(RunOrchestrator)
        status = orchestrator.run(config, config_path)
    except NonConvergedError as err:
        LOGGER.error("Did not converge", error=str(err))
        click.echo(f"Error: {err}", err=True)
        ctx.exit(EXIT_NOT_CONVERGED)
    except SrdiffError as err:
        LOGGER.debug("Experiment failed", error_type=type(err).__name__)
        click.echo(f"Error: {err}", err=True)
        ctx.exit(EXIT_FAILURE)
    ctx.exit(status)


def apply_experiment_options(
    options: SrdiffOptions, config: ExperimentConfig, output: Optional[str], seed: Optional[int]
) -> None:
    """
    Layer the experiment settings over the runtime options.

    :param options: Runtime options holding the local defaults.
    :param config: Experiment configuration.
    :param output: Output directory from the command line.
    :param seed: Seed from the command line.
    """
    if config.numerics is not None:
        options.numerics = config.numerics
    if output is not None:
        options.output_dir = Path(output)
    elif config.output_dir is not None:
        options.output_dir = Path(config.output_dir)
    if seed is not None:
        options.seed = seed
    elif config.seed is not None:
        options.seed = config.seed
