"""Pydantic schema of experiment configuration files."""
from __future__ import annotations

from enum import Enum
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, root_validator, validator

from srdiff.models.bundled import LANDMARK_EXAMPLES, MATCH_EXAMPLES
from srdiff.models.frame import FRAME_IDS, Domain
from srdiff.models.grid import GridField
from srdiff.models.kernel import KernelSpec
from srdiff.models.matching import DEFAULT_MATCH_STEPS, DEFAULT_ORACLE_SEGMENTS, OptimizerSettings
from srdiff.options import NumericsConfiguration

SCHEMA_VERSION = 1

Points = List[List[float]]


class Command(str, Enum):
    """Experiment commands."""

    SHOOT = "shoot"
    MATCH = "match"
    STEER = "steer"
    MOSER = "moser"
    VERIFY = "verify"


class ShootPayload(BaseModel):
    """
    Geodesic shooting from a bundled example or explicit landmarks.

    * example: Bundled landmark example name.
    * q0: Initial positions, when no example is given.
    * p0: Initial covectors, when no example is given.
    * T: Final time.
    * steps: RK4 steps, `steps_per_unit_time` per unit time by default.
    * record_every: Keep one sample every this many steps.
    * particles: Extra passive particles advected with the landmarks.
    * flow: Also advect particles and Jacobians seeded at the landmarks.
    """

    example: Optional[str]
    q0: Optional[Points]
    p0: Optional[Points]
    T: float = 1.0
    steps: Optional[int]
    record_every: int = 1
    particles: Points = []
    flow: bool = False

    @root_validator(skip_on_failure=True)
    def _landmarks_given(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        example = values.get("example")
        if example is not None and example not in LANDMARK_EXAMPLES:
            raise ValueError(f"unknown landmark example '{example}'")
        if example is None and (values.get("q0") is None or values.get("p0") is None):
            raise ValueError("either an example or both q0 and p0 are required")
        return values


class MatchPayload(BaseModel):
    """
    Inexact matching from a bundled problem or explicit landmarks.

    * example: Bundled matching problem name.
    * q0: Source landmarks, when no example is given.
    * q_target: Target landmarks, when no example is given.
    * lambdas: Penalty weights; one match per weight.
    * steps: RK4 steps over [0, 1].
    * optimizer: Descent settings.
    * oracle: Also solve the piecewise-constant direct discretization.
    * oracle_segments: Number of constant pieces of the oracle.
    """

    example: Optional[str]
    q0: Optional[Points]
    q_target: Optional[Points]
    lambdas: List[float] = Field(default_factory=lambda: [1.0], min_items=1)
    steps: int = DEFAULT_MATCH_STEPS
    optimizer: OptimizerSettings = OptimizerSettings()
    oracle: bool = False
    oracle_segments: int = DEFAULT_ORACLE_SEGMENTS

    @validator("lambdas", each_item=True)
    def _positive_lambda(cls, value: float) -> float:
        if not value > 0.0:
            raise ValueError("penalty weights must be positive")
        return value

    @root_validator(skip_on_failure=True)
    def _landmarks_given(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        example = values.get("example")
        if example is not None and example not in MATCH_EXAMPLES:
            raise ValueError(f"unknown matching example '{example}'")
        if example is None and (values.get("q0") is None or values.get("q_target") is None):
            raise ValueError("either an example or both q0 and q_target are required")
        return values


class SteerPayload(BaseModel):
    """
    Local steering of one point, with an optional length sweep.

    * start: Start position.
    * target: Target position, if a single steering is requested.
    * families: Bracket words of the chart, selected at the start by default.
    * deltas: Distances of the sweep targets.
    * directions: Sweep directions by label.
    """

    start: List[float]
    target: Optional[List[float]]
    families: Optional[List[List[int]]]
    deltas: List[float] = []
    directions: Dict[str, List[float]] = {}

    @root_validator(skip_on_failure=True)
    def _something_to_do(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values.get("target") is None and not (values.get("deltas") and values.get("directions")):
            raise ValueError("a target or a sweep of deltas and directions is required")
        return values


class DensityMode(BaseModel):
    """
    One Fourier mode amplitude * sin|cos(2 pi k.x) of a density.

    * amplitude: Mode amplitude.
    * kind: "sin" or "cos".
    * wavevector: Integer wavevector k.
    """

    amplitude: float
    kind: Literal["sin", "cos"] = "sin"
    wavevector: List[int]


class DensitySpec(BaseModel):
    """
    Density constant + sum of Fourier modes on the unit torus.

    * constant: Constant part.
    * modes: Fourier modes.
    """

    constant: float = 1.0
    modes: List[DensityMode] = []

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """
        Evaluate the density at positions.

        :param x: Positions, shape (M, d).
        :return: Values, shape (M,).
        """
        values = np.full(x.shape[0], self.constant)
        for mode in self.modes:
            phase = 2.0 * np.pi * x @ np.asarray(mode.wavevector, dtype=float)
            wave = np.sin(phase) if mode.kind == "sin" else np.cos(phase)
            values = values + mode.amplitude * wave
        return values

    def grid(self, resolution: int, dim: int) -> GridField:
        """Sample the density on the canonical torus grid."""
        return GridField.from_function(self.evaluate, resolution, dim, Domain.TORUS)


class MoserPayload(BaseModel):
    """
    Transport of one density to another on the torus.

    * resolution: Nodes per axis.
    * n_time: Number of time steps.
    * f0: Initial density.
    * f1: Final density.
    * dim: Torus dimension.
    * horizontal: Restrict velocities to the frame span.
    """

    resolution: int = Field(..., ge=4)
    n_time: int = Field(..., ge=1)
    f0: DensitySpec
    f1: DensitySpec = DensitySpec()
    dim: int = Field(2, ge=1)
    horizontal: bool = True


class VerifyPayload(BaseModel):
    """
    Selection of verification checks.

    * checks: Names of the checks to run, all fast checks by default.
    * moser: Also run the Moser transport checks.
    * instances: Random instances per randomized check.
    """

    checks: Optional[List[str]]
    moser: bool = False
    instances: int = Field(100, ge=1)


class ExperimentConfig(BaseModel):
    """
    Top-level experiment configuration.

    * schema_version: Configuration schema version, "schema" in files.
    * command: Command to run.
    * kernel: Kernel of landmark commands.
    * frame: Frame id of steering and Moser commands.
    * output_dir: Directory results are written to.
    * seed: Seed for randomized checks.
    * numerics: Overrides of the numerical tunables.
    * shoot: Payload of the shoot command.
    * match: Payload of the match command.
    * steer: Payload of the steer command.
    * moser: Payload of the moser command.
    * verify: Payload of the verify command.
    """

    schema_version: int = Field(..., alias="schema")
    command: Command
    kernel: Optional[KernelSpec]
    frame: Optional[str]
    output_dir: Optional[str]
    seed: Optional[int]
    numerics: Optional[NumericsConfiguration]
    shoot: Optional[ShootPayload]
    match: Optional[MatchPayload]
    steer: Optional[SteerPayload]
    moser: Optional[MoserPayload]
    verify: Optional[VerifyPayload]

    class Config:
        """Unknown keys are configuration mistakes."""

        extra = "forbid"
        allow_population_by_field_name = True

    @validator("schema_version")
    def _supported_schema(cls, value: int) -> int:
        if value != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema {value}, expected {SCHEMA_VERSION}")
        return value

    @validator("frame")
    def _frame_registered(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and value not in FRAME_IDS:
            raise ValueError(f"unknown frame '{value}', expected one of: {', '.join(FRAME_IDS)}")
        return value

    @validator("kernel")
    def _kernel_frame_registered(cls, value: Optional[KernelSpec]) -> Optional[KernelSpec]:
        if value is not None and value.frame_id is not None and value.frame_id not in FRAME_IDS:
            raise ValueError(f"unknown kernel frame '{value.frame_id}'")
        return value

    @root_validator(skip_on_failure=True)
    def _payload_present(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        command = values["command"]
        if command == Command.VERIFY:
            if values.get("verify") is None:
                values["verify"] = VerifyPayload()
            return values
        if values.get(command.value) is None:
            raise ValueError(f"command '{command.value}' needs a '{command.value}' payload")
        if command in (Command.STEER, Command.MOSER) and values.get("frame") is None:
            raise ValueError(f"command '{command.value}' needs a frame")
        explicit = command == Command.SHOOT and values["shoot"].example is None
        explicit = explicit or (command == Command.MATCH and values["match"].example is None)
        if explicit and values.get("kernel") is None:
            raise ValueError(f"command '{command.value}' with explicit landmarks needs a kernel")
        return values
