"""Configuration options for srdiff."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import yaml
from pydantic import BaseModel, validator

DEFAULT_OUTPUT_DIR = "srdiff-results"
DEFAULT_SEED = 0
DEFAULT_LOCAL_FILE = ".srdiff-local.yml"


class NumericsConfiguration(BaseModel):
    """
    Numerical tunables shared by the services.

    * steps_per_unit_time: RK4 steps per unit of integration time.
    * blowup_threshold: Largest admissible state component.
    * duplicate_rel_tol: Relative distance under which two landmarks coincide.
    * max_fd_bracket_depth: Deepest bracket word evaluated (beyond depth 3 by nested differences).
    * bracket_fd_step: Step of the nested finite differences for deep brackets.
    * rank_rel_tol: Singular value threshold, relative to the largest, for span decisions.
    * chart_radius: Largest admissible chart coordinate.
    * newton_damping: Shrink factor of the steering Newton line search.
    * newton_max_iters: Iteration cap of the steering Newton solve.
    * newton_fd_step: Finite-difference step of the steering Jacobian.
    * steer_tol: Endpoint tolerance of a converged steering.
    * frame_constants: Per-frame constant C of the ball-box length bound.
    * cg_tol: Relative residual of sub-Laplacian solves.
    * mass_rel_tol: Relative mass mismatch tolerated between transported densities.
    * moser_substeps: RK4 substeps per Moser time step.
    """

    steps_per_unit_time: int = 1000
    blowup_threshold: float = 1e12
    duplicate_rel_tol: float = 1e-10
    max_fd_bracket_depth: int = 6
    bracket_fd_step: float = 1e-4
    rank_rel_tol: float = 1e-8
    chart_radius: float = 0.1
    newton_damping: float = 0.5
    newton_max_iters: int = 50
    newton_fd_step: float = 1e-6
    steer_tol: float = 1e-6
    frame_constants: Dict[str, float] = {}
    cg_tol: float = 1e-10
    mass_rel_tol: float = 1e-10
    moser_substeps: int = 4

    @validator("steps_per_unit_time", "newton_max_iters", "moser_substeps")
    def _positive_count(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be at least 1")
        return value

    @validator("newton_damping")
    def _damping_in_unit_interval(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError("must lie in (0, 1)")
        return value

    def frame_constant(self, frame_id: str) -> float:
        """Get the ball-box constant configured for the given frame."""
        return self.frame_constants.get(frame_id, 1.0)


@dataclass
class SrdiffOptions:
    """
    Options for running the tool.

    * output_dir: Directory results are written to.
    * seed: Seed for randomized verification checks.
    * quiet: Suppress human readable summaries.
    * numerics: Numerical tunables.
    """

    output_dir: Path = Path(DEFAULT_OUTPUT_DIR)
    seed: int = DEFAULT_SEED
    quiet: bool = False
    numerics: NumericsConfiguration = field(default_factory=NumericsConfiguration)


class SrdiffConfiguration(BaseModel):
    """
    Model for saving local srdiff defaults.

    * output_dir: Directory results are written to.
    * seed: Seed for randomized verification checks.
    """

    output_dir: Optional[str]
    seed: Optional[int]

    @classmethod
    def from_yaml_file(cls, filename: Path) -> SrdiffConfiguration:
        """
        Read the srdiff configuration from a yaml file.

        :param filename: File to read configuration from.
        :return: Model read from given file.
        """
        with open(filename) as f:
            return cls(**(yaml.safe_load(f) or {}))

    def save_yaml_file(self, filename: Path) -> None:
        """
        Write the srdiff configuration to a yaml file.

        :param filename: File to write configuration to.
        """
        with open(filename, "w") as f:
            f.write(yaml.safe_dump(self.dict(exclude_none=True, exclude_unset=True)))
