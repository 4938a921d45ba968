"""Models for penalized landmark matching."""
from __future__ import annotations

from typing import Any, Dict, List, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, validator

from srdiff.errors import InvalidInputError
from srdiff.models.kernel import KernelSpec
from srdiff.models.trajectory import Trajectory

DEFAULT_MATCH_STEPS = 100
DEFAULT_ORACLE_SEGMENTS = 10


class OptimizerSettings(BaseModel):
    """
    Settings of the backtracking gradient descent.

    * max_iters: Iteration cap.
    * grad_tol: Gradient norm at which the descent stops.
    * shrink: Line-search shrink factor.
    * armijo: Sufficient-decrease constant.
    * initial_step: Largest trial step.
    """

    max_iters: int = 1000
    grad_tol: float = 1e-6
    shrink: float = 0.5
    armijo: float = 1e-4
    initial_step: float = 1.0

    @validator("shrink", "armijo")
    def _in_unit_interval(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError("must lie in (0, 1)")
        return value

    @validator("max_iters")
    def _positive_iters(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be at least 1")
        return value

    @validator("grad_tol", "initial_step")
    def _positive(cls, value: float) -> float:
        if value <= 0.0:
            raise ValueError("must be positive")
        return value


class MatchProblem(NamedTuple):
    """
    Inexact matching problem min 2h(q0, p0) + lambda sum_i |q_i(1) - target_i|^2.

    * q0: Source landmarks, shape (n, d).
    * q_target: Target landmarks, shape (n, d).
    * spec: Kernel.
    * lambda_: Penalty weight.
    * steps: RK4 steps over [0, 1].
    * optimizer: Descent settings.
    """

    q0: np.ndarray
    q_target: np.ndarray
    spec: KernelSpec
    lambda_: float
    steps: int = DEFAULT_MATCH_STEPS
    optimizer: OptimizerSettings = OptimizerSettings()

    @classmethod
    def create(
        cls,
        q0: Any,
        q_target: Any,
        spec: KernelSpec,
        lambda_: float,
        steps: int = DEFAULT_MATCH_STEPS,
        optimizer: Optional[OptimizerSettings] = None,
    ) -> MatchProblem:
        """
        Build a problem, checking its invariants.

        :param q0: Source landmarks.
        :param q_target: Target landmarks.
        :param spec: Kernel.
        :param lambda_: Positive penalty weight.
        :param steps: RK4 steps.
        :param optimizer: Descent settings.
        :return: The problem.
        """
        q0 = np.atleast_2d(np.asarray(q0, dtype=float))
        q_target = np.atleast_2d(np.asarray(q_target, dtype=float))
        if q0.shape != q_target.shape:
            raise InvalidInputError(
                f"Source {q0.shape} and target {q_target.shape} landmarks must have equal shapes."
            )
        if not lambda_ > 0.0:
            raise InvalidInputError("The penalty weight must be positive.")
        if steps < 1:
            raise InvalidInputError("Matching needs at least one integration step.")
        return cls(q0, q_target, spec, float(lambda_), steps, optimizer or OptimizerSettings())

    def with_lambda(self, lambda_: float) -> MatchProblem:
        """Get a copy of the problem with another penalty weight."""
        return MatchProblem.create(
            self.q0, self.q_target, self.spec, lambda_, self.steps, self.optimizer
        )

    def to_json(self) -> Dict[str, Any]:
        """Serialize the problem."""
        return {
            "q0": self.q0.tolist(),
            "q_target": self.q_target.tolist(),
            "kernel": self.spec.to_json(),
            "lambda": self.lambda_,
            "steps": self.steps,
            "optimizer": self.optimizer.dict(),
        }


class IterationRecord(NamedTuple):
    """
    One accepted descent iteration.

    * iteration: Iteration number.
    * objective: Objective after the step.
    * gradient_norm: Gradient norm before the step.
    * step: Accepted step size.
    """

    iteration: int
    objective: float
    gradient_norm: float
    step: float


class MatchReport(NamedTuple):
    """
    Outcome of a matching descent.

    * converged: Whether the gradient norm reached grad_tol.
    * objective: Final objective.
    * gradient_norm: Final gradient norm.
    * iterations: Number of accepted iterations.
    * transversality_residual: |p(1) - lambda (target - q(1))| / lambda at the final iterate.
    * endpoint_mismatch: sum_i |q_i(1) - target_i|^2.
    * log: Accepted iterations.
    """

    converged: bool
    objective: float
    gradient_norm: float
    iterations: int
    transversality_residual: float
    endpoint_mismatch: float
    log: List[IterationRecord]

    def to_json(self) -> Dict[str, Any]:
        """Serialize the report with its iteration log."""
        return {
            "converged": self.converged,
            "objective": self.objective,
            "gradient_norm": self.gradient_norm,
            "iterations": self.iterations,
            "transversality_residual": self.transversality_residual,
            "endpoint_mismatch": self.endpoint_mismatch,
            "log": [record._asdict() for record in self.log],
        }


class MatchResult(NamedTuple):
    """
    Optimal initial momenta of a matching problem and their geodesic.

    * p0: Optimal initial covectors.
    * trajectory: Geodesic from (q0, p0).
    * report: Descent report.
    """

    p0: np.ndarray
    trajectory: Trajectory
    report: MatchReport


class OracleResult(NamedTuple):
    """
    Optimum of the direct discretization over piecewise-constant momenta.

    * controls: Momenta per segment, shape (segments, n, d).
    * objective: Final objective.
    * endpoint: Landmarks at time 1.
    * report: Descent report.
    """

    controls: np.ndarray
    objective: float
    endpoint: np.ndarray
    report: MatchReport


class SweepRow(NamedTuple):
    """
    Matching outcome for one penalty weight.

    * lambda_: Penalty weight.
    * endpoint_mismatch: sum_i |q_i(1) - target_i|^2 at the optimum.
    * objective: Objective at the optimum.
    * converged: Whether the descent converged.
    """

    lambda_: float
    endpoint_mismatch: float
    objective: float
    converged: bool
