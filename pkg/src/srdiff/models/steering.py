"""Models for elementary flows, steering plans and their diagnostics."""
from __future__ import annotations

from typing import Any, Dict, List, NamedTuple, Optional

import numpy as np

from srdiff.errors import InvalidInputError
from srdiff.models.frame import BracketWord


class ControlProfile(NamedTuple):
    """
    Control u(y) = a + g.y + y.H.y / 2 driving the flow of u X_i for a duration.

    * frame_index: One-based index i of the driven field.
    * amplitude: Constant part a.
    * duration: Flow time, nonnegative.
    * gradient: Linear coefficients g, if any.
    * hessian: Quadratic coefficients H, if any.
    """

    frame_index: int
    amplitude: float
    duration: float
    gradient: Optional[np.ndarray] = None
    hessian: Optional[np.ndarray] = None

    @classmethod
    def create(
        cls,
        frame_index: int,
        amplitude: float,
        duration: float,
        gradient: Optional[Any] = None,
        hessian: Optional[Any] = None,
    ) -> ControlProfile:
        """
        Build a profile, checking its invariants.

        :param frame_index: One-based field index.
        :param amplitude: Constant part of the control.
        :param duration: Nonnegative flow time.
        :param gradient: Optional linear coefficients.
        :param hessian: Optional quadratic coefficients.
        :return: The profile.
        """
        if frame_index < 1:
            raise InvalidInputError(f"Frame indices are one-based, got {frame_index}.")
        if not duration >= 0.0:
            raise InvalidInputError(f"Profile duration must be nonnegative, got {duration}.")
        if not np.isfinite(amplitude):
            raise InvalidInputError("Profile amplitude must be finite.")
        return cls(
            int(frame_index),
            float(amplitude),
            float(duration),
            None if gradient is None else np.asarray(gradient, dtype=float),
            None if hessian is None else np.asarray(hessian, dtype=float),
        )

    @property
    def is_constant(self) -> bool:
        """Whether the control does not depend on position."""
        return self.gradient is None and self.hessian is None

    @property
    def is_trivial(self) -> bool:
        """Whether the flow is the identity."""
        if self.duration == 0.0:
            return True
        return (
            self.amplitude == 0.0
            and (self.gradient is None or not np.any(self.gradient))
            and (self.hessian is None or not np.any(self.hessian))
        )

    def control(self, y: np.ndarray) -> np.ndarray:
        """
        Evaluate the control at positions.

        :param y: Positions, shape (P, d).
        :return: Control values, shape (P,).
        """
        values = np.full(y.shape[0], self.amplitude)
        if self.gradient is not None:
            values = values + y @ self.gradient
        if self.hessian is not None:
            values = values + 0.5 * np.einsum("pa,ab,pb->p", y, self.hessian, y)
        return values

    def inverse(self) -> ControlProfile:
        """Profile of the inverse flow, with every coefficient negated."""
        return ControlProfile(
            self.frame_index,
            -self.amplitude,
            self.duration,
            None if self.gradient is None else -self.gradient,
            None if self.hessian is None else -self.hessian,
        )

    def to_json(self) -> Dict[str, Any]:
        """Serialize the profile."""
        data: Dict[str, Any] = {
            "frame_index": self.frame_index,
            "amplitude": self.amplitude,
            "duration": self.duration,
        }
        if self.gradient is not None:
            data["gradient"] = self.gradient.tolist()
        if self.hessian is not None:
            data["hessian"] = self.hessian.tolist()
        return data

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> ControlProfile:
        """Read a profile serialized by `to_json`."""
        return cls.create(
            data["frame_index"],
            data["amplitude"],
            data["duration"],
            data.get("gradient"),
            data.get("hessian"),
        )


class SteeringPlan(NamedTuple):
    """
    Replayable sequence of elementary flows, in application order.

    * frame_id: Frame whose fields the profiles drive.
    * profiles: Elementary flows, first applied first.
    * total_length_bound: C sum_k |u_k|^(1/j_k) over the chart coordinates.
    * profile_length: C sum over profiles of |u| times duration.
    """

    frame_id: str
    profiles: List[ControlProfile]
    total_length_bound: float = 0.0
    profile_length: float = 0.0

    def to_json(self) -> Dict[str, Any]:
        """Serialize the plan with its profiles."""
        return {
            "frame_id": self.frame_id,
            "profiles": [profile.to_json() for profile in self.profiles],
            "total_length_bound": self.total_length_bound,
            "profile_length": self.profile_length,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> SteeringPlan:
        """Read a plan serialized by `to_json`."""
        return cls(
            data["frame_id"],
            [ControlProfile.from_json(profile) for profile in data["profiles"]],
            float(data.get("total_length_bound", 0.0)),
            float(data.get("profile_length", 0.0)),
        )


class SteeringResult(NamedTuple):
    """
    Outcome of steering one point to a nearby target.

    * plan: Elementary flows reaching the achieved endpoint from the start.
    * start: Start position.
    * target: Target position.
    * achieved: Position reached by replaying the plan.
    * coordinates: Chart coordinates u of the best iterate.
    * families: Bracket words of the chart.
    * converged: Whether |achieved - target| reached the steering tolerance.
    * iterations: Newton iterations performed.
    * residual: |achieved - target|.
    """

    plan: SteeringPlan
    start: np.ndarray
    target: np.ndarray
    achieved: np.ndarray
    coordinates: np.ndarray
    families: List[BracketWord]
    converged: bool
    iterations: int
    residual: float

    def to_json(self) -> Dict[str, Any]:
        """Serialize the result."""
        return {
            "plan": self.plan.to_json(),
            "start": self.start.tolist(),
            "target": self.target.tolist(),
            "achieved": self.achieved.tolist(),
            "coordinates": self.coordinates.tolist(),
            "families": [str(word) for word in self.families],
            "converged": self.converged,
            "iterations": self.iterations,
            "residual": self.residual,
        }


class TaylorOrderResult(NamedTuple):
    """
    Fitted small-time behaviour of a commutator flow.

    * order: Slope of log displacement against log t, NaN when fewer than two samples remain.
    * coefficient: Displacement at the smallest kept t divided by t^j u_1...u_j.
    * underflow: Whether samples were dropped as indistinguishable from rounding.
    * t_values: Kept times.
    * displacements: Displacement norms at the kept times.
    """

    order: float
    coefficient: np.ndarray
    underflow: bool
    t_values: np.ndarray
    displacements: np.ndarray

    def to_json(self) -> Dict[str, Any]:
        """Serialize the result."""
        return {
            "order": None if np.isnan(self.order) else self.order,
            "coefficient": self.coefficient.tolist(),
            "underflow": self.underflow,
            "t_values": self.t_values.tolist(),
            "displacements": self.displacements.tolist(),
        }


class LengthSweepRow(NamedTuple):
    """
    Steering cost to a target at distance delta along a direction.

    * direction: Label of the direction.
    * delta: Distance to the target.
    * length_bound: Total length bound of the plan.
    * profile_length: Length of the plan profiles.
    * converged: Whether steering converged.
    * residual: Endpoint residual.
    """

    direction: str
    delta: float
    length_bound: float
    profile_length: float
    converged: bool
    residual: float
