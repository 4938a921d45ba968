"""Service for commutator flows, chart maps and local steering of points."""
from typing import Dict, List, Optional, Sequence

import inject
import numpy as np
import structlog
from scipy.stats import linregress

from srdiff.errors import InvalidInputError, OutOfChartError, PreconditionError
from srdiff.models.frame import BracketWord, FrameField
from srdiff.models.steering import (
    ControlProfile,
    LengthSweepRow,
    SteeringPlan,
    SteeringResult,
    TaylorOrderResult,
)
from srdiff.options import SrdiffOptions
from srdiff.services.frame_service import FrameService
from srdiff.services.integrator_service import IntegratorService

LOGGER = structlog.get_logger(__name__)

UNDERFLOW_FACTOR = 100.0
MIN_NEWTON_STEP = 1e-10


class SteeringService:
    """A service for composing horizontal flows and steering points with them."""

    @inject.autoparams()
    def __init__(
        self,
        frame_service: FrameService,
        integrator_service: IntegratorService,
        options: SrdiffOptions,
    ) -> None:
        """
        Initialize the service.

        :param frame_service: Service for frames and brackets.
        :param integrator_service: Service for RK4 integration.
        :param options: Runtime options.
        """
        self.frame_service = frame_service
        self.integrator_service = integrator_service
        self.numerics = options.numerics

    def elementary_flow(
        self, frame: FrameField, profile: ControlProfile, points: np.ndarray
    ) -> np.ndarray:
        """
        Flow points along y' = u(y) X_i(y) for the duration of a profile.

        :param frame: Frame holding X_i.
        :param profile: Control profile.
        :param points: Positions, shape (P, d) or (d,).
        :return: Flowed positions with the shape of the input.
        """
        points = frame.check_position(points)
        if profile.frame_index > frame.count:
            raise InvalidInputError(
                f"Frame '{frame.frame_id}' has {frame.count} fields, "
                f"got index {profile.frame_index}."
            )
        if profile.is_trivial:
            return points.copy()
        shape = points.shape
        flat = points.reshape(-1, frame.dim)
        index = profile.frame_index - 1

        def rhs(_t: float, values: np.ndarray) -> np.ndarray:
            y = values.reshape(flat.shape)
            velocity = profile.control(y)[:, None] * frame.fields(y)[:, index, :]
            return velocity.ravel()

        steps = self._flow_steps(profile)
        trajectory = self.integrator_service.integrate(
            rhs, flat.ravel(), profile.duration, steps, record_every=steps
        )
        return trajectory.final.reshape(shape)

    def replay(
        self, frame: FrameField, profiles: Sequence[ControlProfile], points: np.ndarray
    ) -> np.ndarray:
        """
        Apply elementary flows in order.

        :param frame: Frame driven by the profiles.
        :param profiles: Profiles, first applied first.
        :param points: Positions.
        :return: Positions after the last flow.
        """
        result = frame.check_position(points).copy()
        for profile in profiles:
            result = self.elementary_flow(frame, profile, result)
        return result

    @staticmethod
    def commutator_profiles(
        word: BracketWord, amplitudes: Sequence[float], t: float
    ) -> List[ControlProfile]:
        """
        List the elementary flows of the nested group commutator of a word, in application order.

        A single index i gives the flow of u X_i. A word (i, I') applies the flow of u_1 X_i, the
        commutator of I', the flow of -u_1 X_i and finally the inverse commutator of I', so the
        composition moves points by t^j u_1...u_j X_I to leading order.

        :param word: Bracket word of length j.
        :param amplitudes: Amplitudes u_1, ..., u_j.
        :param t: Duration of every elementary flow.
        :return: Profiles, first applied first.
        """
        if len(amplitudes) != word.length:
            raise InvalidInputError(
                f"Word {word} needs {word.length} amplitudes, got {len(amplitudes)}."
            )
        head = ControlProfile.create(word.head, float(amplitudes[0]), t)
        if word.length == 1:
            return [head]
        inner = SteeringService.commutator_profiles(word.tail, amplitudes[1:], t)
        inverse_inner = [profile.inverse() for profile in reversed(inner)]
        return [head] + inner + [head.inverse()] + inverse_inner

    def commutator_flow(
        self,
        frame: FrameField,
        word: BracketWord,
        amplitudes: Sequence[float],
        t: float,
        points: np.ndarray,
    ) -> np.ndarray:
        """
        Apply the commutator flow of a word to points.

        :param frame: Frame to flow along.
        :param word: Bracket word.
        :param amplitudes: One amplitude per index of the word.
        :param t: Duration of every elementary flow.
        :param points: Positions.
        :return: Flowed positions.
        """
        return self.replay(frame, self.commutator_profiles(word, amplitudes, t), points)

    def taylor_order_check(
        self,
        frame: FrameField,
        word: BracketWord,
        amplitudes: Sequence[float],
        point: np.ndarray,
        t_values: Sequence[float],
    ) -> TaylorOrderResult:
        """
        Fit the small-time order of a commutator flow at a point.

        Displacements too small to be told apart from accumulated rounding are dropped.

        :param frame: Frame to flow along.
        :param word: Bracket word of length j.
        :param amplitudes: One amplitude per index of the word.
        :param point: Base position.
        :param t_values: Decreasing positive times spanning at least one decade.
        :return: Fitted order and rescaled displacement at the smallest kept time.
        """
        point = frame.check_position(point)
        times = np.asarray(t_values, dtype=float)
        if times.ndim != 1 or len(times) < 2 or np.any(times <= 0.0):
            raise PreconditionError("Taylor check needs at least two positive times.")
        if np.max(times) < 10.0 * np.min(times):
            raise PreconditionError("Taylor check times must span at least one decade.")
        times = np.sort(times)[::-1]
        scale = float(np.prod(amplitudes))

        kept_times: List[float] = []
        norms: List[float] = []
        displacements: List[np.ndarray] = []
        for t in times:
            profiles = self.commutator_profiles(word, amplitudes, t)
            displacement = self.replay(frame, profiles, point) - point
            norm = float(np.linalg.norm(displacement))
            total_steps = sum(self._flow_steps(profile) for profile in profiles)
            threshold = (
                UNDERFLOW_FACTOR
                * np.finfo(float).eps
                * (1.0 + float(np.max(np.abs(point))))
                * total_steps
            )
            if norm <= threshold:
                continue
            kept_times.append(t)
            norms.append(norm)
            displacements.append(displacement)

        underflow = len(kept_times) < len(times)
        if underflow:
            LOGGER.warning(
                "Commutator displacement underflow",
                word=str(word),
                dropped=len(times) - len(kept_times),
            )
        if len(kept_times) < 2:
            return TaylorOrderResult(
                float("nan"), np.zeros(frame.dim), True, np.array(kept_times), np.array(norms)
            )
        fit = linregress(np.log(kept_times), np.log(norms))
        smallest = kept_times[-1]
        coefficient = displacements[-1] / (smallest**word.length * scale)
        return TaylorOrderResult(
            float(fit.slope), coefficient, underflow, np.array(kept_times), np.array(norms)
        )

    def chart_plan(
        self, frame: FrameField, families: Sequence[BracketWord], u: np.ndarray
    ) -> List[ControlProfile]:
        """
        List the elementary flows of the chart map at coordinates u.

        Family k with word length j flows for unit time with amplitudes sign(u_k)|u_k|^(1/j)
        followed by |u_k|^(1/j), whose product is u_k.

        :param frame: Frame of the chart.
        :param families: Bracket words of the chart.
        :param u: One coordinate per family.
        :return: Profiles, first applied first.
        """
        u = np.asarray(u, dtype=float)
        if u.shape != (len(families),):
            raise InvalidInputError(f"Chart needs {len(families)} coordinates, got {u.shape}.")
        if not np.all(np.isfinite(u)):
            raise InvalidInputError("Chart coordinates must be finite.")
        radius = self.numerics.chart_radius
        if np.any(np.abs(u) > radius):
            raise OutOfChartError(f"Chart coordinates {u.tolist()} exceed the radius {radius}.")
        profiles: List[ControlProfile] = []
        for word, coordinate in zip(families, u):
            if coordinate == 0.0:
                continue
            magnitude = abs(coordinate) ** (1.0 / word.length)
            amplitudes = [np.sign(coordinate) * magnitude] + [magnitude] * (word.length - 1)
            profiles.extend(self.commutator_profiles(word, amplitudes, 1.0))
        return profiles

    def chart_map(
        self,
        frame: FrameField,
        families: Sequence[BracketWord],
        u: np.ndarray,
        point: np.ndarray,
    ) -> np.ndarray:
        """
        Apply the fractionally scaled commutator flows of the chart, in family order, to a point.

        :param frame: Frame of the chart.
        :param families: Bracket words of the chart.
        :param u: One coordinate per family.
        :param point: Base position.
        :return: Position reached.
        """
        return self.replay(frame, self.chart_plan(frame, families, u), point)

    def chart_differential(
        self,
        frame: FrameField,
        families: Sequence[BracketWord],
        point: np.ndarray,
        step: Optional[float] = None,
    ) -> np.ndarray:
        """
        Differentiate the chart map at u = 0 by central differences.

        :param frame: Frame of the chart.
        :param families: Bracket words of the chart.
        :param point: Base position.
        :param step: Difference step, `newton_fd_step` by default.
        :return: Matrix of shape (d, m) whose columns approximate X_I_k(point).
        """
        step = step or self.numerics.newton_fd_step
        columns = []
        for k in range(len(families)):
            offset = np.zeros(len(families))
            offset[k] = step
            forward = self.chart_map(frame, families, offset, point)
            backward = self.chart_map(frame, families, -offset, point)
            columns.append((forward - backward) / (2.0 * step))
        return np.stack(columns, axis=-1)

    def steer_point(
        self,
        frame: FrameField,
        start: np.ndarray,
        target: np.ndarray,
        families: Optional[Sequence[BracketWord]] = None,
    ) -> SteeringResult:
        """
        Steer a point to a nearby target by a damped Newton solve on the chart coordinates.

        :param frame: Frame to flow along.
        :param start: Start position.
        :param target: Target within the chart radius of the start.
        :param families: Bracket words of the chart, selected at the start when not given.
        :return: Plan, achieved endpoint and convergence report.
        """
        start = frame.check_position(start)
        target = frame.check_position(target)
        if families is None:
            rank = self.frame_service.bracket_generating_rank(
                frame, start, self.numerics.max_fd_bracket_depth
            )
            if rank.rank < frame.dim:
                raise PreconditionError(
                    f"Frame '{frame.frame_id}' spans only {rank.rank} directions at {start}."
                )
            families = rank.families
        families = list(families)
        distance = float(np.linalg.norm(target - start))
        if distance > self.numerics.chart_radius:
            raise PreconditionError(
                f"Target is {distance:.3e} from the start, beyond the chart radius "
                f"{self.numerics.chart_radius}."
            )

        u = np.zeros(len(families))
        residual = target - start
        best = float(np.linalg.norm(residual))
        iterations = 0
        while best > self.numerics.steer_tol and iterations < self.numerics.newton_max_iters:
            iterations += 1
            jacobian = self._chart_jacobian(frame, families, u, start, target - residual)
            direction = np.linalg.lstsq(jacobian, residual, rcond=None)[0]
            accepted = False
            scale = 1.0
            while scale > MIN_NEWTON_STEP:
                candidate = u + scale * direction
                if np.all(np.abs(candidate) <= self.numerics.chart_radius):
                    candidate_residual = target - self.chart_map(frame, families, candidate, start)
                    candidate_norm = float(np.linalg.norm(candidate_residual))
                    if candidate_norm < best:
                        u, residual, best = candidate, candidate_residual, candidate_norm
                        accepted = True
                        break
                scale *= self.numerics.newton_damping
            LOGGER.debug("Newton step", iteration=iterations, residual=best, scale=scale)
            if not accepted:
                LOGGER.warning("Steering Newton solve stagnated", iteration=iterations)
                break

        plan = self._plan(frame, families, u)
        achieved = self.replay(frame, plan.profiles, start)
        result = SteeringResult(
            plan=plan,
            start=start,
            target=target,
            achieved=achieved,
            coordinates=u,
            families=families,
            converged=best <= self.numerics.steer_tol,
            iterations=iterations,
            residual=float(np.linalg.norm(achieved - target)),
        )
        LOGGER.info(
            "Steered point",
            frame=frame.frame_id,
            converged=result.converged,
            residual=result.residual,
            length_bound=plan.total_length_bound,
        )
        return result

    def length_sweep(
        self,
        frame: FrameField,
        start: np.ndarray,
        directions: Dict[str, np.ndarray],
        deltas: Sequence[float],
        families: Optional[Sequence[BracketWord]] = None,
    ) -> List[LengthSweepRow]:
        """
        Steer to start + delta * direction for every direction and distance.

        :param frame: Frame to flow along.
        :param start: Start position.
        :param directions: Unit directions by label.
        :param deltas: Distances to the targets.
        :param families: Bracket words of the chart.
        :return: One row per direction and distance.
        """
        start = frame.check_position(start)
        rows = []
        for label, direction in directions.items():
            unit = np.asarray(direction, dtype=float)
            unit = unit / np.linalg.norm(unit)
            for delta in deltas:
                result = self.steer_point(frame, start, start + delta * unit, families)
                rows.append(
                    LengthSweepRow(
                        direction=label,
                        delta=float(delta),
                        length_bound=result.plan.total_length_bound,
                        profile_length=result.plan.profile_length,
                        converged=result.converged,
                        residual=result.residual,
                    )
                )
        return rows

    @staticmethod
    def scaling_exponent(rows: Sequence[LengthSweepRow], direction: str) -> float:
        """
        Fit the exponent of length_bound ~ delta^e along one direction.

        :param rows: Sweep rows.
        :param direction: Direction label.
        :return: Fitted exponent.
        """
        selected = [row for row in rows if row.direction == direction and row.length_bound > 0]
        if len(selected) < 2:
            raise PreconditionError(f"Direction '{direction}' needs two nonzero sweep rows.")
        fit = linregress(
            np.log([row.delta for row in selected]), np.log([row.length_bound for row in selected])
        )
        return float(fit.slope)

    def _plan(
        self, frame: FrameField, families: Sequence[BracketWord], u: np.ndarray
    ) -> SteeringPlan:
        constant = self.numerics.frame_constant(frame.frame_id)
        profiles = self.chart_plan(frame, families, u)
        bound = constant * sum(
            abs(coordinate) ** (1.0 / word.length) for word, coordinate in zip(families, u)
        )
        profile_length = constant * sum(
            abs(profile.amplitude) * profile.duration for profile in profiles
        )
        return SteeringPlan(frame.frame_id, profiles, float(bound), float(profile_length))

    def _chart_jacobian(
        self,
        frame: FrameField,
        families: Sequence[BracketWord],
        u: np.ndarray,
        start: np.ndarray,
        value: np.ndarray,
    ) -> np.ndarray:
        step = self.numerics.newton_fd_step
        columns = []
        for k in range(len(families)):
            offset = np.zeros(len(u))
            offset[k] = step if u[k] + step <= self.numerics.chart_radius else -step
            shifted = self.chart_map(frame, families, u + offset, start)
            columns.append((shifted - value) / offset[k])
        return np.stack(columns, axis=-1)

    def _flow_steps(self, profile: ControlProfile) -> int:
        if profile.is_trivial:
            return 0
        return self.integrator_service.steps_for(profile.duration)
