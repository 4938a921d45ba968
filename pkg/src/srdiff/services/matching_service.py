"""Service for inexact landmark matching by geodesic shooting."""
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import inject
import numpy as np
import structlog

from srdiff.errors import BlowUpError, InvalidInputError
from srdiff.models.landmark import LandmarkState
from srdiff.models.matching import (
    DEFAULT_ORACLE_SEGMENTS,
    IterationRecord,
    MatchProblem,
    MatchReport,
    MatchResult,
    OptimizerSettings,
    OracleResult,
    SweepRow,
)
from srdiff.models.trajectory import Trajectory
from srdiff.services.hamiltonian_service import HamiltonianService, Rhs, Vjp
from srdiff.services.integrator_service import IntegratorService

LOGGER = structlog.get_logger(__name__)

ValueFn = Callable[[np.ndarray], float]
ValueAndGradFn = Callable[[np.ndarray], Tuple[float, np.ndarray]]

MIN_STEP = 1e-14


class DescentOutcome(NamedTuple):
    """
    Final iterate of a gradient descent.

    * x: Final iterate.
    * value: Objective at x.
    * gradient_norm: Gradient norm at x.
    * converged: Whether the gradient norm reached the tolerance.
    * log: Accepted iterations.
    """

    x: np.ndarray
    value: float
    gradient_norm: float
    converged: bool
    log: List[IterationRecord]


class MatchingService:
    """A service for shooting objectives, their adjoint gradients and matching descents."""

    @inject.autoparams()
    def __init__(
        self, hamiltonian_service: HamiltonianService, integrator_service: IntegratorService
    ) -> None:
        """
        Initialize the service.

        :param hamiltonian_service: Service for landmark Hamiltonian dynamics.
        :param integrator_service: Service for RK4 integration.
        """
        self.hamiltonian_service = hamiltonian_service
        self.integrator_service = integrator_service

    def shoot_objective(self, prob: MatchProblem, p0: np.ndarray) -> float:
        """
        Evaluate 2h(q0, p0) + lambda sum_i |q_i(1) - target_i|^2 along the shot geodesic.

        The action of a geodesic is its conserved energy 2h(q0, p0).

        :param prob: Matching problem.
        :param p0: Initial covectors.
        :return: Objective value.
        """
        p0 = self._check_momenta(prob, p0)
        trajectory = self._shoot(prob, p0)
        return self._objective(prob, p0, trajectory.final)

    def shoot_gradient(self, prob: MatchProblem, p0: np.ndarray) -> np.ndarray:
        """
        Differentiate the discrete shooting objective with respect to the initial covectors.

        The RK4 trajectory is differentiated as computed, by a reverse sweep over its steps.

        :param prob: Matching problem.
        :param p0: Initial covectors.
        :return: Gradient with the shape of p0.
        """
        p0 = self._check_momenta(prob, p0)
        _, gradient = self._value_and_gradient(prob, p0)
        return gradient

    def match(self, prob: MatchProblem, p_init: Optional[np.ndarray] = None) -> MatchResult:
        """
        Minimize the shooting objective by gradient descent with backtracking from p0 = 0.

        :param prob: Matching problem.
        :param p_init: Starting covectors, zero by default.
        :return: Optimal covectors, their geodesic and the descent report.
        """
        shape = prob.q0.shape
        start = np.zeros(shape) if p_init is None else self._check_momenta(prob, p_init)
        outcome = self._descend(
            lambda x: self.shoot_objective(prob, x.reshape(shape)),
            lambda x: self._flat(self._value_and_gradient(prob, x.reshape(shape))),
            start.ravel(),
            prob.optimizer,
        )
        p0 = outcome.x.reshape(shape)
        trajectory = self.integrator_service.geodesic(
            prob.spec, LandmarkState.create(prob.q0, p0), 1.0, prob.steps
        )
        final = trajectory.state(-1)
        residual = float(
            np.linalg.norm(final.p - prob.lambda_ * (prob.q_target - final.q)) / prob.lambda_
        )
        report = MatchReport(
            converged=outcome.converged,
            objective=outcome.value,
            gradient_norm=outcome.gradient_norm,
            iterations=len(outcome.log),
            transversality_residual=residual,
            endpoint_mismatch=float(np.sum((final.q - prob.q_target) ** 2)),
            log=outcome.log,
        )
        LOGGER.info(
            "Matched landmarks",
            converged=report.converged,
            objective=report.objective,
            iterations=report.iterations,
            transversality=report.transversality_residual,
        )
        return MatchResult(p0=p0, trajectory=trajectory, report=report)

    def lambda_sweep(self, prob: MatchProblem, lambdas: Sequence[float]) -> List[SweepRow]:
        """
        Solve the matching problem for several penalty weights.

        :param prob: Matching problem; its own weight is ignored.
        :param lambdas: Penalty weights.
        :return: One row per weight, in the given order.
        """
        rows = []
        for lambda_ in lambdas:
            report = self.match(prob.with_lambda(lambda_)).report
            rows.append(
                SweepRow(
                    lambda_=float(lambda_),
                    endpoint_mismatch=report.endpoint_mismatch,
                    objective=report.objective,
                    converged=report.converged,
                )
            )
        return rows

    def oracle(
        self,
        prob: MatchProblem,
        segments: int = DEFAULT_ORACLE_SEGMENTS,
        settings: Optional[OptimizerSettings] = None,
    ) -> OracleResult:
        """
        Minimize the penalized action over paths driven by piecewise-constant momenta.

        On segment s the landmarks follow q' = dh/dp(q, a_s) and the running cost is
        2h(q, a_s) = |X|^2, so every candidate is an admissible horizontal path.

        :param prob: Matching problem.
        :param segments: Number of constant pieces over [0, 1].
        :param settings: Descent settings, those of the problem by default.
        :return: Optimal controls and objective.
        """
        if segments < 1:
            raise InvalidInputError("The oracle needs at least one segment.")
        count, dim = prob.q0.shape
        shape = (segments, count, dim)
        outcome = self._descend(
            lambda x: self._oracle_value_and_gradient(prob, x.reshape(shape), False)[0],
            lambda x: self._flat(self._oracle_value_and_gradient(prob, x.reshape(shape), True)),
            np.zeros(int(np.prod(shape))),
            settings or prob.optimizer,
        )
        controls = outcome.x.reshape(shape)
        endpoint = self._oracle_forward(prob, controls)[-1][: count * dim].reshape(count, dim)
        report = MatchReport(
            converged=outcome.converged,
            objective=outcome.value,
            gradient_norm=outcome.gradient_norm,
            iterations=len(outcome.log),
            transversality_residual=float("nan"),
            endpoint_mismatch=float(np.sum((endpoint - prob.q_target) ** 2)),
            log=outcome.log,
        )
        return OracleResult(controls, outcome.value, endpoint, report)

    def _shoot(self, prob: MatchProblem, p0: np.ndarray) -> Trajectory:
        count, dim = prob.q0.shape
        rhs = self.hamiltonian_service.geodesic_rhs(prob.spec, count, dim)
        state0 = np.concatenate([prob.q0.ravel(), p0.ravel()])
        return self.integrator_service.integrate(rhs, state0, 1.0, prob.steps)

    def _objective(self, prob: MatchProblem, p0: np.ndarray, final: np.ndarray) -> float:
        size = prob.q0.size
        q1 = final[:size].reshape(prob.q0.shape)
        action = 2.0 * self.hamiltonian_service.energy(prob.spec, prob.q0, p0)
        return action + prob.lambda_ * float(np.sum((q1 - prob.q_target) ** 2))

    def _value_and_gradient(self, prob: MatchProblem, p0: np.ndarray) -> Tuple[float, np.ndarray]:
        count, dim = prob.q0.shape
        size = count * dim
        rhs = self.hamiltonian_service.geodesic_rhs(prob.spec, count, dim)
        vjp = self.hamiltonian_service.geodesic_vjp(prob.spec, count, dim)
        trajectory = self._shoot(prob, p0)
        q1 = trajectory.final[:size].reshape(count, dim)

        cotangent = np.concatenate(
            [2.0 * prob.lambda_ * (q1 - prob.q_target).ravel(), np.zeros(size)]
        )
        dt = 1.0 / prob.steps
        for step in range(prob.steps - 1, -1, -1):
            cotangent, _ = self.integrator_service.rk4_adjoint_step(
                rhs, vjp, step * dt, trajectory.values[step], dt, cotangent
            )
        _, grad_p = self.hamiltonian_service.gradient(prob.spec, prob.q0, p0)
        gradient = cotangent[size:].reshape(count, dim) + 2.0 * grad_p
        return self._objective(prob, p0, trajectory.final), gradient

    def _oracle_forward(self, prob: MatchProblem, controls: np.ndarray) -> List[np.ndarray]:
        segments = controls.shape[0]
        steps_per_segment = max(1, prob.steps // segments)
        dt = 1.0 / (segments * steps_per_segment)
        values = np.concatenate([prob.q0.ravel(), [0.0]])
        states = [values]
        for segment in range(segments):
            rhs = self._oracle_rhs(prob, controls[segment])
            for step in range(steps_per_segment):
                t = (segment * steps_per_segment + step) * dt
                values = self.integrator_service.rk4_step(rhs, t, values, dt, len(states))
                states.append(values)
        return states

    def _oracle_value_and_gradient(
        self, prob: MatchProblem, controls: np.ndarray, with_gradient: bool
    ) -> Tuple[float, np.ndarray]:
        count, dim = prob.q0.shape
        size = count * dim
        states = self._oracle_forward(prob, controls)
        q1 = states[-1][:size].reshape(count, dim)
        value = float(states[-1][size]) + prob.lambda_ * float(np.sum((q1 - prob.q_target) ** 2))
        gradient = np.zeros_like(controls)
        if not with_gradient:
            return value, gradient

        segments = controls.shape[0]
        steps_per_segment = max(1, prob.steps // segments)
        dt = 1.0 / (segments * steps_per_segment)
        cotangent = np.concatenate([2.0 * prob.lambda_ * (q1 - prob.q_target).ravel(), [1.0]])
        for segment in range(segments - 1, -1, -1):
            rhs = self._oracle_rhs(prob, controls[segment])
            vjp = self._oracle_vjp(prob, controls[segment])
            for step in range(steps_per_segment - 1, -1, -1):
                index = segment * steps_per_segment + step
                cotangent, params = self.integrator_service.rk4_adjoint_step(
                    rhs, vjp, index * dt, states[index], dt, cotangent
                )
                gradient[segment] += params.reshape(count, dim)
        return value, gradient

    def _oracle_rhs(self, prob: MatchProblem, control: np.ndarray) -> Rhs:
        count, dim = prob.q0.shape
        size = count * dim

        def rhs(_t: float, values: np.ndarray) -> np.ndarray:
            q = values[:size].reshape(count, dim)
            terms = self.hamiltonian_service.terms(prob.spec, q, control)
            velocity = np.einsum("ik,ikd->id", terms.smoothed, terms.fields)
            running_cost = float(np.sum(terms.coefficients * terms.smoothed))
            return np.concatenate([velocity.ravel(), [running_cost]])

        return rhs

    def _oracle_vjp(self, prob: MatchProblem, control: np.ndarray) -> Vjp:
        count, dim = prob.q0.shape
        size = count * dim

        def vjp(
            _t: float, values: np.ndarray, cotangent: np.ndarray
        ) -> Tuple[np.ndarray, np.ndarray]:
            q = values[:size].reshape(count, dim)
            a = cotangent[:size].reshape(count, dim)
            beta = cotangent[size]
            grad_q, grad_p = self.hamiltonian_service.gradient(prob.spec, q, control)
            mixed_q, mixed_p = self.hamiltonian_service.hessian_vector_product(
                prob.spec, q, control, np.zeros_like(q), a
            )
            state_bar = np.concatenate([(mixed_q + 2.0 * beta * grad_q).ravel(), [0.0]])
            return state_bar, (mixed_p + 2.0 * beta * grad_p).ravel()

        return vjp

    @staticmethod
    def _descend(
        value_fn: ValueFn,
        value_and_grad_fn: ValueAndGradFn,
        x0: np.ndarray,
        settings: OptimizerSettings,
    ) -> DescentOutcome:
        x = x0
        value, gradient = value_and_grad_fn(x)
        gradient_norm = float(np.linalg.norm(gradient))
        log: List[IterationRecord] = []
        step = settings.initial_step
        for iteration in range(1, settings.max_iters + 1):
            if gradient_norm <= settings.grad_tol:
                return DescentOutcome(x, value, gradient_norm, True, log)
            trial = min(settings.initial_step, 2.0 * step) if log else settings.initial_step
            while True:
                candidate = x - trial * gradient
                try:
                    candidate_value = value_fn(candidate)
                except BlowUpError:
                    candidate_value = np.inf
                if candidate_value <= value - settings.armijo * trial * gradient_norm**2:
                    break
                trial *= settings.shrink
                if trial < MIN_STEP:
                    LOGGER.warning("Line search stagnated", iteration=iteration, value=value)
                    return DescentOutcome(x, value, gradient_norm, False, log)
            log.append(IterationRecord(iteration, candidate_value, gradient_norm, trial))
            step = trial
            x = candidate
            value, gradient = value_and_grad_fn(x)
            gradient_norm = float(np.linalg.norm(gradient))
            LOGGER.debug("Descent step", iteration=iteration, value=value, gradient=gradient_norm)
        converged = gradient_norm <= settings.grad_tol
        if not converged:
            LOGGER.warning("Descent reached max_iters", max_iters=settings.max_iters)
        return DescentOutcome(x, value, gradient_norm, converged, log)

    @staticmethod
    def _flat(result: Tuple[float, np.ndarray]) -> Tuple[float, np.ndarray]:
        return result[0], result[1].ravel()

    @staticmethod
    def _check_momenta(prob: MatchProblem, p0: np.ndarray) -> np.ndarray:
        p0 = np.asarray(p0, dtype=float).reshape(prob.q0.shape)
        if not np.all(np.isfinite(p0)):
            raise InvalidInputError("Initial covectors must be finite.")
        return p0
