"""Service for fixed-step RK4 integration with conservation monitoring."""
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import inject
import numpy as np
import structlog
from scipy.integrate import trapezoid

from srdiff.errors import BlowUpError, InvalidInputError
from srdiff.models.kernel import KernelSpec
from srdiff.models.landmark import LandmarkState
from srdiff.models.trajectory import StateLayout, Trajectory
from srdiff.options import SrdiffOptions
from srdiff.services.hamiltonian_service import HamiltonianService, Rhs, Vjp

LOGGER = structlog.get_logger(__name__)

Monitor = Callable[[float, np.ndarray], float]


class IntegratorService:
    """A service for integrating flat state vectors with the classical RK4 scheme."""

    @inject.autoparams()
    def __init__(self, hamiltonian_service: HamiltonianService, options: SrdiffOptions) -> None:
        """
        Initialize the service.

        :param hamiltonian_service: Service for landmark Hamiltonian dynamics.
        :param options: Runtime options.
        """
        self.hamiltonian_service = hamiltonian_service
        self.numerics = options.numerics

    @staticmethod
    def rk4_step(rhs: Rhs, t: float, values: np.ndarray, dt: float, step: int = 0) -> np.ndarray:
        """
        Advance a state by one classical four-stage step.

        :param rhs: Right-hand side t, y -> y'.
        :param t: Current time.
        :param values: Current flat state.
        :param dt: Time step.
        :param step: Index of the step, reported on failure.
        :return: State at t + dt.
        """
        k1 = rhs(t, values)
        k2 = rhs(t + 0.5 * dt, values + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, values + 0.5 * dt * k2)
        k4 = rhs(t + dt, values + dt * k3)
        result = values + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(result)):
            raise BlowUpError("Non-finite value in RK4 step", step)
        return result

    @staticmethod
    def rk4_adjoint_step(
        rhs: Rhs, vjp: Vjp, t: float, values: np.ndarray, dt: float, cotangent: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Pull a cotangent of the end of an RK4 step back to its start.

        The step is differentiated exactly as computed, stage by stage in reverse order.

        :param rhs: Right-hand side used by the forward step.
        :param vjp: Vector-Jacobian product of the right-hand side with respect to the state and
            its parameters.
        :param t: Time at the start of the step.
        :param values: State at the start of the step.
        :param dt: Time step.
        :param cotangent: Cotangent of the state at t + dt.
        :return: Cotangent of the state at t and the cotangent of the step parameters.
        """
        stage1 = values
        k1 = rhs(t, stage1)
        stage2 = values + 0.5 * dt * k1
        k2 = rhs(t + 0.5 * dt, stage2)
        stage3 = values + 0.5 * dt * k2
        k3 = rhs(t + 0.5 * dt, stage3)
        stage4 = values + dt * k3

        k1_bar = (dt / 6.0) * cotangent
        k2_bar = (dt / 3.0) * cotangent
        k3_bar = (dt / 3.0) * cotangent
        k4_bar = (dt / 6.0) * cotangent

        result = cotangent.copy()
        stage_bar, params_bar = vjp(t + dt, stage4, k4_bar)
        result += stage_bar
        k3_bar = k3_bar + dt * stage_bar

        stage_bar, params = vjp(t + 0.5 * dt, stage3, k3_bar)
        params_bar = params_bar + params
        result += stage_bar
        k2_bar = k2_bar + 0.5 * dt * stage_bar

        stage_bar, params = vjp(t + 0.5 * dt, stage2, k2_bar)
        params_bar = params_bar + params
        result += stage_bar
        k1_bar = k1_bar + 0.5 * dt * stage_bar

        stage_bar, params = vjp(t, stage1, k1_bar)
        params_bar = params_bar + params
        result += stage_bar
        return result, params_bar

    def integrate(
        self,
        rhs: Rhs,
        values0: np.ndarray,
        T: float,
        steps: int,
        monitors: Optional[Mapping[str, Monitor]] = None,
        layout: Optional[StateLayout] = None,
        record_every: int = 1,
    ) -> Trajectory:
        """
        Integrate a flat state over [0, T] with a fixed number of RK4 steps.

        :param rhs: Right-hand side t, y -> y'.
        :param values0: Initial flat state.
        :param T: Final time.
        :param steps: Number of steps.
        :param monitors: Named scalar functions of (t, y) recorded at every sample.
        :param layout: Layout of the flat state, attached to the trajectory.
        :param record_every: Keep one sample every this many steps.
        :return: Trajectory sampled at times 0, record_every * dt, ..., T.
        """
        if steps < 1:
            raise InvalidInputError("Integration needs at least one step.")
        if record_every < 1 or steps % record_every != 0:
            raise InvalidInputError("record_every must divide the number of steps.")
        values = np.asarray(values0, dtype=float).copy()
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("Initial state must be finite.")
        monitors = monitors or {}

        times: List[float] = [0.0]
        samples: List[np.ndarray] = [values.copy()]
        records: List[Dict[str, float]] = [self._record(monitors, 0.0, values)]
        if T == 0.0:
            return Trajectory(np.array(times), np.array(samples), records, layout)

        dt = T / steps
        for step in range(1, steps + 1):
            try:
                values = self.rk4_step(rhs, (step - 1) * dt, values, dt, step)
            except BlowUpError as err:
                partial = Trajectory(np.array(times), np.array(samples), records, layout)
                raise BlowUpError("Non-finite value in RK4 step", err.step, partial) from err
            if np.max(np.abs(values)) > self.numerics.blowup_threshold:
                partial = Trajectory(np.array(times), np.array(samples), records, layout)
                raise BlowUpError("State exceeded the blow-up threshold", step, partial)
            if step % record_every == 0:
                t = T if step == steps else step * dt
                times.append(t)
                samples.append(values.copy())
                records.append(self._record(monitors, t, values))

        trajectory = Trajectory(np.array(times), np.array(samples), records, layout)
        LOGGER.debug("Integrated trajectory", steps=steps, T=T, samples=trajectory.sample_count)
        return trajectory

    def steps_for(self, T: float) -> int:
        """Get the default number of steps for an integration horizon."""
        return max(1, int(np.ceil(abs(T) * self.numerics.steps_per_unit_time - 1e-9)))

    def geodesic(
        self,
        spec: KernelSpec,
        state0: LandmarkState,
        T: float = 1.0,
        steps: Optional[int] = None,
        record_every: int = 1,
    ) -> Trajectory:
        """
        Integrate the landmark geodesic equations from a state.

        :param spec: Kernel.
        :param state0: Initial landmark state.
        :param T: Final time.
        :param steps: Number of steps, `steps_per_unit_time` per unit time by default.
        :param record_every: Keep one sample every this many steps.
        :return: Trajectory monitoring the Hamiltonian and the largest covector norm.
        """
        self.hamiltonian_service.hamiltonian(spec, state0)
        layout = StateLayout(state0.count, state0.dim)
        rhs = self.hamiltonian_service.geodesic_rhs(spec, state0.count, state0.dim)
        return self.integrate(
            rhs,
            state0.pack(),
            T,
            steps or self.steps_for(T),
            monitors=self.landmark_monitors(spec, layout),
            layout=layout,
            record_every=record_every,
        )

    def landmark_monitors(self, spec: KernelSpec, layout: StateLayout) -> Dict[str, Monitor]:
        """
        Build the Hamiltonian and covector-norm monitors of a landmark layout.

        :param spec: Kernel.
        :param layout: Layout of the integrated states.
        :return: Named monitors.
        """

        def hamiltonian(_t: float, values: np.ndarray) -> float:
            q, p, _, _ = layout.split(values)
            return self.hamiltonian_service.energy(spec, q, p)

        def covector_norm(_t: float, values: np.ndarray) -> float:
            _, p, _, _ = layout.split(values)
            return float(np.max(np.linalg.norm(p, axis=1)))

        return {"hamiltonian": hamiltonian, "max_covector_norm": covector_norm}

    @staticmethod
    def energy_drift(trajectory: Trajectory) -> float:
        """
        Get the largest relative deviation of the monitored Hamiltonian from its initial value.

        :param trajectory: Trajectory with a "hamiltonian" monitor.
        :return: max_t |h(t) - h(0)| / max(h(0), eps).
        """
        energies = trajectory.monitor("hamiltonian")
        scale = max(abs(energies[0]), np.finfo(float).eps)
        return float(np.max(np.abs(energies - energies[0])) / scale)

    @staticmethod
    def action(trajectory: Trajectory) -> float:
        """
        Integrate <X, X> = 2h along a trajectory by the trapezoidal rule.

        :param trajectory: Trajectory with a "hamiltonian" monitor.
        :return: The action.
        """
        if trajectory.sample_count < 2:
            return 0.0
        return float(trapezoid(2.0 * trajectory.monitor("hamiltonian"), trajectory.times))

    @staticmethod
    def length(trajectory: Trajectory) -> float:
        """
        Integrate the speed sqrt(2h) along a trajectory by the trapezoidal rule.

        :param trajectory: Trajectory with a "hamiltonian" monitor.
        :return: Length of the curve, an upper bound of the distance between its endpoints.
        """
        if trajectory.sample_count < 2:
            return 0.0
        speeds = np.sqrt(np.maximum(2.0 * trajectory.monitor("hamiltonian"), 0.0))
        return float(trapezoid(speeds, trajectory.times))

    @staticmethod
    def _record(monitors: Mapping[str, Monitor], t: float, values: np.ndarray) -> Dict[str, float]:
        return {name: float(monitor(t, values)) for name, monitor in monitors.items()}
