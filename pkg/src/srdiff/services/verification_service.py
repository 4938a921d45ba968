"""Service running the property checks of every srdiff component."""
from typing import Callable, Dict, Optional, Sequence, Tuple

import inject
import numpy as np
import structlog
from scipy.stats import linregress

from srdiff.errors import ConfigurationError
from srdiff.models.bundled import CONSERVATION_EXAMPLES, landmark_example, match_example
from srdiff.models.config import DensityMode, DensitySpec
from srdiff.models.frame import BracketWord, build_frame, words_of_length
from srdiff.models.kernel import KernelSpec
from srdiff.models.landmark import LandmarkState
from srdiff.models.matching import MatchProblem, OptimizerSettings
from srdiff.models.verification import CheckResult, VerificationReport
from srdiff.services.flow_service import FlowService
from srdiff.services.frame_service import FrameService
from srdiff.services.hamiltonian_service import HamiltonianService
from srdiff.services.integrator_service import IntegratorService
from srdiff.services.kernel_service import KernelService
from srdiff.services.matching_service import MatchingService
from srdiff.services.moser_service import MoserService
from srdiff.services.steering_service import SteeringService

LOGGER = structlog.get_logger(__name__)

FINE_STEPS = 1000
CONVERGENCE_STEPS = (5, 10, 20)
REFERENCE_STEPS = 2000
GRADIENT_FD_STEP = 1e-6
SHOOT_FD_STEP = 1e-5
SHOOT_CHECK_STEPS = 20
TAYLOR_TIMES = tuple(np.geomspace(1e-1, 1e-3, 5))
SWEEP_DELTAS = (1e-2, 1e-3, 1e-4)
LAMBDA_SWEEP = (0.1, 1.0, 10.0, 100.0)
ORACLE_SETTINGS = OptimizerSettings(max_iters=300)

FAST_CHECKS = [
    "single_landmark",
    "conservation",
    "convergence_order",
    "symplectic_gradient",
    "shoot_gradient",
    "pushforward",
    "frame_reduction",
    "matching_closed_form",
    "taylor_order",
    "ball_box",
    "abnormal",
    "kernel_psd",
]
SLOW_CHECKS = ["oracle", "lambda_monotonicity", "moser"]


class VerificationService:
    """A service for running the acceptance properties with a fixed seed."""

    @inject.autoparams()
    def __init__(
        self,
        kernel_service: KernelService,
        frame_service: FrameService,
        hamiltonian_service: HamiltonianService,
        integrator_service: IntegratorService,
        flow_service: FlowService,
        matching_service: MatchingService,
        steering_service: SteeringService,
        moser_service: MoserService,
    ) -> None:
        """Initialize the service."""
        self.kernel_service = kernel_service
        self.frame_service = frame_service
        self.hamiltonian_service = hamiltonian_service
        self.integrator_service = integrator_service
        self.flow_service = flow_service
        self.matching_service = matching_service
        self.steering_service = steering_service
        self.moser_service = moser_service
        self.instances = 100

    @property
    def checks(self) -> Dict[str, Callable[[np.random.Generator], CheckResult]]:
        """Registered checks by name."""
        return {
            "single_landmark": self.check_single_landmark,
            "conservation": self.check_conservation,
            "convergence_order": self.check_convergence_order,
            "symplectic_gradient": self.check_symplectic_gradient,
            "shoot_gradient": self.check_shoot_gradient,
            "pushforward": self.check_pushforward,
            "frame_reduction": self.check_frame_reduction,
            "matching_closed_form": self.check_matching_closed_form,
            "taylor_order": self.check_taylor_order,
            "ball_box": self.check_ball_box,
            "abnormal": self.check_abnormal,
            "kernel_psd": self.check_kernel_psd,
            "oracle": self.check_oracle,
            "lambda_monotonicity": self.check_lambda_monotonicity,
            "moser": self.check_moser,
        }

    def run(
        self,
        seed: int,
        names: Optional[Sequence[str]] = None,
        include_moser: bool = False,
        instances: int = 100,
    ) -> VerificationReport:
        """
        Run verification checks.

        Every check draws from its own generator seeded by (seed, check index), so results do
        not depend on which other checks run.

        :param seed: Seed of the randomized checks.
        :param names: Checks to run, the fast checks by default.
        :param include_moser: Add the Moser transport check to the default selection.
        :param instances: Random instances per randomized check.
        :return: Report of every check.
        """
        registered = self.checks
        if names is None:
            names = FAST_CHECKS + (["moser"] if include_moser else [])
        unknown = [name for name in names if name not in registered]
        if unknown:
            raise ConfigurationError(
                f"Unknown checks {unknown}, expected names from: {', '.join(registered)}."
            )
        self.instances = instances
        order = list(registered)
        results = []
        for name in names:
            rng = np.random.default_rng([seed, order.index(name)])
            result = registered[name](rng)
            LOGGER.info(
                "Verification check",
                check=name,
                passed=result.passed,
                residual=result.residual,
                threshold=result.threshold,
            )
            results.append(result)
        return VerificationReport(seed=seed, checks=results)

    def check_single_landmark(self, _rng: np.random.Generator) -> CheckResult:
        """A single landmark moves on the straight line q0 + t a with constant covector a."""
        q0, a = np.array([[0.3, -0.2]]), np.array([[0.7, 0.4]])
        trajectory = self.integrator_service.geodesic(
            KernelSpec.full(1.0), LandmarkState.create(q0, a), 1.0, FINE_STEPS
        )
        deviation = max(
            max(
                float(np.max(np.abs(state.q - q0 - t * a))),
                float(np.max(np.abs(state.p - a))),
            )
            for t, state in zip(trajectory.times, trajectory.states)
        )
        return self._result("single_landmark", deviation, 1e-10)

    def check_conservation(self, _rng: np.random.Generator) -> CheckResult:
        """The Hamiltonian is conserved on every bundled example."""
        drifts = {}
        for name in CONSERVATION_EXAMPLES:
            example = landmark_example(name)
            trajectory = self.integrator_service.geodesic(
                example.spec, example.state, 1.0, FINE_STEPS
            )
            drifts[name] = self.integrator_service.energy_drift(trajectory)
        return self._result("conservation", max(drifts.values()), 1e-8, drifts)

    def check_convergence_order(self, _rng: np.random.Generator) -> CheckResult:
        """RK4 endpoints of the head-on pair converge with order four."""
        example = landmark_example("head-on")
        reference = self.integrator_service.geodesic(
            example.spec, example.state, 1.0, REFERENCE_STEPS
        ).final
        errors = []
        for steps in CONVERGENCE_STEPS:
            final = self.integrator_service.geodesic(example.spec, example.state, 1.0, steps).final
            errors.append(float(np.max(np.abs(final - reference))))
        fit = linregress(np.log([1.0 / steps for steps in CONVERGENCE_STEPS]), np.log(errors))
        slope = float(fit.slope)
        return CheckResult("convergence_order", slope >= 3.8, slope, 3.8, {"errors": errors})

    def check_symplectic_gradient(self, rng: np.random.Generator) -> CheckResult:
        """The analytic gradient of h matches central differences."""
        worst = 0.0
        for index in range(self.instances):
            spec, q, p = self._random_instance(rng, index)
            grad_q, grad_p = self.hamiltonian_service.gradient(spec, q, p)
            fd_q = self._central_gradient(lambda x: self.hamiltonian_service.energy(spec, x, p), q)
            fd_p = self._central_gradient(lambda x: self.hamiltonian_service.energy(spec, q, x), p)
            analytic = np.concatenate([grad_q.ravel(), grad_p.ravel()])
            numeric = np.concatenate([fd_q.ravel(), fd_p.ravel()])
            worst = max(worst, self._relative(analytic, numeric))
        return self._result("symplectic_gradient", worst, 1e-5)

    def check_shoot_gradient(self, rng: np.random.Generator) -> CheckResult:
        """The adjoint shooting gradient matches central differences of the discrete objective."""
        worst = 0.0
        for index in range(self.instances):
            spec, q, p = self._random_instance(rng, index, count=2)
            target = q + 0.3 * rng.standard_normal(q.shape)
            prob = MatchProblem.create(q, target, spec, 1.0, SHOOT_CHECK_STEPS)
            analytic = self.matching_service.shoot_gradient(prob, p)
            numeric = self._central_gradient(
                lambda x: self.matching_service.shoot_objective(prob, x), p, SHOOT_FD_STEP
            )
            worst = max(worst, self._relative(analytic.ravel(), numeric.ravel()))
        return self._result("shoot_gradient", worst, 1e-4)

    def check_pushforward(self, _rng: np.random.Generator) -> CheckResult:
        """Covectors pulled back by the flow Jacobian stay equal to the initial covectors."""
        residuals = {}
        for name in CONSERVATION_EXAMPLES:
            example = landmark_example(name)
            record = self.flow_service.advect(
                example.spec, example.state, example.state.q, 1.0, FINE_STEPS, record_every=10
            )
            residuals[name] = self.flow_service.pushforward_residual(record)
        return self._result("pushforward", max(residuals.values()), 1e-5, residuals)

    def check_frame_reduction(self, _rng: np.random.Generator) -> CheckResult:
        """A single constrained landmark follows the normal geodesic of its frame."""
        frame = build_frame("heisenberg")
        state = LandmarkState.create([[0.2, -0.1, 0.3]], [[0.5, -0.4, 0.8]])
        spec = KernelSpec.constrained(1.0, "heisenberg")
        landmark = self.integrator_service.geodesic(spec, state, 1.0, FINE_STEPS)
        reduced = self.integrator_service.integrate(
            self.hamiltonian_service.frame_geodesic_rhs(frame), state.pack(), 1.0, FINE_STEPS
        )
        deviation = float(np.max(np.abs(landmark.values - reduced.values)))
        return self._result("frame_reduction", deviation, 1e-8)

    def check_matching_closed_form(self, _rng: np.random.Generator) -> CheckResult:
        """The one-dimensional matching problem reaches p0 = lambda / (1 + lambda)."""
        prob = match_example("single-landmark", 1.0)
        result = self.matching_service.match(prob)
        error = abs(float(result.p0[0, 0]) - 0.5)
        transversality = result.report.transversality_residual
        details = {"p0": float(result.p0[0, 0]), "transversality": transversality}
        passed = error <= 1e-6 and transversality <= 10.0 * prob.optimizer.grad_tol
        return CheckResult("matching_closed_form", passed, error, 1e-6, details)

    def check_taylor_order(self, _rng: np.random.Generator) -> CheckResult:
        """Commutator flows of words up to length three move points by t^j u X_I."""
        points = {"heisenberg": np.array([0.3, -0.2, 0.1]), "grushin": np.array([0.4, 0.2])}
        worst = 0.0
        passed = True
        details = {}
        for frame_id, point in points.items():
            frame = build_frame(frame_id)
            for length in (1, 2, 3):
                for word in words_of_length(frame.count, length):
                    amplitudes = [1.0] * length
                    result = self.steering_service.taylor_order_check(
                        frame, word, amplitudes, point, TAYLOR_TIMES
                    )
                    bracket = self.frame_service.iterated_bracket(frame, word, point)
                    key = f"{frame_id}{word}"
                    if np.linalg.norm(bracket) <= 1e-12:
                        ok = result.underflow or result.order >= length + 0.85
                        details[key] = "vanishing"
                    else:
                        order_error = abs(result.order - length)
                        coefficient_error = self._relative(bracket, result.coefficient)
                        ok = order_error <= 0.15 and coefficient_error <= 0.05
                        worst = max(worst, order_error)
                        details[key] = result.order
                    passed = passed and bool(ok)
        return CheckResult("taylor_order", passed, worst, 0.15, details)

    def check_ball_box(self, _rng: np.random.Generator) -> CheckResult:
        """Heisenberg steering costs scale like delta^(1/2) vertically and delta horizontally."""
        frame = build_frame("heisenberg")
        families = [BracketWord.of(1), BracketWord.of(2), BracketWord.of(1, 2)]
        directions = {
            "horizontal": np.array([1.0, 0.0, 0.0]),
            "vertical": np.array([0.0, 0.0, 1.0]),
        }
        exponents = {"horizontal": 1.0, "vertical": 0.5}
        rows = self.steering_service.length_sweep(
            frame, np.zeros(3), directions, SWEEP_DELTAS, families
        )
        spread = 1.0
        for label, exponent in exponents.items():
            ratios = [
                row.length_bound / row.delta**exponent for row in rows if row.direction == label
            ]
            spread = max(spread, max(ratios) / min(ratios))
        details = {
            label: self.steering_service.scaling_exponent(rows, label) for label in exponents
        }
        passed = spread <= 2.0 and all(row.converged for row in rows)
        return CheckResult("ball_box", passed, spread, 2.0, details)

    def check_abnormal(self, rng: np.random.Generator) -> CheckResult:
        """A stationary Grushin landmark on the singular line is abnormal, generic ones are not."""
        frame = build_frame("grushin")
        singular = LandmarkState.create([[0.0, 0.3]], [[0.0, 1.0]])
        residual = self.hamiltonian_service.abnormal_residual(
            frame, self.hamiltonian_service.stationary_trajectory(singular)
        )
        spec = KernelSpec.constrained(1.0, "grushin")
        smallest = np.inf
        for _ in range(self.instances):
            state = LandmarkState.create(rng.normal(size=(1, 2)), rng.normal(size=(1, 2)))
            trajectory = self.integrator_service.geodesic(spec, state, 1.0, 100)
            smallest = min(
                smallest, self.hamiltonian_service.abnormal_residual(frame, trajectory.states)
            )
        passed = residual <= 1e-12 and smallest > 1e-3
        details = {"singular": residual, "smallest_regular": float(smallest)}
        return CheckResult("abnormal", passed, residual, 1e-12, details)

    def check_kernel_psd(self, rng: np.random.Generator) -> CheckResult:
        """Gram matrices are symmetric and positive semi-definite in every mode."""
        worst = 0.0
        for index in range(self.instances):
            spec, q, _ = self._random_instance(rng, index, count=4)
            gram = self.kernel_service.gram_matrix(spec, q)
            scale = max(1.0, float(np.max(np.abs(gram))))
            asymmetry = float(np.max(np.abs(gram - gram.T))) / scale
            negativity = max(0.0, -float(np.min(np.linalg.eigvalsh(0.5 * (gram + gram.T))))) / scale
            worst = max(worst, asymmetry, negativity)
        return self._result("kernel_psd", worst, 1e-10)

    def check_oracle(self, _rng: np.random.Generator) -> CheckResult:
        """Shooting is at least as good as the piecewise-constant direct discretization."""
        prob = match_example("crossing-pair")
        shot = self.matching_service.match(prob)
        oracle = self.matching_service.oracle(prob, settings=ORACLE_SETTINGS)
        gap = shot.report.objective - oracle.objective
        details = {"shooting": shot.report.objective, "oracle": oracle.objective}
        return CheckResult("oracle", gap <= 1e-3, gap, 1e-3, details)

    def check_lambda_monotonicity(self, _rng: np.random.Generator) -> CheckResult:
        """Endpoint mismatch does not increase with the penalty weight."""
        rows = self.matching_service.lambda_sweep(match_example("crossing-pair"), LAMBDA_SWEEP)
        mismatches = [row.endpoint_mismatch for row in rows]
        increase = max(
            [0.0] + [later - earlier for earlier, later in zip(mismatches, mismatches[1:])]
        )
        return self._result("lambda_monotonicity", increase, 1e-9, {"mismatch": mismatches})

    def check_moser(self, _rng: np.random.Generator) -> CheckResult:
        """Translation-frame Moser transport reaches its target density with conserved mass."""
        frame = build_frame("translation", 2)
        f0 = DensitySpec(modes=[DensityMode(amplitude=0.3, wavevector=[1, 0])]).grid(64, 2)
        f1 = DensitySpec().grid(64, 2)
        result = self.moser_service.moser_transport(frame, f0, f1, 32)
        details = {"max_mass_drift": result.max_mass_drift}
        passed = result.error <= 2e-3 and result.max_mass_drift <= 1e-6
        return CheckResult("moser", passed, result.error, 2e-3, details)

    @staticmethod
    def _random_instance(
        rng: np.random.Generator, index: int, count: int = 3
    ) -> Tuple[KernelSpec, np.ndarray, np.ndarray]:
        if index % 2 == 0:
            spec = KernelSpec.full(float(rng.uniform(0.5, 2.0)))
            dim = 2
        else:
            spec = KernelSpec.constrained(float(rng.uniform(0.5, 2.0)), "heisenberg")
            dim = 3
        q = rng.standard_normal((count, dim))
        p = rng.standard_normal((count, dim))
        return spec, q, p

    @staticmethod
    def _central_gradient(
        function: Callable[[np.ndarray], float], x: np.ndarray, step: float = GRADIENT_FD_STEP
    ) -> np.ndarray:
        gradient = np.zeros_like(x)
        for index in np.ndindex(*x.shape):
            offset = np.zeros_like(x)
            offset[index] = step
            gradient[index] = (function(x + offset) - function(x - offset)) / (2.0 * step)
        return gradient

    @staticmethod
    def _relative(expected: np.ndarray, actual: np.ndarray) -> float:
        scale = max(float(np.linalg.norm(expected)), np.finfo(float).tiny)
        return float(np.linalg.norm(expected - actual)) / scale

    @staticmethod
    def _result(
        name: str, residual: float, threshold: float, details: Optional[Dict[str, object]] = None
    ) -> CheckResult:
        return CheckResult(name, residual <= threshold, float(residual), threshold, details or {})
