"""Service for the reduced normal Hamiltonian on landmark phase space."""
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import inject
import numpy as np
import structlog

from srdiff.errors import DegenerateCovectorError, InvalidInputError, PreconditionError
from srdiff.models.frame import FrameField
from srdiff.models.kernel import KernelSpec
from srdiff.models.landmark import LandmarkState
from srdiff.services.kernel_service import KernelService

LOGGER = structlog.get_logger(__name__)

Rhs = Callable[[float, np.ndarray], np.ndarray]
Vjp = Callable[[float, np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]

NO_PARAMETERS = np.zeros(0)


class HamiltonianTerms(NamedTuple):
    """
    Quantities shared by the Hamiltonian and its derivatives at (q, p).

    * fields: Frame fields at the landmarks, shape (n, r, d).
    * jacobians: Frame Jacobians at the landmarks, shape (n, r, d, d).
    * diffs: Differences q_i - q_j, shape (n, n, d).
    * weights: Gaussian weights e(q_i - q_j), shape (n, n).
    * coefficients: Frame coefficients c_ik = <p_i, X_k(q_i)>, shape (n, r).
    * smoothed: Kernel-smoothed coefficients sum_j e(q_i - q_j) c_jk, shape (n, r).
    """

    fields: np.ndarray
    jacobians: np.ndarray
    diffs: np.ndarray
    weights: np.ndarray
    coefficients: np.ndarray
    smoothed: np.ndarray


class HamiltonianService:
    """A service for the landmark Hamiltonian, its symplectic gradient and velocity fields."""

    @inject.autoparams()
    def __init__(self, kernel_service: KernelService) -> None:
        """
        Initialize the service.

        :param kernel_service: Service for kernel evaluations.
        """
        self.kernel_service = kernel_service

    def hamiltonian(self, spec: KernelSpec, state: LandmarkState) -> float:
        """
        Evaluate h(q, p) = 1/2 sum_k sum_ij e(x_i - x_j) <p_i, X_k(x_i)> <p_j, X_k(x_j)>.

        :param spec: Kernel.
        :param state: Landmark state.
        :return: The Hamiltonian, half the RKHS norm of the momentum.
        """
        self._validate(state)
        return self.energy(spec, state.q, state.p)

    def energy(self, spec: KernelSpec, q: np.ndarray, p: np.ndarray) -> float:
        """Evaluate the Hamiltonian without validating the state."""
        terms = self.terms(spec, q, p)
        return 0.5 * float(np.sum(terms.coefficients * terms.smoothed))

    def symplectic_gradient(
        self, spec: KernelSpec, state: LandmarkState
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Evaluate the geodesic right-hand side (dq, dp) = (dh/dp, -dh/dq).

        :param spec: Kernel.
        :param state: Landmark state.
        :return: Velocities of the landmarks and time derivatives of the covectors.
        """
        self._validate(state)
        grad_q, grad_p = self.gradient(spec, state.q, state.p)
        return grad_p, -grad_q

    def gradient(
        self, spec: KernelSpec, q: np.ndarray, p: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Evaluate the partial derivatives (dh/dq, dh/dp) without validating the state.

        :param spec: Kernel.
        :param q: Positions, shape (n, d).
        :param p: Covectors, shape (n, d).
        :return: Both partial derivatives, each of shape (n, d).
        """
        terms = self.terms(spec, q, p)
        return self._grad_q(spec.sigma, q, p, terms), self._grad_p(terms)

    def hessian_vector_product(
        self, spec: KernelSpec, q: np.ndarray, p: np.ndarray, dq: np.ndarray, dp: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Differentiate (dh/dq, dh/dp) at (q, p) along the direction (dq, dp).

        :param spec: Kernel.
        :param q: Positions.
        :param p: Covectors.
        :param dq: Position direction.
        :param dp: Covector direction.
        :return: The Hessian of h applied to (dq, dp), split as (q part, p part).
        """
        sigma = spec.sigma
        frame = self.kernel_service.effective_frame(spec, q.shape[1])
        terms = self.terms(spec, q, p, frame)
        fields, jacobians = terms.fields, terms.jacobians
        weights, coefficients, smoothed = terms.weights, terms.coefficients, terms.smoothed

        fields_dot = np.einsum("ikab,ib->ika", jacobians, dq)
        jacobians_dot = np.einsum("ikabc,ic->ikab", frame.hessians(q), dq)
        diffs_dot = dq[:, None, :] - dq[None, :, :]
        weights_dot = -weights * np.einsum("ijd,ijd->ij", terms.diffs, diffs_dot) / sigma
        coefficients_dot = np.einsum("ika,ia->ik", fields_dot, p) + np.einsum(
            "ika,ia->ik", fields, dp
        )
        smoothed_dot = weights_dot @ coefficients + weights @ coefficients_dot

        grad_p_dot = np.einsum("ik,ika->ia", smoothed_dot, fields) + np.einsum(
            "ik,ika->ia", smoothed, fields_dot
        )

        products = coefficients @ coefficients.T
        products_dot = coefficients_dot @ coefficients.T + coefficients @ coefficients_dot.T
        pair_weights = weights * products
        pair_weights_dot = weights_dot * products + weights * products_dot
        grad_q_dot = -(
            pair_weights_dot.sum(axis=1)[:, None] * q
            + pair_weights.sum(axis=1)[:, None] * dq
            - pair_weights_dot @ q
            - pair_weights @ dq
        ) / sigma
        grad_q_dot += np.einsum("ik,ia,ikab->ib", smoothed_dot, p, jacobians)
        grad_q_dot += np.einsum("ik,ia,ikab->ib", smoothed, dp, jacobians)
        grad_q_dot += np.einsum("ik,ia,ikab->ib", smoothed, p, jacobians_dot)
        return grad_q_dot, grad_p_dot

    def field_from_momenta(
        self, spec: KernelSpec, state: LandmarkState, x: np.ndarray
    ) -> np.ndarray:
        """
        Evaluate the velocity field X(x) = sum_j K(x, x_j)p_j reconstructed from the momenta.

        :param spec: Kernel.
        :param state: Landmark state.
        :param x: Position of shape (d,) or positions of shape (m, d).
        :return: Velocities with the shape of x.
        """
        x = np.asarray(x, dtype=float)
        points = np.atleast_2d(x)
        frame = self.kernel_service.effective_frame(spec, state.dim)
        frame.check_position(points)
        terms = self.terms(spec, state.q, state.p, frame)
        weights = self.kernel_service.gaussian_matrix(points, state.q, spec.sigma)
        velocity = np.einsum("mk,mkd->md", weights @ terms.coefficients, frame.fields(points))
        return velocity.reshape(x.shape)

    def field_jacobian(self, spec: KernelSpec, state: LandmarkState, x: np.ndarray) -> np.ndarray:
        """
        Evaluate the spatial Jacobian DX(x) of the reconstructed velocity field.

        :param spec: Kernel.
        :param state: Landmark state.
        :param x: Position of shape (d,) or positions of shape (m, d).
        :return: Jacobians of shape (d, d) or (m, d, d), [a, b] = dX^a / dx_b.
        """
        x = np.asarray(x, dtype=float)
        points = np.atleast_2d(x)
        frame = self.kernel_service.effective_frame(spec, state.dim)
        frame.check_position(points)
        terms = self.terms(spec, state.q, state.p, frame)
        weights = self.kernel_service.gaussian_matrix(points, state.q, spec.sigma)
        diffs = points[:, None, :] - state.q[None, :, :]
        strengths = weights @ terms.coefficients
        strength_gradients = (
            -np.einsum("mj,mjb,jk->mkb", weights, diffs, terms.coefficients) / spec.sigma
        )
        jacobian = np.einsum("mk,mkab->mab", strengths, frame.jacobians(points)) + np.einsum(
            "mka,mkb->mab", frame.fields(points), strength_gradients
        )
        return jacobian.reshape(x.shape + (state.dim,))

    def geodesic_rhs(self, spec: KernelSpec, count: int, dim: int) -> Rhs:
        """
        Build the right-hand side of the landmark geodesic equations on flat (q, p) vectors.

        :param spec: Kernel.
        :param count: Number of landmarks.
        :param dim: Ambient dimension.
        :return: Right-hand side t, y -> (dh/dp, -dh/dq).
        """
        frame = self.kernel_service.effective_frame(spec, dim)
        size = count * dim

        def rhs(_t: float, values: np.ndarray) -> np.ndarray:
            q = values[:size].reshape(count, dim)
            p = values[size : 2 * size].reshape(count, dim)
            terms = self.terms(spec, q, p, frame)
            grad_q = self._grad_q(spec.sigma, q, p, terms)
            return np.concatenate([self._grad_p(terms).ravel(), -grad_q.ravel()])

        return rhs

    def geodesic_vjp(self, spec: KernelSpec, count: int, dim: int) -> Vjp:
        """
        Build the vector-Jacobian product of the geodesic right-hand side.

        The Jacobian of (dh/dp, -dh/dq) is the symplectic matrix times the Hessian of h, so the
        product with a cotangent (a, b) is the Hessian applied to (-b, a).

        :param spec: Kernel.
        :param count: Number of landmarks.
        :param dim: Ambient dimension.
        :return: Function t, y, cotangent -> (state cotangent, empty parameter cotangent).
        """
        size = count * dim

        def vjp(
            _t: float, values: np.ndarray, cotangent: np.ndarray
        ) -> Tuple[np.ndarray, np.ndarray]:
            q = values[:size].reshape(count, dim)
            p = values[size : 2 * size].reshape(count, dim)
            a = cotangent[:size].reshape(count, dim)
            b = cotangent[size : 2 * size].reshape(count, dim)
            grad_q, grad_p = self.hessian_vector_product(spec, q, p, -b, a)
            return np.concatenate([grad_q.ravel(), grad_p.ravel()]), NO_PARAMETERS

        return vjp

    @staticmethod
    def abnormal_residual(frame: FrameField, trajectory: Sequence[LandmarkState]) -> float:
        """
        Measure how far a trajectory is from annihilating the distribution.

        :param frame: Frame spanning the distribution.
        :param trajectory: Landmark states along a candidate curve.
        :return: max |<p_i(t), X_k(x_i(t))>| divided by max |p_i(t)|.
        """
        if len(trajectory) == 0:
            raise PreconditionError("The abnormal check needs at least one state.")
        positions = np.stack([state.q for state in trajectory])
        covectors = np.stack([state.p for state in trajectory])
        scale = float(np.max(np.linalg.norm(covectors, axis=-1)))
        if scale == 0.0:
            raise DegenerateCovectorError("A singular covector must not vanish identically.")
        pairings = np.einsum("tnkd,tnd->tnk", frame.fields(positions), covectors)
        return float(np.max(np.abs(pairings))) / scale

    @staticmethod
    def stationary_trajectory(state: LandmarkState, samples: int = 2) -> List[LandmarkState]:
        """
        Build the constant candidate curve t -> state on [0, 1].

        :param state: State held fixed.
        :param samples: Number of time samples.
        :return: Constant trajectory.
        """
        if samples < 1:
            raise InvalidInputError("A trajectory needs at least one sample.")
        return [LandmarkState(state.q, state.p, float(t)) for t in np.linspace(0.0, 1.0, samples)]

    @staticmethod
    def frame_hamiltonian(frame: FrameField, x: np.ndarray, a: np.ndarray) -> float:
        """
        Evaluate the normal Hamiltonian 1/2 sum_j a(X_j(x))^2 of the frame itself.

        :param frame: Frame.
        :param x: Position.
        :param a: Covector at x.
        :return: Hamiltonian value.
        """
        coefficients = frame.fields(x) @ np.asarray(a, dtype=float)
        return 0.5 * float(coefficients @ coefficients)

    @staticmethod
    def frame_geodesic_rhs(frame: FrameField) -> Rhs:
        """
        Build the normal geodesic equations of the frame on flat (x, a) vectors.

        x' = sum_j a(X_j(x)) X_j(x) and a' = -sum_j a(X_j(x)) a(DX_j(x)).

        :param frame: Frame.
        :return: Right-hand side.
        """
        dim = frame.dim

        def rhs(_t: float, values: np.ndarray) -> np.ndarray:
            x, a = values[:dim], values[dim:]
            fields = frame.fields(x)
            coefficients = fields @ a
            velocity = coefficients @ fields
            force = -np.einsum("k,a,kab->b", coefficients, a, frame.jacobians(x))
            return np.concatenate([velocity, force])

        return rhs

    def terms(
        self, spec: KernelSpec, q: np.ndarray, p: np.ndarray, frame: Optional[FrameField] = None
    ) -> HamiltonianTerms:
        """
        Evaluate the quantities shared by the Hamiltonian and its derivatives.

        :param spec: Kernel.
        :param q: Positions.
        :param p: Covectors.
        :param frame: Effective frame of the kernel, looked up when not given.
        :return: Shared terms.
        """
        if frame is None:
            frame = self.kernel_service.effective_frame(spec, q.shape[1])
        fields = frame.fields(q)
        weights = self.kernel_service.gaussian_matrix(q, q, spec.sigma)
        coefficients = np.einsum("ikd,id->ik", fields, p)
        return HamiltonianTerms(
            fields=fields,
            jacobians=frame.jacobians(q),
            diffs=q[:, None, :] - q[None, :, :],
            weights=weights,
            coefficients=coefficients,
            smoothed=weights @ coefficients,
        )

    @staticmethod
    def _grad_p(terms: HamiltonianTerms) -> np.ndarray:
        return np.einsum("ik,ikd->id", terms.smoothed, terms.fields)

    @staticmethod
    def _grad_q(sigma: float, q: np.ndarray, p: np.ndarray, terms: HamiltonianTerms) -> np.ndarray:
        pair_weights = terms.weights * (terms.coefficients @ terms.coefficients.T)
        grad_q = -(pair_weights.sum(axis=1)[:, None] * q - pair_weights @ q) / sigma
        return grad_q + np.einsum("ik,ia,ikab->ib", terms.smoothed, p, terms.jacobians)

    def _validate(self, state: LandmarkState) -> None:
        self.kernel_service.ensure_finite(state.q, state.p)
        self.kernel_service.ensure_distinct(state.q)
