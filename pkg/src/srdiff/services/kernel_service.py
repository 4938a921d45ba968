"""Service for Gaussian reproducing kernels evaluated on Dirac momenta."""
from typing import Any

import inject
import numpy as np
import structlog
from scipy.spatial.distance import cdist, pdist

from srdiff.errors import ConfigurationError, DegenerateConfigurationError, InvalidInputError
from srdiff.models.frame import FrameField
from srdiff.models.kernel import DiracMomentum, KernelSpec
from srdiff.options import SrdiffOptions
from srdiff.services.frame_service import FrameService

LOGGER = structlog.get_logger(__name__)


class KernelService:
    """A service for kernel evaluations, Gram matrices and RKHS norms."""

    @inject.autoparams()
    def __init__(self, frame_service: FrameService, options: SrdiffOptions) -> None:
        """
        Initialize the service.

        :param frame_service: Service for looking up frames.
        :param options: Runtime options.
        """
        self.frame_service = frame_service
        self.numerics = options.numerics

    @staticmethod
    def ensure_finite(*arrays: Any) -> None:
        """Raise an invalid-input error if any of the given arrays holds a non-finite value."""
        for array in arrays:
            if not np.all(np.isfinite(np.asarray(array, dtype=float))):
                raise InvalidInputError("Inputs must be finite.")

    def ensure_distinct(self, points: np.ndarray) -> None:
        """
        Check the landmark condition i != j => x_i != x_j.

        Two points coincide when their distance is below `duplicate_rel_tol * (1 + max |x|)`.

        :param points: Points of shape (n, d).
        """
        points = np.atleast_2d(points)
        if points.shape[0] < 2:
            return
        threshold = self.numerics.duplicate_rel_tol * (1.0 + np.max(np.abs(points)))
        if np.min(pdist(points)) < threshold:
            raise DegenerateConfigurationError("Landmark positions must be pairwise distinct.")

    def effective_frame(self, spec: KernelSpec, dim: int) -> FrameField:
        """
        Get the frame a kernel constrains velocities to.

        A full-mode kernel behaves as the kernel constrained to the translation frame.

        :param spec: Kernel.
        :param dim: Ambient dimension.
        :return: The frame.
        """
        frame_id = spec.frame_id or "translation"
        frame = self.frame_service.resolve(frame_id, dim)
        if frame.count < 1:
            raise ConfigurationError(f"Frame '{frame_id}' has no fields.")
        return frame

    @staticmethod
    def gaussian_scalar(x: Any, y: Any, sigma: float) -> float:
        """
        Evaluate e(x - y) = exp(-|x - y|^2 / (2 sigma)).

        :param x: First position.
        :param y: Second position.
        :param sigma: Kernel width.
        :return: Kernel value in (0, 1].
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        KernelService.ensure_finite(x, y, sigma)
        if sigma <= 0.0:
            raise InvalidInputError("sigma must be positive.")
        return float(np.exp(-np.sum((x - y) ** 2) / (2.0 * sigma)))

    @staticmethod
    def gaussian_matrix(x: np.ndarray, y: np.ndarray, sigma: float) -> np.ndarray:
        """
        Evaluate the Gaussian between every pair of rows.

        :param x: Positions of shape (m, d).
        :param y: Positions of shape (n, d).
        :param sigma: Kernel width.
        :return: Matrix of shape (m, n).
        """
        return np.exp(-cdist(np.atleast_2d(x), np.atleast_2d(y), "sqeuclidean") / (2.0 * sigma))

    def kernel_block(self, spec: KernelSpec, x: Any, y: Any) -> np.ndarray:
        """
        Build the d x d matrix of p -> K(x, y)p.

        :param spec: Kernel.
        :param x: Evaluation position.
        :param y: Base position of the covector.
        :return: The matrix e(x - y) X(x)^T X(y).
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self.ensure_finite(x, y)
        weight = self.gaussian_scalar(x, y, spec.sigma)
        if spec.frame_id is None:
            return weight * np.eye(x.shape[-1])
        frame = self.effective_frame(spec, x.shape[-1])
        return weight * frame.fields(x).T @ frame.fields(y)

    def kernel_apply(self, spec: KernelSpec, x: Any, y: Any, p: Any) -> np.ndarray:
        """
        Apply the kernel to a covector.

        :param spec: Kernel.
        :param x: Evaluation position.
        :param y: Base position of the covector.
        :param p: Covector at y.
        :return: K(x, y)p.
        """
        p = np.asarray(p, dtype=float)
        self.ensure_finite(p)
        block = self.kernel_block(spec, x, y)
        if p.shape != block.shape[-1:]:
            raise InvalidInputError(f"Covector of shape {p.shape} does not act on R^{len(block)}.")
        return block @ p

    def gram_matrix(self, spec: KernelSpec, points: Any) -> np.ndarray:
        """
        Assemble the (nd) x (nd) matrix whose block (i, j) is K(x_i, x_j), row-major over (i, j).

        :param spec: Kernel.
        :param points: Points of shape (n, d).
        :return: The symmetric positive semi-definite Gram matrix.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        self.ensure_finite(points)
        self.ensure_distinct(points)
        n, dim = points.shape
        weights = self.gaussian_matrix(points, points, spec.sigma)
        if spec.frame_id is None:
            return np.kron(weights, np.eye(dim))
        fields = self.effective_frame(spec, dim).fields(points)
        gram = np.einsum("ij,ika,jkb->iajb", weights, fields, fields)
        return gram.reshape(n * dim, n * dim)

    def rkhs_norm_sq(self, spec: KernelSpec, mom: DiracMomentum) -> float:
        """
        Evaluate P(KP) = sum_ij p_i K(x_i, x_j) p_j, twice the Hamiltonian.

        :param spec: Kernel.
        :param mom: Dirac momentum.
        :return: Nonnegative squared norm of the velocity field of the momentum.
        """
        self.ensure_distinct(mom.points)
        weights = self.gaussian_matrix(mom.points, mom.points, spec.sigma)
        frame = self.effective_frame(spec, mom.dim)
        coefficients = np.einsum("ikd,id->ik", frame.fields(mom.points), mom.covectors)
        return float(np.sum(weights * (coefficients @ coefficients.T)))
