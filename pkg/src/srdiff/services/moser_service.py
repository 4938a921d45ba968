"""Service for sub-Laplacians on periodic grids and horizontal Moser transport."""
from typing import List, Optional, Tuple

import inject
import numpy as np
import structlog
from scipy import ndimage
from scipy.sparse.linalg import LinearOperator, cg

from srdiff.errors import (
    ConfigurationError,
    IncompatibleRhsError,
    InvalidInputError,
    NonConvergedError,
    OrientationError,
    PreconditionError,
)
from srdiff.models.frame import Domain, FrameField, TranslationFrame
from srdiff.models.grid import GridField
from srdiff.models.moser import MoserResult, MoserStep
from srdiff.options import SrdiffOptions
from srdiff.services.integrator_service import IntegratorService

LOGGER = structlog.get_logger(__name__)

COMPATIBILITY_TOL = 1e-8
SPLINE_ORDER = 3


class MoserService:
    """A service for horizontal gradients, weighted sub-Laplacians and Moser transport on T^d."""

    @inject.autoparams()
    def __init__(self, integrator_service: IntegratorService, options: SrdiffOptions) -> None:
        """
        Initialize the service.

        :param integrator_service: Service for RK4 integration.
        :param options: Runtime options.
        """
        self.integrator_service = integrator_service
        self.numerics = options.numerics

    def horizontal_gradient(self, frame: FrameField, F: GridField) -> GridField:
        """
        Evaluate sum_i (L_Xi F) X_i at the grid nodes, with centered differences.

        :param frame: Periodic frame on the torus of the grid.
        :param F: Scalar field.
        :return: Vector field of shape (N,)*d + (d,).
        """
        self._check_grid(frame, F)
        fields = self._node_fields(frame, F)
        derivatives = self._directional_derivatives(fields, F.values, F.spacing)
        values = np.einsum("k...,...kd->...d", derivatives, fields)
        return F._replace(values=values, positions=None, weights=None)

    def sub_laplacian_apply(self, frame: FrameField, density: GridField, F: GridField) -> GridField:
        """
        Apply the density-weighted sub-Laplacian div_f(grad_SR F).

        The divergence of f grad_SR F averages the forward and backward difference stencils, so
        the operator is symmetric for sum u v f and negative semi-definite with constants in its
        kernel.

        :param frame: Periodic frame on the torus of the grid.
        :param density: Strictly positive density f.
        :param F: Scalar field.
        :return: Scalar field Delta_f F.
        """
        self._check_grid(frame, F)
        f = self._check_density(density, F)
        fields = self._node_fields(frame, F)
        values = self._weighted_laplacian(fields, f, F.values, F.spacing) / f
        return F._replace(values=values, positions=None, weights=None)

    def solve_sub_laplacian(
        self,
        frame: FrameField,
        density: GridField,
        rhs: GridField,
        tol: Optional[float] = None,
        x0: Optional[GridField] = None,
    ) -> GridField:
        """
        Solve Delta_f F = rhs for the potential with zero f-weighted mean.

        :param frame: Periodic bracket-generating frame on the torus of the grid.
        :param density: Strictly positive density f.
        :param rhs: Right-hand side with zero f-weighted mean.
        :param tol: Relative residual, `cg_tol` by default.
        :param x0: Starting guess.
        :return: The potential F.
        """
        solution, _ = self._solve(frame, density, rhs, tol, x0)
        return solution

    def moser_transport(
        self,
        frame: FrameField,
        f0: GridField,
        f1: GridField,
        n_time: int,
        horizontal: bool = True,
    ) -> MoserResult:
        """
        Transport f0 to f1 along the linear density path with sub-Riemannian gradient fields.

        At the midpoint density f of every time step the potential solves Delta_f F = -(f1 - f0)/f,
        and the grid particles and their Jacobians follow grad_SR F for 1/n_time with
        `moser_substeps` RK4 substeps.

        :param frame: Periodic frame on the torus of the grids.
        :param f0: Initial density.
        :param f1: Final density of equal mass.
        :param n_time: Number of time steps.
        :param horizontal: Use the frame when set, the translation frame otherwise.
        :return: Particles, achieved density, transport error and per-step diagnostics.
        """
        if n_time < 1:
            raise InvalidInputError("Moser transport needs at least one time step.")
        self._check_grid(frame, f0)
        self._check_density(f0, f0)
        self._check_density(f1, f0)
        mass = f0.mass()
        if abs(mass - f1.mass()) > self.numerics.mass_rel_tol * mass:
            raise PreconditionError(
                f"Densities carry different masses {mass:.17g} and {f1.mass():.17g}."
            )
        if not horizontal:
            frame = TranslationFrame(f0.dim)

        dim = f0.dim
        nodes = f0.nodes()
        count = len(nodes)
        positions = nodes.copy()
        jacobians = np.broadcast_to(np.eye(dim), (count, dim, dim)).copy()
        node_fields = self._node_fields(frame, f0)
        coefficients0 = self._spline(f0.values)
        coefficients1 = self._spline(f1.values)
        dt = 1.0 / n_time
        substeps = self.numerics.moser_substeps

        history = [positions.copy()]
        steps: List[MoserStep] = []
        potential: Optional[GridField] = None
        for step in range(n_time):
            t_mid = (step + 0.5) * dt
            density = f0._replace(values=(1.0 - t_mid) * f0.values + t_mid * f1.values)
            rhs = f0._replace(values=-(f1.values - f0.values) / density.values)
            potential, iterations = self._solve(frame, density, rhs, None, potential)
            derivatives = self._directional_derivatives(
                node_fields, potential.values, potential.spacing
            )
            value_splines = [self._spline(c) for c in derivatives]
            gradient_splines = [
                [self._spline(g) for g in self._spectral_gradient(c, f0.extent)]
                for c in derivatives
            ]

            def rhs_fn(_t: float, values: np.ndarray) -> np.ndarray:
                y = values[: count * dim].reshape(count, dim)
                J = values[count * dim :].reshape(count, dim, dim)
                coords = self._coordinates(f0, y)
                c = np.stack([self._interpolate(s, coords) for s in value_splines])
                grad_c = np.stack(
                    [
                        np.stack([self._interpolate(s, coords) for s in g], axis=-1)
                        for g in gradient_splines
                    ]
                )
                fields = frame.fields(y)
                velocity = np.einsum("kp,pkd->pd", c, fields)
                velocity_jacobian = np.einsum("pka,kpb->pab", fields, grad_c) + np.einsum(
                    "kp,pkab->pab", c, frame.jacobians(y)
                )
                return np.concatenate([velocity.ravel(), (velocity_jacobian @ J).ravel()])

            values = np.concatenate([positions.ravel(), jacobians.ravel()])
            for substep in range(substeps):
                values = self.integrator_service.rk4_step(
                    rhs_fn, step * dt + substep * dt / substeps, values, dt / substeps, step
                )
            positions = values[: count * dim].reshape(count, dim)
            jacobians = values[count * dim :].reshape(count, dim, dim)
            history.append(positions.copy())

            t = (step + 1) * dt
            determinants = np.linalg.det(jacobians)
            coords = self._coordinates(f0, positions)
            path_density = (1.0 - t) * self._interpolate(
                coefficients0, coords
            ) + t * self._interpolate(coefficients1, coords)
            pulled_back = path_density * determinants
            record = MoserStep(
                time=t,
                mass_drift=abs(float(np.sum(pulled_back)) * f0.cell_volume - mass) / mass,
                transport_error=float(
                    np.sum(np.abs(f0.flat_values() - pulled_back)) * f0.cell_volume / mass
                ),
                cg_iterations=iterations,
            )
            steps.append(record)
            LOGGER.debug("Moser step", **record._asdict())

        determinants = np.linalg.det(jacobians)
        if np.any(determinants <= 0.0):
            raise OrientationError(
                f"Moser flow Jacobian determinant reached {np.min(determinants):.3e}."
            )
        achieved = f0._replace(
            values=(f0.flat_values() / determinants).reshape(f0.values.shape),
            positions=positions.copy(),
            weights=determinants * f0.cell_volume,
        )
        error = steps[-1].transport_error
        LOGGER.info(
            "Transported density",
            frame=frame.frame_id,
            n_time=n_time,
            resolution=f0.resolution,
            error=error,
            max_mass_drift=max(s.mass_drift for s in steps),
        )
        return MoserResult(
            frame_id=frame.frame_id,
            horizontal=horizontal,
            particles=np.stack(history),
            determinants=determinants,
            achieved=achieved,
            error=error,
            steps=steps,
        )

    def _solve(
        self,
        frame: FrameField,
        density: GridField,
        rhs: GridField,
        tol: Optional[float],
        x0: Optional[GridField],
    ) -> Tuple[GridField, int]:
        self._check_grid(frame, rhs)
        f = self._check_density(density, rhs)
        if not np.all(np.isfinite(rhs.values)):
            raise InvalidInputError("Right-hand side must be finite.")
        scale = max(1.0, float(np.max(np.abs(rhs.values))))
        mean = float(np.sum(rhs.values * f) / np.sum(f))
        if abs(mean) > COMPATIBILITY_TOL * scale:
            raise IncompatibleRhsError(
                f"Right-hand side has f-weighted mean {mean:.3e}; the operator only reaches "
                "mean-zero fields."
            )
        if not np.any(rhs.values):
            return rhs._replace(values=np.zeros_like(rhs.values)), 0

        tol = tol or self.numerics.cg_tol
        fields = self._node_fields(frame, rhs)
        shape = rhs.values.shape
        size = rhs.node_count

        def matvec(flat: np.ndarray) -> np.ndarray:
            u = np.asarray(flat).reshape(shape)
            return -self._weighted_laplacian(fields, f, u, rhs.spacing).ravel()

        operator = LinearOperator((size, size), matvec=matvec, dtype=float)
        b = -(f * rhs.values).ravel()
        b = b - np.mean(b)
        iterations = 0

        def count(_xk: np.ndarray) -> None:
            nonlocal iterations
            iterations += 1

        solution, info = cg(
            operator,
            b,
            x0=None if x0 is None else x0.values.ravel(),
            rtol=tol * float(np.min(f) / np.max(f)),
            atol=0.0,
            maxiter=10 * size,
            callback=count,
        )
        if info > 0:
            raise NonConvergedError(
                f"Conjugate gradients stopped after {info} iterations above tolerance {tol}."
            )
        values = solution.reshape(shape)
        values = values - float(np.sum(values * f) / np.sum(f))
        LOGGER.debug("Solved sub-Laplacian", iterations=iterations, resolution=rhs.resolution)
        return rhs._replace(values=values, positions=None, weights=None), iterations

    @staticmethod
    def _weighted_laplacian(
        fields: np.ndarray, f: np.ndarray, u: np.ndarray, spacing: float
    ) -> np.ndarray:
        # f Delta_f u = 1/2 sum_i sum_b [D_b^-(X_i^b f A_i^+ u) + D_b^+(X_i^b f A_i^- u)]
        dim = u.ndim
        result = np.zeros_like(u)
        for i in range(fields.shape[-2]):
            components = [fields[..., i, b] for b in range(dim)]
            forward = sum(
                X_b * (np.roll(u, -1, axis=b) - u) for b, X_b in enumerate(components)
            ) / spacing
            backward = sum(
                X_b * (u - np.roll(u, 1, axis=b)) for b, X_b in enumerate(components)
            ) / spacing
            for b, X_b in enumerate(components):
                flux_forward = X_b * f * forward
                flux_backward = X_b * f * backward
                result += 0.5 * (flux_forward - np.roll(flux_forward, 1, axis=b)) / spacing
                result += 0.5 * (np.roll(flux_backward, -1, axis=b) - flux_backward) / spacing
        return result

    @staticmethod
    def _directional_derivatives(
        fields: np.ndarray, values: np.ndarray, spacing: float
    ) -> np.ndarray:
        dim = values.ndim
        gradient = np.stack(
            [
                (np.roll(values, -1, axis=b) - np.roll(values, 1, axis=b)) / (2.0 * spacing)
                for b in range(dim)
            ],
            axis=-1,
        )
        return np.moveaxis(np.einsum("...kd,...d->...k", fields, gradient), -1, 0)

    @staticmethod
    def _spectral_gradient(values: np.ndarray, extent: float) -> List[np.ndarray]:
        resolution = values.shape[0]
        wavenumbers = 2.0 * np.pi * np.fft.fftfreq(resolution, d=extent / resolution)
        if resolution % 2 == 0:
            wavenumbers[resolution // 2] = 0.0
        transform = np.fft.fftn(values)
        gradient = []
        for axis in range(values.ndim):
            shape = [1] * values.ndim
            shape[axis] = resolution
            multiplier = 1j * wavenumbers.reshape(shape)
            gradient.append(np.real(np.fft.ifftn(multiplier * transform)))
        return gradient

    @staticmethod
    def _spline(values: np.ndarray) -> np.ndarray:
        return ndimage.spline_filter(values, order=SPLINE_ORDER, mode="grid-wrap")

    @staticmethod
    def _interpolate(coefficients: np.ndarray, coordinates: np.ndarray) -> np.ndarray:
        return ndimage.map_coordinates(
            coefficients, coordinates, order=SPLINE_ORDER, mode="grid-wrap", prefilter=False
        )

    @staticmethod
    def _coordinates(grid: GridField, positions: np.ndarray) -> np.ndarray:
        return ((positions - grid.lower) / grid.spacing).T

    @staticmethod
    def _node_fields(frame: FrameField, grid: GridField) -> np.ndarray:
        nodes = grid.nodes()
        shape = (grid.resolution,) * grid.dim
        return frame.fields(nodes).reshape(shape + (frame.count, frame.dim))

    @staticmethod
    def _check_grid(frame: FrameField, grid: GridField) -> None:
        if grid.domain != Domain.TORUS or Domain.TORUS not in frame.domains:
            raise ConfigurationError(
                f"Frame '{frame.frame_id}' is not a frame on the torus of the grid."
            )
        if grid.dim != frame.dim:
            raise ConfigurationError(
                f"Frame '{frame.frame_id}' acts in dimension {frame.dim}, the grid in {grid.dim}."
            )
        if not grid.is_scalar:
            raise InvalidInputError("Sub-Laplacian fields must be scalar.")

    @staticmethod
    def _check_density(density: GridField, like: GridField) -> np.ndarray:
        if density.values.shape != like.values.shape:
            raise InvalidInputError(
                f"Density of shape {density.values.shape} does not match {like.values.shape}."
            )
        if not np.all(np.isfinite(density.values)) or np.any(density.values <= 0.0):
            raise InvalidInputError("Densities must be finite and strictly positive.")
        return density.values
