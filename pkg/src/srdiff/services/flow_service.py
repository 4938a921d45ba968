"""Service for diffeomorphism flows, momentum pushforward and density transport."""
from itertools import product
from typing import Dict, Optional

import inject
import numpy as np
import structlog

from srdiff.errors import ConfigurationError, InvalidInputError, OrientationError, PreconditionError
from srdiff.models.flow import FlowRecord
from srdiff.models.frame import Domain
from srdiff.models.grid import GridField
from srdiff.models.kernel import KernelSpec
from srdiff.models.landmark import LandmarkState
from srdiff.models.trajectory import StateLayout
from srdiff.options import SrdiffOptions
from srdiff.services.hamiltonian_service import HamiltonianService
from srdiff.services.integrator_service import IntegratorService

LOGGER = structlog.get_logger(__name__)

SEED_MATCH_TOL = 1e-12


class FlowService:
    """A service for advecting particles and Jacobians along landmark geodesics."""

    @inject.autoparams()
    def __init__(
        self,
        hamiltonian_service: HamiltonianService,
        integrator_service: IntegratorService,
        options: SrdiffOptions,
    ) -> None:
        """
        Initialize the service.

        :param hamiltonian_service: Service for landmark Hamiltonian dynamics.
        :param integrator_service: Service for RK4 integration.
        :param options: Runtime options.
        """
        self.hamiltonian_service = hamiltonian_service
        self.integrator_service = integrator_service
        self.numerics = options.numerics

    def advect(
        self,
        spec: KernelSpec,
        state0: LandmarkState,
        seeds: np.ndarray,
        T: float = 1.0,
        steps: Optional[int] = None,
        record_every: int = 1,
    ) -> FlowRecord:
        """
        Integrate the landmark geodesic together with passive particles and their Jacobians.

        Particles follow y' = X(t, y) and Jacobians follow J' = DX(t, y) J with J(0) = Id, where
        X is the velocity field reconstructed from the momenta.

        :param spec: Kernel.
        :param state0: Initial landmark state.
        :param seeds: Initial particle positions, shape (P, d).
        :param T: Final time.
        :param steps: Number of RK4 steps, `steps_per_unit_time` per unit time by default.
        :param record_every: Keep one sample every this many steps.
        :return: The flow record.
        """
        self.hamiltonian_service.hamiltonian(spec, state0)
        seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
        if seeds.shape[1] != state0.dim or not np.all(np.isfinite(seeds)):
            raise InvalidInputError(f"Seeds must be finite points of R^{state0.dim}.")
        layout = StateLayout(state0.count, state0.dim, seeds.shape[0], jacobians=True)

        def rhs(_t: float, values: np.ndarray) -> np.ndarray:
            q, p, y, jacobians = layout.split(values)
            grad_q, grad_p = self.hamiltonian_service.gradient(spec, q, p)
            state = LandmarkState(q, p)
            velocity = self.hamiltonian_service.field_from_momenta(spec, state, y)
            field_jacobian = self.hamiltonian_service.field_jacobian(spec, state, y)
            return layout.join(grad_p, -grad_q, velocity, field_jacobian @ jacobians)

        identities = np.broadcast_to(np.eye(state0.dim), (seeds.shape[0], state0.dim, state0.dim))
        values0 = layout.join(state0.q, state0.p, seeds, identities)
        trajectory = self.integrator_service.integrate(
            rhs,
            values0,
            T,
            steps or self.integrator_service.steps_for(T),
            monitors=self.integrator_service.landmark_monitors(spec, layout),
            layout=layout,
            record_every=record_every,
        )
        split = [layout.split(values) for values in trajectory.values]
        particles = np.stack([y for _, _, y, _ in split])
        jacobians = np.stack([j for _, _, _, j in split])
        record = FlowRecord(
            spec=spec,
            trajectory=trajectory,
            particles=particles,
            jacobians=jacobians,
            landmark_seeds=self.match_landmark_seeds(state0.q, seeds),
        )
        LOGGER.debug("Advected particles", **record.summary())
        return record

    def match_landmark_seeds(self, q: np.ndarray, seeds: np.ndarray) -> Dict[int, int]:
        """
        Find the seeds placed on landmark base points.

        :param q: Landmark positions.
        :param seeds: Particle seeds.
        :return: Seed index by landmark index, for the landmarks that have one.
        """
        tolerance = self.numerics.duplicate_rel_tol * (1.0 + float(np.max(np.abs(q))))
        matches = {}
        for landmark, position in enumerate(q):
            distances = np.linalg.norm(seeds - position, axis=1)
            closest = int(np.argmin(distances))
            if distances[closest] <= tolerance:
                matches[landmark] = closest
        return matches

    @staticmethod
    def pushforward_residual(record: FlowRecord) -> float:
        """
        Check the Dirac pushforward identity p_i(t) D phi(t, x_i(0)) = p_i(0).

        :param record: Flow record whose seeds include every landmark base point.
        :return: max over samples and landmarks of |p_i(t) J_i(t) - p_i(0)| / |p_i(0)|.
        """
        layout = record.trajectory.layout
        if layout is None:
            raise ConfigurationError("Flow record has no landmark layout.")
        missing = [i for i in range(layout.n_landmarks) if i not in record.landmark_seeds]
        if missing:
            raise ConfigurationError(f"No Jacobian follows the landmarks {missing}.")
        covectors = np.stack([layout.split(values)[1] for values in record.trajectory.values])
        seeds = [record.landmark_seeds[i] for i in range(layout.n_landmarks)]
        jacobians = record.jacobians[:, seeds]
        pulled_back = np.einsum("tia,tiab->tib", covectors, jacobians)
        scales = np.maximum(np.linalg.norm(covectors[0], axis=1), np.finfo(float).tiny)
        residuals = np.linalg.norm(pulled_back - covectors[0], axis=2) / scales
        return float(np.max(residuals))

    def transport_density(self, record: FlowRecord, f0: GridField) -> GridField:
        """
        Push a density forward along the final flow map.

        :param record: Flow record seeded at the grid nodes of f0.
        :param f0: Initial density.
        :return: Density f0 / det D phi at the deformed nodes, with cell weights det D phi dx.
        """
        if not f0.is_scalar:
            raise InvalidInputError("Only scalar densities can be transported.")
        nodes = f0.nodes()
        seeds = record.seeds
        if seeds.shape != nodes.shape or np.max(np.abs(seeds - nodes)) > SEED_MATCH_TOL * (
            1.0 + np.max(np.abs(nodes))
        ):
            raise PreconditionError("The flow record is not seeded at the grid nodes.")
        determinants = np.linalg.det(record.jacobians[-1])
        if np.any(determinants <= 0.0):
            raise OrientationError(
                f"Flow Jacobian determinant reached {np.min(determinants):.3e}; refine the steps."
            )
        values = f0.flat_values() / determinants
        return f0._replace(
            values=values.reshape(f0.values.shape),
            positions=record.particles[-1].copy(),
            weights=determinants * f0.cell_volume,
        )

    @staticmethod
    def resample_to_grid(field: GridField) -> GridField:
        """
        Scatter a transported density back onto its undeformed grid with multilinear weights.

        Diagnostic only: the scatter smooths the density at the grid scale.

        :param field: Transported scalar density with positions and weights.
        :return: Density on the canonical nodes.
        """
        if field.positions is None or field.weights is None:
            return field
        masses = field.flat_values() * field.weights
        coordinates = (field.positions - field.lower) / field.spacing
        base = np.floor(coordinates).astype(int)
        fractions = coordinates - base
        shape = (field.resolution,) * field.dim
        scattered = np.zeros(shape)
        for corner in product((0, 1), repeat=field.dim):
            offset = np.array(corner)
            indices = base + offset
            share = np.prod(np.where(offset == 1, fractions, 1.0 - fractions), axis=1)
            if field.domain == Domain.TORUS:
                indices = np.mod(indices, field.resolution)
                keep = np.ones(len(indices), dtype=bool)
            else:
                keep = np.all((indices >= 0) & (indices < field.resolution), axis=1)
            np.add.at(scattered, tuple(indices[keep].T), masses[keep] * share[keep])
        return GridField(
            scattered / field.cell_volume,
            field.resolution,
            field.dim,
            field.domain,
            field.lower,
            field.extent,
        )
