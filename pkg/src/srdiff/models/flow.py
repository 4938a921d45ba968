"""Model of particle flows driven by landmark geodesics."""
from typing import Any, Dict, List, NamedTuple, Tuple

import numpy as np

from srdiff.models.kernel import KernelSpec
from srdiff.models.trajectory import Trajectory


class FlowRecord(NamedTuple):
    """
    Time samples of a diffeomorphism flow seen through passive particles.

    * spec: Kernel of the driving geodesic.
    * trajectory: Augmented trajectory of (q, p, y, J).
    * particles: Particle positions phi(t, y_0), shape (samples, P, d).
    * jacobians: Particle Jacobians D phi(t, y_0), shape (samples, P, d, d).
    * landmark_seeds: Index of the seed placed on each landmark base point, by landmark index.
    """

    spec: KernelSpec
    trajectory: Trajectory
    particles: np.ndarray
    jacobians: np.ndarray
    landmark_seeds: Dict[int, int]

    @property
    def times(self) -> np.ndarray:
        """Sample times."""
        return self.trajectory.times

    @property
    def seeds(self) -> np.ndarray:
        """Initial particle positions."""
        return self.particles[0]

    def determinants(self) -> np.ndarray:
        """Jacobian determinants of every particle at every sample, shape (samples, P)."""
        return np.linalg.det(self.jacobians)

    def determinant_range(self) -> Tuple[float, float]:
        """Smallest and largest Jacobian determinant over the record."""
        determinants = self.determinants()
        return float(np.min(determinants)), float(np.max(determinants))

    def particle_csv_rows(self) -> Tuple[List[str], List[List[float]]]:
        """
        Tabulate particle paths as rows of t, particle id and position.

        :return: Header and rows.
        """
        dim = self.particles.shape[2]
        header = ["t", "particle"] + [f"x{a}" for a in range(dim)]
        rows = []
        for index, t in enumerate(self.times):
            for particle, position in enumerate(self.particles[index]):
                rows.append([float(t), float(particle)] + position.tolist())
        return header, rows

    def summary(self) -> Dict[str, Any]:
        """Summarize the record for JSON reports."""
        low, high = self.determinant_range()
        return {
            "samples": len(self.times),
            "particles": int(self.particles.shape[1]),
            "determinant_min": low,
            "determinant_max": high,
        }
