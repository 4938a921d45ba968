"""Models of integrated trajectories."""
from __future__ import annotations

from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from srdiff.models.landmark import LandmarkState


class StateLayout(NamedTuple):
    """
    Layout of a flat state vector (q, p, y, J).

    * n_landmarks: Number of landmarks n.
    * dim: Ambient dimension d.
    * n_particles: Number of passive particles y.
    * jacobians: Whether a d x d Jacobian follows the particles.
    """

    n_landmarks: int
    dim: int
    n_particles: int = 0
    jacobians: bool = False

    @property
    def size(self) -> int:
        """Length of the flat vector."""
        jacobian_size = self.n_particles * self.dim * self.dim if self.jacobians else 0
        return (2 * self.n_landmarks + self.n_particles) * self.dim + jacobian_size

    def split(
        self, values: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, Optional[np.ndarray]]:
        """
        Split a flat vector into its blocks.

        :param values: Flat vector.
        :return: Views q (n, d), p (n, d), y (P, d) and J (P, d, d) when present.
        """
        n, d, m = self.n_landmarks, self.dim, self.n_particles
        q = values[: n * d].reshape(n, d)
        p = values[n * d : 2 * n * d].reshape(n, d)
        start = 2 * n * d
        y = values[start : start + m * d].reshape(m, d)
        jacobians = None
        if self.jacobians:
            jacobians = values[start + m * d : self.size].reshape(m, d, d)
        return q, p, y, jacobians

    def join(
        self,
        q: np.ndarray,
        p: np.ndarray,
        y: Optional[np.ndarray] = None,
        jacobians: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """Flatten blocks into a vector of this layout."""
        blocks = [q.ravel(), p.ravel()]
        if y is not None:
            blocks.append(y.ravel())
        if jacobians is not None:
            blocks.append(jacobians.ravel())
        return np.concatenate(blocks)


class Trajectory(NamedTuple):
    """
    Time samples of an integrated flat state.

    * times: Uniformly spaced sample times from 0 to T.
    * values: Flat states, one row per sample.
    * monitors: Per-sample monitor records.
    * layout: Layout of the rows when they hold landmark states.
    """

    times: np.ndarray
    values: np.ndarray
    monitors: List[Dict[str, float]]
    layout: Optional[StateLayout] = None

    @property
    def final(self) -> np.ndarray:
        """Last sampled flat state."""
        return self.values[-1]

    @property
    def sample_count(self) -> int:
        """Number of samples."""
        return len(self.times)

    def state(self, index: int) -> LandmarkState:
        """
        Get the landmark state of a sample.

        :param index: Sample index.
        :return: Landmark state at that sample.
        """
        if self.layout is None:
            raise ValueError("Trajectory has no landmark layout.")
        return LandmarkState.unpack(
            self.values[index], self.layout.n_landmarks, self.layout.dim, self.times[index]
        )

    @property
    def states(self) -> List[LandmarkState]:
        """Landmark states of every sample."""
        return [self.state(index) for index in range(self.sample_count)]

    def monitor(self, name: str) -> np.ndarray:
        """Get the samples of a named monitor."""
        return np.array([record[name] for record in self.monitors])

    def csv_rows(self) -> Tuple[List[str], List[List[float]]]:
        """
        Tabulate the trajectory as one row per sample: t, flattened q, flattened p, h.

        :return: Header and rows.
        """
        if self.layout is None:
            raise ValueError("Trajectory has no landmark layout.")
        n, d = self.layout.n_landmarks, self.layout.dim
        header = ["t"]
        header += [f"q{i}_{a}" for i in range(n) for a in range(d)]
        header += [f"p{i}_{a}" for i in range(n) for a in range(d)]
        header.append("h")
        rows = []
        for index, t in enumerate(self.times):
            row = [float(t)] + self.values[index, : 2 * n * d].tolist()
            row.append(self.monitors[index].get("hamiltonian", float("nan")))
            rows.append(row)
        return header, rows

    def to_json(self) -> Dict[str, Any]:
        """Serialize the landmark states and monitors."""
        return {
            "times": self.times.tolist(),
            "states": [state.to_json() for state in self.states],
            "monitors": self.monitors,
        }
