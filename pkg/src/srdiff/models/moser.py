"""Models for density transport by horizontal Moser flows."""
from typing import Any, Dict, List, NamedTuple, Tuple

import numpy as np

from srdiff.models.grid import GridField


class MoserStep(NamedTuple):
    """
    Diagnostics after one time step of a Moser transport.

    * time: Time reached.
    * mass_drift: |mass of the pushed-forward density - initial mass| / initial mass.
    * transport_error: Relative L1 distance between the pushforward of f0 and the path density.
    * cg_iterations: Conjugate-gradient iterations of the potential solve.
    """

    time: float
    mass_drift: float
    transport_error: float
    cg_iterations: int


class MoserResult(NamedTuple):
    """
    Outcome of transporting f0 to f1.

    * frame_id: Frame whose span holds the transport velocity.
    * horizontal: Whether the velocity was restricted to the frame span.
    * particles: Grid particle positions after every step, shape (n_time + 1, N^d, d).
    * determinants: Flow Jacobian determinants at the end, shape (N^d,).
    * achieved: Pushforward of f0 at the deformed nodes.
    * error: Relative L1 distance between the pushforward and f1.
    * steps: Per-step diagnostics.
    """

    frame_id: str
    horizontal: bool
    particles: np.ndarray
    determinants: np.ndarray
    achieved: GridField
    error: float
    steps: List[MoserStep]

    @property
    def max_mass_drift(self) -> float:
        """Largest relative mass drift over the steps."""
        return max((step.mass_drift for step in self.steps), default=0.0)

    def particle_csv_rows(self) -> Tuple[List[str], List[List[float]]]:
        """
        Tabulate the final particle positions with their Jacobian determinants.

        :return: Header and rows.
        """
        dim = self.particles.shape[2]
        header = ["particle"] + [f"x{a}" for a in range(dim)] + ["det"]
        rows = [
            [float(index)] + position.tolist() + [float(det)]
            for index, (position, det) in enumerate(zip(self.particles[-1], self.determinants))
        ]
        return header, rows

    def to_json(self) -> Dict[str, Any]:
        """Summarize the transport as a JSON report."""
        return {
            "frame_id": self.frame_id,
            "horizontal": self.horizontal,
            "error": self.error,
            "max_mass_drift": self.max_mass_drift,
            "determinant_min": float(np.min(self.determinants)),
            "determinant_max": float(np.max(self.determinants)),
            "steps": [step._asdict() for step in self.steps],
        }
