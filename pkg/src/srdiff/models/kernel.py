"""Models for reproducing kernels and Dirac momenta."""
from __future__ import annotations

from typing import Any, Dict, Literal, NamedTuple, Optional, Union

import numpy as np
from pydantic import BaseModel, validator

from srdiff.errors import InvalidInputError

FULL_MODE = "full"


class FrameMode(BaseModel):
    """
    Kernel mode constraining velocities to a frame.

    * frame: Registered frame id.
    """

    frame: str

    class Config:
        """Kernel modes are values."""

        allow_mutation = False


class KernelSpec(BaseModel):
    """
    Gaussian reproducing kernel of the space of admissible vector fields.

    * sigma: Kernel width; e(x - y) = exp(-|x - y|^2 / (2 sigma)).
    * mode: "full" for K(x, y)p = e(x - y) p^T, or {"frame": id} for
      K(x, y)p = e(x - y) sum_j p(X_j(y)) X_j(x).
    """

    sigma: float
    mode: Union[Literal["full"], FrameMode] = FULL_MODE

    class Config:
        """Kernel specs are values."""

        allow_mutation = False

    @validator("sigma")
    def _sigma_positive(cls, value: float) -> float:
        if not np.isfinite(value) or value <= 0.0:
            raise ValueError("sigma must be positive")
        return value

    @classmethod
    def full(cls, sigma: float) -> KernelSpec:
        """Build a full-mode kernel."""
        return cls(sigma=sigma, mode=FULL_MODE)

    @classmethod
    def constrained(cls, sigma: float, frame_id: str) -> KernelSpec:
        """Build a frame-constrained kernel."""
        return cls(sigma=sigma, mode=FrameMode(frame=frame_id))

    @property
    def frame_id(self) -> Optional[str]:
        """Frame id of a constrained kernel, None in full mode."""
        if isinstance(self.mode, FrameMode):
            return self.mode.frame
        return None

    def to_json(self) -> Dict[str, Any]:
        """Serialize as {"sigma": float, "mode": "full" | {"frame": id}}."""
        mode: Union[str, Dict[str, str]] = FULL_MODE
        if isinstance(self.mode, FrameMode):
            mode = {"frame": self.mode.frame}
        return {"sigma": self.sigma, "mode": mode}


class DiracMomentum(NamedTuple):
    """
    Covector sum_i p_i (x) delta_{x_i} acting on vector fields by their values at points.

    * points: Base points x_i, shape (n, d).
    * covectors: Row covectors p_i, shape (n, d).
    """

    points: np.ndarray
    covectors: np.ndarray

    @classmethod
    def create(cls, points: Any, covectors: Any) -> DiracMomentum:
        """
        Build a momentum, checking shapes and finiteness.

        :param points: Base points, shape (n, d).
        :param covectors: Covectors, shape (n, d).
        :return: The momentum.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        covectors = np.atleast_2d(np.asarray(covectors, dtype=float))
        if points.shape != covectors.shape or points.shape[0] < 1:
            raise InvalidInputError(
                f"Points {points.shape} and covectors {covectors.shape} must both be (n, d), "
                "n >= 1."
            )
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(covectors))):
            raise InvalidInputError("Dirac momenta must be finite.")
        return cls(points=points, covectors=covectors)

    @property
    def count(self) -> int:
        """Number of Dirac masses."""
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        """Ambient dimension."""
        return self.points.shape[1]
