"""Model of landmark phase-space states."""
from __future__ import annotations

from typing import Any, Dict, NamedTuple

import numpy as np

from srdiff.errors import InvalidInputError


class LandmarkState(NamedTuple):
    """
    Dirac-momentum reduction of a point (phi, P) of the cotangent bundle.

    * q: Landmark positions, shape (n, d).
    * p: Row covectors at the landmarks, shape (n, d).
    * time: Time the state is sampled at.
    """

    q: np.ndarray
    p: np.ndarray
    time: float = 0.0

    @classmethod
    def create(cls, q: Any, p: Any, time: float = 0.0) -> LandmarkState:
        """
        Build a state, checking shapes and finiteness.

        :param q: Positions, shape (n, d).
        :param p: Covectors, shape (n, d).
        :param time: Sample time.
        :return: The state.
        """
        q = np.atleast_2d(np.asarray(q, dtype=float))
        p = np.atleast_2d(np.asarray(p, dtype=float))
        if q.shape != p.shape or q.shape[0] < 1:
            raise InvalidInputError(
                f"Positions {q.shape} and covectors {p.shape} must both be (n, d), n >= 1."
            )
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p)) and np.isfinite(time)):
            raise InvalidInputError("Landmark states must be finite.")
        return cls(q=q, p=p, time=float(time))

    @property
    def count(self) -> int:
        """Number of landmarks."""
        return self.q.shape[0]

    @property
    def dim(self) -> int:
        """Ambient dimension."""
        return self.q.shape[1]

    def pack(self) -> np.ndarray:
        """Flatten the state into the vector (q, p)."""
        return np.concatenate([self.q.ravel(), self.p.ravel()])

    @classmethod
    def unpack(cls, values: np.ndarray, count: int, dim: int, time: float = 0.0) -> LandmarkState:
        """
        Rebuild a state from the leading (q, p) block of a flat vector.

        :param values: Flat vector starting with (q, p).
        :param count: Number of landmarks n.
        :param dim: Ambient dimension d.
        :param time: Sample time.
        :return: The state.
        """
        size = count * dim
        return cls(
            q=values[:size].reshape(count, dim),
            p=values[size : 2 * size].reshape(count, dim),
            time=float(time),
        )

    def with_momenta(self, p: np.ndarray) -> LandmarkState:
        """Get a copy of the state with other covectors."""
        return LandmarkState.create(self.q, p, self.time)

    def to_json(self) -> Dict[str, Any]:
        """Serialize as {"t": float, "q": [[...]], "p": [[...]]}."""
        return {"t": self.time, "q": self.q.tolist(), "p": self.p.tolist()}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> LandmarkState:
        """
        Read a state serialized by `to_json`.

        :param data: Serialized state.
        :return: The state.
        """
        return cls.create(data["q"], data["p"], data.get("t", 0.0))
