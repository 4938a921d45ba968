"""Analytic frames of vector fields with closed-form derivatives."""
from __future__ import annotations

from abc import ABC, abstractmethod
from enum import Enum
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np

from srdiff.errors import ConfigurationError, InvalidInputError

TWO_PI = 2.0 * np.pi


class Domain(str, Enum):
    """
    Domain a frame lives on.

    * euclidean: The flat space R^d.
    * torus: The flat torus T^d = R^d / Z^d.
    """

    EUCLIDEAN = "euclidean"
    TORUS = "torus"


class BracketWord(NamedTuple):
    """
    Multi-index I = (i_1, ..., i_j) of the right-nested bracket [X_i1, [..., [X_ij-1, X_ij]...]].

    * indices: One-based frame indices.
    """

    indices: Tuple[int, ...]

    @classmethod
    def of(cls, *indices: int) -> BracketWord:
        """
        Build a word from its indices.

        :param indices: One-based frame indices.
        :return: The word.
        """
        if not indices:
            raise InvalidInputError("A bracket word needs at least one index.")
        if any(i < 1 for i in indices):
            raise InvalidInputError(f"Bracket indices are one-based: {indices}.")
        return cls(tuple(int(i) for i in indices))

    @property
    def length(self) -> int:
        """Number of indices in the word."""
        return len(self.indices)

    @property
    def head(self) -> int:
        """First index of the word."""
        return self.indices[0]

    @property
    def tail(self) -> BracketWord:
        """Word without its first index."""
        return BracketWord(self.indices[1:])

    def __str__(self) -> str:
        """Render the word as '(1,2)'."""
        return "(" + ",".join(str(i) for i in self.indices) + ")"


class FrameField(ABC):
    """
    A family of r analytic vector fields X_1, ..., X_r on R^d or T^d.

    All evaluations broadcast over leading axes: positions of shape (..., d) give fields of
    shape (..., r, d), Jacobians of shape (..., r, d, d) with [a, b] = dX^a / dx_b, and second
    derivatives of shape (..., r, d, d, d) with [a, b, c] = d^2 X^a / dx_b dx_c.
    """

    frame_id: str
    dim: int
    count: int
    domain: Domain
    periodic: bool

    @abstractmethod
    def fields(self, x: np.ndarray) -> np.ndarray:
        """Evaluate X_1(x), ..., X_r(x)."""

    @abstractmethod
    def jacobians(self, x: np.ndarray) -> np.ndarray:
        """Evaluate DX_1(x), ..., DX_r(x)."""

    @abstractmethod
    def hessians(self, x: np.ndarray) -> np.ndarray:
        """Evaluate D^2 X_1(x), ..., D^2 X_r(x)."""

    @property
    def domains(self) -> List[Domain]:
        """Domains the frame is defined on; periodic Euclidean frames also live on the torus."""
        if self.periodic and self.domain != Domain.TORUS:
            return [self.domain, Domain.TORUS]
        return [self.domain]

    def check_position(self, x: np.ndarray) -> np.ndarray:
        """
        Validate positions against the frame dimension.

        :param x: Positions of shape (..., d).
        :return: Positions as a float array.
        """
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise InvalidInputError(
                f"Frame '{self.frame_id}' acts on R^{self.dim}, got positions of shape {x.shape}."
            )
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("Positions must be finite.")
        return x

    def _zeros(self, x: np.ndarray, *trailing: int) -> np.ndarray:
        return np.zeros(x.shape[:-1] + (self.count,) + trailing)


class TranslationFrame(FrameField):
    """Coordinate fields d/dx_1, ..., d/dx_d."""

    domain = Domain.EUCLIDEAN
    periodic = True

    def __init__(self, dim: int) -> None:
        """
        Initialize the frame.

        :param dim: Dimension of the ambient space.
        """
        self.frame_id = "translation"
        self.dim = dim
        self.count = dim

    def fields(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the coordinate fields."""
        x = self.check_position(x)
        return np.broadcast_to(np.eye(self.dim), x.shape[:-1] + (self.dim, self.dim)).copy()

    def jacobians(self, x: np.ndarray) -> np.ndarray:
        """Coordinate fields are constant."""
        x = self.check_position(x)
        return self._zeros(x, self.dim, self.dim)

    def hessians(self, x: np.ndarray) -> np.ndarray:
        """Coordinate fields are constant."""
        x = self.check_position(x)
        return self._zeros(x, self.dim, self.dim, self.dim)


class HeisenbergFrame(FrameField):
    """X_1 = d/dx, X_2 = d/dy + x d/dz on R^3."""

    frame_id = "heisenberg"
    dim = 3
    count = 2
    domain = Domain.EUCLIDEAN
    periodic = False

    def fields(self, x: np.ndarray) -> np.ndarray:
        """Evaluate X_1 and X_2."""
        x = self.check_position(x)
        out = self._zeros(x, 3)
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = 1.0
        out[..., 1, 2] = x[..., 0]
        return out

    def jacobians(self, x: np.ndarray) -> np.ndarray:
        """Only dX_2^z / dx is nonzero."""
        x = self.check_position(x)
        out = self._zeros(x, 3, 3)
        out[..., 1, 2, 0] = 1.0
        return out

    def hessians(self, x: np.ndarray) -> np.ndarray:
        """Both fields are affine."""
        x = self.check_position(x)
        return self._zeros(x, 3, 3, 3)


class GrushinFrame(FrameField):
    """X_1 = d/dx, X_2 = x d/dy on R^2."""

    frame_id = "grushin"
    dim = 2
    count = 2
    domain = Domain.EUCLIDEAN
    periodic = False

    def fields(self, x: np.ndarray) -> np.ndarray:
        """Evaluate X_1 and X_2."""
        x = self.check_position(x)
        out = self._zeros(x, 2)
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = x[..., 0]
        return out

    def jacobians(self, x: np.ndarray) -> np.ndarray:
        """Only dX_2^y / dx is nonzero."""
        x = self.check_position(x)
        out = self._zeros(x, 2, 2)
        out[..., 1, 1, 0] = 1.0
        return out

    def hessians(self, x: np.ndarray) -> np.ndarray:
        """Both fields are linear."""
        x = self.check_position(x)
        return self._zeros(x, 2, 2, 2)


class TorusSineFrame(FrameField):
    """X_1 = d/dx, X_2 = sin(2 pi x) d/dy on T^2."""

    frame_id = "torus_sine"
    dim = 2
    count = 2
    domain = Domain.TORUS
    periodic = True

    def fields(self, x: np.ndarray) -> np.ndarray:
        """Evaluate X_1 and X_2."""
        x = self.check_position(x)
        out = self._zeros(x, 2)
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = np.sin(TWO_PI * x[..., 0])
        return out

    def jacobians(self, x: np.ndarray) -> np.ndarray:
        """Only dX_2^y / dx is nonzero."""
        x = self.check_position(x)
        out = self._zeros(x, 2, 2)
        out[..., 1, 1, 0] = TWO_PI * np.cos(TWO_PI * x[..., 0])
        return out

    def hessians(self, x: np.ndarray) -> np.ndarray:
        """Only d^2 X_2^y / dx^2 is nonzero."""
        x = self.check_position(x)
        out = self._zeros(x, 2, 2, 2)
        out[..., 1, 1, 0, 0] = -(TWO_PI**2) * np.sin(TWO_PI * x[..., 0])
        return out


FIXED_FRAMES: Dict[str, Callable[[], FrameField]] = {
    HeisenbergFrame.frame_id: HeisenbergFrame,
    GrushinFrame.frame_id: GrushinFrame,
    TorusSineFrame.frame_id: TorusSineFrame,
}
FRAME_IDS: List[str] = ["translation"] + list(FIXED_FRAMES)


def build_frame(frame_id: str, dim: Optional[int] = None) -> FrameField:
    """
    Build a registered frame.

    :param frame_id: Registered frame id.
    :param dim: Ambient dimension; required for the translation frame, checked for the others.
    :return: The frame.
    """
    if frame_id == "translation":
        if dim is None or dim < 1:
            raise ConfigurationError("The translation frame needs a positive dimension.")
        return TranslationFrame(dim)
    if frame_id not in FIXED_FRAMES:
        raise ConfigurationError(
            f"Unknown frame '{frame_id}', expected one of: {', '.join(FRAME_IDS)}."
        )
    frame = FIXED_FRAMES[frame_id]()
    if dim is not None and dim != frame.dim:
        raise ConfigurationError(
            f"Frame '{frame_id}' lives in dimension {frame.dim}, not {dim}."
        )
    return frame


def words_of_length(count: int, length: int) -> Iterable[BracketWord]:
    """
    Enumerate the bracket words of a given length in lexicographic order.

    :param count: Number of frame fields r.
    :param length: Word length.
    :return: Iterator over words.
    """
    if length == 1:
        for i in range(1, count + 1):
            yield BracketWord((i,))
        return
    for prefix in words_of_length(count, length - 1):
        for i in range(1, count + 1):
            yield BracketWord(prefix.indices + (i,))
