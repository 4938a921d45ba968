"""Service for evaluating frames, Lie brackets and bracket-generating ranks."""
from functools import lru_cache
from typing import List, NamedTuple, Optional

import inject
import numpy as np
import structlog

from srdiff.errors import InvalidInputError, UnsupportedDepthError
from srdiff.models.frame import BracketWord, FrameField, build_frame, words_of_length
from srdiff.options import SrdiffOptions

LOGGER = structlog.get_logger(__name__)


class BracketRank(NamedTuple):
    """
    Result of a bracket-generating rank check.

    * rank: Dimension of the span of the selected brackets.
    * families: Selected words, by nondecreasing length.
    """

    rank: int
    families: List[BracketWord]


class FrameService:
    """A service for working with registered frames."""

    @inject.autoparams()
    def __init__(self, options: SrdiffOptions) -> None:
        """
        Initialize the service.

        :param options: Runtime options.
        """
        self.numerics = options.numerics

    @staticmethod
    @lru_cache(maxsize=None)
    def resolve(frame_id: str, dim: Optional[int] = None) -> FrameField:
        """
        Look up a registered frame.

        :param frame_id: Registered frame id.
        :param dim: Ambient dimension.
        :return: The frame.
        """
        return build_frame(frame_id, dim)

    @staticmethod
    def eval_frame(frame: FrameField, x: np.ndarray) -> np.ndarray:
        """
        Evaluate every field of the frame.

        :param frame: Frame to evaluate.
        :param x: Position.
        :return: Array of shape (r, d) holding X_1(x), ..., X_r(x).
        """
        return frame.fields(x)

    def lie_bracket(self, frame: FrameField, i: int, j: int, x: np.ndarray) -> np.ndarray:
        """
        Evaluate [X_i, X_j](x) = DX_j(x) X_i(x) - DX_i(x) X_j(x).

        :param frame: Frame to evaluate.
        :param i: One-based index of the first field.
        :param j: One-based index of the second field.
        :param x: Position.
        :return: The bracket at x.
        """
        self._check_index(frame, i)
        self._check_index(frame, j)
        fields = frame.fields(x)
        jacobians = frame.jacobians(x)
        return (
            jacobians[..., j - 1, :, :] @ fields[..., i - 1, :, None]
            - jacobians[..., i - 1, :, :] @ fields[..., j - 1, :, None]
        )[..., 0]

    def iterated_bracket(self, frame: FrameField, word: BracketWord, x: np.ndarray) -> np.ndarray:
        """
        Evaluate the right-nested bracket X_I(x).

        Words of length 3 or less are exact, using the analytic first and second derivatives of
        the frame; longer words differentiate their tails by nested central differences with
        step `bracket_fd_step`, up to `max_fd_bracket_depth`.

        :param frame: Frame to evaluate.
        :param word: Bracket word I.
        :param x: Position.
        :return: X_I(x).
        """
        if word.length > self.numerics.max_fd_bracket_depth:
            raise UnsupportedDepthError(
                f"Bracket word {word} is deeper than {self.numerics.max_fd_bracket_depth}."
            )
        for i in word.indices:
            self._check_index(frame, i)
        x = frame.check_position(x)
        return self._value(frame, word, x)

    def bracket_generating_rank(
        self, frame: FrameField, x: np.ndarray, max_depth: int
    ) -> BracketRank:
        """
        Greedily select brackets, by increasing length, whose values at x are independent.

        Words of equal length are visited in lexicographic order; selection stops once the span
        is the whole tangent space.

        :param frame: Frame to evaluate.
        :param x: Position.
        :param max_depth: Longest word considered.
        :return: Rank of the span and the selected words.
        """
        if max_depth < 1:
            raise InvalidInputError("max_depth must be at least 1.")
        selected: List[BracketWord] = []
        vectors: List[np.ndarray] = []
        rank = 0
        for length in range(1, max_depth + 1):
            for word in words_of_length(frame.count, length):
                if rank == frame.dim:
                    break
                candidate = vectors + [self.iterated_bracket(frame, word, x)]
                candidate_rank = self.span_rank(np.array(candidate))
                if candidate_rank > rank:
                    selected.append(word)
                    vectors = candidate
                    rank = candidate_rank
        LOGGER.debug(
            "Bracket rank", frame=frame.frame_id, rank=rank, families=[str(w) for w in selected]
        )
        return BracketRank(rank=rank, families=selected)

    def span_rank(self, vectors: np.ndarray) -> int:
        """
        Numerical rank of a stack of vectors.

        :param vectors: Array of shape (m, d).
        :return: Number of singular values above `rank_rel_tol` times the largest one.
        """
        if vectors.size == 0:
            return 0
        singular_values = np.linalg.svd(np.atleast_2d(vectors), compute_uv=False)
        largest = singular_values[0]
        if largest == 0.0:
            return 0
        return int(np.sum(singular_values > self.numerics.rank_rel_tol * largest))

    def _value(self, frame: FrameField, word: BracketWord, x: np.ndarray) -> np.ndarray:
        head = word.head - 1
        if word.length == 1:
            return frame.fields(x)[head]
        tail_value = self._value(frame, word.tail, x)
        tail_jacobian = self._jacobian(frame, word.tail, x)
        return tail_jacobian @ frame.fields(x)[head] - frame.jacobians(x)[head] @ tail_value

    def _jacobian(self, frame: FrameField, word: BracketWord, x: np.ndarray) -> np.ndarray:
        head = word.head - 1
        if word.length == 1:
            return frame.jacobians(x)[head]
        if word.length == 2:
            # D[X_a, X_b] = D2X_b.X_a + DX_b DX_a - D2X_a.X_b - DX_a DX_b
            tail = word.tail.head - 1
            fields = frame.fields(x)
            jacobians = frame.jacobians(x)
            hessians = frame.hessians(x)
            return (
                np.einsum("abc,b->ac", hessians[tail], fields[head])
                + jacobians[tail] @ jacobians[head]
                - np.einsum("abc,b->ac", hessians[head], fields[tail])
                - jacobians[head] @ jacobians[tail]
            )
        step = self.numerics.bracket_fd_step
        columns = []
        for axis in range(frame.dim):
            offset = np.zeros(frame.dim)
            offset[axis] = step
            forward = self._value(frame, word, x + offset)
            backward = self._value(frame, word, x - offset)
            columns.append((forward - backward) / (2.0 * step))
        return np.stack(columns, axis=-1)

    @staticmethod
    def _check_index(frame: FrameField, index: int) -> None:
        if not 1 <= index <= frame.count:
            raise InvalidInputError(
                f"Frame '{frame.frame_id}' has {frame.count} fields, got index {index}."
            )
