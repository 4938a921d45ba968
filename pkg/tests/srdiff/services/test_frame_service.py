"""Unit tests for frame_service.py."""
import numpy as np
import pytest

import srdiff.services.frame_service as under_test
from srdiff.errors import InvalidInputError, UnsupportedDepthError
from srdiff.models.frame import BracketWord, GrushinFrame, HeisenbergFrame, TorusSineFrame
from srdiff.options import NumericsConfiguration, SrdiffOptions


@pytest.fixture()
def frame_service():
    return under_test.FrameService(SrdiffOptions())


class TestLieBracket:
    def test_heisenberg_bracket_should_be_vertical(self, frame_service):
        x = np.array([0.3, -0.2, 0.7])

        bracket = frame_service.lie_bracket(HeisenbergFrame(), 1, 2, x)

        np.testing.assert_allclose(bracket, [0.0, 0.0, 1.0])

    def test_bracket_should_be_antisymmetric(self, frame_service):
        x = np.array([0.25, 0.6])
        frame = TorusSineFrame()

        forward = frame_service.lie_bracket(frame, 1, 2, x)
        backward = frame_service.lie_bracket(frame, 2, 1, x)

        np.testing.assert_allclose(forward, -backward)
        np.testing.assert_allclose(forward, [0.0, 2.0 * np.pi * np.cos(0.5 * np.pi)], atol=1e-12)

    def test_out_of_range_index_should_raise(self, frame_service):
        with pytest.raises(InvalidInputError):
            frame_service.lie_bracket(GrushinFrame(), 1, 3, np.zeros(2))


class TestIteratedBracket:
    def test_word_of_length_one_should_be_the_field(self, frame_service):
        x = np.array([0.4, 0.1])

        value = frame_service.iterated_bracket(GrushinFrame(), BracketWord.of(2), x)

        np.testing.assert_allclose(value, [0.0, 0.4])

    def test_word_of_length_two_should_match_lie_bracket(self, frame_service):
        x = np.array([0.1, 0.2])
        frame = TorusSineFrame()

        value = frame_service.iterated_bracket(frame, BracketWord.of(1, 2), x)

        np.testing.assert_allclose(value, frame_service.lie_bracket(frame, 1, 2, x))

    def test_depth_three_torus_bracket_should_be_exact(self, frame_service):
        x = np.array([0.1, 0.2])

        value = frame_service.iterated_bracket(TorusSineFrame(), BracketWord.of(1, 1, 2), x)

        expected = -((2.0 * np.pi) ** 2) * np.sin(2.0 * np.pi * 0.1)
        np.testing.assert_allclose(value, [0.0, expected], rtol=1e-12)

    def test_depth_four_bracket_should_use_finite_differences(self, frame_service):
        x = np.array([0.1, 0.2])

        value = frame_service.iterated_bracket(TorusSineFrame(), BracketWord.of(1, 1, 1, 2), x)

        expected = -((2.0 * np.pi) ** 3) * np.cos(2.0 * np.pi * 0.1)
        np.testing.assert_allclose(value, [0.0, expected], rtol=1e-5)

    def test_heisenberg_depth_three_brackets_should_vanish(self, frame_service):
        x = np.array([0.3, -0.2, 0.1])

        for word in [(1, 1, 2), (2, 1, 2)]:
            value = frame_service.iterated_bracket(HeisenbergFrame(), BracketWord.of(*word), x)
            np.testing.assert_allclose(value, 0.0, atol=1e-14)

    def test_words_deeper_than_the_limit_should_raise(self):
        options = SrdiffOptions(numerics=NumericsConfiguration(max_fd_bracket_depth=3))
        frame_service = under_test.FrameService(options)

        with pytest.raises(UnsupportedDepthError):
            frame_service.iterated_bracket(GrushinFrame(), BracketWord.of(1, 1, 1, 2), np.ones(2))


class TestBracketGeneratingRank:
    def test_heisenberg_should_need_one_bracket(self, frame_service):
        rank = frame_service.bracket_generating_rank(HeisenbergFrame(), np.zeros(3), 2)

        assert rank.rank == 3
        assert rank.families == [BracketWord.of(1), BracketWord.of(2), BracketWord.of(1, 2)]

    def test_grushin_singular_line_should_skip_the_vanishing_field(self, frame_service):
        rank = frame_service.bracket_generating_rank(GrushinFrame(), np.zeros(2), 3)

        assert rank.rank == 2
        assert rank.families == [BracketWord.of(1), BracketWord.of(1, 2)]

    def test_shallow_depth_should_report_a_deficient_rank(self, frame_service):
        rank = frame_service.bracket_generating_rank(HeisenbergFrame(), np.zeros(3), 1)

        assert rank.rank == 2

    def test_nonpositive_depth_should_raise(self, frame_service):
        with pytest.raises(InvalidInputError):
            frame_service.bracket_generating_rank(GrushinFrame(), np.ones(2), 0)


class TestSpanRank:
    def test_dependent_vectors_should_not_add_rank(self, frame_service):
        vectors = np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]])

        assert frame_service.span_rank(vectors) == 2

    def test_zero_vectors_should_have_rank_zero(self, frame_service):
        assert frame_service.span_rank(np.zeros((2, 3))) == 0
        assert frame_service.span_rank(np.zeros((0, 3))) == 0
