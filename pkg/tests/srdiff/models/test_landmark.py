"""Unit tests for landmark.py."""
import numpy as np
import pytest

import srdiff.models.landmark as under_test
from srdiff.errors import InvalidInputError


class TestCreate:
    def test_state_should_hold_float_arrays(self):
        state = under_test.LandmarkState.create([[0, 1], [2, 3]], [[1, 0], [0, 1]], 0.5)

        assert state.q.dtype == float
        assert state.count == 2
        assert state.dim == 2
        assert state.time == 0.5

    def test_mismatched_shapes_should_raise(self):
        with pytest.raises(InvalidInputError):
            under_test.LandmarkState.create([[0.0, 1.0]], [[1.0, 0.0, 0.0]])

    def test_non_finite_values_should_raise(self):
        with pytest.raises(InvalidInputError):
            under_test.LandmarkState.create([[np.nan, 1.0]], [[1.0, 0.0]])


class TestPack:
    def test_unpack_should_invert_pack(self):
        state = under_test.LandmarkState.create([[0.0, 1.0], [2.0, 3.0]], [[4.0, 5.0], [6.0, 7.0]])

        packed = state.pack()
        restored = under_test.LandmarkState.unpack(packed, 2, 2)

        np.testing.assert_array_equal(packed, np.arange(8.0))
        np.testing.assert_array_equal(restored.q, state.q)
        np.testing.assert_array_equal(restored.p, state.p)


class TestJson:
    def test_from_json_should_read_to_json(self):
        state = under_test.LandmarkState.create([[0.5]], [[-1.0]], 0.25)

        data = state.to_json()

        assert data == {"t": 0.25, "q": [[0.5]], "p": [[-1.0]]}
        assert under_test.LandmarkState.from_json(data).time == 0.25


class TestWithMomenta:
    def test_positions_should_be_kept(self):
        state = under_test.LandmarkState.create([[0.5, 1.0]], [[1.0, 0.0]])

        other = state.with_momenta(np.array([[0.0, 2.0]]))

        np.testing.assert_array_equal(other.q, state.q)
        np.testing.assert_array_equal(other.p, [[0.0, 2.0]])
