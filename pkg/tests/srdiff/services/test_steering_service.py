"""Unit tests for steering_service.py."""
import numpy as np
import pytest

import srdiff.services.steering_service as under_test
from srdiff.errors import InvalidInputError, OutOfChartError, PreconditionError
from srdiff.models.frame import BracketWord, GrushinFrame, HeisenbergFrame
from srdiff.models.steering import ControlProfile
from srdiff.options import SrdiffOptions
from srdiff.services.frame_service import FrameService
from srdiff.services.hamiltonian_service import HamiltonianService
from srdiff.services.integrator_service import IntegratorService
from srdiff.services.kernel_service import KernelService

HEISENBERG_FAMILIES = [BracketWord.of(1), BracketWord.of(2), BracketWord.of(1, 2)]


@pytest.fixture()
def steering_service():
    options = SrdiffOptions()
    frame_service = FrameService(options)
    hamiltonian_service = HamiltonianService(KernelService(frame_service, options))
    integrator_service = IntegratorService(hamiltonian_service, options)
    return under_test.SteeringService(frame_service, integrator_service, options)


class TestElementaryFlow:
    def test_heisenberg_second_field_should_lift_vertically(self, steering_service):
        profile = ControlProfile.create(2, 1.0, 0.5)

        result = steering_service.elementary_flow(HeisenbergFrame(), profile, np.array([1.0, 0, 0]))

        np.testing.assert_allclose(result, [1.0, 0.5, 0.5], atol=1e-14)

    def test_points_should_keep_their_shape(self, steering_service):
        profile = ControlProfile.create(2, 1.0, 1.0)
        points = np.array([[0.5, 0.0], [1.0, 0.0]])

        result = steering_service.elementary_flow(GrushinFrame(), profile, points)

        np.testing.assert_allclose(result, [[0.5, 0.5], [1.0, 1.0]], atol=1e-14)

    def test_trivial_profile_should_not_move_points(self, steering_service):
        point = np.array([0.3, 0.4])

        result = steering_service.elementary_flow(
            GrushinFrame(), ControlProfile.create(1, 1.0, 0.0), point
        )

        np.testing.assert_array_equal(result, point)

    def test_unknown_field_should_raise(self, steering_service):
        with pytest.raises(InvalidInputError):
            steering_service.elementary_flow(
                GrushinFrame(), ControlProfile.create(3, 1.0, 1.0), np.zeros(2)
            )

    def test_replay_of_a_flow_and_its_inverse_should_return(self, steering_service):
        profile = ControlProfile.create(2, 0.7, 0.3)
        point = np.array([0.2, -0.1, 0.4])

        result = steering_service.replay(HeisenbergFrame(), [profile, profile.inverse()], point)

        np.testing.assert_allclose(result, point, atol=1e-14)


class TestCommutatorProfiles:
    def test_length_two_word_should_give_four_flows(self):
        profiles = under_test.SteeringService.commutator_profiles(
            BracketWord.of(1, 2), [0.5, 2.0], 0.1
        )

        assert [(p.frame_index, p.amplitude) for p in profiles] == [
            (1, 0.5),
            (2, 2.0),
            (1, -0.5),
            (2, -2.0),
        ]
        assert all(p.duration == 0.1 for p in profiles)

    def test_nested_words_should_wrap_the_inner_commutator(self):
        profiles = under_test.SteeringService.commutator_profiles(
            BracketWord.of(1, 1, 2), [1.0, 2.0, 3.0], 1.0
        )

        assert len(profiles) == 10
        assert [p.frame_index for p in profiles] == [1, 1, 2, 1, 2, 1, 2, 1, 2, 1]

    def test_wrong_amplitude_count_should_raise(self):
        with pytest.raises(InvalidInputError):
            under_test.SteeringService.commutator_profiles(BracketWord.of(1, 2), [1.0], 0.1)


class TestCommutatorFlow:
    def test_heisenberg_commutator_should_move_along_the_bracket(self, steering_service):
        point = np.array([0.3, -0.2, 0.1])

        result = steering_service.commutator_flow(
            HeisenbergFrame(), BracketWord.of(1, 2), [1.0, 1.0], 0.1, point
        )

        np.testing.assert_allclose(result - point, [0.0, 0.0, 0.01], atol=1e-14)


class TestTaylorOrderCheck:
    @pytest.mark.parametrize(
        "frame,point,expected",
        [
            (HeisenbergFrame(), np.array([0.3, -0.2, 0.1]), [0.0, 0.0, 1.0]),
            (GrushinFrame(), np.array([0.4, 0.2]), [0.0, 1.0]),
        ],
    )
    def test_depth_two_commutators_should_have_order_two(
        self, steering_service, frame, point, expected
    ):
        result = steering_service.taylor_order_check(
            frame, BracketWord.of(1, 2), [1.0, 1.0], point, np.geomspace(0.1, 1e-3, 5)
        )

        assert not result.underflow
        assert result.order == pytest.approx(2.0, abs=0.15)
        np.testing.assert_allclose(result.coefficient, expected, atol=0.05)

    def test_vanishing_brackets_should_report_underflow(self, steering_service):
        result = steering_service.taylor_order_check(
            HeisenbergFrame(),
            BracketWord.of(1, 1, 2),
            [1.0, 1.0, 1.0],
            np.array([0.3, -0.2, 0.1]),
            np.geomspace(0.1, 1e-3, 5),
        )

        assert result.underflow
        assert np.isnan(result.order)

    @pytest.mark.parametrize("times", [[0.1], [0.1, 0.05], [0.1, -0.01]])
    def test_invalid_times_should_raise(self, steering_service, times):
        with pytest.raises(PreconditionError):
            steering_service.taylor_order_check(
                GrushinFrame(), BracketWord.of(1, 2), [1.0, 1.0], np.ones(2), times
            )


class TestChart:
    def test_chart_map_should_compose_the_families(self, steering_service):
        u = np.array([0.01, 0.02, 0.03])

        result = steering_service.chart_map(HeisenbergFrame(), HEISENBERG_FAMILIES, u, np.zeros(3))

        np.testing.assert_allclose(result, [0.01, 0.02, 0.03 + 0.01 * 0.02], atol=1e-12)

    def test_chart_plan_should_skip_zero_coordinates(self, steering_service):
        profiles = steering_service.chart_plan(
            HeisenbergFrame(), HEISENBERG_FAMILIES, np.array([0.0, 0.0, 0.04])
        )

        assert len(profiles) == 4
        assert profiles[0].amplitude == pytest.approx(0.2)

    def test_coordinates_beyond_the_radius_should_raise(self, steering_service):
        with pytest.raises(OutOfChartError):
            steering_service.chart_plan(
                HeisenbergFrame(), HEISENBERG_FAMILIES, np.array([0.0, 0.5, 0.0])
            )

    def test_differential_should_hold_the_brackets(self, steering_service):
        point = np.array([0.3, -0.2, 0.1])

        differential = steering_service.chart_differential(
            HeisenbergFrame(), HEISENBERG_FAMILIES, point
        )

        expected = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.3, 1.0]])
        np.testing.assert_allclose(differential, expected, atol=1e-7)


class TestSteerPoint:
    def test_heisenberg_target_should_be_reached(self, steering_service):
        frame = HeisenbergFrame()
        target = np.array([0.01, -0.005, 0.02])

        result = steering_service.steer_point(frame, np.zeros(3), target)

        assert result.converged
        assert result.residual <= 1e-6
        assert result.families == HEISENBERG_FAMILIES
        np.testing.assert_allclose(
            steering_service.replay(frame, result.plan.profiles, np.zeros(3)), result.achieved
        )

    def test_grushin_singular_line_should_use_the_bracket(self, steering_service):
        result = steering_service.steer_point(
            GrushinFrame(), np.zeros(2), np.array([0.01, 0.005])
        )

        assert result.converged
        assert result.families == [BracketWord.of(1), BracketWord.of(1, 2)]

    def test_far_targets_should_raise(self, steering_service):
        with pytest.raises(PreconditionError):
            steering_service.steer_point(HeisenbergFrame(), np.zeros(3), np.array([1.0, 0, 0]))

    def test_horizontal_families_should_not_reach_vertical_targets(self, steering_service):
        result = steering_service.steer_point(
            HeisenbergFrame(),
            np.zeros(3),
            np.array([0.0, 0.0, 0.01]),
            families=[BracketWord.of(1), BracketWord.of(2)],
        )

        assert not result.converged
        assert result.residual > 1e-3


class TestLengthSweep:
    def test_heisenberg_exponents_should_follow_the_bracket_depth(self, steering_service):
        directions = {"horizontal": np.array([1.0, 0.0, 0.0]), "vertical": np.array([0, 0, 1.0])}

        rows = steering_service.length_sweep(
            HeisenbergFrame(), np.zeros(3), directions, [1e-2, 1e-3, 1e-4], HEISENBERG_FAMILIES
        )

        assert len(rows) == 6
        assert all(row.converged for row in rows)
        horizontal = under_test.SteeringService.scaling_exponent(rows, "horizontal")
        vertical = under_test.SteeringService.scaling_exponent(rows, "vertical")
        assert horizontal == pytest.approx(1.0, abs=0.05)
        assert vertical == pytest.approx(0.5, abs=0.05)

    def test_exponent_needs_two_rows(self):
        with pytest.raises(PreconditionError):
            under_test.SteeringService.scaling_exponent([], "vertical")
