"""Unit tests for trajectory.py."""
import numpy as np
import pytest

import srdiff.models.trajectory as under_test


class TestStateLayout:
    def test_size_should_count_every_block(self):
        layout = under_test.StateLayout(2, 3, n_particles=4, jacobians=True)

        assert layout.size == 2 * 2 * 3 + 4 * 3 + 4 * 9

    def test_split_should_invert_join(self):
        layout = under_test.StateLayout(2, 2, n_particles=1, jacobians=True)
        q = np.array([[0.0, 1.0], [2.0, 3.0]])
        p = np.array([[4.0, 5.0], [6.0, 7.0]])
        y = np.array([[8.0, 9.0]])
        jacobians = np.arange(4.0).reshape(1, 2, 2)

        split = layout.split(layout.join(q, p, y, jacobians))

        for block, expected in zip(split, [q, p, y, jacobians]):
            np.testing.assert_array_equal(block, expected)

    def test_split_without_jacobians_should_give_none(self):
        layout = under_test.StateLayout(1, 2)

        _, _, y, jacobians = layout.split(np.zeros(4))

        assert y.shape == (0, 2)
        assert jacobians is None


@pytest.fixture()
def trajectory():
    times = np.array([0.0, 0.5, 1.0])
    values = np.array([[0.0, 1.0], [0.5, 1.0], [1.0, 1.0]])
    monitors = [{"hamiltonian": 0.5}, {"hamiltonian": 0.5}, {"hamiltonian": 0.5}]
    return under_test.Trajectory(times, values, monitors, under_test.StateLayout(1, 1))


class TestTrajectory:
    def test_states_should_follow_the_samples(self, trajectory):
        states = trajectory.states

        assert trajectory.sample_count == 3
        assert states[1].time == 0.5
        np.testing.assert_array_equal(states[1].q, [[0.5]])
        np.testing.assert_array_equal(trajectory.final, [1.0, 1.0])

    def test_monitor_should_collect_the_records(self, trajectory):
        np.testing.assert_array_equal(trajectory.monitor("hamiltonian"), [0.5, 0.5, 0.5])

    def test_csv_rows_should_hold_time_positions_covectors_and_energy(self, trajectory):
        header, rows = trajectory.csv_rows()

        assert header == ["t", "q0_0", "p0_0", "h"]
        assert rows[-1] == [1.0, 1.0, 1.0, 0.5]

    def test_replace_should_keep_the_samples(self, trajectory):
        replaced = trajectory._replace(monitors=[{}, {}, {}])

        assert replaced.sample_count == 3
        np.testing.assert_array_equal(replaced.times, trajectory.times)

    def test_trajectory_without_layout_should_not_tabulate(self, trajectory):
        with pytest.raises(ValueError):
            trajectory._replace(layout=None).csv_rows()
