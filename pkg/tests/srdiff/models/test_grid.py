"""Unit tests for grid.py."""
import numpy as np
import pytest

import srdiff.models.grid as under_test
from srdiff.errors import InvalidInputError
from srdiff.models.frame import Domain


class TestCreate:
    def test_scalar_field_should_infer_its_dimension(self):
        field = under_test.GridField.create(np.ones((4, 4)))

        assert field.dim == 2
        assert field.resolution == 4
        assert field.is_scalar

    def test_vector_field_should_need_its_dimension(self):
        field = under_test.GridField.create(np.ones((4, 4, 2)), dim=2)

        assert not field.is_scalar
        assert field.flat_values().shape == (16, 2)

    def test_ragged_values_should_raise(self):
        with pytest.raises(InvalidInputError):
            under_test.GridField.create(np.ones((4, 3)))

    def test_non_finite_values_should_raise(self):
        with pytest.raises(InvalidInputError):
            under_test.GridField.create(np.full((2, 2), np.nan))


class TestNodes:
    def test_nodes_should_be_row_major(self):
        field = under_test.GridField.create(np.zeros((2, 2)))

        np.testing.assert_allclose(field.nodes(), [[0.0, 0.0], [0.0, 0.5], [0.5, 0.0], [0.5, 0.5]])

    def test_from_function_should_sample_at_the_nodes(self):
        field = under_test.GridField.from_function(lambda x: x[:, 0] + 10 * x[:, 1], 4, 2)

        assert field.values[1, 2] == pytest.approx(0.25 + 5.0)


class TestMass:
    def test_mass_should_integrate_over_the_box(self):
        field = under_test.GridField.create(np.full((8, 8), 3.0), lower=-1.0, extent=2.0)

        assert field.cell_volume == pytest.approx(1.0 / 16.0)
        assert field.mass() == pytest.approx(12.0)

    def test_transported_mass_should_use_the_cell_weights(self):
        field = under_test.GridField.create(np.full((2,), 2.0), dim=1)
        moved = field._replace(positions=np.array([[0.1], [0.6]]), weights=np.array([0.25, 0.75]))

        assert moved.mass() == pytest.approx(2.0)

    def test_vector_fields_should_have_no_mass(self):
        with pytest.raises(InvalidInputError):
            under_test.GridField.create(np.ones((2, 2, 2)), dim=2).mass()


class TestCsvLines:
    def test_csv_lines_should_read_back(self):
        field = under_test.GridField.from_function(lambda x: np.sin(x[:, 0]), 3, 2)

        restored = under_test.GridField.from_csv_lines(field.csv_lines())

        assert field.csv_lines()[0] == "3,2,torus"
        np.testing.assert_array_equal(restored.values, field.values)
        assert restored.domain == Domain.TORUS

    def test_wrong_row_count_should_raise(self):
        with pytest.raises(InvalidInputError):
            under_test.GridField.from_csv_lines(["2,2,torus", "1.0", "2.0"])
