"""Unit tests for moser_service.py."""
import numpy as np
import pytest

import srdiff.services.moser_service as under_test
from srdiff.errors import (
    ConfigurationError,
    IncompatibleRhsError,
    InvalidInputError,
    PreconditionError,
)
from srdiff.models.config import DensityMode, DensitySpec
from srdiff.models.frame import HeisenbergFrame, TorusSineFrame, TranslationFrame
from srdiff.models.grid import GridField
from srdiff.options import SrdiffOptions
from srdiff.services.frame_service import FrameService
from srdiff.services.hamiltonian_service import HamiltonianService
from srdiff.services.integrator_service import IntegratorService
from srdiff.services.kernel_service import KernelService

TWO_PI = 2.0 * np.pi


@pytest.fixture()
def moser_service():
    options = SrdiffOptions()
    hamiltonian_service = HamiltonianService(KernelService(FrameService(options), options))
    return under_test.MoserService(IntegratorService(hamiltonian_service, options), options)


def random_density(rng, resolution=8):
    return GridField.create(1.0 + 0.5 * rng.random((resolution, resolution)))


class TestHorizontalGradient:
    def test_translation_gradient_should_be_the_centered_difference(self, moser_service):
        F = GridField.from_function(lambda x: np.sin(TWO_PI * x[:, 0]), 16, 2)
        h = F.spacing
        expected = np.cos(TWO_PI * F.nodes()[:, 0]) * np.sin(TWO_PI * h) / h

        gradient = moser_service.horizontal_gradient(TranslationFrame(2), F)

        np.testing.assert_allclose(gradient.flat_values()[:, 0], expected, atol=1e-10)
        np.testing.assert_allclose(gradient.flat_values()[:, 1], 0.0, atol=1e-10)

    def test_torus_sine_gradient_should_stay_horizontal(self, moser_service):
        F = GridField.from_function(lambda x: np.sin(TWO_PI * x[:, 1]), 16, 2)
        h = F.spacing
        nodes = F.nodes()
        expected = (
            np.sin(TWO_PI * nodes[:, 0]) ** 2
            * np.cos(TWO_PI * nodes[:, 1])
            * np.sin(TWO_PI * h)
            / h
        )

        gradient = moser_service.horizontal_gradient(TorusSineFrame(), F)

        np.testing.assert_allclose(gradient.flat_values()[:, 0], 0.0, atol=1e-10)
        np.testing.assert_allclose(gradient.flat_values()[:, 1], expected, atol=1e-10)


class TestSubLaplacianApply:
    @pytest.mark.parametrize("frame", [TranslationFrame(2), TorusSineFrame()])
    def test_operator_should_be_symmetric_for_the_weighted_product(self, moser_service, frame):
        rng = np.random.default_rng(3)
        f = random_density(rng)
        u = GridField.create(rng.standard_normal((8, 8)))
        v = GridField.create(rng.standard_normal((8, 8)))

        Lu = moser_service.sub_laplacian_apply(frame, f, u).values
        Lv = moser_service.sub_laplacian_apply(frame, f, v).values

        assert np.sum(v.values * Lu * f.values) == pytest.approx(
            np.sum(u.values * Lv * f.values), rel=1e-10
        )
        assert np.sum(u.values * Lu * f.values) <= 0.0

    def test_constants_should_be_in_the_kernel(self, moser_service):
        f = random_density(np.random.default_rng(4))

        ones = GridField.create(np.ones((8, 8)))

        result = moser_service.sub_laplacian_apply(TorusSineFrame(), f, ones)

        np.testing.assert_allclose(result.values, 0.0, atol=1e-12)

    def test_vector_fields_should_raise(self, moser_service):
        vector = GridField.create(np.ones((4, 4, 2)), dim=2)

        with pytest.raises(InvalidInputError):
            moser_service.sub_laplacian_apply(TranslationFrame(2), vector, vector)

    def test_non_positive_density_should_raise(self, moser_service):
        F = GridField.create(np.ones((4, 4)))

        with pytest.raises(InvalidInputError):
            moser_service.sub_laplacian_apply(TranslationFrame(2), F._replace(values=-F.values), F)

    @pytest.mark.parametrize(
        "frame,values",
        [(HeisenbergFrame(), np.ones((4, 4, 4))), (TorusSineFrame(), np.ones((4,) * 3))],
    )
    def test_frames_off_the_grid_torus_should_raise(self, moser_service, frame, values):
        F = GridField.create(values)

        with pytest.raises(ConfigurationError):
            moser_service.sub_laplacian_apply(frame, F, F)


class TestSolveSubLaplacian:
    @pytest.mark.parametrize("frame", [TranslationFrame(2), TorusSineFrame()])
    def test_solution_should_reproduce_the_potential(self, moser_service, frame):
        rng = np.random.default_rng(5)
        f = random_density(rng)
        potential = rng.standard_normal((8, 8))
        potential -= np.sum(potential * f.values) / np.sum(f.values)
        rhs = moser_service.sub_laplacian_apply(frame, f, GridField.create(potential))

        solution = moser_service.solve_sub_laplacian(frame, f, rhs)

        np.testing.assert_allclose(solution.values, potential, atol=1e-5)
        assert np.sum(solution.values * f.values) == pytest.approx(0.0, abs=1e-10)

    def test_zero_rhs_should_give_zero(self, moser_service):
        f = random_density(np.random.default_rng(6))

        solution = moser_service.solve_sub_laplacian(
            TorusSineFrame(), f, GridField.create(np.zeros((8, 8)))
        )

        np.testing.assert_array_equal(solution.values, 0.0)

    def test_rhs_with_weighted_mean_should_raise(self, moser_service):
        f = random_density(np.random.default_rng(7))

        with pytest.raises(IncompatibleRhsError):
            moser_service.solve_sub_laplacian(
                TranslationFrame(2), f, GridField.create(np.ones((8, 8)))
            )


class TestMoserTransport:
    def test_equal_densities_should_not_move_particles(self, moser_service):
        f0 = DensitySpec(modes=[DensityMode(amplitude=0.2, wavevector=[0, 1])]).grid(8, 2)

        result = moser_service.moser_transport(TorusSineFrame(), f0, f0, 2)

        assert result.particles.shape == (3, 64, 2)
        np.testing.assert_allclose(result.particles[-1], result.particles[0], atol=1e-14)
        np.testing.assert_allclose(result.determinants, 1.0, atol=1e-14)
        assert result.error <= 1e-12

    def test_zero_time_steps_should_raise(self, moser_service):
        f0 = DensitySpec().grid(4, 2)

        with pytest.raises(InvalidInputError):
            moser_service.moser_transport(TranslationFrame(2), f0, f0, 0)

    def test_unequal_masses_should_raise(self, moser_service):
        f0 = DensitySpec().grid(4, 2)

        with pytest.raises(PreconditionError):
            moser_service.moser_transport(
                TranslationFrame(2), f0, f0._replace(values=2 * f0.values), 1
            )

    def test_non_horizontal_flag_should_use_translations(self, moser_service):
        f0 = DensitySpec().grid(4, 2)

        result = moser_service.moser_transport(TorusSineFrame(), f0, f0, 1, horizontal=False)

        assert result.frame_id == "translation"
        assert not result.horizontal

    @pytest.mark.slow
    def test_translation_transport_should_reach_the_target(self, moser_service):
        f0 = DensitySpec(modes=[DensityMode(amplitude=0.3, wavevector=[1, 0])]).grid(64, 2)
        f1 = DensitySpec().grid(64, 2)

        result = moser_service.moser_transport(TranslationFrame(2), f0, f1, 32)

        assert result.error <= 2e-3
        assert result.max_mass_drift <= 1e-6
        assert np.all(result.determinants > 0.0)

    @pytest.mark.slow
    def test_translation_transport_should_converge_under_refinement(self, moser_service):
        errors = []
        for resolution, n_time in [(64, 32), (128, 64)]:
            f0 = DensitySpec(modes=[DensityMode(amplitude=0.3, wavevector=[1, 0])]).grid(
                resolution, 2
            )
            f1 = DensitySpec().grid(resolution, 2)
            result = moser_service.moser_transport(TranslationFrame(2), f0, f1, n_time)
            assert result.max_mass_drift <= 1e-6
            errors.append(result.error)

        assert errors[0] / errors[1] >= 1.5

    @pytest.mark.slow
    def test_horizontal_transport_should_reach_the_target(self, moser_service):
        f0 = DensitySpec(modes=[DensityMode(amplitude=0.2, wavevector=[0, 1])]).grid(64, 2)
        f1 = DensitySpec().grid(64, 2)

        result = moser_service.moser_transport(TorusSineFrame(), f0, f1, 64)

        assert result.error <= 1e-2
        assert result.max_mass_drift <= 1e-6
        assert np.all(result.determinants > 0.0)
