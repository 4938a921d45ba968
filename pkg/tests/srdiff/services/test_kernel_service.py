"""Unit tests for kernel_service.py."""
import numpy as np
import pytest

import srdiff.services.kernel_service as under_test
from srdiff.errors import DegenerateConfigurationError, InvalidInputError
from srdiff.models.kernel import DiracMomentum, KernelSpec
from srdiff.options import SrdiffOptions
from srdiff.services.frame_service import FrameService


@pytest.fixture()
def kernel_service():
    options = SrdiffOptions()
    return under_test.KernelService(FrameService(options), options)


class TestGaussianScalar:
    def test_coincident_points_should_give_one(self):
        assert under_test.KernelService.gaussian_scalar([1.0, 2.0], [1.0, 2.0], 0.3) == 1.0

    def test_known_value(self):
        value = under_test.KernelService.gaussian_scalar([0.0, 0.0], [1.0, 1.0], 0.5)

        assert value == pytest.approx(np.exp(-2.0))

    def test_non_finite_input_should_raise(self):
        with pytest.raises(InvalidInputError):
            under_test.KernelService.gaussian_scalar([np.nan], [0.0], 1.0)


class TestKernelApply:
    def test_full_kernel_should_scale_the_covector(self, kernel_service):
        spec = KernelSpec.full(1.0)

        value = kernel_service.kernel_apply(spec, [1.0, 0.0], [0.0, 0.0], [2.0, -1.0])

        np.testing.assert_allclose(value, np.exp(-0.5) * np.array([2.0, -1.0]))

    def test_heisenberg_kernel_should_give_a_horizontal_vector(self, kernel_service):
        spec = KernelSpec.constrained(1.0, "heisenberg")
        x = np.array([0.5, 0.0, 0.0])

        value = kernel_service.kernel_apply(spec, x, x, [0.0, 0.0, 1.0])

        # p(X_1) = 0, p(X_2) = x = 0.5 so the field is 0.5 X_2(x)
        np.testing.assert_allclose(value, [0.0, 0.5, 0.25])

    def test_covector_of_the_wrong_dimension_should_raise(self, kernel_service):
        with pytest.raises(InvalidInputError):
            kernel_service.kernel_apply(KernelSpec.full(1.0), [0.0, 0.0], [0.0, 0.0], [1.0])


class TestGramMatrix:
    @pytest.mark.parametrize(
        "spec,dim",
        [
            (KernelSpec.full(0.5), 2),
            (KernelSpec.constrained(1.0, "heisenberg"), 3),
            (KernelSpec.constrained(0.5, "grushin"), 2),
        ],
    )
    def test_gram_matrix_should_be_symmetric_positive_semi_definite(
        self, kernel_service, spec, dim
    ):
        rng = np.random.default_rng(11)
        for _ in range(20):
            points = rng.uniform(-1.0, 1.0, (5, dim))

            gram = kernel_service.gram_matrix(spec, points)

            np.testing.assert_allclose(gram, gram.T, atol=1e-14)
            assert np.min(np.linalg.eigvalsh(gram)) >= -1e-10 * np.max(np.abs(gram))

    def test_blocks_should_match_kernel_block(self, kernel_service):
        spec = KernelSpec.constrained(1.0, "torus_sine")
        points = np.array([[0.1, 0.2], [0.7, 0.4]])

        gram = kernel_service.gram_matrix(spec, points)

        np.testing.assert_allclose(
            gram[0:2, 2:4], kernel_service.kernel_block(spec, points[0], points[1])
        )

    def test_duplicate_points_should_raise(self, kernel_service):
        with pytest.raises(DegenerateConfigurationError):
            kernel_service.gram_matrix(KernelSpec.full(1.0), [[0.0, 1.0], [0.0, 1.0]])


class TestRkhsNormSq:
    def test_norm_should_match_the_gram_quadratic_form(self, kernel_service):
        spec = KernelSpec.constrained(1.0, "heisenberg")
        rng = np.random.default_rng(5)
        mom = DiracMomentum.create(rng.normal(size=(4, 3)), rng.normal(size=(4, 3)))

        norm_sq = kernel_service.rkhs_norm_sq(spec, mom)

        flat = mom.covectors.ravel()
        expected = flat @ kernel_service.gram_matrix(spec, mom.points) @ flat
        assert norm_sq == pytest.approx(expected, rel=1e-12)
        assert norm_sq >= 0.0

    def test_single_full_landmark_should_give_the_squared_covector(self, kernel_service):
        mom = DiracMomentum.create([[0.3, 0.4]], [[3.0, 4.0]])

        assert kernel_service.rkhs_norm_sq(KernelSpec.full(1.0), mom) == pytest.approx(25.0)
