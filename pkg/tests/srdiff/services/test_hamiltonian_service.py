"""Unit tests for hamiltonian_service.py."""
import numpy as np
import pytest

import srdiff.services.hamiltonian_service as under_test
from srdiff.errors import DegenerateConfigurationError, DegenerateCovectorError
from srdiff.models.frame import GrushinFrame, HeisenbergFrame
from srdiff.models.kernel import DiracMomentum, KernelSpec
from srdiff.models.landmark import LandmarkState
from srdiff.options import SrdiffOptions
from srdiff.services.frame_service import FrameService
from srdiff.services.kernel_service import KernelService

SPECS = [
    (KernelSpec.full(0.5), 2),
    (KernelSpec.constrained(1.0, "heisenberg"), 3),
    (KernelSpec.constrained(0.7, "torus_sine"), 2),
]


@pytest.fixture()
def kernel_service():
    options = SrdiffOptions()
    return KernelService(FrameService(options), options)


@pytest.fixture()
def hamiltonian_service(kernel_service):
    return under_test.HamiltonianService(kernel_service)


def random_state(rng, count, dim):
    return LandmarkState.create(rng.uniform(-1.0, 1.0, (count, dim)), rng.normal(size=(count, dim)))


class TestHamiltonian:
    @pytest.mark.parametrize("spec,dim", SPECS)
    def test_hamiltonian_should_be_half_the_rkhs_norm(
        self, hamiltonian_service, kernel_service, spec, dim
    ):
        state = random_state(np.random.default_rng(1), 4, dim)

        value = hamiltonian_service.hamiltonian(spec, state)

        norm_sq = kernel_service.rkhs_norm_sq(spec, DiracMomentum.create(state.q, state.p))
        assert value == pytest.approx(0.5 * norm_sq, rel=1e-12)

    def test_duplicate_landmarks_should_raise(self, hamiltonian_service):
        state = LandmarkState.create([[0.0, 0.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]])

        with pytest.raises(DegenerateConfigurationError):
            hamiltonian_service.hamiltonian(KernelSpec.full(1.0), state)


class TestSymplecticGradient:
    def test_single_full_landmark_should_move_straight(self, hamiltonian_service):
        state = LandmarkState.create([[0.2, -0.4]], [[1.5, 0.5]])

        dq, dp = hamiltonian_service.symplectic_gradient(KernelSpec.full(1.0), state)

        np.testing.assert_allclose(dq, state.p)
        np.testing.assert_allclose(dp, 0.0, atol=1e-15)

    @pytest.mark.parametrize("spec,dim", SPECS)
    def test_gradient_should_match_central_differences(self, hamiltonian_service, spec, dim):
        rng = np.random.default_rng(2)
        state = random_state(rng, 3, dim)
        step = 1e-6

        grad_q, grad_p = hamiltonian_service.gradient(spec, state.q, state.p)

        for index in np.ndindex(state.q.shape):
            offset = np.zeros_like(state.q)
            offset[index] = step
            numeric_q = (
                hamiltonian_service.energy(spec, state.q + offset, state.p)
                - hamiltonian_service.energy(spec, state.q - offset, state.p)
            ) / (2.0 * step)
            numeric_p = (
                hamiltonian_service.energy(spec, state.q, state.p + offset)
                - hamiltonian_service.energy(spec, state.q, state.p - offset)
            ) / (2.0 * step)
            assert grad_q[index] == pytest.approx(numeric_q, rel=1e-5, abs=1e-7)
            assert grad_p[index] == pytest.approx(numeric_p, rel=1e-5, abs=1e-7)


class TestHessianVectorProduct:
    @pytest.mark.parametrize("spec,dim", SPECS)
    def test_product_should_match_differences_of_the_gradient(
        self, hamiltonian_service, spec, dim
    ):
        rng = np.random.default_rng(3)
        state = random_state(rng, 3, dim)
        dq = rng.normal(size=state.q.shape)
        dp = rng.normal(size=state.p.shape)
        step = 1e-6

        hvp_q, hvp_p = hamiltonian_service.hessian_vector_product(spec, state.q, state.p, dq, dp)

        forward = hamiltonian_service.gradient(spec, state.q + step * dq, state.p + step * dp)
        backward = hamiltonian_service.gradient(spec, state.q - step * dq, state.p - step * dp)
        np.testing.assert_allclose(hvp_q, (forward[0] - backward[0]) / (2 * step), atol=1e-6)
        np.testing.assert_allclose(hvp_p, (forward[1] - backward[1]) / (2 * step), atol=1e-6)


class TestFieldFromMomenta:
    @pytest.mark.parametrize("spec,dim", SPECS)
    def test_field_at_the_landmarks_should_be_their_velocity(
        self, hamiltonian_service, spec, dim
    ):
        state = random_state(np.random.default_rng(4), 3, dim)

        velocity = hamiltonian_service.field_from_momenta(spec, state, state.q)

        expected = hamiltonian_service.gradient(spec, state.q, state.p)[1]
        np.testing.assert_allclose(velocity, expected)

    def test_single_point_should_keep_its_shape(self, hamiltonian_service):
        state = LandmarkState.create([[0.0, 0.0]], [[1.0, 0.0]])

        velocity = hamiltonian_service.field_from_momenta(KernelSpec.full(1.0), state, np.ones(2))

        np.testing.assert_allclose(velocity, [np.exp(-1.0), 0.0])

    @pytest.mark.parametrize("spec,dim", SPECS)
    def test_jacobian_should_match_central_differences(self, hamiltonian_service, spec, dim):
        rng = np.random.default_rng(6)
        state = random_state(rng, 3, dim)
        x = rng.uniform(-1.0, 1.0, dim)
        step = 1e-6

        jacobian = hamiltonian_service.field_jacobian(spec, state, x)

        numeric = np.stack(
            [
                (
                    hamiltonian_service.field_from_momenta(spec, state, x + step * e)
                    - hamiltonian_service.field_from_momenta(spec, state, x - step * e)
                )
                / (2.0 * step)
                for e in np.eye(dim)
            ],
            axis=-1,
        )
        np.testing.assert_allclose(jacobian, numeric, atol=1e-6)


class TestAbnormalResidual:
    def test_covector_annihilating_the_grushin_distribution_should_vanish(self):
        state = LandmarkState.create([[0.0, 0.3]], [[0.0, 1.0]])
        trajectory = under_test.HamiltonianService.stationary_trajectory(state, samples=5)

        residual = under_test.HamiltonianService.abnormal_residual(GrushinFrame(), trajectory)

        assert trajectory.sample_count == 5
        assert residual == 0.0

    def test_generic_covector_should_not_vanish(self):
        state = LandmarkState.create([[0.5, 0.3]], [[0.0, 1.0]])
        trajectory = under_test.HamiltonianService.stationary_trajectory(state)

        residual = under_test.HamiltonianService.abnormal_residual(GrushinFrame(), trajectory)

        assert residual == pytest.approx(0.5)

    def test_zero_covector_should_raise(self):
        state = LandmarkState.create([[0.0, 0.3]], [[0.0, 0.0]])
        trajectory = under_test.HamiltonianService.stationary_trajectory(state)

        with pytest.raises(DegenerateCovectorError):
            under_test.HamiltonianService.abnormal_residual(GrushinFrame(), trajectory)


class TestFrameGeodesic:
    def test_frame_hamiltonian_should_sum_the_squared_pairings(self):
        x = np.array([2.0, 0.0, 0.0])

        a = [1.0, 1.0, 1.0]

        value = under_test.HamiltonianService.frame_hamiltonian(HeisenbergFrame(), x, a)

        # a(X_1) = 1 and a(X_2) = 1 + x = 3
        assert value == pytest.approx(5.0)

    def test_frame_rhs_should_be_the_hamiltonian_vector_field(self):
        frame = HeisenbergFrame()
        rhs = under_test.HamiltonianService.frame_geodesic_rhs(frame)
        x = np.array([0.3, -0.1, 0.2])
        a = np.array([0.5, -1.0, 0.7])
        step = 1e-6

        derivative = rhs(0.0, np.concatenate([x, a]))

        def h(x_, a_):
            return under_test.HamiltonianService.frame_hamiltonian(frame, x_, a_)

        for axis, e in enumerate(np.eye(3)):
            dh_da = (h(x, a + step * e) - h(x, a - step * e)) / (2 * step)
            dh_dx = (h(x + step * e, a) - h(x - step * e, a)) / (2 * step)
            assert derivative[axis] == pytest.approx(dh_da, abs=1e-8)
            assert derivative[3 + axis] == pytest.approx(-dh_dx, abs=1e-8)
