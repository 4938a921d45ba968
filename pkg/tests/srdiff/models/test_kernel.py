"""Unit tests for kernel.py."""
import numpy as np
import pytest
from pydantic import ValidationError

import srdiff.models.kernel as under_test
from srdiff.errors import InvalidInputError


class TestKernelSpec:
    def test_full_kernel_should_have_no_frame(self):
        spec = under_test.KernelSpec.full(0.5)

        assert spec.frame_id is None
        assert spec.to_json() == {"sigma": 0.5, "mode": "full"}

    def test_constrained_kernel_should_name_its_frame(self):
        spec = under_test.KernelSpec.constrained(1.0, "heisenberg")

        assert spec.frame_id == "heisenberg"
        assert spec.to_json() == {"sigma": 1.0, "mode": {"frame": "heisenberg"}}

    def test_kernel_should_parse_from_json(self):
        spec = under_test.KernelSpec.parse_obj({"sigma": 2.0, "mode": {"frame": "grushin"}})

        assert spec == under_test.KernelSpec.constrained(2.0, "grushin")

    @pytest.mark.parametrize("sigma", [0.0, -1.0, float("inf")])
    def test_invalid_sigma_should_raise(self, sigma):
        with pytest.raises(ValidationError):
            under_test.KernelSpec.full(sigma)


class TestDiracMomentum:
    def test_vectors_should_be_promoted_to_one_point(self):
        mom = under_test.DiracMomentum.create([1.0, 2.0], [0.0, 1.0])

        assert mom.count == 1
        assert mom.dim == 2

    def test_mismatched_shapes_should_raise(self):
        with pytest.raises(InvalidInputError):
            under_test.DiracMomentum.create(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_non_finite_values_should_raise(self):
        with pytest.raises(InvalidInputError):
            under_test.DiracMomentum.create([[0.0, 0.0]], [[np.inf, 0.0]])
