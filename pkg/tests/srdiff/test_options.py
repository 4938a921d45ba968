"""Unit tests for options.py."""
import pytest
from pydantic import ValidationError

import srdiff.options as under_test


class TestNumericsConfiguration:
    @pytest.mark.parametrize(
        "overrides",
        [{"steps_per_unit_time": 0}, {"moser_substeps": 0}, {"newton_damping": 1.0}],
    )
    def test_invalid_tunables_should_raise(self, overrides):
        with pytest.raises(ValidationError):
            under_test.NumericsConfiguration(**overrides)

    def test_frame_constant_should_default_to_one(self):
        numerics = under_test.NumericsConfiguration(frame_constants={"heisenberg": 2.0})

        assert numerics.frame_constant("heisenberg") == 2.0
        assert numerics.frame_constant("grushin") == 1.0


class TestSrdiffConfiguration:
    def test_saved_configuration_should_be_read_back(self, tmp_path):
        config_file = tmp_path / ".srdiff-local.yml"
        under_test.SrdiffConfiguration(output_dir="results", seed=3).save_yaml_file(config_file)

        config = under_test.SrdiffConfiguration.from_yaml_file(config_file)

        assert config.output_dir == "results"
        assert config.seed == 3

    def test_empty_file_should_leave_everything_unset(self, tmp_path):
        config_file = tmp_path / ".srdiff-local.yml"
        config_file.write_text("")

        config = under_test.SrdiffConfiguration.from_yaml_file(config_file)

        assert config.output_dir is None
        assert config.seed is None
