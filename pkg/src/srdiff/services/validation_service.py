"""Service to validate command prerequisites."""
import os
from pathlib import Path
from typing import Any, Dict

import inject
from pydantic import ValidationError

from srdiff.errors import ConfigurationError
from srdiff.models.config import ExperimentConfig
from srdiff.services.file_service import FileService


class ValidationService:
    """A service to validate command prerequisites."""

    @inject.autoparams()
    def __init__(self, file_service: FileService) -> None:
        """Initialize the service."""
        self.file_service = file_service

    def load_experiment(self, config_path: Path) -> ExperimentConfig:
        """
        Read and validate an experiment configuration.

        :param config_path: JSON or YAML configuration file.
        :return: The validated configuration.
        """
        if not self.file_service.path_exists(config_path):
            raise ConfigurationError(f"Cannot find configuration file '{config_path}'.")
        contents = self.file_service.read_config_file(config_path)
        return self.validate_experiment(contents)

    @staticmethod
    def validate_experiment(contents: Dict[str, Any]) -> ExperimentConfig:
        """
        Validate configuration contents against the experiment schema.

        :param contents: Parsed configuration.
        :return: The validated configuration.
        """
        try:
            return ExperimentConfig.parse_obj(contents)
        except ValidationError as err:
            raise ConfigurationError(f"Invalid experiment configuration:\n{err}") from err

    def validate_output_dir(self, output_dir: Path) -> None:
        """Check that the output directory exists or can be created, and is writable."""
        try:
            self.file_service.mkdirs(output_dir)
        except OSError as err:
            raise ConfigurationError(f"Cannot create output directory '{output_dir}': {err}.")
        if not os.access(output_dir, os.W_OK):
            raise ConfigurationError(f"Output directory '{output_dir}' is not writable.")
