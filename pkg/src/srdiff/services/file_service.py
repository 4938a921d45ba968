"""A service for reading configurations and writing result files."""
import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
import yaml

from srdiff.errors import ConfigurationError

CSV_FORMAT = ".17g"
YAML_SUFFIXES = {".yml", ".yaml"}


class FileService:
    """A service for working with files."""

    @staticmethod
    def read_config_file(file_path: Path) -> Dict[str, Any]:
        """
        Read a JSON or YAML configuration file into a dictionary.

        :param file_path: Path of the file; '.yml' and '.yaml' files are read as YAML.
        :return: Dictionary of file contents.
        """
        text = file_path.read_text()
        if file_path.suffix in YAML_SUFFIXES:
            try:
                contents = yaml.safe_load(text)
            except yaml.MarkedYAMLError as err:
                mark = err.problem_mark
                where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
                raise ConfigurationError(f"Malformed YAML in {file_path}{where}: {err.problem}")
        else:
            try:
                contents = json.loads(text)
            except json.JSONDecodeError as err:
                raise ConfigurationError(
                    f"Malformed JSON in {file_path} at line {err.lineno}, column {err.colno}: "
                    f"{err.msg}"
                )
        if not isinstance(contents, dict):
            raise ConfigurationError(f"Configuration {file_path} must hold a mapping.")
        return contents

    @staticmethod
    def write_json_file(file_path: Path, contents: Dict[str, Any]) -> None:
        """Write the given contents as indented JSON with sorted keys."""
        FileService.mkdirs(file_path.parent)
        with open(file_path, "w") as file_contents:
            json.dump(FileService.to_plain(contents), file_contents, indent=2, sort_keys=True)
            file_contents.write("\n")

    @staticmethod
    def to_plain(value: Any) -> Any:
        """Convert numpy values to JSON types, with non-finite floats as null."""
        if isinstance(value, dict):
            return {str(key): FileService.to_plain(item) for key, item in value.items()}
        if isinstance(value, (list, tuple)):
            return [FileService.to_plain(item) for item in value]
        if isinstance(value, np.ndarray):
            return FileService.to_plain(value.tolist())
        if isinstance(value, np.generic):
            value = value.item()
        if isinstance(value, float) and not np.isfinite(value):
            return None
        return value

    @staticmethod
    def write_csv_file(
        file_path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]
    ) -> None:
        """
        Write rows of numbers with full round-trip precision.

        :param file_path: File to write.
        :param header: Column names.
        :param rows: Rows; floats are written with 17 significant digits.
        """
        FileService.mkdirs(file_path.parent)
        with open(file_path, "w", newline="") as file_contents:
            writer = csv.writer(file_contents, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow(
                    [
                        format(value, CSV_FORMAT) if isinstance(value, float) else value
                        for value in row
                    ]
                )

    @staticmethod
    def write_lines(file_path: Path, lines: List[str]) -> None:
        """Write lines with newline terminators."""
        FileService.mkdirs(file_path.parent)
        file_path.write_text("".join(f"{line}\n" for line in lines))

    @staticmethod
    def read_lines(file_path: Path) -> List[str]:
        """Read the lines of a text file."""
        return file_path.read_text().splitlines()

    @staticmethod
    def sha256(file_path: Path) -> str:
        """Hex digest of the bytes of a file."""
        return hashlib.sha256(file_path.read_bytes()).hexdigest()

    @staticmethod
    def path_exists(path: Path) -> bool:
        """Determine if the given path exists."""
        return path.exists()

    @staticmethod
    def mkdirs(target: Path) -> None:
        """Create directories for path if they don't exist."""
        target.mkdir(parents=True, exist_ok=True)
