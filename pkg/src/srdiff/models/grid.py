"""Model of scalar and vector samples on regular grids."""
from __future__ import annotations

from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np

from srdiff.errors import InvalidInputError
from srdiff.models.frame import Domain


class GridField(NamedTuple):
    """
    Samples on the regular grid of N^d nodes lower + extent * i / N.

    Fields transported by a flow keep the node ordering but carry the deformed node positions
    and the quadrature weight of each deformed cell.

    * values: Samples, shape (N,)*d for scalars or (N,)*d + (d,) for vectors.
    * resolution: Nodes per axis N.
    * dim: Dimension d.
    * domain: Domain of the grid; torus grids wrap indices modulo N.
    * lower: Coordinate of the first node on every axis.
    * extent: Side length of the grid box.
    * positions: Deformed node positions, shape (N^d, d), if transported.
    * weights: Quadrature weight of every deformed cell, shape (N^d,), if transported.
    """

    values: np.ndarray
    resolution: int
    dim: int
    domain: Domain = Domain.TORUS
    lower: float = 0.0
    extent: float = 1.0
    positions: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None

    @classmethod
    def create(
        cls,
        values: np.ndarray,
        dim: Optional[int] = None,
        domain: Domain = Domain.TORUS,
        lower: float = 0.0,
        extent: float = 1.0,
    ) -> GridField:
        """
        Build a field on the canonical grid.

        :param values: Samples of shape (N,)*d or (N,)*d + (d,).
        :param dim: Dimension d, the number of axes of the values by default.
        :param domain: Domain of the grid.
        :param lower: Coordinate of the first node.
        :param extent: Side length of the grid box.
        :return: The field.
        """
        values = np.asarray(values, dtype=float)
        shape = values.shape
        if len(shape) == 0 or not np.all(np.isfinite(values)):
            raise InvalidInputError("Grid values must be a finite array.")
        resolution = shape[0]
        dim = len(shape) if dim is None else dim
        expected = (resolution,) * dim
        if shape not in (expected, expected + (dim,)):
            raise InvalidInputError(f"Grid values of shape {shape} are not (N,)*d[+(d,)].")
        return cls(values, resolution, dim, domain, lower, extent)

    @classmethod
    def from_function(
        cls,
        function: Callable[[np.ndarray], np.ndarray],
        resolution: int,
        dim: int,
        domain: Domain = Domain.TORUS,
        lower: float = 0.0,
        extent: float = 1.0,
    ) -> GridField:
        """
        Sample a scalar function of positions of shape (M, d) at the grid nodes.

        :param function: Callable mapping positions (M, d) to values (M,).
        :param resolution: Nodes per axis.
        :param dim: Dimension.
        :param domain: Domain of the grid.
        :param lower: Coordinate of the first node.
        :param extent: Side length of the grid box.
        :return: The field.
        """
        empty = cls(np.zeros((resolution,) * dim), resolution, dim, domain, lower, extent)
        values = np.asarray(function(empty.nodes()), dtype=float)
        return empty._replace(values=values.reshape((resolution,) * dim))

    @property
    def is_scalar(self) -> bool:
        """Whether the field holds one scalar per node."""
        return self.values.ndim == self.dim

    @property
    def spacing(self) -> float:
        """Distance between neighbouring nodes."""
        return self.extent / self.resolution

    @property
    def cell_volume(self) -> float:
        """Volume of a grid cell."""
        return self.spacing**self.dim

    @property
    def node_count(self) -> int:
        """Number of nodes N^d."""
        return self.resolution**self.dim

    def nodes(self) -> np.ndarray:
        """Undeformed node positions in row-major order, shape (N^d, d)."""
        axis = self.lower + self.spacing * np.arange(self.resolution)
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def flat_values(self) -> np.ndarray:
        """Values in row-major node order, shape (N^d,) or (N^d, d)."""
        if self.is_scalar:
            return self.values.reshape(-1)
        return self.values.reshape(-1, self.dim)

    def mass(self) -> float:
        """Integral of a scalar field, using the deformed cell weights when present."""
        if not self.is_scalar:
            raise InvalidInputError("Only scalar fields have a mass.")
        if self.weights is not None:
            return float(np.sum(self.flat_values() * self.weights))
        return float(np.sum(self.values) * self.cell_volume)

    def weighted_mean(self, weights: GridField) -> float:
        """Mean of a scalar field weighted by another scalar field."""
        return float(np.sum(self.values * weights.values) / np.sum(weights.values))

    def csv_lines(self) -> List[str]:
        """
        Render the field as a one-line 'N,d,domain' header and one row-major row per node.

        :return: Lines without terminators.
        """
        lines = [f"{self.resolution},{self.dim},{self.domain.value}"]
        flat = self.flat_values().reshape(self.node_count, -1)
        for row in flat:
            lines.append(",".join(format(float(v), ".17g") for v in row))
        return lines

    @classmethod
    def from_csv_lines(cls, lines: List[str]) -> GridField:
        """
        Read a field rendered by `csv_lines`.

        :param lines: Header and rows.
        :return: The field.
        """
        header = lines[0].strip().split(",")
        if len(header) != 3:
            raise InvalidInputError(f"Grid header must be 'N,d,domain', got '{lines[0]}'.")
        resolution, dim, domain = int(header[0]), int(header[1]), Domain(header[2])
        rows = [[float(v) for v in line.split(",")] for line in lines[1:] if line.strip()]
        if len(rows) != resolution**dim:
            raise InvalidInputError(f"Expected {resolution ** dim} grid rows, got {len(rows)}.")
        values = np.array(rows)
        shape: Tuple[int, ...] = (resolution,) * dim
        if values.shape[1] > 1:
            shape = shape + (values.shape[1],)
        return cls(values.reshape(shape), resolution, dim, domain)
