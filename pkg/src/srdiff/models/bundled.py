"""Deterministic landmark and matching configurations shipped with srdiff."""
from typing import Callable, Dict, List, NamedTuple, Optional

import numpy as np

from srdiff.errors import ConfigurationError
from srdiff.models.kernel import KernelSpec
from srdiff.models.landmark import LandmarkState
from srdiff.models.matching import MatchProblem

EXAMPLE_SEED = 7
MOMENTUM_SCALE = 0.3
ANGLE_JITTER = 0.05


class LandmarkExample(NamedTuple):
    """
    A named kernel and initial landmark state.

    * name: Example name.
    * spec: Kernel.
    * state: Initial landmarks and covectors.
    """

    name: str
    spec: KernelSpec
    state: LandmarkState


def _circle(count: int, radius: float, dim: int, rng: np.random.Generator) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(count) / count + ANGLE_JITTER * rng.standard_normal(count)
    q = np.zeros((count, dim))
    q[:, 0] = radius * np.cos(angles)
    q[:, 1] = radius * np.sin(angles)
    if dim > 2:
        q[:, 2:] = ANGLE_JITTER * rng.standard_normal((count, dim - 2))
    return q


def _circle_example(
    name: str, count: int, radius: float, spec: KernelSpec, dim: int
) -> LandmarkExample:
    rng = np.random.default_rng(EXAMPLE_SEED + count)
    q = _circle(count, radius, dim, rng)
    p = MOMENTUM_SCALE * rng.standard_normal((count, dim))
    return LandmarkExample(name, spec, LandmarkState.create(q, p))


def _head_on() -> LandmarkExample:
    state = LandmarkState.create([[-1.0], [1.0]], [[1.0], [-1.0]])
    return LandmarkExample("head-on", KernelSpec.full(1.0), state)


LANDMARK_EXAMPLES: Dict[str, Callable[[], LandmarkExample]] = {
    "full-2": lambda: _circle_example("full-2", 2, 0.5, KernelSpec.full(0.5), 2),
    "full-5": lambda: _circle_example("full-5", 5, 1.0, KernelSpec.full(0.5), 2),
    "full-20": lambda: _circle_example("full-20", 20, 2.0, KernelSpec.full(0.25), 2),
    "heisenberg-2": lambda: _circle_example(
        "heisenberg-2", 2, 0.5, KernelSpec.constrained(1.0, "heisenberg"), 3
    ),
    "heisenberg-5": lambda: _circle_example(
        "heisenberg-5", 5, 1.0, KernelSpec.constrained(1.0, "heisenberg"), 3
    ),
    "heisenberg-20": lambda: _circle_example(
        "heisenberg-20", 20, 2.0, KernelSpec.constrained(1.0, "heisenberg"), 3
    ),
    "head-on": _head_on,
}

CONSERVATION_EXAMPLES: List[str] = [
    "full-2",
    "full-5",
    "full-20",
    "heisenberg-2",
    "heisenberg-5",
    "heisenberg-20",
]

MATCH_EXAMPLES: Dict[str, Callable[[float], MatchProblem]] = {
    "single-landmark": lambda lambda_: MatchProblem.create(
        [[0.0]], [[1.0]], KernelSpec.full(1.0), lambda_
    ),
    "crossing-pair": lambda lambda_: MatchProblem.create(
        [[-0.5, 0.0], [0.5, 0.0]],
        [[0.5, 0.3], [-0.5, -0.3]],
        KernelSpec.full(1.0),
        lambda_,
    ),
}

DEFAULT_MATCH_LAMBDAS: Dict[str, float] = {"single-landmark": 1.0, "crossing-pair": 10.0}


def landmark_example(name: str) -> LandmarkExample:
    """
    Build a bundled landmark example.

    :param name: Example name.
    :return: The example.
    """
    if name not in LANDMARK_EXAMPLES:
        raise ConfigurationError(
            f"Unknown landmark example '{name}', expected one of: {', '.join(LANDMARK_EXAMPLES)}."
        )
    return LANDMARK_EXAMPLES[name]()


def match_example(name: str, lambda_: Optional[float] = None) -> MatchProblem:
    """
    Build a bundled matching problem.

    :param name: Example name.
    :param lambda_: Penalty weight, the example default when not given.
    :return: The problem.
    """
    if name not in MATCH_EXAMPLES:
        raise ConfigurationError(
            f"Unknown matching example '{name}', expected one of: {', '.join(MATCH_EXAMPLES)}."
        )
    return MATCH_EXAMPLES[name](lambda_ if lambda_ is not None else DEFAULT_MATCH_LAMBDAS[name])
