"""Models of verification checks."""
from typing import Any, Dict, List, NamedTuple


class CheckResult(NamedTuple):
    """
    Outcome of one verification check.

    * name: Check name.
    * passed: Whether the residual met the threshold.
    * residual: Measured residual.
    * threshold: Threshold the residual is compared against.
    * details: Extra values for the report.
    """

    name: str
    passed: bool
    residual: float
    threshold: float
    details: Dict[str, Any] = {}

    def to_json(self) -> Dict[str, Any]:
        """Serialize the result."""
        return {
            "passed": self.passed,
            "residual": self.residual,
            "threshold": self.threshold,
            "details": self.details,
        }


class VerificationReport(NamedTuple):
    """
    Results of a verification run.

    * seed: Seed of the randomized checks.
    * checks: Check results in run order.
    """

    seed: int
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        """Whether every check passed."""
        return all(check.passed for check in self.checks)

    def residuals(self) -> Dict[str, float]:
        """Residual of every check by name."""
        return {check.name: check.residual for check in self.checks}

    def to_json(self) -> Dict[str, Any]:
        """Serialize the report."""
        return {
            "seed": self.seed,
            "passed": self.passed,
            "checks": {check.name: check.to_json() for check in self.checks},
        }
