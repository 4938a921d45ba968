"""Unit tests for verification.py."""
import srdiff.models.verification as under_test


def build_report(*passed):
    checks = [
        under_test.CheckResult(f"check_{i}", value, 1e-3 * (i + 1), 1e-2)
        for i, value in enumerate(passed)
    ]
    return under_test.VerificationReport(seed=42, checks=checks)


class TestVerificationReport:
    def test_report_should_pass_when_every_check_passes(self):
        assert build_report(True, True).passed

    def test_report_should_fail_when_a_check_fails(self):
        assert not build_report(True, False).passed

    def test_residuals_should_be_keyed_by_name(self):
        assert build_report(True, False).residuals() == {"check_0": 1e-3, "check_1": 2e-3}

    def test_json_should_hold_every_check(self):
        result = build_report(False).to_json()

        assert result["seed"] == 42
        assert not result["passed"]
        assert result["checks"]["check_0"] == {
            "passed": False,
            "residual": 1e-3,
            "threshold": 1e-2,
            "details": {},
        }
