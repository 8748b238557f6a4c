import sys
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, with sub-check details."""
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for criterion in sorted(results):
        checks = results[criterion]
        ok = all(p for _, p, _ in checks)
        name = f"criterion {criterion}" if criterion.isdigit() else criterion
        tr.write_line(f"{name}: {'PASS' if ok else 'FAIL'}")
        for label, passed, detail in checks:
            tr.write_line(f"    {'PASS' if passed else 'FAIL'}  {label}: {detail}")
