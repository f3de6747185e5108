from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label, text): numbered acceptance criterion")


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None and (report.when == "call" or (report.when == "setup" and not report.passed)):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _ACCEPTANCE.append((marker.args[0], marker.args[1], report.outcome, report.duration, detail))
    return report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, text, outcome, duration, detail in sorted(_ACCEPTANCE, key=lambda r: _key(r[0])):
        verdict = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        line = f"[{verdict}] criterion {label}: {text} ({duration:.1f} s)"
        terminalreporter.write_line(line + (f" | {detail}" if detail else ""))


def _key(label):
    digits = label[: len(label) - len(label.lstrip("0123456789"))]
    return (int(digits or 0), label)
