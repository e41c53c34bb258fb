import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion -> list of (check name, passed, detail); filled by test_acceptance.py
CRITERIA = {}


def record(criterion, name, ok, detail=""):
    CRITERIA.setdefault(criterion, []).append((name, bool(ok), detail))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    from test_acceptance import TITLES

    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(CRITERIA):
        checks = CRITERIA[key]
        failed = [c for c in checks if not c[1]]
        status = "PASS" if not failed else "FAIL"
        if key == 8:
            status = "REPORT"
        line = f"criterion {key} {status}: {TITLES[key]} ({len(checks) - len(failed)}/{len(checks)} checks)"
        if failed and key != 8:
            line += "; failing: " + ", ".join(f"{n} [{d}]" for n, _, d in failed)
        tr.write_line(line)
