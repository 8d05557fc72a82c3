from __future__ import annotations

from hypothesis import HealthCheck, settings

# property suites are seeded: derandomize makes every run draw the same examples
settings.register_profile(
    "seeded",
    derandomize=True,
    deadline=None,
    max_examples=30,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("seeded")

# criterion number -> list of (clause, passed)
ACCEPTANCE: dict[int, list[tuple[str, bool]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        clauses = ACCEPTANCE[n]
        ok = all(p for _, p in clauses)
        failed = [c for c, p in clauses if not p]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += "  (" + "; ".join(failed) + ")"
        terminalreporter.write_line(line)
