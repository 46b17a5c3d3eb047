from __future__ import annotations


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        status, title = mod.RESULTS[num]
        terminalreporter.write_line(f"criterion {num:2d} {status}  {title}")
