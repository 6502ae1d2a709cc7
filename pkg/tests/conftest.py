from __future__ import annotations

import sys


def pytest_terminal_summary(terminalreporter):
    for mod in list(sys.modules.values()):
        results = getattr(mod, "ACCEPTANCE_RESULTS", None)
        if isinstance(results, dict) and results:
            terminalreporter.section("acceptance criteria")
            for k in sorted(results):
                ok, detail = results[k]
                terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
            break
