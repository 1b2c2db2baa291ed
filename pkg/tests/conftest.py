from __future__ import annotations

from collections import defaultdict

import pytest

# criterion number -> (title, [(part, ok, detail)])
_CRITERIA: dict[int, tuple[str, list]] = {}


class CriterionLog:
    def record(self, number: int, title: str, part: str, ok: bool, detail: str) -> bool:
        _CRITERIA.setdefault(number, (title, []))[1].append((part, bool(ok), detail))
        return bool(ok)


@pytest.fixture(scope="session")
def criteria() -> CriterionLog:
    return CriterionLog()


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, parts = _CRITERIA[n]
        ok = all(p[1] for p in parts)
        tr.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}")
        groups = defaultdict(list)
        for part, good, detail in parts:
            groups[part].append((good, detail))
        for part, rows in groups.items():
            for good, detail in rows:
                tr.write_line(f"    {'ok  ' if good else 'FAIL'} {part}: {detail}")
