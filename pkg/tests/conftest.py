"""Collects one verdict per acceptance criterion and prints them after the run."""

CRITERIA: dict[int, tuple[bool, str, str]] = {}


def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
    CRITERIA[number] = (bool(ok), title, detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(CRITERIA):
        ok, title, detail = CRITERIA[number]
        line = f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)
