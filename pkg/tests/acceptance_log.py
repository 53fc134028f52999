"""Collects one verdict line per acceptance criterion for the end-of-run summary."""

LINES: list[str] = []


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"CRITERION {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    print(line)
    LINES.append(line)
