"""Collects one summary line per acceptance criterion."""

RESULTS: dict[int, str] = {}


def record(number: int, title: str, passed: bool, detail: str) -> str:
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    RESULTS[number] = line
    print(line)
    return line
