"""Report containers and deterministic CSV output.

CSV bodies are byte-reproducible: fixed column order, floats at 17
significant digits, LF line endings, no timestamps.  Wall-clock metadata
belongs in a separate file, never in the CSV body.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field


def fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, int):
        return str(value)
    return str(value)


def write_csv(path, columns, rows, preamble: str | None = None):
    """Write rows (iterables matching columns) with a fixed format."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        if preamble:
            fh.write(f"# {preamble}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


@dataclass(frozen=True)
class EstimateReport:
    """One verified inequality or identity: sides, constant, verdict."""
    name: str
    lhs: float
    rhs: float
    fitted_constant: float
    tolerance: float
    passed: bool
    provenance: dict = field(default_factory=dict)


@dataclass
class CheckResult:
    name: str
    status: str                  # pass | fail | skipped
    measured: float
    threshold: float
    detail: str = ""

    def __post_init__(self):
        if self.status not in ("pass", "fail", "skipped"):
            raise ValueError("status must be pass, fail or skipped")
        if self.status == "skipped" and not self.detail:
            raise ValueError("skipped checks must carry a reason")


@dataclass
class SuiteResult:
    suite: str
    checks: list
    wall_time_s: float = 0.0
    csv_files: list = field(default_factory=list)

    @property
    def status(self) -> str:
        return "fail" if any(c.status == "fail" for c in self.checks) else "pass"


__all__ = ["fmt", "write_csv", "EstimateReport", "CheckResult", "SuiteResult"]
