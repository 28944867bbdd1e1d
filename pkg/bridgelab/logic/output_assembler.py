"""
Output Assembler

Turns reports, path dumps and region maps into the byte-stable output files
(CSV with LF line endings, JSON with declaration-order keys) and produces the
sha256 digests recorded in run manifests.
"""

import csv
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, List, Sequence

from pydantic import BaseModel

from .constants import FILE_DIGITS, TERMINAL_DIGITS
from .contracts import EstimateReport, SuiteReport, VerificationReport

logger = logging.getLogger(__name__)


# =============================================================================
# NUMBER FORMATTING
# =============================================================================

def format_number(value: Any, digits: int = FILE_DIGITS) -> str:
    """Floats with `digits` significant digits; everything else via str()."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.{digits}g}"
    return str(value)


def format_terminal(value: Any) -> str:
    return format_number(value, TERMINAL_DIGITS)


# =============================================================================
# WRITERS
# =============================================================================

def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """RFC-4180-style CSV with LF line endings and round-trip floats."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([format_number(v) for v in row])
            count += 1
    logger.info(f"💾 Wrote {count} rows to {path}")
    return path


def to_json(model: BaseModel) -> str:
    return json.dumps(model.model_dump(mode="json", by_alias=True), indent=2, ensure_ascii=False) + "\n"


def write_json(path: Path, model: BaseModel) -> Path:
    path = Path(path)
    path.write_text(to_json(model), encoding="utf-8")
    logger.info(f"💾 Wrote {path}")
    return path


def sha256_digest(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


# =============================================================================
# TERMINAL SUMMARIES
# =============================================================================

def estimate_line(report: EstimateReport) -> str:
    oracle = "-" if report.oracle_value is None else format_terminal(report.oracle_value)
    z = "-" if report.z_score is None else f"{report.z_score:.2f}"
    return (f"{report.statistic} estimate={format_terminal(report.estimate)} "
            f"se={format_terminal(report.std_error)} oracle={oracle} z={z} {report.verdict.value}")


def suite_summary(report: SuiteReport) -> List[str]:
    lines = [f"suite {report.suite}: {'PASS' if report.passed else 'FAIL'} "
             f"({len(report.estimates)} estimates, {len(report.checks)} checks, "
             f"{len(report.regions)} region points, {len(report.backends)} backend studies)"]
    lines.extend(f"  failing: {name}" for name in report.failures())
    return lines


def verification_summary(report: VerificationReport) -> List[str]:
    lines: List[str] = []
    for suite in report.suites:
        lines.extend(suite_summary(suite))
    lines.append("all gates passed" if report.passed else f"{len(report.failing)} failing gates")
    return lines
