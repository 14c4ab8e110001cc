import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any

from pandas import DataFrame


@dataclass
class CheckRow:
    """One inequality `estimate <= bound` evaluated at one location, with its statistical margin."""

    location: dict[str, Any]
    estimate: float
    bound: float
    margin: float
    provenance: str

    @property
    def slack(self) -> float:
        value = self.bound + self.margin - self.estimate
        return -math.inf if math.isnan(value) else value

    @property
    def passed(self) -> bool:
        return self.estimate <= self.bound + self.margin


@dataclass
class VerificationReport:
    """Outcome of a numerical check of one inequality over a grid of locations.

    The headline fields describe the worst row (smallest slack), so `passed` can be
    recomputed as `estimate <= bound + margin` from the report alone.
    """

    claim: str
    estimate: float
    bound: float
    margin: float
    location: dict[str, Any]
    passed: bool
    provenance: str
    rows: list[CheckRow]
    notes: list[str] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    @staticmethod
    def from_rows(claim: str, rows: list[CheckRow], notes: list[str] | None = None) -> "VerificationReport":
        if not rows:
            raise ValueError(f"No rows to build a report for claim {claim!r}")
        worst = min(rows, key=lambda r: r.slack)
        return VerificationReport(
            claim=claim,
            estimate=worst.estimate,
            bound=worst.bound,
            margin=worst.margin,
            location=worst.location,
            passed=worst.passed,
            provenance=worst.provenance,
            rows=rows,
            notes=list(notes or []),
        )

    @staticmethod
    def combine(claim: str, reports: list["VerificationReport"]) -> "VerificationReport":
        rows: list[CheckRow] = []
        notes: list[str] = []
        for report in reports:
            for row in report.rows:
                rows.append(dataclasses.replace(row, location={"claim": report.claim, **row.location}))
            notes.extend(note for note in report.notes if note not in notes)
        return VerificationReport.from_rows(claim, rows, notes)

    def recompute_passed(self) -> bool:
        return self.estimate <= self.bound + self.margin

    def to_json(self) -> dict:
        # noinspection PyTypeChecker
        data = dataclasses.asdict(self)
        data.pop("metadata")
        return data

    @staticmethod
    def from_json(data: dict) -> "VerificationReport":
        rows = [CheckRow(**row) for row in data.pop("rows")]
        return VerificationReport(rows=rows, **data)

    def to_frame(self) -> DataFrame:
        records = []
        for row in self.rows:
            record: dict[str, Any] = {}
            for key, value in row.location.items():
                record[key] = " ".join(f"{v:.17g}" for v in value) if isinstance(value, list) else value
            record.update(
                estimate=row.estimate,
                bound=row.bound,
                margin=row.margin,
                passed=row.passed,
                provenance=row.provenance,
            )
            records.append(record)
        return DataFrame(records)
