"""Verification reports, the append-only campaign ledger, and CSV export."""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

CSV_COLUMNS = [
    "identity",
    "estimate",
    "stderr",
    "reference",
    "reference_label",
    "difference",
    "verdict",
    "count",
    "seed",
    "config_digest",
]


def config_digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one verified identity.

    references maps descriptive labels to closed-form values; the first
    entry is the primary reference the verdict is judged against.
    verdict is pass iff |difference| <= max(3 stderr, bias_allowance).
    """

    identity: str
    estimate: float
    stderr: float
    count: int
    references: dict
    seed: int
    config: dict = field(default_factory=dict)
    bias_allowance: float = 0.0
    notes: str = ""

    @property
    def reference_label(self) -> str:
        return next(iter(self.references)) if self.references else ""

    @property
    def reference(self) -> float:
        return next(iter(self.references.values())) if self.references else 0.0

    @property
    def difference(self) -> float:
        return abs(self.estimate - self.reference)

    @property
    def verdict(self) -> str:
        if not np.isfinite(self.estimate):
            return "fail"
        if not np.isfinite(self.stderr):
            return "inconclusive"
        if self.difference <= max(3.0 * self.stderr, self.bias_allowance):
            return "pass"
        return "fail"

    @property
    def digest(self) -> str:
        return config_digest(self.config)

    def to_json(self) -> str:
        doc = asdict(self)
        doc["difference"] = self.difference
        doc["verdict"] = self.verdict
        doc["config_digest"] = self.digest
        return json.dumps(doc, sort_keys=True, default=float)

    def summary_line(self) -> str:
        return (
            f"{self.verdict.upper():12s} {self.identity:42s} "
            f"est={self.estimate:+.6e} ref={self.reference:+.6e} "
            f"diff={self.difference:.2e} 3se={3 * self.stderr:.2e} "
            f"bias={self.bias_allowance:.2e}"
        )


def exact_report(identity: str, residual: float, tolerance: float, seed: int = 0,
                 config: dict | None = None, notes: str = "") -> VerificationReport:
    """Report for a machine-precision identity: pass iff residual <= tolerance."""
    return VerificationReport(
        identity,
        float(residual),
        0.0,
        1,
        {"exact-zero": 0.0},
        seed,
        config or {},
        bias_allowance=tolerance,
        notes=notes,
    )


def append_ledger(path: str, reports) -> None:
    with open(path, "a") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")


def read_ledger(path: str) -> list:
    if not os.path.exists(path):
        raise FileNotFoundError(f"ledger {path} does not exist")
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def ledger_row_to_csv(doc: dict) -> dict:
    refs = doc.get("references", {})
    label = next(iter(refs)) if refs else ""
    return {
        "identity": doc["identity"],
        "estimate": repr(float(doc["estimate"])),
        "stderr": repr(float(doc["stderr"])),
        "reference": repr(float(refs[label])) if refs else "",
        "reference_label": label,
        "difference": repr(float(doc["difference"])),
        "verdict": doc["verdict"],
        "count": doc["count"],
        "seed": doc["seed"],
        "config_digest": doc["config_digest"],
    }


def write_csv(path: str, docs) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for doc in docs:
            writer.writerow(ledger_row_to_csv(doc))
