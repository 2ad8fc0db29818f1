"""Report serialization.

Numeric JSON output always uses 17-significant-digit decimals so regression
snapshots are byte-stable and round-trip to the exact same doubles; the
stdlib encoder's shortest-repr floats would also round-trip but change shape
across value ranges, so we emit the document ourselves (JSON is small).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def format17(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r} to JSON")
    return format(x, ".17g")


def _emit(obj, parts: list[str], indent: int, pad: str) -> None:
    here = pad * indent
    inner = pad * (indent + 1)
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, str):
        import json as _json

        parts.append(_json.dumps(obj))
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        parts.append(format17(obj))
    elif isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{\n")
        for idx, (key, value) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            import json as _json

            parts.append(inner + _json.dumps(key) + ": ")
            _emit(value, parts, indent + 1, pad)
            parts.append(",\n" if idx < len(obj) - 1 else "\n")
        parts.append(here + "}")
    elif isinstance(obj, (list, tuple)):
        if not len(obj):
            parts.append("[]")
            return
        parts.append("[\n")
        for idx, value in enumerate(obj):
            parts.append(inner)
            _emit(value, parts, indent + 1, pad)
            parts.append(",\n" if idx < len(obj) - 1 else "\n")
        parts.append(here + "]")
    else:
        import numpy as np

        if isinstance(obj, np.ndarray):
            _emit(obj.tolist(), parts, indent, pad)
        elif isinstance(obj, np.bool_):
            parts.append("true" if obj else "false")
        elif isinstance(obj, np.floating):
            _emit(float(obj), parts, indent, pad)
        elif isinstance(obj, np.integer):
            _emit(int(obj), parts, indent, pad)
        else:
            raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def dumps17(obj, indent: int = 2) -> str:
    parts: list[str] = []
    _emit(obj, parts, 0, " " * indent)
    parts.append("\n")
    return "".join(parts)


@dataclass
class ReportRow:
    """One verification cell: residuals, feasibility and the two constants."""

    algorithm: str
    metric: str
    size: int
    residual_identity: float
    residual_composite: float
    feasible: bool
    certified_rate: float
    paper_rate: float
    observed_worst_ratio: float | None
    runtime_ms: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "metric": self.metric,
            "size": self.size,
            "residual_identity": self.residual_identity,
            "residual_composite": self.residual_composite,
            "feasible": self.feasible,
            "certified_rate": self.certified_rate,
            "paper_rate": self.paper_rate,
            "observed_worst_ratio": self.observed_worst_ratio,
            "runtime_ms": self.runtime_ms,
            "pass": self.passed,
        }

    CSV_FIELDS = (
        "algorithm", "metric", "size", "residual_identity", "residual_composite",
        "feasible", "certified_rate", "paper_rate", "observed_worst_ratio",
        "runtime_ms", "pass",
    )

    def csv_row(self) -> list[str]:
        doc = self.to_dict()
        doc["pass"] = doc.pop("pass")
        out = []
        for name in self.CSV_FIELDS:
            value = doc[name]
            if isinstance(value, bool):
                out.append(str(value).lower())
            elif isinstance(value, float):
                out.append(format17(value))
            elif value is None:
                out.append("")
            else:
                out.append(str(value))
        return out


def write_rollup_csv(rows: list[ReportRow], path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ReportRow.CSV_FIELDS)
        for row in rows:
            writer.writerow(row.csv_row())
