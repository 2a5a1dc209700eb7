"""Structured experiment reports with CSV and JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

SCHEMA_VERSION = "1.0"


@dataclass
class Verdict:
    """Outcome of one check; ``passed`` is None when the data were uninformative."""

    criterion: str
    check: str
    passed: Optional[bool]
    detail: str = ""


@dataclass
class ExperimentReport:
    name: str
    config: dict
    rows: list[dict] = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def add_verdict(self, criterion: str, check: str, passed: Optional[bool], detail: str = "") -> Verdict:
        v = Verdict(criterion, check, None if passed is None else bool(passed), detail)
        self.verdicts.append(v)
        return v

    @property
    def passed(self) -> bool:
        """True when every verdict passed; uninformative verdicts count as not passed."""
        return all(v.passed is True for v in self.verdicts)

    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.name,
            "config": self.config,
            "rows": self.rows,
            "fits": self.fits,
            "verdicts": [asdict(v) for v in self.verdicts],
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(_clean(self.to_dict()), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        """Row table preceded by a schema header line."""
        buf = io.StringIO()
        buf.write(f"# schema_version={SCHEMA_VERSION} experiment={self.name}\n")
        keys: list[str] = []
        for row in self.rows:
            for k in row:
                if k not in keys:
                    keys.append(k)
        writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: _fmt(row.get(k, "")) for k in keys})
        for v in self.verdicts:
            status = "uninformative" if v.passed is None else ("pass" if v.passed else "fail")
            buf.write(f"# verdict {v.criterion} {v.check}: {status} {v.detail}\n")
        return buf.getvalue()

    def write(self, out_dir, fmt: str = "json") -> Path:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        path = d / f"{self.name}.{fmt}"
        path.write_text(self.to_json() if fmt == "json" else self.to_csv())
        return path

    def summary(self) -> str:
        lines = [f"[{self.name}]"]
        for v in self.verdicts:
            status = "UNINFORMATIVE" if v.passed is None else ("PASS" if v.passed else "FAIL")
            lines.append(f"  {v.criterion} {v.check}: {status} {v.detail}")
        return "\n".join(lines)


def _fmt(x: Any) -> Any:
    if isinstance(x, float):
        return repr(x)
    return x


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        try:
            obj = obj.item()
        except (ValueError, AttributeError):
            obj = obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj
