"""Named estimate values with optional armed assertions, serializable to JSON/CSV."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterator


@dataclass
class Entry:
    value: float
    tolerance: float | None = None
    passed: bool | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"value": self.value}
        if self.tolerance is not None:
            out["tolerance"] = self.tolerance
        if self.passed is not None:
            out["pass"] = self.passed
        if self.metadata:
            out["metadata"] = self.metadata
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Entry":
        return cls(data["value"], data.get("tolerance"), data.get("pass"), dict(data.get("metadata", {})))


@dataclass
class EstimateReport:
    entries: dict[str, Entry] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)

    def add(
        self,
        name: str,
        value: float,
        tolerance: float | None = None,
        lower: float | None = None,
        **metadata: Any,
    ) -> Entry:
        """Record ``value``; arms ``value <= tolerance`` (and ``value >= lower``) when given."""
        value = float(value)
        passed = None
        if tolerance is not None or lower is not None:
            passed = math.isfinite(value)
            if tolerance is not None:
                passed = passed and value <= tolerance
            if lower is not None:
                passed = passed and value >= lower
                metadata.setdefault("lower", lower)
        entry = Entry(value, None if tolerance is None else float(tolerance), passed, metadata)
        self.entries[name] = entry
        return entry

    def check(self, name: str, ok: bool, value: float = 0.0, **metadata: Any) -> Entry:
        entry = Entry(float(value), None, bool(ok), metadata)
        self.entries[name] = entry
        return entry

    def arm(self, name: str, tolerance: float) -> Entry:
        """Attach an upper bound to an existing entry."""
        e = self.entries[name]
        e.tolerance = float(tolerance)
        e.passed = bool(math.isfinite(e.value) and e.value <= tolerance and e.passed is not False)
        return e

    def __getitem__(self, name: str) -> float:
        return self.entries[name].value

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __iter__(self) -> Iterator[str]:
        return iter(self.entries)

    def get(self, name: str, default: float | None = None) -> float | None:
        e = self.entries.get(name)
        return default if e is None else e.value

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries.values() if e.passed is not None)

    def failures(self) -> list[str]:
        return [k for k, e in self.entries.items() if e.passed is False]

    def merge(self, other: "EstimateReport", prefix: str = "") -> "EstimateReport":
        for k, e in other.entries.items():
            self.entries[prefix + k] = e
        return self

    def to_dict(self) -> dict:
        return {
            "meta": self.meta,
            "pass": self.passed,
            "entries": {k: e.to_dict() for k, e in self.entries.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EstimateReport":
        return cls(
            {k: Entry.from_dict(v) for k, v in data.get("entries", {}).items()},
            dict(data.get("meta", {})),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EstimateReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "value", "tolerance", "pass"])
        for k in sorted(self.entries):
            e = self.entries[k]
            w.writerow([k, repr(e.value), "" if e.tolerance is None else repr(e.tolerance),
                        "" if e.passed is None else str(e.passed).lower()])
        return buf.getvalue()


def safe_ratio(num: float, den: float) -> float:
    """``num / den`` with the convention 0/0 = 0."""
    if num == 0.0:
        return 0.0
    if den == 0.0:
        return math.inf
    return num / den
