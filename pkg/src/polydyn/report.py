"""Verification reports: one entry per identity, serialisable to JSON."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Union

from .polyring import Poly

SCHEMA_VERSION = "1.0"


@dataclass
class Entry:
    id: str
    statement: str
    status: str  # "pass" | "fail" | "info" | "error"
    residual_term_count: int = 0
    anchor: str = ""
    detail: Dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status in ("pass", "info")


@dataclass
class Report:
    suite: str
    entries: List[Entry] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)

    def add(self, entry: Entry) -> Entry:
        self.entries.append(entry)
        return entry

    def check(self, id: str, statement: str, residual: Union[Poly, Iterable[Poly], bool],
              anchor: str = "", **detail) -> Entry:
        """Record an exact identity.  ``residual`` is a Poly (or list) that must vanish."""
        if isinstance(residual, bool):
            terms = 0 if residual else 1
        elif isinstance(residual, Poly):
            terms = len(residual)
        else:
            terms = sum(len(r) for r in residual)
        return self.add(Entry(id, statement, "pass" if terms == 0 else "fail", terms, anchor, detail))

    def extend(self, other: "Report") -> "Report":
        self.entries.extend(other.entries)
        return self

    @property
    def failed(self) -> List[Entry]:
        return [e for e in self.entries if not e.ok]

    @property
    def passed(self) -> bool:
        return not self.failed

    def sorted(self) -> "Report":
        return Report(self.suite, sorted(self.entries, key=lambda e: e.id), dict(self.meta))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "suite": self.suite,
            "meta": self.meta,
            "summary": {"total": len(self.entries), "failed": len(self.failed),
                        "passed": len(self.entries) - len(self.failed)},
            "entries": [asdict(e) for e in self.entries],
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, default=str)

    def summary_lines(self) -> List[str]:
        lines = [f"[{e.status.upper():4}] {e.id}: {e.statement}" for e in self.entries]
        lines.append(f"{self.suite}: {len(self.entries) - len(self.failed)}/{len(self.entries)} ok")
        return lines
