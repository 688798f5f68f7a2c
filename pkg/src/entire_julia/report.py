"""Pass/fail report shared by the lemma and mapping checks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

PASSING = {"pass", "exact", "reported", "skipped"}


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


@dataclass
class CheckReport:
    entries: list = field(default_factory=list)

    def add(self, id, status, worst_value, tolerance, **detail):
        e = {"id": id, "status": status, "worst_value": _clean(float(worst_value)),
             "tolerance": _clean(float(tolerance))}
        e.update(detail)
        self.entries.append(e)
        return e

    def extend(self, other: "CheckReport"):
        self.entries.extend(other.entries)

    def get(self, id):
        for e in self.entries:
            if e["id"] == id:
                return e
        raise KeyError(id)

    def ids(self):
        return [e["id"] for e in self.entries]

    @property
    def failures(self):
        return [e for e in self.entries if e["status"] not in PASSING]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self, indent=2) -> str:
        return json.dumps({"passed": self.passed, "checks": self.entries}, indent=indent)
