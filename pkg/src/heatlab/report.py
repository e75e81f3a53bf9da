from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


@dataclass
class VerificationReport:
    """Per-check record: one row per grid point, enough to re-derive ``passed``.

    Each row carries at least t, lower, mid, upper, sigma and pass; a row
    passes when lower - sigma <= mid <= upper + sigma (``None`` bounds are
    open).
    """

    theorem_id: str
    t_grid: list
    rows: list = field(default_factory=list)
    notes: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(r["pass"] for r in self.rows)

    def add(self, t, lower, mid, upper, sigma, **extra) -> dict:
        ok = True
        if lower is not None:
            ok &= mid >= lower - sigma
        if upper is not None:
            ok &= mid <= upper + sigma
        row = {"t": t, "lower": lower, "mid": mid, "upper": upper, "sigma": sigma, "pass": bool(ok)}
        row.update(extra)
        self.rows.append(row)
        return row

    def as_dict(self) -> dict:
        return {"theorem_id": self.theorem_id, "grid": list(self.t_grid), "rows": self.rows,
                "passed": self.passed, "notes": self.notes}

    def to_json(self) -> str:
        return json.dumps(_clean(self.as_dict()), indent=2, sort_keys=False)

    def summary(self) -> str:
        bad = sum(not r["pass"] for r in self.rows)
        return f"{self.theorem_id}: {'PASS' if self.passed else 'FAIL'} ({len(self.rows) - bad}/{len(self.rows)} rows)"


def _clean(obj):
    # JSON has no inf/nan; encode them as strings so reports stay valid JSON
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj
