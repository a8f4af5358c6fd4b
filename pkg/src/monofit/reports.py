"""Shared report records and CSV/JSON emission helpers."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

CSV_SCHEMA_VERSION = "monofit-csv-1"


def fmt(x) -> str:
    """Floats printed with 17 significant digits for reproducibility."""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


@dataclass
class FittedConstantRow:
    """Empirical extremal constant for one lemma-level bound."""

    lemma: str
    bound_id: str
    n: int
    j_range: str
    fitted_constant: float
    kind: str = "upper"      # 'upper': grid max of lhs/rhs, 'lower': grid min
    stable: bool | None = None

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class LemmaRow:
    lemma: str
    fitted_constant: float
    stable: bool
    passed: bool
    detail: str = ""

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class PipelineReport:
    """End-to-end record for one (function, n) approximation job."""

    f_id: str
    r: int
    n_requested: int
    n_effective: int
    N_realized: int
    monotone_pass: bool
    endpoint_err: float
    sup_ratio_1_5: float
    sup_ratio_1_6: float
    degree: int
    constants: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def stability_factor(values) -> float:
    """max/min over positive fitted constants; inf when degenerate."""
    vals = [v for v in values if v > 0]
    if not vals:
        return 1.0
    return max(vals) / min(vals)


def rows_to_csv(rows: list[dict], path) -> None:
    """Write dict rows as CSV with a version header; deterministic layout."""
    if not rows:
        raise ValueError("no rows to write")
    keys = list(rows[0].keys())
    lines = [f"# {CSV_SCHEMA_VERSION}", ",".join(keys)]
    for row in rows:
        lines.append(",".join(fmt(row[k]) for k in keys))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def rows_to_json(rows: list[dict], path) -> None:
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True)
        fh.write("\n")
