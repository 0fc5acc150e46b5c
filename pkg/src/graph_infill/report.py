"""Versioned JSON evaluation report.

Schema (``schema_version`` 1)::

    {
      "schema": "graph-infill/eval-report",
      "schema_version": 1,
      "label": "AmGCL" | "AmGCL*" | "FP" | ...,
      "recall_at": {"10": float, ...},
      "ndcg_at": {"10": float, ...},          # ideal DCG over min(k, |true|) hits
      "ndcg_full_at": {"10": float, ...},     # ideal DCG over all |true| hits
      "skipped_rows": int,                    # scored rows without true attributes
      "accuracy_folds": [float, ...],
      "accuracy_mean": float | null,
      "config_echo": {...},                   # fully resolved run configuration
      "seed": int,
      "wall_time_s": float,
      "param_count": int,
      "extra": {...}                          # free-form diagnostics
    }
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

SCHEMA = "graph-infill/eval-report"
SCHEMA_VERSION = 1


class ReportError(ValueError):
    pass


def _check_unit(name, value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return
    if not 0.0 <= value <= 1.0 + 1e-12:
        raise ReportError(f"{name} = {value} lies outside [0, 1]")


@dataclass
class EvalReport:
    label: str = "AmGCL"
    recall_at: dict[int, float] = field(default_factory=dict)
    ndcg_at: dict[int, float] = field(default_factory=dict)
    ndcg_full_at: dict[int, float] = field(default_factory=dict)
    skipped_rows: int = 0
    accuracy_folds: list[float] = field(default_factory=list)
    accuracy_mean: float | None = None
    config_echo: dict = field(default_factory=dict)
    seed: int = 0
    wall_time_s: float = 0.0
    param_count: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for table in ("recall_at", "ndcg_at", "ndcg_full_at"):
            values = getattr(self, table)
            setattr(self, table, {int(k): float(v) for k, v in values.items()})
            for k, v in getattr(self, table).items():
                _check_unit(f"{table}[{k}]", v)
        for i, a in enumerate(self.accuracy_folds):
            _check_unit(f"accuracy_folds[{i}]", a)
        _check_unit("accuracy_mean", self.accuracy_mean)
        folds = self.config_echo.get("probe", {}).get("folds")
        if self.accuracy_folds and folds is not None and len(self.accuracy_folds) != folds:
            raise ReportError(f"{len(self.accuracy_folds)} fold accuracies for {folds}-fold CV")

    def metric_values(self) -> dict:
        """Everything that must repeat exactly under a fixed seed and config."""
        return {
            "recall_at": self.recall_at, "ndcg_at": self.ndcg_at,
            "ndcg_full_at": self.ndcg_full_at, "skipped_rows": self.skipped_rows,
            "accuracy_folds": self.accuracy_folds, "accuracy_mean": self.accuracy_mean,
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        for table in ("recall_at", "ndcg_at", "ndcg_full_at"):
            d[table] = {str(k): v for k, v in d[table].items()}
        return {"schema": SCHEMA, "schema_version": SCHEMA_VERSION, **d}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        d = dict(d)
        if d.pop("schema", SCHEMA) != SCHEMA:
            raise ReportError("not an evaluation report")
        version = d.pop("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ReportError(f"unsupported report schema version {version!r}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "EvalReport":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
