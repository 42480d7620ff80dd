"""Pipeline configuration stored as JSON; relative paths resolve against the file."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .formats import ValidationError

OUTPUT_ENV = "SURGERISK_OUTPUT_DIR"
PATH_FIELDS = ("storms", "dem", "sea_mask", "zones", "sfha", "loans", "banks", "demographics", "panel")


@dataclass(frozen=True)
class PipelineConfig:
    basins: tuple = ()
    storms: str | None = None
    dem: str | None = None
    sea_mask: str | None = None
    zones: str | None = None
    sfha: str | None = None
    loans: str | None = None
    banks: str | None = None
    demographics: str | None = None
    panel: str | None = None
    output_dir: str = "out"
    thresholds: tuple = (5.0, 10.0, 15.0, 20.0)
    category: int = 4
    tide: str = "high"
    comparator: str = "ge"
    seed: int = 0
    table1_decimals: int = 2
    table2_decimals: int = 1
    slr_levels: tuple = (3.0, 6.0)
    sim_duration_h: float = 24.0
    landfall_hour: float = 12.0
    track_duration_h: float = 24.0
    bank_quarter: str = "2012Q1"
    lender_years: tuple | None = None
    primary_threshold_ft: float | None = None  # Table 1/2 flag; defaults to the lowest threshold
    regression_threshold_ft: float = 15.0
    table3_thresholds: tuple = (5.0, 10.0, 15.0)
    table4_thresholds: tuple = (5.0, 10.0, 20.0)
    base_year: int | None = None
    cov_type: str = "twoway"
    max_bad_fraction: float = 0.01
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        ths = tuple(float(t) for t in self.thresholds)
        object.__setattr__(self, "thresholds", ths)
        object.__setattr__(self, "basins", tuple(self.basins))
        object.__setattr__(self, "slr_levels", tuple(float(v) for v in self.slr_levels))
        if not ths or any(t <= 0 for t in ths) or list(ths) != sorted(set(ths)):
            raise ValidationError(f"thresholds must be positive and strictly ascending, got {ths}")
        if self.comparator not in ("ge", "gt"):
            raise ValidationError(f"comparator must be ge or gt, got {self.comparator!r}")
        if self.tide not in ("high", "mean"):
            raise ValidationError(f"tide must be high or mean, got {self.tide!r}")
        if self.category not in range(1, 6):
            raise ValidationError(f"category must be 1..5, got {self.category}")
        if self.primary_threshold_ft is not None and float(self.primary_threshold_ft) not in ths:
            raise ValidationError(f"primary threshold {self.primary_threshold_ft} ft is not among "
                                  f"the configured thresholds {ths}")
        if self.regression_threshold_ft not in ths:
            raise ValidationError(f"regression threshold {self.regression_threshold_ft} ft is not among "
                                  f"the configured thresholds {ths}")
        if any(not 0 <= v <= 6 for v in self.slr_levels):
            raise ValidationError("SLR levels must lie in [0, 6] ft")

    @classmethod
    def from_json(cls, path, **overrides) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValidationError(f"{path}: unknown config keys {unknown}")
        base = path.parent
        for key in PATH_FIELDS + ("output_dir",):
            if raw.get(key) is not None:
                raw[key] = str(base / raw[key])
        raw["basins"] = tuple(str(base / b) for b in raw.get("basins", ()))
        for k in ("thresholds", "slr_levels", "lender_years", "table3_thresholds", "table4_thresholds"):
            if raw.get(k) is not None:
                raw[k] = tuple(raw[k])
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return cls(**{**raw, **overrides})

    def to_json(self, path, relative_to=None):
        d = asdict(self)
        if relative_to is not None:
            rel = Path(relative_to)
            for key in PATH_FIELDS + ("output_dir",):
                if d[key] is not None:
                    d[key] = os.path.relpath(d[key], rel)
            d["basins"] = [os.path.relpath(b, rel) for b in d["basins"]]
        Path(path).write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")

    def resolved_output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_ENV) or self.output_dir)

    def with_overrides(self, **kw) -> "PipelineConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    @property
    def primary_flag(self) -> str:
        t = self.thresholds[0] if self.primary_threshold_ft is None else self.primary_threshold_ft
        return self.surge_flag(t)

    def surge_flag(self, threshold) -> str:
        return f"surge{float(threshold):g}_cat{self.category}_{self.tide}"
