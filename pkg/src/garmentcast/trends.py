"""Popularity record ingestion and weekly attribute trend series.

Records carry a garment label set, a calendar date, a popularity value, and
optional demographic stratum and visual features.  The store groups them by
ISO week and exposes per-attribute weekly mean series (gaps filled by linear
interpolation, endpoints held), which are then cut into fixed-width windows
for the forecasting models.

Weeks are addressed by a contiguous integer ordinal: the ISO week containing
day D maps to ``monday(D).toordinal() // 7``, which increases by exactly one
per calendar week.
"""

from __future__ import annotations

import base64
import binascii
import csv
import json
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .taxonomy import LabelSet, Taxonomy, label_set_from_names

GENDERS = ("men", "women")
AGE_GROUPS = ("<18", "18-25", "25-30", "30-35", "35-45", "45-55", ">55")

CSV_COLUMNS = ("item_id", "date", "popularity", "category", "attributes",
               "gender", "age_group", "features")


class IngestionError(ValueError):
    """Raised when a record stream cannot produce a usable store."""


class TrendError(ValueError):
    """Raised for invalid series or windowing requests."""


# ---- week arithmetic -------------------------------------------------------------


def week_ordinal(d: date) -> int:
    """Contiguous integer index of the ISO week containing ``d``."""
    iso = d.isocalendar()
    return date.fromisocalendar(iso[0], iso[1], 1).toordinal() // 7


def week_start(ordinal: int) -> date:
    """Monday of the week with the given ordinal."""
    return date.fromordinal(ordinal * 7 + 1)


def week_label(ordinal: int) -> tuple[int, int]:
    """(iso_year, iso_week) pair for a week ordinal."""
    iso = week_start(ordinal).isocalendar()
    return iso[0], iso[1]


def ordinal_of_label(iso_year: int, iso_week: int) -> int:
    return date.fromisocalendar(iso_year, iso_week, 1).toordinal() // 7


# ---- records ---------------------------------------------------------------------


@dataclass(frozen=True)
class Demographic:
    gender: str
    age_group: str

    def __post_init__(self):
        if self.gender not in GENDERS:
            raise ValueError(f"unknown gender {self.gender!r}; expected one of {GENDERS}")
        if self.age_group not in AGE_GROUPS:
            raise ValueError(
                f"unknown age_group {self.age_group!r}; expected one of {AGE_GROUPS}")

    @property
    def gender_index(self) -> int:
        return GENDERS.index(self.gender)

    @property
    def age_index(self) -> int:
        return AGE_GROUPS.index(self.age_group)


@dataclass
class PopularityRecord:
    item_id: str
    timestamp: date
    popularity: float
    label_set: LabelSet
    demographic: Demographic | None = None
    visual_features: np.ndarray | None = None

    @property
    def week(self) -> int:
        return week_ordinal(self.timestamp)


def _optional(value) -> str | None:
    if value is None:
        return None
    text = str(value).strip()
    return text or None


def parse_record_payload(payload: dict, taxonomy: Taxonomy) -> PopularityRecord:
    """Build a record from one parsed CSV/JSONL row; raises ValueError with detail."""
    item_id = _optional(payload.get("item_id"))
    if not item_id:
        raise ValueError("missing item_id")
    raw_date = _optional(payload.get("date"))
    if not raw_date:
        raise ValueError("missing date")
    try:
        timestamp = date.fromisoformat(raw_date)
    except ValueError:
        raise ValueError(f"bad date {raw_date!r}; expected YYYY-MM-DD")
    raw_pop = payload.get("popularity")
    try:
        popularity = float(raw_pop)
    except (TypeError, ValueError):
        raise ValueError(f"bad popularity {raw_pop!r}")
    if not math.isfinite(popularity):
        raise ValueError(f"non-finite popularity {popularity!r}")
    category = _optional(payload.get("category"))
    if not category:
        raise ValueError("missing category")
    attr_field = payload.get("attributes")
    if isinstance(attr_field, (list, tuple)):
        attr_names = [str(a) for a in attr_field]
    else:
        text = _optional(attr_field)
        attr_names = text.split("|") if text else []
    label_set = label_set_from_names(taxonomy, category, attr_names)
    label_set.require_legal(taxonomy)
    gender = _optional(payload.get("gender"))
    age_group = _optional(payload.get("age_group"))
    if (gender is None) != (age_group is None):
        raise ValueError("demographic needs both gender and age_group or neither")
    demographic = Demographic(gender, age_group) if gender is not None else None
    features = None
    raw_features = _optional(payload.get("features"))
    if raw_features:
        try:
            blob = base64.b64decode(raw_features, validate=True)
        except (binascii.Error, ValueError):
            raise ValueError("features field is not valid base64")
        if len(blob) % 4:
            raise ValueError(f"features blob length {len(blob)} not a multiple of 4")
        features = np.frombuffer(blob, dtype="<f4").astype(np.float64)
    return PopularityRecord(item_id, timestamp, popularity, label_set,
                            demographic, features)


def encode_features(features) -> str:
    """Base64 of the vector as little-endian 32-bit floats (record file format)."""
    return base64.b64encode(
        np.ascontiguousarray(features, dtype="<f4").tobytes()).decode("ascii")


def _iter_csv(handle):
    reader = csv.DictReader(handle)
    for row in reader:
        yield reader.line_num, {k: v for k, v in row.items() if k is not None}


def _iter_jsonl(handle):
    for line_num, line in enumerate(handle, start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            yield line_num, ValueError(f"bad JSON: {exc.msg}")
            continue
        if not isinstance(payload, dict):
            yield line_num, ValueError("JSONL line is not an object")
            continue
        yield line_num, payload


def _iter_source(source, fmt):
    if isinstance(source, (str, Path)):
        path = Path(source)
        fmt = fmt or path.suffix.lstrip(".").lower()
        if fmt not in ("csv", "jsonl"):
            raise IngestionError(f"cannot infer record format from {path.name!r}; "
                                 "pass fmt='csv' or 'jsonl'")
        with open(path, newline="" if fmt == "csv" else None) as handle:
            it = _iter_csv(handle) if fmt == "csv" else _iter_jsonl(handle)
            yield from it
        return
    for line_num, payload in enumerate(source, start=1):
        yield line_num, payload


def record_payload(record: PopularityRecord, taxonomy: Taxonomy) -> dict:
    """Record as the wire-format row dict (inverse of parse_record_payload)."""
    ls = record.label_set
    return {
        "item_id": record.item_id,
        "date": record.timestamp.isoformat(),
        "popularity": record.popularity,
        "category": taxonomy.categories[ls.category].name,
        "attributes": "|".join(taxonomy.attributes[a].name
                               for a in sorted(ls.attributes)),
        "gender": record.demographic.gender if record.demographic else "",
        "age_group": record.demographic.age_group if record.demographic else "",
        "features": (encode_features(record.visual_features)
                     if record.visual_features is not None else ""),
    }


def write_records_csv(path, records, taxonomy: Taxonomy) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for rec in records:
            writer.writerow(record_payload(rec, taxonomy))


def write_records_jsonl(path, records, taxonomy: Taxonomy) -> None:
    with open(path, "w") as handle:
        for rec in records:
            handle.write(json.dumps(record_payload(rec, taxonomy), sort_keys=True))
            handle.write("\n")


# ---- store -----------------------------------------------------------------------


@dataclass
class IngestionReport:
    total_rows: int
    accepted: int
    errors: list[tuple[int, str]]
    normalization: tuple[float, float]

    @property
    def rejected(self) -> int:
        return len(self.errors)


class TrendStore:
    """Read-only weekly index over ingested records."""

    def __init__(self, taxonomy: Taxonomy, records: list[PopularityRecord],
                 normalization: tuple[float, float]):
        self.taxonomy = taxonomy
        self.records = records
        self.normalization = normalization
        n = len(records)
        n_attrs = len(taxonomy.attributes)
        self._weeks = np.array([r.week for r in records], dtype=np.int64)
        self._pops = np.array([r.popularity for r in records], dtype=np.float64)
        self._multihot = np.zeros((n, n_attrs), dtype=bool)
        self._gender = np.full(n, -1, dtype=np.int64)
        self._age = np.full(n, -1, dtype=np.int64)
        for i, rec in enumerate(records):
            for a in rec.label_set.attributes:
                self._multihot[i, a] = True
            if rec.demographic is not None:
                self._gender[i] = rec.demographic.gender_index
                self._age[i] = rec.demographic.age_index

    def __len__(self) -> int:
        return len(self.records)

    @property
    def period(self) -> tuple[int, int] | None:
        """(first, last) week ordinal covered, or None for an empty store."""
        if not self.records:
            return None
        return int(self._weeks.min()), int(self._weeks.max())

    def attribute_series(self, attribute, demographic=None, period=None) -> "TrendSeries":
        return build_attribute_series(self, attribute, demographic, period)


def ingest_records(source, taxonomy: Taxonomy, fmt: str | None = None,
                   period: tuple[date, date] | None = None):
    """Parse a record stream into a TrendStore plus an ingestion report.

    ``source`` is a CSV/JSONL path or an iterable of row payload dicts.  Bad
    rows are collected per line, not fatal, unless they exceed half the
    stream.  Popularity is min-max normalized per dataset when any value
    falls outside [0,1]; the constants are recorded either way.
    """
    records: list[PopularityRecord] = []
    errors: list[tuple[int, str]] = []
    total = 0
    for line_num, payload in _iter_source(source, fmt):
        total += 1
        if isinstance(payload, Exception):
            errors.append((line_num, str(payload)))
            continue
        try:
            record = parse_record_payload(payload, taxonomy)
            if period is not None and not (period[0] <= record.timestamp <= period[1]):
                raise ValueError(
                    f"date {record.timestamp.isoformat()} outside declared period "
                    f"{period[0].isoformat()}..{period[1].isoformat()}")
        except ValueError as exc:
            errors.append((line_num, str(exc)))
            continue
        records.append(record)
    if total and len(errors) * 2 > total:
        preview = "; ".join(f"line {ln}: {msg}" for ln, msg in errors[:5])
        raise IngestionError(
            f"{len(errors)} of {total} rows failed to parse (>50%): {preview}")
    lo, hi = 0.0, 1.0
    if records:
        pops = np.array([r.popularity for r in records])
        if pops.min() < 0.0 or pops.max() > 1.0:
            lo, hi = float(pops.min()), float(pops.max())
            span = hi - lo
            for rec in records:
                rec.popularity = (rec.popularity - lo) / span if span else 0.5
    store = TrendStore(taxonomy, records, (lo, hi))
    return store, IngestionReport(total, len(records), errors, (lo, hi))


# ---- series ----------------------------------------------------------------------


@dataclass
class TrendSeries:
    attribute: int
    attribute_name: str
    week_index: np.ndarray      # contiguous ordinals
    values: np.ndarray          # weekly means in [0,1], gaps interpolated
    support: np.ndarray         # records per week, 0 where interpolated

    def __len__(self) -> int:
        return len(self.week_index)

    def to_dict(self) -> dict:
        return {
            "attribute": self.attribute_name,
            "weeks": [[*week_label(int(w)), float(v), int(s)]
                      for w, v, s in zip(self.week_index, self.values, self.support)],
        }

    @staticmethod
    def from_dict(payload: dict, taxonomy: Taxonomy) -> "TrendSeries":
        name = payload["attribute"]
        weeks = [ordinal_of_label(y, w) for y, w, _, _ in payload["weeks"]]
        return TrendSeries(
            attribute=taxonomy.attribute_index(name),
            attribute_name=name,
            week_index=np.array(weeks, dtype=np.int64),
            values=np.array([row[2] for row in payload["weeks"]], dtype=np.float64),
            support=np.array([row[3] for row in payload["weeks"]], dtype=np.int64),
        )


def _resolve_demographic(demographic) -> Demographic | None:
    if demographic is None or isinstance(demographic, Demographic):
        return demographic
    return Demographic(*demographic)


def build_attribute_series(store: TrendStore, attribute, demographic=None,
                           period: tuple[int, int] | None = None) -> TrendSeries:
    """Weekly mean popularity for one attribute, gaps linearly interpolated.

    ``attribute`` is an index or name; ``demographic`` restricts to one
    (gender, age_group) stratum; ``period`` is an inclusive (first, last)
    week-ordinal pair defaulting to the store period.  Endpoint gaps hold
    the nearest observed value.  Zero matching records is an error.
    """
    taxonomy = store.taxonomy
    attr_idx = (attribute if isinstance(attribute, (int, np.integer))
                else taxonomy.attribute_index(attribute))
    if not 0 <= attr_idx < len(taxonomy.attributes):
        raise TrendError(f"attribute index {attr_idx} out of range")
    attr_name = taxonomy.attributes[attr_idx].name
    store_period = store.period
    if store_period is None:
        raise TrendError("store is empty")
    if period is None:
        period = store_period
    elif period[0] > period[1]:
        raise TrendError(f"period {period} is reversed")
    elif period[0] < store_period[0] or period[1] > store_period[1]:
        raise TrendError(f"period {period} exceeds store range {store_period}")
    mask = store._multihot[:, attr_idx].copy()
    demo = _resolve_demographic(demographic)
    if demo is not None:
        mask &= (store._gender == demo.gender_index) & (store._age == demo.age_index)
    mask &= (store._weeks >= period[0]) & (store._weeks <= period[1])
    if not mask.any():
        stratum = f" in stratum ({demo.gender}, {demo.age_group})" if demo else ""
        raise TrendError(
            f"attribute {attr_name!r} has zero records in weeks {period}{stratum}")
    weeks = store._weeks[mask] - period[0]
    pops = store._pops[mask]
    n_weeks = period[1] - period[0] + 1
    support = np.bincount(weeks, minlength=n_weeks)
    sums = np.bincount(weeks, weights=pops, minlength=n_weeks)
    observed = support > 0
    axis = np.arange(n_weeks)
    means = np.zeros(n_weeks)
    means[observed] = sums[observed] / support[observed]
    values = np.interp(axis, axis[observed], means[observed])
    return TrendSeries(
        attribute=int(attr_idx),
        attribute_name=attr_name,
        week_index=axis + period[0],
        values=values,
        support=support.astype(np.int64),
    )


# ---- windowing -------------------------------------------------------------------


@dataclass(frozen=True)
class WindowSpec:
    n: int              # input weeks
    k: int              # forecast weeks
    stride: int = 1
    a_max: int = 8      # fixed attribute channel width

    def __post_init__(self):
        if self.n < 1 or self.k < 1 or self.stride < 1 or self.a_max < 1:
            raise ValueError(f"invalid window spec {self}")


@dataclass
class Window:
    inputs: np.ndarray          # [n, a_max]
    mask: np.ndarray            # [a_max], 1 for real attribute columns
    targets: np.ndarray | None  # [k]
    target_week: int


def _stack_columns(series_list, spec: WindowSpec):
    if not series_list:
        raise TrendError("need at least one attribute series")
    if len(series_list) > spec.a_max:
        raise TrendError(
            f"{len(series_list)} attribute series exceed channel width {spec.a_max}")
    weeks = series_list[0].week_index
    for s in series_list[1:]:
        if not np.array_equal(s.week_index, weeks):
            raise TrendError("attribute series cover different week ranges")
    columns = np.zeros((len(weeks), spec.a_max))
    for j, s in enumerate(series_list):
        columns[:, j] = s.values
    mask = np.zeros(spec.a_max)
    mask[:len(series_list)] = 1.0
    return weeks, columns, mask


def _require_history(weeks, spec: WindowSpec, target_week: int) -> None:
    earliest = int(weeks[0]) + spec.n
    if target_week < earliest:
        raise TrendError(
            f"insufficient history for target week {week_label(target_week)}; "
            f"earliest valid target is {week_label(earliest)}")


def make_windows(series_list, spec: WindowSpec, target_series: TrendSeries | None = None,
                 target_week: int | None = None) -> list[Window]:
    """Cut aligned attribute series into (inputs, targets) training windows.

    Inputs cover the n weeks strictly before each target week; targets are
    the k values of ``target_series`` (default: mean over the given columns)
    from the target week onward.  Targets never overlap inputs.  With
    ``target_week`` set, only that window is produced.
    """
    weeks, columns, mask = _stack_columns(series_list, spec)
    n_real = int(mask.sum())
    if target_series is None:
        target_values = columns[:, :n_real].mean(axis=1)
    else:
        if not np.array_equal(target_series.week_index, weeks):
            raise TrendError("target series covers a different week range")
        target_values = target_series.values
    first, last = int(weeks[0]), int(weeks[-1])
    latest = last - spec.k + 1
    if target_week is not None:
        _require_history(weeks, spec, target_week)
        if target_week > latest:
            raise TrendError(
                f"targets for week {week_label(target_week)} extend past series end "
                f"{week_label(last)}")
        candidates = [target_week]
    else:
        candidates = list(range(first + spec.n, latest + 1, spec.stride))
    windows = []
    for t in candidates:
        lo = t - first
        windows.append(Window(
            inputs=columns[lo - spec.n:lo].copy(),
            mask=mask.copy(),
            targets=target_values[lo:lo + spec.k].copy(),
            target_week=t,
        ))
    return windows


def make_input_window(series_list, spec: WindowSpec, target_week: int) -> Window:
    """Inputs-only window for forecasting at ``target_week`` (no targets needed).

    Valid when the n weeks before the target are covered by the series; the
    target itself may lie one week past the observed range.
    """
    weeks, columns, mask = _stack_columns(series_list, spec)
    _require_history(weeks, spec, target_week)
    last = int(weeks[-1])
    if target_week - 1 > last:
        raise TrendError(
            f"series end {week_label(last)} leaves a gap before target week "
            f"{week_label(target_week)}")
    lo = target_week - int(weeks[0])
    return Window(inputs=columns[lo - spec.n:lo].copy(), mask=mask.copy(),
                  targets=None, target_week=target_week)
