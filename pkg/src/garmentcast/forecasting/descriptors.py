"""Garment descriptors: visual features, labels, target date, demographics.

The target date expands into four calendar granularities (day-of-year, ISO
week, month, meteorological season), each of which gets its own embedding
vocabulary in the fusion branch.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

import numpy as np

from ..taxonomy import LabelSet, Taxonomy
from ..trends import Demographic

SEASONS = ("winter", "spring", "summer", "autumn")
DAY_VOCAB, WEEK_VOCAB, MONTH_VOCAB, SEASON_VOCAB = 366, 53, 12, 4

_MONTH_SEASON = {12: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1,
                 6: 2, 7: 2, 8: 2, 9: 3, 10: 3, 11: 3}


def season_of(d: date, hemisphere: str = "north") -> int:
    """Meteorological season index 0..3 (winter..autumn), hemisphere-aware."""
    if hemisphere not in ("north", "south"):
        raise ValueError(f"unknown hemisphere {hemisphere!r}")
    idx = _MONTH_SEASON[d.month]
    return (idx + 2) % 4 if hemisphere == "south" else idx


@dataclass(frozen=True)
class DateParts:
    day_of_year: int    # 1..366
    week: int           # 1..53
    month: int          # 1..12
    season: int         # 0..3


def expand_date(d: date, hemisphere: str = "north") -> DateParts:
    return DateParts(
        day_of_year=d.timetuple().tm_yday,
        week=d.isocalendar()[1],
        month=d.month,
        season=season_of(d, hemisphere),
    )


@dataclass
class GarmentDescriptor:
    visual_features: np.ndarray
    label_set: LabelSet
    target_date: date
    demographic: Demographic | None = None

    def date_parts(self, hemisphere: str = "north") -> DateParts:
        return expand_date(self.target_date, hemisphere)

    def validate(self, taxonomy: Taxonomy, feature_dim: int) -> None:
        fv = np.asarray(self.visual_features, dtype=np.float64)
        if fv.shape != (feature_dim,):
            raise ValueError(f"visual features shape {fv.shape} != ({feature_dim},)")
        if not np.all(np.isfinite(fv)):
            raise ValueError("visual features contain non-finite values")
        self.label_set.require_legal(taxonomy)


@dataclass
class DescriptorBatch:
    """Descriptor fields stacked into model-ready index and feature arrays."""

    visual: np.ndarray          # [B, feature_dim]
    category: np.ndarray        # [B]
    attr_multihot: np.ndarray   # [B, n_attrs]
    attr_counts: np.ndarray     # [B]
    day: np.ndarray             # [B], 0-based
    week: np.ndarray
    month: np.ndarray
    season: np.ndarray
    gender: np.ndarray | None   # [B] or None when demographic absent
    age: np.ndarray | None

    def __len__(self) -> int:
        return self.visual.shape[0]

    def take(self, idx) -> "DescriptorBatch":
        pick = lambda a: None if a is None else a[idx]
        return DescriptorBatch(self.visual[idx], self.category[idx],
                               self.attr_multihot[idx], self.attr_counts[idx],
                               self.day[idx], self.week[idx], self.month[idx],
                               self.season[idx], pick(self.gender), pick(self.age))


def batch_descriptors(descriptors, taxonomy: Taxonomy, feature_dim: int,
                      hemisphere: str = "north",
                      expect_demographic: bool = False) -> DescriptorBatch:
    """Validate and stack descriptors; raises on any illegal or missing field."""
    if not descriptors:
        raise ValueError("empty descriptor batch")
    n_attrs = len(taxonomy.attributes)
    b = len(descriptors)
    visual = np.zeros((b, feature_dim))
    category = np.zeros(b, dtype=np.int64)
    multihot = np.zeros((b, n_attrs))
    counts = np.zeros(b)
    day = np.zeros(b, dtype=np.int64)
    week = np.zeros(b, dtype=np.int64)
    month = np.zeros(b, dtype=np.int64)
    season = np.zeros(b, dtype=np.int64)
    gender = np.zeros(b, dtype=np.int64)
    age = np.zeros(b, dtype=np.int64)
    for i, desc in enumerate(descriptors):
        desc.validate(taxonomy, feature_dim)
        visual[i] = np.asarray(desc.visual_features, dtype=np.float64)
        category[i] = desc.label_set.category
        for a in desc.label_set.attributes:
            multihot[i, a] = 1.0
        counts[i] = len(desc.label_set.attributes)
        parts = desc.date_parts(hemisphere)
        day[i] = parts.day_of_year - 1
        week[i] = parts.week - 1
        month[i] = parts.month - 1
        season[i] = parts.season
        if expect_demographic:
            if desc.demographic is None:
                raise ValueError(
                    f"descriptor {i} has no demographic but the model expects one")
            gender[i] = desc.demographic.gender_index
            age[i] = desc.demographic.age_index
    if not expect_demographic:
        gender = age = None
    return DescriptorBatch(visual, category, multihot, counts,
                           day, week, month, season, gender, age)
