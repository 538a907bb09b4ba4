"""Synthetic garment worlds with known ground truth.

A world fixes a label space, one latent popularity trend per attribute, a
linear map from attribute sets to visual feature vectors, and per-demographic
attribute affinities.  Everything downstream (garments, weekly popularity
records, oracle values) is a deterministic function of the world and a seed,
which makes the generator usable as a test oracle: the trend a store should
recover, the popularity a model should predict, and the gradient a feature
sensitivity probe should see are all known in closed form.

Attribute trend at relative week w:

    trend(a, w) = clamp01(base_a + amp_a * sin(2*pi*(w + phase_a) / 52)
                          + drift_a * w + eps_{a,w})

where eps follows an AR(1) process with per-attribute innovation scale.  The
autocorrelated part is deliberate: it is signal that only a model observing
the recent trend window can exploit, while the seasonal and drift parts are
predictable from the calendar alone.

Oracle popularity of garment g for demographic stratum s at week w:

    clamp01( mean_a trend(a, w) + mean_a affinity[s, a] + beta * g(F_v) + noise )

with g(f) = (u . f)(v . f) a fixed quadratic whose analytic gradient is
u (v . f) + v (u . f).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .taxonomy import LabelSet, Taxonomy, validate_taxonomy
from .trends import (
    AGE_GROUPS,
    GENDERS,
    Demographic,
    PopularityRecord,
    week_ordinal,
    week_start,
    write_records_csv,
    write_records_jsonl,
)


class WorldError(ValueError):
    """Raised when a world specification is internally inconsistent."""


_TYPE_POOL = ("upper-body", "lower-body", "full-body", "footwear",
              "headwear", "accessory")
_CATEGORY_POOL = ("blazer", "blouse", "boots", "cardigan", "coat", "dress",
                  "heels", "hoodie", "jeans", "jumpsuit", "leggings",
                  "overalls", "sandals", "shirt", "skirt", "sneakers",
                  "sweater", "trousers", "tshirt", "tunic")
_ATTRIBUTE_POOL = ("acid-wash", "a-line", "checked", "cropped", "denim",
                   "distressed", "embroidered", "floral", "fringed",
                   "high-waisted", "knitted", "lace", "leather", "metallic",
                   "neon", "oversized", "paisley", "pastel", "pleated",
                   "polka-dot", "quilted", "ribbed", "ripped", "ruffled",
                   "sequined", "sheer", "slim-fit", "striped", "suede",
                   "tie-dye", "velvet", "vintage")

N_STRATA = len(GENDERS) * len(AGE_GROUPS)


def _names(pool: tuple[str, ...], count: int, prefix: str) -> list[str]:
    if count <= len(pool):
        return list(pool[:count])
    extra = [f"{prefix}-{i:02d}" for i in range(len(pool), count)]
    return list(pool) + extra


def clamp01(x):
    return np.clip(x, 0.0, 1.0)


# ---- specification ----------------------------------------------------------------


@dataclass
class WorldSpec:
    """Complete parameterization of a synthetic world.

    All arrays are aligned with the canonical (name-sorted) taxonomy order.
    ``default`` draws a coherent parameter set from a seed; tests override
    individual fields to isolate one mechanism at a time.
    """

    seed: int
    taxonomy: Taxonomy
    n_weeks: int
    n_garments: int
    start: date
    feature_dim: int
    # per-attribute trend process, arrays of shape [n_attributes]
    trend_base: np.ndarray
    trend_amplitude: np.ndarray
    trend_phase: np.ndarray
    trend_drift: np.ndarray
    trend_noise: np.ndarray
    trend_ar: float
    # visual features
    mixing: np.ndarray            # [n_attributes, feature_dim]
    feature_noise: float
    # demographics, [N_STRATA, n_attributes]
    affinity: np.ndarray
    # oracle
    beta: float
    quad_u: np.ndarray            # [feature_dim]
    quad_v: np.ndarray            # [feature_dim]
    oracle_noise: float
    # garment sampling
    category_attr_weights: np.ndarray   # [n_categories, n_attributes]
    attrs_per_garment: tuple[int, int] = (1, 4)
    lifetime_range: tuple[int, int] = (4, 10)
    records_per_week: int = 1
    singleton_fraction: float = 0.15

    @property
    def n_types(self) -> int:
        return len(self.taxonomy.garment_types)

    @property
    def n_categories(self) -> int:
        return len(self.taxonomy.categories)

    @property
    def n_attributes(self) -> int:
        return len(self.taxonomy.attributes)

    @staticmethod
    def default(seed: int = 0, n_types: int = 4, n_categories: int = 8,
                n_attributes: int = 24, n_garments: int = 2000,
                n_weeks: int = 104, feature_dim: int = 32,
                **overrides) -> "WorldSpec":
        """Draw a full world specification from a seed.

        Categories are assigned to types round-robin in sorted-name order and
        categories sharing a slot (index modulo ``n_types``) share the same
        attribute preference profile, so visual features alone cannot separate
        them; knowing the garment type can.
        """
        if n_categories < n_types:
            raise WorldError("need at least one category per garment type")
        rng = np.random.default_rng(seed)
        type_names = sorted(_names(_TYPE_POOL, n_types, "type"))
        cat_names = sorted(_names(_CATEGORY_POOL, n_categories, "category"))
        attr_names = sorted(_names(_ATTRIBUTE_POOL, n_attributes, "attribute"))

        categories = [(cat_names[i], type_names[i % n_types])
                      for i in range(n_categories)]
        legal: list[set[str]] = []
        for _ in range(n_attributes):
            if rng.random() < 0.75:
                legal.append(set(type_names))
            else:
                size = int(rng.integers(1, max(2, n_types // 2) + 1))
                picked = rng.choice(n_types, size=size, replace=False)
                legal.append({type_names[t] for t in picked})
        # every type needs enough legal attributes to dress a garment
        for t in type_names:
            holders = [s for s in legal if t in s]
            while len(holders) < 4:
                legal[int(rng.integers(n_attributes))].add(t)
                holders = [s for s in legal if t in s]
        taxonomy = Taxonomy.build(
            type_names, categories,
            [(attr_names[i], frozenset(legal[i])) for i in range(n_attributes)])

        n_profiles = -(-n_categories // n_types)
        profiles = rng.dirichlet(np.full(n_attributes, 0.4), size=n_profiles)
        weights = np.stack([profiles[i // n_types] for i in range(n_categories)])

        mixing = rng.normal(size=(n_attributes, feature_dim))
        mixing /= np.linalg.norm(mixing, axis=1, keepdims=True)
        quad_u = rng.normal(size=feature_dim)
        quad_u /= np.linalg.norm(quad_u)
        quad_v = rng.normal(size=feature_dim)
        quad_v /= np.linalg.norm(quad_v)

        spec = WorldSpec(
            seed=seed,
            taxonomy=taxonomy,
            n_weeks=n_weeks,
            n_garments=n_garments,
            start=date(2023, 1, 2),
            feature_dim=feature_dim,
            trend_base=rng.uniform(0.30, 0.70, n_attributes),
            trend_amplitude=rng.uniform(0.05, 0.20, n_attributes),
            trend_phase=rng.uniform(0.0, 52.0, n_attributes),
            trend_drift=rng.uniform(-0.0015, 0.0015, n_attributes),
            trend_noise=np.full(n_attributes, 0.02),
            trend_ar=0.8,
            mixing=mixing,
            feature_noise=0.05,
            affinity=rng.normal(0.0, 0.04, size=(N_STRATA, n_attributes)),
            beta=1.0,
            quad_u=quad_u,
            quad_v=quad_v,
            oracle_noise=0.02,
            category_attr_weights=weights,
        )
        return replace(spec, **overrides) if overrides else spec

    # ---- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "taxonomy": self.taxonomy.to_dict(),
            "n_weeks": self.n_weeks,
            "n_garments": self.n_garments,
            "start": self.start.isoformat(),
            "feature_dim": self.feature_dim,
            "trend_base": self.trend_base.tolist(),
            "trend_amplitude": self.trend_amplitude.tolist(),
            "trend_phase": self.trend_phase.tolist(),
            "trend_drift": self.trend_drift.tolist(),
            "trend_noise": self.trend_noise.tolist(),
            "trend_ar": self.trend_ar,
            "mixing": self.mixing.tolist(),
            "feature_noise": self.feature_noise,
            "affinity": self.affinity.tolist(),
            "beta": self.beta,
            "quad_u": self.quad_u.tolist(),
            "quad_v": self.quad_v.tolist(),
            "oracle_noise": self.oracle_noise,
            "category_attr_weights": self.category_attr_weights.tolist(),
            "attrs_per_garment": list(self.attrs_per_garment),
            "lifetime_range": list(self.lifetime_range),
            "records_per_week": self.records_per_week,
            "singleton_fraction": self.singleton_fraction,
        }

    @staticmethod
    def from_dict(raw: dict) -> "WorldSpec":
        arr = lambda key: np.asarray(raw[key], dtype=np.float64)
        return WorldSpec(
            seed=int(raw["seed"]),
            taxonomy=Taxonomy.from_dict(raw["taxonomy"]),
            n_weeks=int(raw["n_weeks"]),
            n_garments=int(raw["n_garments"]),
            start=date.fromisoformat(raw["start"]),
            feature_dim=int(raw["feature_dim"]),
            trend_base=arr("trend_base"),
            trend_amplitude=arr("trend_amplitude"),
            trend_phase=arr("trend_phase"),
            trend_drift=arr("trend_drift"),
            trend_noise=arr("trend_noise"),
            trend_ar=float(raw["trend_ar"]),
            mixing=arr("mixing"),
            feature_noise=float(raw["feature_noise"]),
            affinity=arr("affinity"),
            beta=float(raw["beta"]),
            quad_u=arr("quad_u"),
            quad_v=arr("quad_v"),
            oracle_noise=float(raw["oracle_noise"]),
            category_attr_weights=arr("category_attr_weights"),
            attrs_per_garment=tuple(raw["attrs_per_garment"]),
            lifetime_range=tuple(raw["lifetime_range"]),
            records_per_week=int(raw["records_per_week"]),
            singleton_fraction=float(raw["singleton_fraction"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @staticmethod
    def load(path: str | Path) -> "WorldSpec":
        return WorldSpec.from_dict(json.loads(Path(path).read_text()))


# ---- world realization -------------------------------------------------------------


@dataclass
class World:
    spec: WorldSpec
    trends: np.ndarray      # [n_attributes, n_weeks], clamped to [0, 1]
    start_week: int         # contiguous week ordinal of relative week 0

    @property
    def taxonomy(self) -> Taxonomy:
        return self.spec.taxonomy

    def week_ordinals(self) -> np.ndarray:
        return np.arange(self.start_week, self.start_week + self.spec.n_weeks)

    def trend(self, attribute: int, week: int) -> float:
        return float(self.trends[attribute, week])


def _validate_spec(spec: WorldSpec) -> None:
    problems = validate_taxonomy(spec.taxonomy)
    if problems:
        raise WorldError("invalid taxonomy: " + "; ".join(problems))
    a, f = spec.n_attributes, spec.feature_dim
    per_attr = {"trend_base": spec.trend_base,
                "trend_amplitude": spec.trend_amplitude,
                "trend_phase": spec.trend_phase,
                "trend_drift": spec.trend_drift,
                "trend_noise": spec.trend_noise}
    for name, values in per_attr.items():
        if np.shape(values) != (a,):
            raise WorldError(f"{name} must have shape ({a},), got {np.shape(values)}")
    if np.any(spec.trend_noise < 0):
        raise WorldError("trend_noise must be nonnegative")
    if spec.n_weeks < 1:
        raise WorldError("n_weeks must be positive")
    if spec.mixing.shape != (a, f):
        raise WorldError(f"mixing must have shape ({a}, {f}), got {spec.mixing.shape}")
    if np.linalg.matrix_rank(spec.mixing) < a:
        raise WorldError("mixing matrix must have full row rank; "
                         "raise feature_dim or redraw")
    if spec.affinity.shape != (N_STRATA, a):
        raise WorldError(f"affinity must have shape ({N_STRATA}, {a}), "
                         f"got {spec.affinity.shape}")
    if spec.quad_u.shape != (f,) or spec.quad_v.shape != (f,):
        raise WorldError(f"quadratic vectors must have shape ({f},)")
    if spec.category_attr_weights.shape != (spec.n_categories, a):
        raise WorldError("category_attr_weights must have shape "
                         f"({spec.n_categories}, {a})")
    if spec.feature_noise < 0 or spec.oracle_noise < 0:
        raise WorldError("noise scales must be nonnegative")
    lo, hi = spec.attrs_per_garment
    if not (1 <= lo <= hi):
        raise WorldError("attrs_per_garment bounds must satisfy 1 <= lo <= hi")
    lo, hi = spec.lifetime_range
    if not (1 <= lo <= hi <= spec.n_weeks):
        raise WorldError("lifetime_range must fit inside the world's weeks")
    if not 0.0 <= spec.singleton_fraction <= 1.0:
        raise WorldError("singleton_fraction must be in [0, 1]")
    if spec.records_per_week < 1:
        raise WorldError("records_per_week must be positive")
    if not week_start(week_ordinal(spec.start)) == spec.start:
        raise WorldError("start must be the first day of an ISO week")


def generate_world(spec: WorldSpec) -> World:
    """Realize attribute trends from the spec; deterministic in ``spec.seed``."""
    _validate_spec(spec)
    a, w = spec.n_attributes, spec.n_weeks
    rng = np.random.default_rng(spec.seed)
    eps = np.zeros((a, w))
    innovations = rng.normal(size=(a, w)) * spec.trend_noise[:, None]
    for t in range(w):
        prev = eps[:, t - 1] if t else 0.0
        eps[:, t] = spec.trend_ar * prev + innovations[:, t]
    weeks = np.arange(w, dtype=np.float64)
    raw = (spec.trend_base[:, None]
           + spec.trend_amplitude[:, None]
           * np.sin(2.0 * np.pi * (weeks[None, :] + spec.trend_phase[:, None]) / 52.0)
           + spec.trend_drift[:, None] * weeks[None, :]
           + eps)
    return World(spec=spec, trends=clamp01(raw),
                 start_week=week_ordinal(spec.start))


# ---- oracle ------------------------------------------------------------------------


def feature_quadratic(spec: WorldSpec, features: np.ndarray) -> tuple[float, np.ndarray]:
    """Value and analytic gradient of g(f) = (u . f)(v . f)."""
    f = np.asarray(features, dtype=np.float64)
    if f.shape != (spec.feature_dim,):
        raise WorldError(f"features must have shape ({spec.feature_dim},)")
    du = float(spec.quad_u @ f)
    dv = float(spec.quad_v @ f)
    return du * dv, spec.quad_u * dv + spec.quad_v * du


def _stratum_index(stratum: Demographic) -> int:
    return stratum.gender_index * len(AGE_GROUPS) + stratum.age_index


@dataclass(frozen=True)
class SyntheticGarment:
    item_id: str
    label_set: LabelSet
    features: np.ndarray
    creation_week: int      # relative week of first record
    lifetime: int           # number of consecutive weeks with records


def oracle_popularity(world: World, garment: SyntheticGarment, week: int,
                      stratum: Demographic | None,
                      rng: np.random.Generator | None = None) -> float:
    """Ground-truth popularity; noiseless unless an rng is supplied."""
    spec = world.spec
    if not 0 <= week < spec.n_weeks:
        raise WorldError(f"week {week} outside [0, {spec.n_weeks})")
    attrs = sorted(garment.label_set.attributes)
    if not attrs:
        raise WorldError("garment must carry at least one attribute")
    value = float(np.mean(world.trends[attrs, week]))
    if stratum is not None:
        value += float(np.mean(spec.affinity[_stratum_index(stratum), attrs]))
    g, _ = feature_quadratic(spec, garment.features)
    value += spec.beta * g
    if rng is not None and spec.oracle_noise > 0:
        value += float(rng.normal(0.0, spec.oracle_noise))
    return float(clamp01(value))


def oracle_feature_gradient(world: World, garment: SyntheticGarment, week: int,
                            stratum: Demographic | None) -> np.ndarray:
    """d(popularity)/d(features) at interior points of the clamp."""
    _, grad = feature_quadratic(world.spec, garment.features)
    value = oracle_popularity(world, garment, week, stratum)
    if value <= 0.0 or value >= 1.0:
        return np.zeros_like(grad)
    return world.spec.beta * grad


# ---- sampling ----------------------------------------------------------------------


def _attribute_multihot(spec: WorldSpec, attrs) -> np.ndarray:
    hot = np.zeros(spec.n_attributes)
    hot[list(attrs)] = 1.0
    return hot


def garment_features(spec: WorldSpec, attrs,
                     rng: np.random.Generator | None = None) -> np.ndarray:
    f = _attribute_multihot(spec, attrs) @ spec.mixing
    if rng is not None and spec.feature_noise > 0:
        f = f + rng.normal(0.0, spec.feature_noise, spec.feature_dim)
    return f


def _draw_garment(world: World, index: int, rng: np.random.Generator) -> SyntheticGarment:
    spec = world.spec
    tax = spec.taxonomy
    cat = int(rng.integers(spec.n_categories))
    gtype = tax.category_parent(cat)
    legal = np.array(tax.attributes_of_type(gtype))
    weights = spec.category_attr_weights[cat, legal]
    total = weights.sum()
    weights = weights / total if total > 0 else np.full(len(legal), 1.0 / len(legal))
    lo, hi = spec.attrs_per_garment
    count = min(int(rng.integers(lo, hi + 1)), len(legal))
    attrs = rng.choice(legal, size=count, replace=False, p=weights)
    label_set = LabelSet(garment_type=gtype, category=cat,
                         attributes=frozenset(int(x) for x in attrs))
    features = garment_features(spec, attrs, rng)
    if rng.random() < spec.singleton_fraction:
        creation = int(rng.integers(spec.n_weeks // 2, spec.n_weeks))
        lifetime = 1
    else:
        lo, hi = spec.lifetime_range
        lifetime = int(rng.integers(lo, hi + 1))
        creation = int(rng.integers(0, spec.n_weeks - lifetime + 1))
    return SyntheticGarment(item_id=f"g{index:05d}", label_set=label_set,
                            features=features, creation_week=creation,
                            lifetime=lifetime)


def emit_records(world: World, garments, seed: int) -> list[PopularityRecord]:
    """Weekly popularity records for every (garment, active week, stratum draw).

    Singleton garments (lifetime 1) emit exactly one record regardless of
    ``records_per_week`` so the chronological split protocol always has
    unseen-garment material.  Timestamps land on a uniform day within the
    week: weekly aggregation is unchanged, but no single calendar day tags
    an absolute week.
    """
    spec = world.spec
    rng = np.random.default_rng(seed)
    records = []
    for garment in garments:
        per_week = 1 if garment.lifetime == 1 else spec.records_per_week
        for w in range(garment.creation_week,
                       garment.creation_week + garment.lifetime):
            monday = week_start(world.start_week + w)
            for _ in range(per_week):
                when = monday + timedelta(days=int(rng.integers(7)))
                stratum = Demographic(
                    gender=GENDERS[int(rng.integers(len(GENDERS)))],
                    age_group=AGE_GROUPS[int(rng.integers(len(AGE_GROUPS)))])
                pop = oracle_popularity(world, garment, w, stratum, rng)
                records.append(PopularityRecord(
                    item_id=garment.item_id, timestamp=when, popularity=pop,
                    label_set=garment.label_set, demographic=stratum,
                    visual_features=garment.features))
    return records


def sample_garments(world: World, count: int,
                    seed: int) -> tuple[list[SyntheticGarment], list[PopularityRecord]]:
    """Draw ``count`` garments and their full popularity record stream."""
    if count < 0:
        raise WorldError("count must be nonnegative")
    rng = np.random.default_rng(seed)
    garments = [_draw_garment(world, i, rng) for i in range(count)]
    records = emit_records(world, garments, seed + 1)
    return garments, records


def generate_dataset(spec: WorldSpec, out_dir: str | Path, count: int | None = None,
                     seed: int | None = None, fmt: str = "csv") -> dict[str, Path]:
    """Write records, the taxonomy, and the world spec side by side."""
    if fmt not in ("csv", "jsonl"):
        raise WorldError(f"fmt must be 'csv' or 'jsonl', got {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    world = generate_world(spec)
    _, records = sample_garments(world, spec.n_garments if count is None else count,
                                 spec.seed if seed is None else seed)
    paths = {
        "records": out / f"records.{fmt}",
        "taxonomy": out / "taxonomy.json",
        "worldspec": out / "worldspec.json",
    }
    writer = write_records_csv if fmt == "csv" else write_records_jsonl
    writer(paths["records"], records, spec.taxonomy)
    paths["taxonomy"].write_text(spec.taxonomy.canonical_json())
    spec.save(paths["worldspec"])
    return paths
