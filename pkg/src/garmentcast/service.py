"""HTTP JSON service: forecasts, attribute trends, taxonomy, model management.

The service holds immutable snapshots: a taxonomy, an ingested trend store,
and an atomically swappable active model.  Read handlers grab one snapshot
reference up front, so a concurrent activation can never interleave with a
request half-way through.  Responses are pure functions of (active model
version, trend store, request body).

Thumbnail decoding is intentionally a stub: a request carrying a thumbnail
(or no features at all) is served with the model's stored per-category
prototype feature and flagged via ``used_feature_source``.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import uuid
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .forecasting import (
    ForecastModel,
    GarmentDescriptor,
    ModelFormatError,
    TaxonomyMismatchError,
    load_model,
)
from .taxonomy import LabelSet, Taxonomy, TaxonomyError, load_taxonomy, validate_taxonomy
from .trends import (
    Demographic,
    TrendError,
    TrendStore,
    WindowSpec,
    build_attribute_series,
    ingest_records,
    make_input_window,
    week_ordinal,
)

log = logging.getLogger("garmentcast.service")

ENV_PREFIX = "GARMENTCAST_"
MODEL_SUFFIX = ".muqar"


class ApiError(Exception):
    """Maps directly onto an HTTP error response."""

    def __init__(self, status: int, message: str, **extra):
        super().__init__(message)
        self.status = status
        self.payload = {"error": message, **extra}


# ---- configuration ----------------------------------------------------------------


@dataclass
class ServiceConfig:
    taxonomy_path: Path
    trend_store_path: Path
    model_registry: Path
    host: str = "127.0.0.1"
    port: int = 8342
    active_version: str | None = None

    @staticmethod
    def from_file(path: str | Path) -> "ServiceConfig":
        raw = json.loads(Path(path).read_text())
        return ServiceConfig(
            taxonomy_path=Path(raw["taxonomy_path"]),
            trend_store_path=Path(raw["trend_store_path"]),
            model_registry=Path(raw["model_registry"]),
            host=raw.get("host", "127.0.0.1"),
            port=int(raw.get("port", 8342)),
            active_version=raw.get("active_version"),
        )

    @staticmethod
    def from_env(environ=None) -> "ServiceConfig":
        env = os.environ if environ is None else environ
        missing = [key for key in ("TAXONOMY", "TREND_STORE", "MODEL_REGISTRY")
                   if ENV_PREFIX + key not in env]
        if missing:
            raise KeyError("missing environment variables: "
                           + ", ".join(ENV_PREFIX + key for key in missing))
        return ServiceConfig(
            taxonomy_path=Path(env[ENV_PREFIX + "TAXONOMY"]),
            trend_store_path=Path(env[ENV_PREFIX + "TREND_STORE"]),
            model_registry=Path(env[ENV_PREFIX + "MODEL_REGISTRY"]),
            host=env.get(ENV_PREFIX + "HOST", "127.0.0.1"),
            port=int(env.get(ENV_PREFIX + "PORT", "8342")),
            active_version=env.get(ENV_PREFIX + "ACTIVE_VERSION"),
        )

    @staticmethod
    def load(path: str | Path | None = None) -> "ServiceConfig":
        return ServiceConfig.from_file(path) if path else ServiceConfig.from_env()


# ---- state ------------------------------------------------------------------------


@dataclass(frozen=True)
class ActiveModel:
    version: str
    model: ForecastModel


class ServiceState:
    """Shared snapshots; model swaps are serialized, reads are lock-free."""

    def __init__(self, taxonomy: Taxonomy, store: TrendStore,
                 model_registry: str | Path):
        self.taxonomy = taxonomy
        self.store = store
        self.registry = Path(model_registry)
        self._active: ActiveModel | None = None
        self._swap_lock = threading.Lock()

    @property
    def active(self) -> ActiveModel | None:
        return self._active

    @property
    def weeks_loaded(self) -> int:
        first, last = self.store.period
        return int(last - first + 1)

    def registry_versions(self) -> list[str]:
        if not self.registry.is_dir():
            return []
        return sorted(p.name[:-len(MODEL_SUFFIX)]
                      for p in self.registry.glob("*" + MODEL_SUFFIX))

    def activate(self, version: str) -> ActiveModel:
        path = self.registry / (version + MODEL_SUFFIX)
        if not path.is_file():
            raise ApiError(404, f"unknown model version {version!r}",
                           available=self.registry_versions())
        try:
            model = load_model(path, self.taxonomy)
        except TaxonomyMismatchError as exc:
            raise ApiError(409, str(exc))
        except ModelFormatError as exc:
            raise ApiError(500, f"model file for {version!r} is unreadable: {exc}")
        snapshot = ActiveModel(version=version, model=model)
        with self._swap_lock:
            self._active = snapshot
        return snapshot


def build_state(config: ServiceConfig) -> ServiceState:
    taxonomy = load_taxonomy(config.taxonomy_path)
    problems = validate_taxonomy(taxonomy)
    if problems:
        raise TaxonomyError("invalid taxonomy: " + "; ".join(problems))
    store, report = ingest_records(config.trend_store_path, taxonomy)
    if report.errors:
        log.warning("trend store ingestion skipped %d rows; first: %s",
                    len(report.errors), report.errors[0])
    state = ServiceState(taxonomy, store, config.model_registry)
    if config.active_version:
        state.activate(config.active_version)
    return state


# ---- request bodies ----------------------------------------------------------------


class GarmentBody(BaseModel):
    category: str
    attributes: list[str] = []
    visual_features: list[float] | None = None
    thumbnail: str | None = None


class DemographicBody(BaseModel):
    gender: str
    age_group: str


class ForecastBody(BaseModel):
    garment: GarmentBody
    demographic: DemographicBody | None = None
    target_date: str
    horizon: int | None = None


class ActivateBody(BaseModel):
    version: str


# ---- forecast assembly -------------------------------------------------------------


def _resolve_label_set(taxonomy: Taxonomy, garment: GarmentBody) -> LabelSet:
    violations = []
    category = None
    try:
        category = taxonomy.category_index(garment.category)
    except TaxonomyError as exc:
        violations.append(str(exc))
    attributes = set()
    for name in garment.attributes:
        try:
            attributes.add(taxonomy.attribute_index(name))
        except TaxonomyError as exc:
            violations.append(str(exc))
    if violations:
        raise ApiError(400, "illegal label set", violations=violations)
    label_set = LabelSet(garment_type=taxonomy.category_parent(category),
                         category=category, attributes=frozenset(attributes))
    violations = label_set.violations(taxonomy)
    if violations:
        raise ApiError(400, "illegal label set", violations=violations)
    return label_set


def _resolve_features(model: ForecastModel, garment: GarmentBody,
                      label_set: LabelSet) -> tuple[np.ndarray, str]:
    if model.config.fusion is None:
        return np.zeros(0), "provided"
    dim = model.config.fusion.feature_dim
    if garment.visual_features is not None and garment.thumbnail is not None:
        raise ApiError(400, "send visual_features or thumbnail, not both")
    if garment.visual_features is not None:
        features = np.asarray(garment.visual_features, dtype=np.float64)
        if features.shape != (dim,):
            raise ApiError(400, f"visual_features must have length {dim}, "
                                f"got {features.shape[0]}")
        if not np.all(np.isfinite(features)):
            raise ApiError(400, "visual_features contain non-finite values")
        return features, "provided"
    prototypes = model.buffers.get("category_prototypes")
    if prototypes is None or prototypes.shape != (len(model.taxonomy.categories), dim):
        raise ApiError(409, "active model stores no category prototype features; "
                            "request must include visual_features")
    return prototypes[label_set.category].copy(), "category_prototype"


def _resolve_demographic(model: ForecastModel,
                         body: DemographicBody | None) -> Demographic | None:
    needs = model.config.fusion is not None and model.config.fusion.use_demographic
    if body is None:
        if needs:
            raise ApiError(400, "active model requires a demographic stratum")
        return None
    try:
        return Demographic(gender=body.gender, age_group=body.age_group)
    except ValueError as exc:
        raise ApiError(400, str(exc))


def _trend_windows(state: ServiceState, model: ForecastModel,
                   label_set: LabelSet, target_week: int):
    """Input window + per-attribute context for the request's label set.

    Attribute series are stacked in ascending index order, matching the
    training pipeline.  A garment with no attributes gets an all-padded
    window: the trend branch then contributes only its input-free paths.
    """
    qar = model.config.qar
    if qar is None:
        return None, {}
    spec = WindowSpec(n=qar.n, k=model.config.k, a_max=qar.a_max)
    attrs = sorted(label_set.attributes)
    if not attrs:
        window = (np.zeros((1, qar.n, qar.a_max)), np.zeros((1, qar.a_max)))
        return window, {}
    if len(attrs) > qar.a_max:
        raise ApiError(400, f"model accepts at most {qar.a_max} attributes, "
                            f"got {len(attrs)}")
    try:
        series = [build_attribute_series(state.store, a) for a in attrs]
        window = make_input_window(series, spec, target_week)
    except TrendError as exc:
        raise ApiError(422, f"insufficient trend history: {exc}")
    context = {state.taxonomy.attributes[a].name: window.inputs[:, j].tolist()
               for j, a in enumerate(attrs)}
    return (window.inputs[None, :, :], window.mask[None, :]), context


def run_forecast(state: ServiceState, body: ForecastBody) -> dict:
    active = state.active
    if active is None:
        raise ApiError(409, "no active model; POST /v1/models/activate first")
    model = active.model
    label_set = _resolve_label_set(state.taxonomy, body.garment)
    features, source = _resolve_features(model, body.garment, label_set)
    demographic = _resolve_demographic(model, body.demographic)
    try:
        target = date.fromisoformat(body.target_date)
    except ValueError as exc:
        raise ApiError(400, f"bad target_date: {exc}")
    horizon = model.config.k if body.horizon is None else body.horizon
    if not 1 <= horizon <= model.config.k:
        raise ApiError(400, f"horizon must be in [1, {model.config.k}], got {horizon}")

    windows, context = _trend_windows(state, model, label_set,
                                      week_ordinal(target))
    descriptors = None
    if model.config.fusion is not None:
        descriptors = [GarmentDescriptor(visual_features=features,
                                         label_set=label_set,
                                         target_date=target,
                                         demographic=demographic)]
    try:
        raw = model.predict(descriptors, windows)
    except (TaxonomyError, ValueError) as exc:
        raise ApiError(400, str(exc))
    popularity = np.clip(raw[0, :horizon], 0.0, 1.0)
    return {
        "popularity": [float(p) for p in popularity],
        "model_version": active.version,
        "used_feature_source": source,
        "per_attribute_context": context,
    }


# ---- trends / taxonomy -------------------------------------------------------------


def _parse_period(state: ServiceState, date_from: str | None,
                  date_to: str | None) -> tuple[int, int]:
    first, last = state.store.period
    try:
        lo = week_ordinal(date.fromisoformat(date_from)) if date_from else first
        hi = week_ordinal(date.fromisoformat(date_to)) if date_to else last
    except ValueError as exc:
        raise ApiError(400, f"bad period bound: {exc}")
    if lo > hi:
        raise ApiError(422, "empty period: 'from' is after 'to'")
    return max(lo, first), min(hi, last)


def run_trends(state: ServiceState, attribute: str, date_from: str | None,
               date_to: str | None, gender: str | None,
               age_group: str | None) -> dict:
    try:
        index = state.taxonomy.attribute_index(attribute)
    except TaxonomyError as exc:
        raise ApiError(404, str(exc))
    if (gender is None) != (age_group is None):
        raise ApiError(400, "demographic filter needs both gender and age_group")
    demographic = None
    if gender is not None:
        try:
            demographic = Demographic(gender=gender, age_group=age_group)
        except ValueError as exc:
            raise ApiError(400, str(exc))
    period = _parse_period(state, date_from, date_to)
    try:
        series = build_attribute_series(state.store, index, demographic, period)
    except TrendError as exc:
        raise ApiError(422, str(exc))
    return series.to_dict()


def taxonomy_payload(taxonomy: Taxonomy) -> dict:
    return {
        "taxonomy": taxonomy.to_dict(),
        "hash": taxonomy.content_hash(),
        "indices": {
            "garment_types": {name: i for i, name in
                              enumerate(taxonomy.garment_types)},
            "categories": {c.name: i for i, c in enumerate(taxonomy.categories)},
            "attributes": {a.name: i for i, a in enumerate(taxonomy.attributes)},
        },
    }


# ---- app factory -------------------------------------------------------------------


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="garmentcast", docs_url=None, redoc_url=None)
    app.state.service = state

    @app.exception_handler(ApiError)
    async def on_api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.payload)

    @app.exception_handler(Exception)
    async def on_internal_error(_request: Request, exc: Exception):
        fault = uuid.uuid4().hex
        log.exception("internal fault %s", fault)
        return JSONResponse(status_code=500,
                            content={"error": "internal fault", "id": fault})

    @app.post("/v1/forecast")
    def forecast(body: ForecastBody):
        return run_forecast(state, body)

    @app.get("/v1/trends/{attribute}")
    def trends(attribute: str,
               date_from: str | None = Query(None, alias="from"),
               date_to: str | None = Query(None, alias="to"),
               gender: str | None = None, age_group: str | None = None):
        return run_trends(state, attribute, date_from, date_to, gender, age_group)

    @app.get("/v1/taxonomy")
    def taxonomy():
        return taxonomy_payload(state.taxonomy)

    @app.post("/v1/models/activate")
    def activate(body: ActivateBody):
        snapshot = state.activate(body.version)
        return {"model_version": snapshot.version,
                "taxonomy_hash": snapshot.model.taxonomy_hash}

    @app.get("/healthz")
    def healthz():
        active = state.active
        return {
            "model_version": active.version if active else None,
            "taxonomy_hash": state.taxonomy.content_hash(),
            "weeks_loaded": state.weeks_loaded,
        }

    return app


def create_app_from_config(config: ServiceConfig) -> FastAPI:
    return create_app(build_state(config))
