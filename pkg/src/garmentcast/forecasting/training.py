"""Training loop for forecast models: Adam on MSE, seeded and deterministic.

Early stopping watches validation MAE with a patience budget and restores
the best parameters.  A non-finite loss aborts with the last stable epoch's
parameters retained on the model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..autograd import Adam, NumericError, Tensor, mse_loss
from ..taxonomy import Taxonomy
from ..trends import (
    TrendError,
    WindowSpec,
    build_attribute_series,
    make_input_window,
    week_start,
)
from .descriptors import DescriptorBatch, GarmentDescriptor, batch_descriptors
from .models import ForecastConfig, ForecastModel


class TrainingDivergedError(RuntimeError):
    """Loss went non-finite; .model holds the last stable checkpoint."""

    def __init__(self, message: str, model: ForecastModel, last_stable_epoch: int):
        super().__init__(message)
        self.model = model
        self.last_stable_epoch = last_stable_epoch


@dataclass
class ForecastDataset:
    """Aligned training arrays; any of batch/inputs may be unused per architecture."""

    taxonomy: Taxonomy
    batch: DescriptorBatch | None
    inputs: np.ndarray | None       # [N, n, a_max]
    masks: np.ndarray | None        # [N, a_max]
    targets: np.ndarray             # [N, k]
    normalization: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.targets.ndim == 1:
            self.targets = self.targets[:, None]

    def __len__(self) -> int:
        return self.targets.shape[0]

    def take(self, idx) -> "ForecastDataset":
        return ForecastDataset(
            taxonomy=self.taxonomy,
            batch=None if self.batch is None else self.batch.take(idx),
            inputs=None if self.inputs is None else self.inputs[idx],
            masks=None if self.masks is None else self.masks[idx],
            targets=self.targets[idx],
            normalization=self.normalization,
        )


@dataclass
class TrainingSchedule:
    epochs: int = 100
    batch_size: int = 64
    lr: float = 1e-3
    seed: int = 0
    patience: int | None = None     # early stop on validation MAE when set
    shuffle: bool = True
    loss_target: float | None = None  # stop once epoch train MSE drops below


@dataclass
class TrainingResult:
    loss_curve: list[float] = field(default_factory=list)
    val_mae_curve: list[float] = field(default_factory=list)
    stopped_epoch: int = 0
    best_val_mae: float | None = None


def _slice_inputs(dataset: ForecastDataset, idx):
    batch = None if dataset.batch is None else dataset.batch.take(idx)
    inputs = None if dataset.inputs is None else dataset.inputs[idx]
    masks = None if dataset.masks is None else dataset.masks[idx]
    return batch, inputs, masks


def _dataset_mae(model: ForecastModel, dataset: ForecastDataset) -> float:
    preds = model.forward(dataset.batch, dataset.inputs, dataset.masks).data
    return float(np.abs(preds - dataset.targets).mean())


def _param_snapshot(model: ForecastModel) -> dict[str, np.ndarray]:
    return {name: p.data.copy() for name, p in model.params().items()}


def _restore(model: ForecastModel, snapshot: dict[str, np.ndarray]) -> None:
    for name, p in model.params().items():
        p.data = snapshot[name].copy()


def train_model(dataset: ForecastDataset, config: ForecastConfig,
                schedule: TrainingSchedule,
                validation: ForecastDataset | None = None):
    """Fit a ForecastModel; returns (model, TrainingResult).

    Deterministic for a fixed schedule seed.  Parameters are rounded to the
    float32 grid on completion so a save/load round trip is bit-exact.
    """
    if len(dataset) == 0:
        raise ValueError("empty training set")
    if config.fusion is not None and dataset.batch is None:
        raise ValueError("architecture needs descriptors but dataset has none")
    if config.qar is not None and dataset.inputs is None:
        raise ValueError("architecture needs trend windows but dataset has none")
    if dataset.targets.shape[1] != config.k:
        raise ValueError(f"targets have {dataset.targets.shape[1]} steps, model k={config.k}")
    model = ForecastModel(dataset.taxonomy, config, seed=schedule.seed)
    model.normalization = dataset.normalization
    opt = Adam(model.params(), lr=schedule.lr)
    rng = np.random.default_rng(schedule.seed)
    n = len(dataset)
    result = TrainingResult()
    stable = _param_snapshot(model)
    best = None
    best_val = np.inf
    since_best = 0
    for epoch in range(schedule.epochs):
        order = rng.permutation(n) if schedule.shuffle else np.arange(n)
        epoch_loss = 0.0
        try:
            for lo in range(0, n, schedule.batch_size):
                idx = order[lo:lo + schedule.batch_size]
                batch, inputs, masks = _slice_inputs(dataset, idx)
                preds = model.forward(batch, inputs, masks)
                loss = mse_loss(preds, Tensor(dataset.targets[idx]))
                if not np.isfinite(loss.data):
                    raise NumericError("loss is non-finite")
                opt.zero_grad()
                loss.backward()
                opt.step()
                epoch_loss += loss.item() * len(idx)
        except NumericError as exc:
            _restore(model, stable)
            model.snap_to_f32()
            raise TrainingDivergedError(
                f"training diverged at epoch {epoch}: {exc}; "
                f"parameters restored to epoch {epoch - 1}", model, epoch - 1)
        result.loss_curve.append(epoch_loss / n)
        result.stopped_epoch = epoch
        stable = _param_snapshot(model)
        if schedule.loss_target is not None and result.loss_curve[-1] < schedule.loss_target:
            break
        if validation is not None:
            val_mae = _dataset_mae(model, validation)
            result.val_mae_curve.append(val_mae)
            if val_mae < best_val - 1e-12:
                best_val = val_mae
                best = _param_snapshot(model)
                since_best = 0
            else:
                since_best += 1
                if schedule.patience is not None and since_best >= schedule.patience:
                    break
    if best is not None:
        _restore(model, best)
        result.best_val_mae = best_val
    if config.fusion is not None and dataset.batch is not None:
        model.buffers["category_prototypes"] = _category_prototypes(
            dataset.batch, len(dataset.taxonomy.categories))
    model.snap_to_f32()
    return model, result


def _category_prototypes(batch: DescriptorBatch, n_categories: int) -> np.ndarray:
    """Per-category mean visual feature; global mean for unseen categories."""
    fallback = batch.visual.mean(axis=0)
    protos = np.tile(fallback, (n_categories, 1))
    for c in range(n_categories):
        mask = batch.category == c
        if mask.any():
            protos[c] = batch.visual[mask].mean(axis=0)
    return protos


def assemble_dataset(records, store, taxonomy: Taxonomy, config: ForecastConfig,
                     window: WindowSpec):
    """Turn popularity records into aligned training arrays.

    Records sharing (item, demographic stratum) are averaged per week; every
    week run long enough for a k-step target yields one sample whose trend
    window ends the week before the target.  Samples whose attribute series
    lack history are skipped and counted, not fatal.  Returns
    (ForecastDataset, skipped_count).
    """
    if window.k != config.k:
        raise ValueError(f"window k={window.k} != model k={config.k}")
    groups: dict = {}
    for rec in records:
        demo = rec.demographic
        key = (rec.item_id, demo.gender if demo else "", demo.age_group if demo else "")
        entry = groups.setdefault(key, {"record": rec, "weeks": {}})
        entry["weeks"].setdefault(rec.week, []).append(rec.popularity)

    cache: dict[int, object] = {}

    def series(attribute: int):
        if attribute not in cache:
            cache[attribute] = build_attribute_series(store, attribute)
        return cache[attribute]

    descriptors, inputs, masks, targets = [], [], [], []
    skipped = 0
    feature_dim = config.fusion.feature_dim if config.fusion else 0
    for key in sorted(groups):
        entry = groups[key]
        rec = entry["record"]
        pop = {w: float(np.mean(vals)) for w, vals in entry["weeks"].items()}
        attrs = sorted(rec.label_set.attributes)[:window.a_max]
        for w in sorted(pop):
            if not all(w + i in pop for i in range(window.k)):
                continue
            win = None
            if config.qar is not None:
                try:
                    if attrs:
                        win = make_input_window([series(a) for a in attrs],
                                                window, w)
                        col_in, col_mask = win.inputs, win.mask
                    else:
                        col_in = np.zeros((window.n, window.a_max))
                        col_mask = np.zeros(window.a_max)
                except TrendError:
                    skipped += 1
                    continue
                inputs.append(col_in)
                masks.append(col_mask)
            if config.fusion is not None:
                features = (rec.visual_features if rec.visual_features is not None
                            else np.zeros(feature_dim))
                descriptors.append(GarmentDescriptor(
                    visual_features=features, label_set=rec.label_set,
                    target_date=week_start(w), demographic=rec.demographic))
            targets.append([pop[w + i] for i in range(window.k)])
    if not targets:
        raise ValueError("no usable samples: every record lacked history or targets")
    batch = None
    if config.fusion is not None:
        batch = batch_descriptors(descriptors, taxonomy, feature_dim,
                                  config.hemisphere, config.fusion.use_demographic)
    dataset = ForecastDataset(
        taxonomy, batch,
        np.stack(inputs) if inputs else None,
        np.stack(masks) if masks else None,
        np.array(targets))
    return dataset, skipped


def predict_dataset(model: ForecastModel, dataset: ForecastDataset) -> np.ndarray:
    """Model forecasts [N, k] for an assembled dataset."""
    windows = None
    if dataset.inputs is not None:
        windows = (dataset.inputs, dataset.masks)
    return model.predict(dataset.batch, windows)
