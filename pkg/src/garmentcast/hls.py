"""Hierarchical label sharing (HLS) classifiers over precomputed features.

Two settings. Single-task (STL): separate category and attribute networks,
where label sharing feeds the garment-type embedding into the category stage
and both type and predicted-category embeddings into the attribute stage.
Multi-task (MTL): one shared encoder attends over region vectors, and a GRU
produces hidden state H1 for category classification, then re-attends
conditioned on H1 and produces H2 for attribute classification.

During training the shared label is the ground-truth category (teacher
forcing); at inference it is the argmax of the category head.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autograd import (
    Adam,
    Tensor,
    binary_cross_entropy_with_logits,
    categorical_cross_entropy_with_logits,
    concat,
    embedding,
    relu,
    sigmoid,
    softmax,
)
from .autograd.nn import AdditiveAttention, Dense, Embedding, GRU, Module
from .taxonomy import Taxonomy


@dataclass
class HLSConfig:
    feature_dim: int
    label_embed_dim: int = 8
    hidden: int = 32
    use_hls: bool = True
    # MTL only
    region_dim: int = 8
    attention_hidden: int = 16
    gru_hidden: int = 24
    cc_loss_weight: float = 1.0
    ac_loss_weight: float = 1.0


class StlHlsClassifier(Module):
    """Two independent networks (category, attributes) with optional label sharing."""

    mode = "STL"

    def __init__(self, taxonomy: Taxonomy, config: HLSConfig, seed: int = 0):
        super().__init__()
        self.taxonomy = taxonomy
        self.config = config
        rng = np.random.default_rng(seed)
        n_types = len(taxonomy.garment_types)
        n_cats = len(taxonomy.categories)
        n_attrs = len(taxonomy.attributes)
        d, e, h = config.feature_dim, config.label_embed_dim, config.hidden
        if config.use_hls:
            self._children["type_embed"] = Embedding(rng, n_types, e)
            self._children["cat_embed"] = Embedding(rng, n_cats, e)
            cc_in, ac_in = d + e, d + 2 * e
        else:
            cc_in, ac_in = d, d
        self._children["cc_hidden"] = Dense(rng, cc_in, h)
        self._children["cc_out"] = Dense(rng, h, n_cats)
        self._children["ac_hidden"] = Dense(rng, ac_in, h)
        self._children["ac_out"] = Dense(rng, h, n_attrs)

    def category_logits(self, features: Tensor, types: np.ndarray) -> Tensor:
        x = features
        if self.config.use_hls:
            x = concat([x, self._children["type_embed"](types)], axis=-1)
        return self._children["cc_out"](relu(self._children["cc_hidden"](x)))

    def attribute_logits(self, features: Tensor, types: np.ndarray,
                         categories: np.ndarray) -> Tensor:
        x = features
        if self.config.use_hls:
            x = concat([x, self._children["type_embed"](types),
                        self._children["cat_embed"](categories)], axis=-1)
        return self._children["ac_out"](relu(self._children["ac_hidden"](x)))

    def predict(self, features, garment_type, category_override=None):
        """Category distribution and attribute probabilities for a batch.

        ``features`` is [B, d]; ``garment_type`` an int array [B].  The
        attribute stage consumes the argmax of the category distribution
        unless ``category_override`` pins it.
        """
        features = features if isinstance(features, Tensor) else Tensor(features)
        types = np.atleast_1d(np.asarray(garment_type, dtype=np.int64))
        if features.data.shape[-1] != self.config.feature_dim:
            raise ValueError(
                f"feature dim {features.data.shape[-1]} != configured {self.config.feature_dim}")
        cat_probs = softmax(self.category_logits(features, types), axis=-1)
        shared = (np.asarray(category_override, dtype=np.int64)
                  if category_override is not None else cat_probs.data.argmax(axis=-1))
        attr_probs = sigmoid(self.attribute_logits(features, types, shared))
        return cat_probs.data, attr_probs.data


class MtlHlsClassifier(Module):
    """One shared encoder: attention over regions, GRU steps for CC then AC."""

    mode = "MTL"

    def __init__(self, taxonomy: Taxonomy, config: HLSConfig, seed: int = 0):
        super().__init__()
        self.taxonomy = taxonomy
        self.config = config
        rng = np.random.default_rng(seed)
        n_types = len(taxonomy.garment_types)
        n_cats = len(taxonomy.categories)
        n_attrs = len(taxonomy.attributes)
        e = config.label_embed_dim
        if config.use_hls:
            self._children["type_embed"] = Embedding(rng, n_types, e)
            self._children["cat_embed"] = Embedding(rng, n_cats, e)
        self._children["attention"] = AdditiveAttention(
            rng, query_dim=config.gru_hidden, key_dim=config.region_dim,
            hidden=config.attention_hidden)
        self._children["gru"] = GRU(rng, config.region_dim + e, config.gru_hidden)
        self._children["cc_out"] = Dense(rng, config.gru_hidden, n_cats)
        self._children["ac_out"] = Dense(rng, config.gru_hidden, n_attrs)

    def _label_vector(self, table: str, indices: np.ndarray, batch: int) -> Tensor:
        if self.config.use_hls:
            return self._children[table](indices)
        return Tensor(np.zeros((batch, self.config.label_embed_dim)))

    def _stage1(self, regions: Tensor, types: np.ndarray):
        b = regions.shape[0]
        h0 = Tensor(np.zeros((b, self.config.gru_hidden)))
        context1, _ = self._children["attention"](h0, regions)
        step1 = concat([context1, self._label_vector("type_embed", types, b)], axis=-1)
        h1 = self._children["gru"].step(step1, h0)
        return h1, self._children["cc_out"](h1)

    def _stage2(self, regions: Tensor, h1: Tensor, shared_category: np.ndarray):
        b = regions.shape[0]
        context2, _ = self._children["attention"](h1, regions)
        step2 = concat([context2, self._label_vector("cat_embed", shared_category, b)],
                       axis=-1)
        h2 = self._children["gru"].step(step2, h1)
        return self._children["ac_out"](h2)

    def forward_teacher_forced(self, regions: Tensor, types: np.ndarray,
                               true_category: np.ndarray):
        h1, cat_logits = self._stage1(regions, types)
        attr_logits = self._stage2(regions, h1, true_category)
        return cat_logits, attr_logits

    def predict(self, regions, garment_type, category_override=None):
        """Two-stage prediction over region vectors [B, R, region_dim]."""
        regions = regions if isinstance(regions, Tensor) else Tensor(regions)
        if regions.ndim != 3 or regions.shape[1] == 0:
            raise ValueError(f"need non-empty region sequence [B, R, d], got {regions.shape}")
        types = np.atleast_1d(np.asarray(garment_type, dtype=np.int64))
        h1, cat_logits = self._stage1(regions, types)
        cat_probs = softmax(cat_logits, axis=-1)
        shared = (np.asarray(category_override, dtype=np.int64)
                  if category_override is not None else cat_probs.data.argmax(axis=-1))
        attr_probs = sigmoid(self._stage2(regions, h1, shared))
        return cat_probs.data, attr_probs.data


@dataclass
class HLSDataset:
    """Training arrays for the label classifiers."""

    features: np.ndarray        # [N, feature_dim]
    types: np.ndarray           # [N] int
    categories: np.ndarray      # [N] int
    attributes: np.ndarray      # [N, n_attrs] multi-hot

    def regions(self, n_regions: int) -> np.ndarray:
        """Reshape flat features into region vectors for the MTL encoder."""
        n, d = self.features.shape
        if d % n_regions:
            raise ValueError(f"feature dim {d} not divisible into {n_regions} regions")
        return self.features.reshape(n, n_regions, d // n_regions)


def train_hls(model, data: HLSDataset, epochs: int = 200, lr: float = 5e-3,
              batch_size: int = 128, seed: int = 0,
              n_regions: int | None = None) -> list[float]:
    """Minimize weighted CC + AC loss with Adam; returns the per-epoch loss curve."""
    rng = np.random.default_rng(seed)
    opt = Adam(model.params(), lr=lr)
    n = data.features.shape[0]
    is_mtl = isinstance(model, MtlHlsClassifier)
    inputs = data.regions(n_regions) if is_mtl else data.features
    cfg = model.config
    curve = []
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, batch_size):
            idx = order[lo:lo + batch_size]
            x = Tensor(inputs[idx])
            types = data.types[idx]
            cats = data.categories[idx]
            attrs = data.attributes[idx]
            if is_mtl:
                cat_logits, attr_logits = model.forward_teacher_forced(x, types, cats)
            else:
                cat_logits = model.category_logits(x, types)
                attr_logits = model.attribute_logits(x, types, cats)
            loss = (cfg.cc_loss_weight * categorical_cross_entropy_with_logits(cat_logits, cats)
                    + cfg.ac_loss_weight * binary_cross_entropy_with_logits(attr_logits, attrs))
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_loss += loss.item() * len(idx)
        curve.append(epoch_loss / n)
    return curve


# ---- ranking metrics -------------------------------------------------------------


def topk_accuracy(predictions, truths, k: int) -> float:
    """Fraction of samples whose true class is among the k highest scores.

    Ties are broken toward the lower class index (stable sort on score).
    """
    preds = np.asarray(predictions, dtype=np.float64)
    truth = np.asarray(truths, dtype=np.int64)
    if preds.ndim != 2 or preds.shape[0] == 0:
        raise ValueError("predictions must be a non-empty [N, C] matrix")
    if truth.shape != (preds.shape[0],):
        raise ValueError(f"got {preds.shape[0]} predictions but {truth.shape} truths")
    if k < 1:
        raise ValueError("k must be >= 1")
    order = np.argsort(-preds, axis=1, kind="stable")[:, :k]
    hits = (order == truth[:, None]).any(axis=1)
    return float(hits.mean())


def recall_at_k(predictions, truths, k: int) -> float:
    """Mean over samples of |top-k scores intersected with truth| / |truth|.

    Samples with an empty truth set are skipped; an input with no non-empty
    truth set at all is an error.
    """
    preds = np.asarray(predictions, dtype=np.float64)
    if preds.ndim != 2 or preds.shape[0] == 0:
        raise ValueError("predictions must be a non-empty [N, C] matrix")
    if len(truths) != preds.shape[0]:
        raise ValueError(f"got {preds.shape[0]} predictions but {len(truths)} truth sets")
    if k < 1:
        raise ValueError("k must be >= 1")
    order = np.argsort(-preds, axis=1, kind="stable")[:, :k]
    recalls = []
    for row, truth in zip(order, truths):
        truth = set(truth)
        if not truth:
            continue
        recalls.append(len(truth.intersection(row.tolist())) / len(truth))
    if not recalls:
        raise ValueError("every truth set is empty")
    return float(np.mean(recalls))
