"""Forecast model: fusion branch, six trend encoders, and the joint head.

Three architectures share one head contract: "fusion-only" uses garment
descriptors alone, "qar-only" uses attribute trend windows alone, and
"muqar" concatenates both branch representations before the head.  The head
is a ReLU MLP followed by a linear layer with one unit per forecast week;
raw head output is returned here (clamping to [0,1] happens at the service
boundary).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..autograd import Tensor, concat, relu, reshape
from ..autograd import functional as F
from ..autograd.nn import (
    Conv1D,
    Dense,
    Embedding,
    LSTM,
    MLP,
    Module,
    ConvLSTM1D,
    TransformerEncoderLayer,
)
from ..taxonomy import Taxonomy
from .descriptors import (
    DAY_VOCAB,
    MONTH_VOCAB,
    SEASON_VOCAB,
    WEEK_VOCAB,
    DescriptorBatch,
    batch_descriptors,
)

QAR_KINDS = ("LR", "LSTM", "FeedbackLSTM", "CNN", "ConvLSTM", "Transformer")
ARCHITECTURES = ("fusion-only", "qar-only", "muqar")

GENDER_VOCAB, AGE_VOCAB = 2, 7


class ConfigError(ValueError):
    pass


@dataclass
class FusionConfig:
    feature_dim: int
    d_c: int = 16               # category/attribute embedding dim
    d_t: int = 8                # per-granularity temporal embedding dim
    d_g: int = 4                # per-field demographic embedding dim
    n_mlp: int = 2
    u_mlp: int = 128
    use_demographic: bool = False

    def __post_init__(self):
        for name in ("feature_dim", "d_c", "d_t", "d_g", "n_mlp", "u_mlp"):
            if getattr(self, name) < 1:
                raise ConfigError(f"fusion config needs positive {name}")

    @property
    def out_dim(self) -> int:
        return self.u_mlp


@dataclass
class QARConfig:
    kind: str
    n: int                      # input weeks
    a_max: int = 8              # attribute channel width
    q: int = 32                 # representation dim
    cnn_channels: tuple = (32,)
    kernel: int = 3
    heads: int = 4
    layers: int = 2
    use_positional: bool = True
    feedback_steps: int = 1     # extra self-fed rollout steps (FeedbackLSTM)

    def __post_init__(self):
        if self.kind not in QAR_KINDS:
            raise ConfigError(f"unknown trend encoder kind {self.kind!r}; "
                              f"expected one of {QAR_KINDS}")
        if self.n < 1 or self.q < 1 or self.a_max < 1:
            raise ConfigError("qar config needs n >= 1, q >= 1, a_max >= 1")
        if self.kind == "ConvLSTM" and self.q % self.a_max:
            raise ConfigError(
                f"ConvLSTM flattens [a_max, hidden] into q: q={self.q} must be "
                f"divisible by a_max={self.a_max}")
        if self.kind == "Transformer" and self.q % self.heads:
            raise ConfigError(f"q={self.q} must be divisible by heads={self.heads}")
        self.cnn_channels = tuple(self.cnn_channels)

    @property
    def out_dim(self) -> int:
        return self.q


@dataclass
class ForecastConfig:
    architecture: str
    k: int
    fusion: FusionConfig | None = None
    qar: QARConfig | None = None
    head_hidden: tuple = (64,)
    hemisphere: str = "north"

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(f"unknown architecture {self.architecture!r}; "
                              f"expected one of {ARCHITECTURES}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.architecture in ("fusion-only", "muqar") and self.fusion is None:
            raise ConfigError(f"{self.architecture} requires a fusion config")
        if self.architecture in ("qar-only", "muqar") and self.qar is None:
            raise ConfigError(f"{self.architecture} requires a qar config")
        if self.architecture == "fusion-only":
            self.qar = None
        if self.architecture == "qar-only":
            self.fusion = None
        self.head_hidden = tuple(self.head_hidden)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["head_hidden"] = list(self.head_hidden)
        if self.qar is not None:
            out["qar"]["cnn_channels"] = list(self.qar.cnn_channels)
        return out

    @staticmethod
    def from_dict(payload: dict) -> "ForecastConfig":
        fusion = payload.get("fusion")
        qar = payload.get("qar")
        if qar:
            qar = dict(qar)
            if "cnn_channels" in qar:
                qar["cnn_channels"] = tuple(qar["cnn_channels"])
        return ForecastConfig(
            architecture=payload["architecture"],
            k=payload["k"],
            fusion=FusionConfig(**fusion) if fusion else None,
            qar=QARConfig(**qar) if qar else None,
            head_hidden=tuple(payload.get("head_hidden", (64,))),
            hemisphere=payload.get("hemisphere", "north"),
        )


# ---- fusion branch ---------------------------------------------------------------


class FusionBranch(Module):
    """Early fusion of visual, categorical, temporal, and demographic inputs.

    The categorical vector is the mean of the category embedding and every
    attribute embedding, so its width is independent of how many attributes
    a garment carries.
    """

    def __init__(self, rng, taxonomy: Taxonomy, config: FusionConfig):
        super().__init__()
        self.config = config
        c = config
        self._children["cat_embed"] = Embedding(rng, len(taxonomy.categories), c.d_c)
        self._children["attr_embed"] = Embedding(rng, len(taxonomy.attributes), c.d_c)
        self._children["day_embed"] = Embedding(rng, DAY_VOCAB, c.d_t)
        self._children["week_embed"] = Embedding(rng, WEEK_VOCAB, c.d_t)
        self._children["month_embed"] = Embedding(rng, MONTH_VOCAB, c.d_t)
        self._children["season_embed"] = Embedding(rng, SEASON_VOCAB, c.d_t)
        in_dim = c.feature_dim + c.d_c + 4 * c.d_t
        if c.use_demographic:
            self._children["gender_embed"] = Embedding(rng, GENDER_VOCAB, c.d_g)
            self._children["age_embed"] = Embedding(rng, AGE_VOCAB, c.d_g)
            in_dim += 2 * c.d_g
        self._children["mlp"] = MLP(rng, in_dim, [c.u_mlp] * c.n_mlp)

    def __call__(self, batch: DescriptorBatch) -> Tensor:
        c = self._children
        cat_vec = c["cat_embed"](batch.category)
        attr_sum = Tensor(batch.attr_multihot) @ c["attr_embed"]._params["table"]
        denom = Tensor((1.0 + batch.attr_counts)[:, None])
        f_c = (cat_vec + attr_sum) / denom
        f_t = concat([c["day_embed"](batch.day), c["week_embed"](batch.week),
                      c["month_embed"](batch.month), c["season_embed"](batch.season)],
                     axis=-1)
        parts = [Tensor(batch.visual), f_c, f_t]
        if self.config.use_demographic:
            if batch.gender is None or batch.age is None:
                raise ValueError("model expects demographics but batch has none")
            parts.append(concat([c["gender_embed"](batch.gender),
                                 c["age_embed"](batch.age)], axis=-1))
        return c["mlp"](concat(parts, axis=-1))


# ---- trend encoders --------------------------------------------------------------


class _QARBase(Module):
    def __init__(self, config: QARConfig):
        super().__init__()
        self.config = config

    def _check(self, inputs: np.ndarray, mask: np.ndarray):
        cfg = self.config
        if inputs.ndim != 3 or inputs.shape[1:] != (cfg.n, cfg.a_max):
            raise ValueError(
                f"trend window shape {inputs.shape} incompatible with "
                f"(n={cfg.n}, a_max={cfg.a_max})")
        if mask.shape != (inputs.shape[0], cfg.a_max):
            raise ValueError(f"mask shape {mask.shape} != ({inputs.shape[0]}, {cfg.a_max})")
        # padded columns are inert by construction; enforce it anyway
        return Tensor(inputs * mask[:, None, :])


class LinearEncoder(_QARBase):
    def __init__(self, rng, config: QARConfig):
        super().__init__(config)
        self._children["proj"] = Dense(rng, config.n * config.a_max, config.q)

    def __call__(self, inputs, mask) -> Tensor:
        x = self._check(inputs, mask)
        flat = reshape(x, (x.shape[0], self.config.n * self.config.a_max))
        return self._children["proj"](flat)


class LSTMEncoder(_QARBase):
    def __init__(self, rng, config: QARConfig):
        super().__init__(config)
        self._children["lstm"] = LSTM(rng, config.a_max, config.q)

    def __call__(self, inputs, mask) -> Tensor:
        x = self._check(inputs, mask)
        return self._children["lstm"](x)[-1]


class FeedbackLSTMEncoder(_QARBase):
    """LSTM that rolls forward extra steps feeding its own predictions back."""

    def __init__(self, rng, config: QARConfig):
        super().__init__(config)
        self._children["lstm"] = LSTM(rng, config.a_max, config.q)
        self._children["readout"] = Dense(rng, config.q, config.a_max)

    def __call__(self, inputs, mask) -> Tensor:
        x = self._check(inputs, mask)
        lstm = self._children["lstm"]
        states = lstm(x)
        h, c = states[-1], lstm.last_cell
        mask_t = Tensor(mask)
        for _ in range(self.config.feedback_steps):
            step_input = self._children["readout"](h) * mask_t
            h, c = lstm.step(step_input, h, c)
        return h


class CNNEncoder(_QARBase):
    def __init__(self, rng, config: QARConfig):
        super().__init__(config)
        widths = list(config.cnn_channels) + [config.q]
        chans = [config.a_max] + widths
        for i, (a, b) in enumerate(zip(chans[:-1], chans[1:])):
            self._children[f"conv{i}"] = Conv1D(rng, config.kernel, a, b, padding="same")
        self.n_convs = len(widths)

    def __call__(self, inputs, mask) -> Tensor:
        x = self._check(inputs, mask)
        for i in range(self.n_convs):
            x = relu(self._children[f"conv{i}"](x))
        return F.mean_pool(x, axis=1)


class ConvLSTMEncoder(_QARBase):
    """Treats the attribute axis as 1-D space with a single input channel."""

    def __init__(self, rng, config: QARConfig):
        super().__init__(config)
        self.hidden = config.q // config.a_max
        self._children["cell"] = ConvLSTM1D(rng, config.kernel, 1, self.hidden)

    def __call__(self, inputs, mask) -> Tensor:
        x = self._check(inputs, mask)
        b = x.shape[0]
        grid = reshape(x, (b, self.config.n, self.config.a_max, 1))
        last = self._children["cell"](grid)
        return reshape(last, (b, self.config.a_max * self.hidden))


class TransformerEncoder(_QARBase):
    def __init__(self, rng, config: QARConfig):
        super().__init__(config)
        self._children["embed"] = Dense(rng, config.a_max, config.q)
        for i in range(config.layers):
            self._children[f"block{i}"] = TransformerEncoderLayer(
                rng, config.q, config.heads, 2 * config.q)
        self.positions = F.sinusoidal_positions(config.n, config.q)

    def __call__(self, inputs, mask) -> Tensor:
        x = self._check(inputs, mask)
        h = self._children["embed"](x)
        if self.config.use_positional:
            h = h + Tensor(self.positions)
        for i in range(self.config.layers):
            h = self._children[f"block{i}"](h)
        return F.mean_pool(h, axis=1)


_ENCODERS = {
    "LR": LinearEncoder,
    "LSTM": LSTMEncoder,
    "FeedbackLSTM": FeedbackLSTMEncoder,
    "CNN": CNNEncoder,
    "ConvLSTM": ConvLSTMEncoder,
    "Transformer": TransformerEncoder,
}


def build_qar_encoder(rng, config: QARConfig) -> _QARBase:
    return _ENCODERS[config.kind](rng, config)


# ---- full model ------------------------------------------------------------------


class ForecastModel(Module):
    """Trainable popularity forecaster bound to one taxonomy."""

    def __init__(self, taxonomy: Taxonomy, config: ForecastConfig, seed: int = 0,
                 version: str = "0.1.0"):
        super().__init__()
        self.taxonomy = taxonomy
        self.config = config
        self.seed = seed
        self.version = version
        self.taxonomy_hash = taxonomy.content_hash()
        self.normalization = (0.0, 1.0)
        self.buffers: dict[str, np.ndarray] = {}
        rng = np.random.default_rng(seed)
        head_in = 0
        if config.fusion is not None:
            self._children["fusion"] = FusionBranch(rng, taxonomy, config.fusion)
            head_in += config.fusion.out_dim
        if config.qar is not None:
            self._children["qar"] = build_qar_encoder(rng, config.qar)
            head_in += config.qar.out_dim
        self.head_in = head_in
        if config.head_hidden:
            self._children["head_mlp"] = MLP(rng, head_in, list(config.head_hidden))
            last = config.head_hidden[-1]
        else:
            last = head_in
        self._children["head_out"] = Dense(rng, last, config.k)

    # branch outputs, useful on their own for diagnostics and tests

    def fusion_forward(self, batch: DescriptorBatch) -> Tensor:
        if "fusion" not in self._children:
            raise ValueError(f"{self.config.architecture} model has no fusion branch")
        return self._children["fusion"](batch)

    def qar_forward(self, inputs: np.ndarray, mask: np.ndarray) -> Tensor:
        if "qar" not in self._children:
            raise ValueError(f"{self.config.architecture} model has no trend encoder")
        return self._children["qar"](inputs, mask)

    def forward(self, batch: DescriptorBatch | None, inputs: np.ndarray | None,
                mask: np.ndarray | None) -> Tensor:
        parts = []
        if self.config.fusion is not None:
            if batch is None:
                raise ValueError("model needs garment descriptors")
            parts.append(self.fusion_forward(batch))
        if self.config.qar is not None:
            if inputs is None or mask is None:
                raise ValueError("model needs trend windows")
            parts.append(self.qar_forward(inputs, mask))
        h = parts[0] if len(parts) == 1 else concat(parts, axis=-1)
        if h.shape[-1] != self.head_in:
            raise ValueError(f"head input dim {h.shape[-1]} != expected {self.head_in}")
        if self.config.head_hidden:
            h = self._children["head_mlp"](h)
        return self._children["head_out"](h)

    def predict(self, descriptors=None, windows=None) -> np.ndarray:
        """Raw k-step forecasts [B, k] from descriptors and/or trend windows."""
        batch = None
        if self.config.fusion is not None:
            if descriptors is None:
                raise ValueError("model needs garment descriptors")
            batch = (descriptors if isinstance(descriptors, DescriptorBatch)
                     else batch_descriptors(
                         descriptors, self.taxonomy, self.config.fusion.feature_dim,
                         self.config.hemisphere, self.config.fusion.use_demographic))
        inputs = mask = None
        if self.config.qar is not None:
            if windows is None:
                raise ValueError("model needs trend windows")
            if isinstance(windows, tuple):
                inputs, mask = windows
            else:
                inputs = np.stack([w.inputs for w in windows])
                mask = np.stack([w.mask for w in windows])
        return self.forward(batch, inputs, mask).data

    def snap_to_f32(self) -> None:
        """Round parameters to float32-representable values (serialization grid)."""
        for p in self.params().values():
            p.data = p.data.astype(np.float32).astype(np.float64)
        for name, buf in self.buffers.items():
            self.buffers[name] = buf.astype(np.float32).astype(np.float64)


def fusion_mlp_forward(descriptors, model: ForecastModel) -> np.ndarray:
    """Fusion-branch representation for one or more descriptors."""
    single = not isinstance(descriptors, (list, tuple, DescriptorBatch))
    if single:
        descriptors = [descriptors]
    batch = (descriptors if isinstance(descriptors, DescriptorBatch)
             else batch_descriptors(descriptors, model.taxonomy,
                                    model.config.fusion.feature_dim,
                                    model.config.hemisphere,
                                    model.config.fusion.use_demographic))
    out = model.fusion_forward(batch).data
    return out[0] if single else out


def qar_forward(window, model: ForecastModel) -> np.ndarray:
    """Trend-encoder representation for one window or a (inputs, mask) pair."""
    if isinstance(window, tuple):
        inputs, mask = window
        return model.qar_forward(inputs, mask).data
    out = model.qar_forward(window.inputs[None], window.mask[None]).data
    return out[0]


def muqar_predict(descriptors, windows, model: ForecastModel) -> np.ndarray:
    if model.config.architecture != "muqar":
        raise ValueError(f"expected a muqar model, got {model.config.architecture}")
    single = not isinstance(descriptors, (list, tuple, DescriptorBatch))
    if single:
        descriptors = [descriptors]
        windows = [windows]
    out = model.predict(descriptors, windows)
    return out[0] if single else out
