"""Popularity forecasting: fusion branch, trend encoders, training, model files."""

from .descriptors import (
    DateParts,
    DescriptorBatch,
    GarmentDescriptor,
    batch_descriptors,
    expand_date,
    season_of,
)
from .io import (
    ModelFormatError,
    TaxonomyMismatchError,
    load_model,
    read_model_header,
    save_model,
)
from .models import (
    ARCHITECTURES,
    QAR_KINDS,
    ConfigError,
    ForecastConfig,
    ForecastModel,
    FusionConfig,
    QARConfig,
    fusion_mlp_forward,
    muqar_predict,
    qar_forward,
)
from .training import (
    ForecastDataset,
    TrainingDivergedError,
    TrainingResult,
    TrainingSchedule,
    assemble_dataset,
    predict_dataset,
    train_model,
)

__all__ = [
    "ARCHITECTURES",
    "QAR_KINDS",
    "ConfigError",
    "DateParts",
    "DescriptorBatch",
    "ForecastConfig",
    "ForecastDataset",
    "ForecastModel",
    "FusionConfig",
    "GarmentDescriptor",
    "ModelFormatError",
    "QARConfig",
    "TaxonomyMismatchError",
    "TrainingDivergedError",
    "TrainingResult",
    "TrainingSchedule",
    "batch_descriptors",
    "expand_date",
    "fusion_mlp_forward",
    "load_model",
    "muqar_predict",
    "qar_forward",
    "read_model_header",
    "save_model",
    "season_of",
    "assemble_dataset",
    "predict_dataset",
    "train_model",
]
