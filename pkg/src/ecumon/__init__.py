"""ECU sensor health monitoring.

Detects faulty automotive sensors by banding autoencoder reconstruction
residuals into five health classes and substitutes defective readings
with per-sensor random-forest estimates from correlated peers.
"""

from .artifact import ModelArtifact, build_pipeline, load_artifact, save_artifact
from .autoencoder import (
    AutoencoderModel,
    TrainConfig,
    TrainTrace,
    forward,
    gradient,
    init_model,
    loss,
    reconstruction_r2,
    train,
)
from .calibration import ResidualProfile, classify, classify_batch, fit_profile, residuals
from .domain import (
    Dataset,
    HealthIndex,
    MonitorReport,
    SensorCatalog,
    SensorFrame,
    SensorSpec,
    SplitDataset,
    default_catalog,
    read_telemetry_csv,
    validate_frame,
    write_telemetry_csv,
)
from .forest import (
    ForestBank,
    ForestConfig,
    ForestModel,
    TreeNode,
    evaluate_bank,
    fit_bank,
    fit_forest,
    fit_tree,
    predict,
    select_features,
)
from .monitor import MonitorPipeline, process_frame, process_stream
from .preprocessing import (
    CleansingReport,
    NormalizationParams,
    cleanse,
    denormalize,
    fit_normalizer,
    normalize,
    split,
)
from .synthetic import FaultKind, FaultSpec, GroundTruth, ScenarioConfig, benchmark_report, generate
from .training import TrainingResult, train_pipeline

__version__ = "0.1.0"

__all__ = [
    "AutoencoderModel",
    "CleansingReport",
    "Dataset",
    "FaultKind",
    "FaultSpec",
    "ForestBank",
    "ForestConfig",
    "ForestModel",
    "GroundTruth",
    "HealthIndex",
    "ModelArtifact",
    "MonitorPipeline",
    "MonitorReport",
    "NormalizationParams",
    "ResidualProfile",
    "ScenarioConfig",
    "SensorCatalog",
    "SensorFrame",
    "SensorSpec",
    "SplitDataset",
    "TrainConfig",
    "TrainTrace",
    "TrainingResult",
    "TreeNode",
    "benchmark_report",
    "build_pipeline",
    "classify",
    "classify_batch",
    "cleanse",
    "default_catalog",
    "denormalize",
    "evaluate_bank",
    "fit_bank",
    "fit_forest",
    "fit_normalizer",
    "fit_profile",
    "fit_tree",
    "forward",
    "generate",
    "gradient",
    "init_model",
    "load_artifact",
    "loss",
    "normalize",
    "predict",
    "process_frame",
    "process_stream",
    "read_telemetry_csv",
    "reconstruction_r2",
    "residuals",
    "save_artifact",
    "select_features",
    "split",
    "train",
    "train_pipeline",
    "validate_frame",
    "write_telemetry_csv",
]
