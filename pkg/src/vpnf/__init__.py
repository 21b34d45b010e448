"""Velocity-potential neural fields for FOA room impulse response interpolation."""

from .analytic import plane_wave_danf_model, plane_wave_dataset, plane_wave_foa, plane_wave_model
from .checkpoint import load_model, save_model
from .errors import (
    ConfigurationError,
    MetricError,
    SimulationError,
    TrainingDivergedError,
    VpnfError,
)
from .estimators import FoaRirInterpolator
from .fields import (
    HEAD_DANF,
    HEAD_VPNF,
    HEAD_VPNF_PLUS,
    FieldModel,
    FoaPrediction,
    NormalizationRecord,
)
from .metrics import Report, evaluate, nmse_db, pcc
from .network import MlpConfig, ModifiedMLP, ParamStore, loss_param_grad
from .physics import (
    Medium,
    continuity_residual,
    foa_from_velocity,
    momentum_residual,
    velocity_from_foa,
    wave_residual,
)
from .roomsim import (
    FoaDataset,
    GridSpec,
    RoomSpec,
    build_dataset,
    image_sources,
    render_foa_rir,
    sample_room,
)
from .training import (
    MODEL_PRESETS,
    Split,
    TrainConfig,
    TrainResult,
    adaptive_total,
    data_loss,
    lhs_sample,
    make_model,
    make_split,
    pidanf_penalties,
    select_checkpoint,
    train,
    wave_loss,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "MetricError", "SimulationError", "TrainingDivergedError",
    "VpnfError",
    "FieldModel", "FoaPrediction", "NormalizationRecord",
    "HEAD_DANF", "HEAD_VPNF", "HEAD_VPNF_PLUS",
    "Medium", "momentum_residual", "continuity_residual", "wave_residual",
    "velocity_from_foa", "foa_from_velocity",
    "RoomSpec", "GridSpec", "FoaDataset", "sample_room", "image_sources",
    "render_foa_rir", "build_dataset",
    "MODEL_PRESETS", "TrainConfig", "TrainResult", "Split",
    "make_split", "make_model", "train", "select_checkpoint",
    "data_loss", "wave_loss", "pidanf_penalties", "adaptive_total", "lhs_sample",
    "Report", "evaluate", "nmse_db", "pcc",
    "save_model", "load_model",
    "FoaRirInterpolator",
    "MlpConfig", "ModifiedMLP", "ParamStore", "loss_param_grad",
    "plane_wave_foa", "plane_wave_dataset", "plane_wave_model", "plane_wave_danf_model",
]
