"""spectranet: a small multi-energy volume classifier with channel
re-excitation and a virtual-class margin loss, trained and scored with
exact ROC/AUC statistics (BCa intervals, paired DeLong tests)."""

__version__ = "0.1.0"

from .model import NetworkConfig, ParamSet, forward, init_params, param_census, predict
from .train import Checkpoint, TrainConfig, run_ablation_grid, train_fold

__all__ = [
    "__version__",
    "NetworkConfig",
    "ParamSet",
    "forward",
    "init_params",
    "param_census",
    "predict",
    "Checkpoint",
    "TrainConfig",
    "run_ablation_grid",
    "train_fold",
]
