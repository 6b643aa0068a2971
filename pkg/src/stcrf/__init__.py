"""Pedestrian trajectory prediction with space/time intention CRFs."""

from .crf import ChainCRF, log_partition, nll, viterbi
from .data import SceneWindow, load_dataset_config, load_split, load_track_file, make_windows
from .encoder import STEncoder, build_graphs, gcn_layer, normalize_adjacency
from .estimator import IntentionLabeler, STCRFRegressor, check_windows
from .evaluation import ade, evaluate, fde, run_ablation
from .intention import LabelerConfig, intention_stats, label_window
from .model import STCRF, ModelConfig
from .training import Checkpoint, TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "ChainCRF", "log_partition", "nll", "viterbi",
    "SceneWindow", "load_dataset_config", "load_split", "load_track_file", "make_windows",
    "STEncoder", "build_graphs", "gcn_layer", "normalize_adjacency",
    "IntentionLabeler", "STCRFRegressor", "check_windows",
    "ade", "evaluate", "fde", "run_ablation",
    "LabelerConfig", "intention_stats", "label_window",
    "STCRF", "ModelConfig",
    "Checkpoint", "TrainConfig", "train",
]
