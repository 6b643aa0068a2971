"""scikit-learn style wrappers.

``X`` is a sequence of :class:`~stcrf.data.SceneWindow`; there is no
separate ``y`` because the future positions live inside each window.
"""

from __future__ import annotations

import numpy as np
import torch
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .data import INTER_PEDESTRIAN, SceneWindow
from .evaluation import evaluate
from .intention import LabelerConfig, label_window
from .model import ModelConfig
from .training import Checkpoint, TrainConfig, train


def check_windows(X, obs_len=None, pred_len=None):
    """Validate a window collection and return it as a list."""
    if isinstance(X, SceneWindow):
        raise TypeError("expected a sequence of SceneWindow, got a single window")
    windows = list(X)
    if not windows:
        raise ValueError("empty window collection")
    for i, w in enumerate(windows):
        if not isinstance(w, SceneWindow):
            raise TypeError(f"item {i} is {type(w).__name__}, not SceneWindow")
        obs, fut = np.asarray(w.observed), np.asarray(w.future)
        if obs.ndim != 3 or obs.shape[0] != 2 or fut.ndim != 3 or fut.shape[0] != 2:
            raise ValueError(f"window {i}: positions must be [2, L, N]")
        if obs.shape[2] == 0 or obs.shape[2] != fut.shape[2]:
            raise ValueError(f"window {i}: inconsistent pedestrian count")
        if len(w.pedestrian_ids) != obs.shape[2]:
            raise ValueError(f"window {i}: {len(w.pedestrian_ids)} ids for {obs.shape[2]} pedestrians")
        if obs_len is not None and obs.shape[1] != obs_len:
            raise ValueError(f"window {i}: {obs.shape[1]} observed frames, expected {obs_len}")
        if pred_len is not None and fut.shape[1] != pred_len:
            raise ValueError(f"window {i}: {fut.shape[1]} future frames, expected {pred_len}")
        if not (np.isfinite(obs).all() and np.isfinite(fut).all()):
            raise ValueError(f"window {i}: non-finite coordinates")
    return windows


class IntentionLabeler(TransformerMixin, BaseEstimator):
    """Stateless transformer: windows -> per-frame intention labels."""

    def __init__(self, d_lat=0.1, d_lon=0.2, delta_t=0.8, frame_interval=0.4, v_ref=1.0):
        self.d_lat = d_lat
        self.d_lon = d_lon
        self.delta_t = delta_t
        self.frame_interval = frame_interval
        self.v_ref = v_ref

    def _config(self):
        return LabelerConfig(self.d_lat, self.d_lon, self.delta_t, self.frame_interval, self.v_ref)

    def fit(self, X, y=None):
        check_windows(X)
        self.config_ = self._config()
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        return [label_window(w, self.config_) for w in check_windows(X)]


class STCRFRegressor(RegressorMixin, BaseEstimator):
    """Trajectory predictor trained with the space/time CRF losses.

    ``predict`` returns one ``[2, pred_len, N]`` array per window;
    ``score`` is the negative ADE so that larger is better.
    """

    def __init__(self, obs_len=8, pred_len=12, d_f=5, n_blocks=2,
                 relative_mode=INTER_PEDESTRIAN, kernel="inverse",
                 d_lat=0.1, d_lon=0.2, delta_t=0.8, frame_interval=0.4, v_ref=1.0,
                 epochs=250, batch_size=1, learning_rate=0.01, momentum=0.9, optimizer="sgd",
                 lr_step=150, lr_gamma=0.2, grad_clip=0.0, w_s=1.0, w_t=1.0, w_traj=1.0,
                 use_l_s=True, use_l_t=True, seed=0, dtype="float32"):
        self.obs_len = obs_len
        self.pred_len = pred_len
        self.d_f = d_f
        self.n_blocks = n_blocks
        self.relative_mode = relative_mode
        self.kernel = kernel
        self.d_lat = d_lat
        self.d_lon = d_lon
        self.delta_t = delta_t
        self.frame_interval = frame_interval
        self.v_ref = v_ref
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.optimizer = optimizer
        self.lr_step = lr_step
        self.lr_gamma = lr_gamma
        self.grad_clip = grad_clip
        self.w_s = w_s
        self.w_t = w_t
        self.w_traj = w_traj
        self.use_l_s = use_l_s
        self.use_l_t = use_l_t
        self.seed = seed
        self.dtype = dtype

    def _configs(self):
        model = ModelConfig(self.obs_len, self.pred_len, self.d_f, self.n_blocks,
                            self.relative_mode, self.kernel)
        labeler = LabelerConfig(self.d_lat, self.d_lon, self.delta_t, self.frame_interval,
                                self.v_ref)
        trainer = TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size, learning_rate=self.learning_rate,
            momentum=self.momentum, optimizer=self.optimizer, lr_step=self.lr_step,
            lr_gamma=self.lr_gamma, grad_clip=self.grad_clip, w_s=self.w_s, w_t=self.w_t,
            w_traj=self.w_traj, use_l_s=self.use_l_s, use_l_t=self.use_l_t, seed=self.seed)
        return model, labeler, trainer

    def fit(self, X, y=None, X_val=None):
        windows = check_windows(X, self.obs_len, self.pred_len)
        val = None if X_val is None else check_windows(X_val, self.obs_len, self.pred_len)
        model_cfg, labeler_cfg, train_cfg = self._configs()
        self.checkpoint_ = train(windows, train_cfg, model_cfg, labeler_cfg, val_windows=val,
                                 dtype=getattr(torch, self.dtype))
        self.model_ = self.checkpoint_.build_model()
        self.history_ = self.checkpoint_.history
        return self

    @classmethod
    def from_checkpoint(cls, checkpoint):
        if not isinstance(checkpoint, Checkpoint):
            checkpoint = Checkpoint.load(checkpoint)
        params = {**checkpoint.model_config, **checkpoint.labeler_config,
                  **checkpoint.train_config}
        valid = cls().get_params()
        est = cls(**{k: v for k, v in params.items() if k in valid})
        est.checkpoint_ = checkpoint
        est.model_ = checkpoint.build_model()
        est.history_ = checkpoint.history
        return est

    def predict(self, X):
        check_is_fitted(self, "model_")
        return [self.model_.predict_window(w)[0]
                for w in check_windows(X, self.obs_len, self.pred_len)]

    def predict_intentions(self, X):
        """Decoded future (lateral, longitudinal) labels, each [pred_len, N]."""
        check_is_fitted(self, "model_")
        return [self.model_.predict_window(w)[1:]
                for w in check_windows(X, self.obs_len, self.pred_len)]

    def score(self, X, y=None, sample_weight=None):
        check_is_fitted(self, "model_")
        return -evaluate(self.model_, check_windows(X, self.obs_len, self.pred_len)).ade
