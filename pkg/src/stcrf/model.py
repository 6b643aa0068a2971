"""The full predictor: encoder, two CRF heads and the intention-gated decoder."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

import numpy as np
import torch
from torch import nn

from .crf import ChainCRF
from .data import INTER_PEDESTRIAN, RELATIVE_MODES, SceneWindow, to_relative
from .encoder import DEFAULT_CAP, STEncoder, build_graphs
from .heads import (IntentionEncoder, SpaceEmissionHead, TimeEmissionHead,
                    TrajectoryDecoder, decode_future_intentions)
from .intention import LabelerConfig, label_window


@dataclass
class ModelConfig:
    obs_len: int = 8
    pred_len: int = 12
    d_f: int = 5
    n_blocks: int = 2
    relative_mode: str = INTER_PEDESTRIAN
    kernel: str = "inverse"
    kernel_cap: float = DEFAULT_CAP
    kernel_sigma: float = 1.0

    def __post_init__(self):
        if self.relative_mode not in RELATIVE_MODES:
            raise ValueError(f"relative_mode must be one of {RELATIVE_MODES}")
        if self.obs_len < 3:
            raise ValueError("obs_len must be >= 3 for the 3-frame temporal kernel")

    def to_dict(self):
        return asdict(self)


class PreparedWindow(NamedTuple):
    relative: torch.Tensor  # [2, L_o, N]
    adjacency: torch.Tensor  # [L_o, N, N]
    last_position: torch.Tensor  # [2, N]
    future: torch.Tensor  # [2, L_p, N]
    obs_alpha: Optional[torch.Tensor]  # [L_o, N]
    obs_beta: Optional[torch.Tensor]
    fut_alpha: Optional[torch.Tensor]  # [L_p, N]
    fut_beta: Optional[torch.Tensor]


def prepare_window(window: SceneWindow, config: ModelConfig, labeler: Optional[LabelerConfig] = None,
                   dtype=torch.float32) -> PreparedWindow:
    """Tensors the model and losses consume, computed once per window."""
    rel = to_relative(window, config.relative_mode).values
    adj = build_graphs(window.observed, config.kernel, config.kernel_cap, config.kernel_sigma)
    labels = [None] * 4
    if labeler is not None:
        lab = label_window(window, labeler)
        lo = window.obs_len
        labels = [torch.as_tensor(a) for a in
                  (lab.alpha[:lo], lab.beta[:lo], lab.alpha[lo:], lab.beta[lo:])]
    return PreparedWindow(
        torch.as_tensor(rel, dtype=dtype),
        torch.as_tensor(adj, dtype=dtype),
        torch.as_tensor(window.observed[:, -1, :], dtype=dtype),
        torch.as_tensor(window.future, dtype=dtype),
        *labels,
    )


class ModelOutput(NamedTuple):
    prediction: torch.Tensor  # [2, L_p, N]
    f_st: torch.Tensor
    f_i: torch.Tensor
    time_lat: torch.Tensor  # [N, L_p, 3]
    time_lon: torch.Tensor
    space_lat: torch.Tensor  # [L_o, N, 3]
    space_lon: torch.Tensor
    intent_lat: torch.Tensor  # [L_p, N]
    intent_lon: torch.Tensor


class STCRF(nn.Module):
    def __init__(self, config: ModelConfig = None):
        super().__init__()
        self.config = config = config or ModelConfig()
        self.encoder = STEncoder(2, config.d_f, config.n_blocks)
        self.time_lat = TimeEmissionHead(config.d_f, config.obs_len, config.pred_len)
        self.time_lon = TimeEmissionHead(config.d_f, config.obs_len, config.pred_len)
        self.space_lat = SpaceEmissionHead(config.d_f)
        self.space_lon = SpaceEmissionHead(config.d_f)
        self.time_crf_lat = ChainCRF()
        self.time_crf_lon = ChainCRF()
        self.space_crf_lat = ChainCRF()
        self.space_crf_lon = ChainCRF()
        self.intention = IntentionEncoder(config.d_f, config.obs_len, config.pred_len)
        self.decoder = TrajectoryDecoder(config.d_f, config.obs_len, config.pred_len)

    def forward(self, relative, adjacency, last_position) -> ModelOutput:
        f_st = self.encoder(relative, adjacency)
        time_lat, time_lon = self.time_lat(f_st), self.time_lon(f_st)
        intent_lat = decode_future_intentions(time_lat, self.time_crf_lat.transitions)
        intent_lon = decode_future_intentions(time_lon, self.time_crf_lon.transitions)
        f_i = self.intention(intent_lat, intent_lon)
        prediction, _ = self.decoder(f_st, f_i, last_position)
        return ModelOutput(prediction, f_st, f_i, time_lat, time_lon,
                           self.space_lat(f_st), self.space_lon(f_st), intent_lat, intent_lon)

    def run(self, prepared: PreparedWindow) -> ModelOutput:
        return self(prepared.relative, prepared.adjacency, prepared.last_position)

    @torch.no_grad()
    def predict_window(self, window: SceneWindow):
        """Absolute future positions [2, L_p, N] and decoded labels [L_p, N] per axis."""
        dtype = next(self.parameters()).dtype
        out = self.run(prepare_window(window, self.config, dtype=dtype))
        return (out.prediction.numpy().astype(np.float64),
                out.intent_lat.numpy(), out.intent_lon.numpy())
