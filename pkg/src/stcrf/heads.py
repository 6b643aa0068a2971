"""Emission heads for the two CRFs, intention features and the decoder."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .crf import viterbi

NUM_LABELS = 3


class TimeEmissionHead(nn.Module):
    """``F_ST`` [D_f, L_o, N] -> emissions [N, L_p, 3] (chains run over time)."""

    def __init__(self, d_f, obs_len, pred_len, num_labels=NUM_LABELS):
        super().__init__()
        self.feature = nn.Linear(d_f, num_labels)
        self.time = nn.Linear(obs_len, pred_len)

    def forward(self, f_st):
        x = self.feature(f_st.permute(2, 1, 0))  # [N, L_o, K]
        return self.time(x.transpose(1, 2)).transpose(1, 2)  # [N, L_p, K]


class SpaceEmissionHead(nn.Module):
    """``F_ST`` [D_f, L_o, N] -> emissions [L_o, N, 3] (chains run over pedestrians)."""

    def __init__(self, d_f, num_labels=NUM_LABELS):
        super().__init__()
        self.feature = nn.Linear(d_f, num_labels)

    def forward(self, f_st):
        return self.feature(f_st.permute(1, 2, 0))


def time_emissions(f_st, lat_head, lon_head):
    return lat_head(f_st), lon_head(f_st)


def space_emissions(f_st, lat_head, lon_head):
    return lat_head(f_st), lon_head(f_st)


@torch.no_grad()
def decode_future_intentions(emissions, transitions):
    """Viterbi over time per pedestrian: [N, L_p, 3] -> labels [L_p, N]."""
    return viterbi(emissions.detach(), transitions.detach()).T.contiguous()


class IntentionEncoder(nn.Module):
    """Decoded labels -> ``F_I`` [D_f, L_o, N].

    Both axes are one-hot encoded (6 channels), convolved over time to
    ``D_f`` channels, then the time axis is mapped from L_p to L_o.
    """

    def __init__(self, d_f, obs_len, pred_len, num_labels=NUM_LABELS, kernel_size=3):
        super().__init__()
        self.num_labels = num_labels
        self.conv = nn.Conv2d(2 * num_labels, d_f, (kernel_size, 1),
                              padding=(kernel_size // 2, 0))
        self.act = nn.PReLU()
        self.time_map = nn.Conv2d(pred_len, obs_len, 1)

    def forward(self, lat, lon):
        dtype = self.conv.weight.dtype
        onehot = torch.cat([F.one_hot(lat.long(), self.num_labels),
                            F.one_hot(lon.long(), self.num_labels)], dim=-1)  # [L_p, N, 6]
        x = onehot.permute(2, 0, 1).to(dtype).unsqueeze(0)  # [1, 6, L_p, N]
        h = self.act(self.conv(x))  # [1, D_f, L_p, N]
        h = self.time_map(h.transpose(1, 2)).transpose(1, 2)  # [1, D_f, L_o, N]
        return h.squeeze(0)


def intention_representation(lat, lon, encoder):
    return encoder(lat, lon)


class TrajectoryDecoder(nn.Module):
    """Temporal CNN over ``F_I * W_I + F_ST``.

    Time is treated as the channel axis (L_o -> L_p), features are then
    projected to 2 per-step offsets which are integrated from the last
    observed position.
    """

    def __init__(self, d_f, obs_len, pred_len, kernel_size=3):
        super().__init__()
        pad = (kernel_size // 2, 0)
        self.gate = nn.Parameter(torch.ones(d_f, 1, 1))  # W_I, one weight per feature
        self.txp = nn.Conv2d(obs_len, pred_len, (kernel_size, 1), padding=pad)
        self.act = nn.PReLU()
        self.txp_out = nn.Conv2d(pred_len, pred_len, (kernel_size, 1), padding=pad)
        self.project = nn.Conv2d(d_f, 2, 1)

    def forward(self, f_st, f_i, last_position):
        if f_i.shape != f_st.shape:
            raise ValueError(f"F_I {tuple(f_i.shape)} and F_ST {tuple(f_st.shape)} differ")
        fused = f_i * self.gate + f_st  # [D_f, L_o, N]
        h = fused.transpose(0, 1).unsqueeze(0)  # [1, L_o, D_f, N]
        h = self.txp_out(self.act(self.txp(h)))  # [1, L_p, D_f, N]
        offsets = self.project(h.transpose(1, 2)).squeeze(0)  # [2, L_p, N]
        return last_position.unsqueeze(1) + torch.cumsum(offsets, dim=1), offsets


def decode_trajectory(f_st, f_i, last_position, decoder):
    return decoder(f_st, f_i, last_position)[0]
