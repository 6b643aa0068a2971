"""Interaction graphs and the spatial-temporal graph-convolution encoder.

Feature tensors are laid out ``[D, L, N]`` (channels, time, pedestrians).
"""

from __future__ import annotations

import warnings

import numpy as np
import torch
from torch import nn

DEFAULT_CAP = 1e4


class CoincidentPedestrians(UserWarning):
    pass


def inverse_distance(dist, cap=DEFAULT_CAP):
    with np.errstate(divide="ignore"):
        weight = np.where(dist > 0, 1.0 / np.where(dist > 0, dist, 1.0), np.inf)
    return np.minimum(weight, cap)


def gaussian(dist, sigma=1.0):
    return np.exp(-0.5 * (dist / sigma) ** 2)


KERNELS = {"inverse": inverse_distance, "gaussian": gaussian}


def build_graphs(positions, kernel="inverse", cap=DEFAULT_CAP, sigma=1.0):
    """Weighted adjacency per frame, [L, N, N], zero diagonal.

    ``positions`` is [2, L, N].  With the inverse-distance kernel,
    coincident pedestrians get weight ``cap`` and a warning.
    """
    pos = np.asarray(positions, dtype=np.float64)
    diff = pos[:, :, :, None] - pos[:, :, None, :]  # [2, L, N, N]
    dist = np.hypot(diff[0], diff[1])
    n = pos.shape[2]
    off = ~np.eye(n, dtype=bool)
    if kernel == "inverse":
        if np.any((dist == 0) & off):
            warnings.warn(f"coincident pedestrians; edge weight clamped at {cap:g}",
                          CoincidentPedestrians, stacklevel=2)
        adj = inverse_distance(dist, cap)
    elif kernel == "gaussian":
        adj = gaussian(dist, sigma)
    elif callable(kernel):
        adj = kernel(dist)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    return np.where(off, adj, 0.0)


def normalize_adjacency(a_hat):
    """``D^-1/2 A_hat D^-1/2`` with ``D`` the row sums of ``a_hat``.

    Works on numpy arrays and tensors, with optional leading batch axes.
    """
    deg = a_hat.sum(-1)
    assert (deg > 0).all(), "zero-degree node; self-loops missing?"
    inv_sqrt = deg ** -0.5
    return inv_sqrt[..., :, None] * a_hat * inv_sqrt[..., None, :]


def add_self_loops(adjacency):
    n = adjacency.shape[-1]
    eye = torch.eye(n, dtype=adjacency.dtype, device=adjacency.device)
    return adjacency + eye


def gcn_layer(features, a_norm, weight, activation=None):
    """``activation(A_norm F W)`` with nodes as rows.

    ``features`` is [D, N] (or [D, L, N] with ``a_norm`` [L, N, N]),
    ``weight`` is [D, D'].  Returns [D', N] (or [D', L, N]).
    """
    if features.shape[0] != weight.shape[0]:
        raise ValueError(f"feature dim {features.shape[0]} != weight rows {weight.shape[0]}")
    if features.dim() == 2:
        out = weight.T @ features @ a_norm.T
    else:
        mixed = torch.einsum("dtn,tmn->dtm", features, a_norm)
        out = torch.einsum("dtm,de->etm", mixed, weight)
    return activation(out) if activation is not None else out


class GraphConv(nn.Module):
    def __init__(self, in_channels, out_channels):
        super().__init__()
        self.weight = nn.Parameter(torch.empty(in_channels, out_channels))
        nn.init.xavier_uniform_(self.weight)

    def forward(self, x, a_norm):
        return gcn_layer(x, a_norm, self.weight)


def _conv(x, conv):
    # [D, L, N] <-> [1, D, L, N]
    return conv(x.unsqueeze(0)).squeeze(0)


class STGCNBlock(nn.Module):
    """Per-frame graph convolution, then a 3x1 temporal convolution."""

    def __init__(self, in_channels, out_channels, kernel_size=3):
        super().__init__()
        if kernel_size % 2 != 1:
            raise ValueError("temporal kernel must be odd for same-length padding")
        self.gcn = GraphConv(in_channels, out_channels)
        self.act1 = nn.PReLU()
        self.tcn = nn.Conv2d(out_channels, out_channels, (kernel_size, 1),
                             padding=(kernel_size // 2, 0))
        self.act2 = nn.PReLU()

    def forward(self, x, a_norm):
        if x.shape[1] < self.tcn.kernel_size[0]:
            raise ValueError(f"need at least {self.tcn.kernel_size[0]} frames, got {x.shape[1]}")
        return self.act2(_conv(self.act1(self.gcn(x, a_norm)), self.tcn))


class STEncoder(nn.Module):
    """Stacked STGCN blocks, then a 2D CNN with a 1x1-conv residual branch.

    Input: relative coordinates [2, L_o, N] and raw adjacency [L_o, N, N]
    (self-loops are added here).  Output ``F_ST`` is [D_f, L_o, N].
    """

    def __init__(self, in_channels=2, d_f=5, n_blocks=2, kernel_size=3):
        super().__init__()
        dims = [in_channels] + [d_f] * n_blocks
        self.blocks = nn.ModuleList(
            STGCNBlock(dims[i], dims[i + 1], kernel_size) for i in range(n_blocks))
        self.cnn = nn.Conv2d(d_f, d_f, (kernel_size, 1), padding=(kernel_size // 2, 0))
        self.residual = nn.Conv2d(d_f, d_f, 1)
        self.act = nn.PReLU()

    def forward(self, x, adjacency):
        a_norm = normalize_adjacency(add_self_loops(adjacency))
        h = x
        for block in self.blocks:
            h = block(h, a_norm)
        return self.act(_conv(h, self.cnn) + _conv(h, self.residual))
