"""Per-frame lateral/longitudinal intention labels.

Lateral codes: 0 keep direction, 1 turn left, 2 turn right.
Longitudinal codes: 0 keep speed, 1 deceleration, 2 acceleration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

KEEP, LEFT, RIGHT = 0, 1, 2
KEEP_SPEED, DECELERATE, ACCELERATE = 0, 1, 2

LATERAL_NAMES = {RIGHT: "turn right", LEFT: "turn left", KEEP: "keep direction"}
LONGITUDINAL_NAMES = {ACCELERATE: "acceleration", DECELERATE: "deceleration",
                      KEEP_SPEED: "keep speed"}
STAT_ROWS = (
    ("lateral", RIGHT), ("lateral", LEFT), ("lateral", KEEP),
    ("longitudinal", ACCELERATE), ("longitudinal", DECELERATE), ("longitudinal", KEEP_SPEED),
)


class DegenerateHeading(UserWarning):
    """The track never moves, so no heading can be estimated."""


class EmptyDataset(ValueError):
    pass


@dataclass(frozen=True)
class LabelerConfig:
    d_lat: float = 0.1
    d_lon: float = 0.2
    delta_t: float = 0.8
    frame_interval: float = 0.4
    v_ref: float = 1.0

    def __post_init__(self):
        if self.d_lat <= 0:
            raise ValueError("d_lat must be positive")
        if not 0 < self.d_lon < 1:
            raise ValueError("d_lon must lie in (0, 1)")
        if self.v_ref <= 0:
            raise ValueError("v_ref must be positive")
        ratio = self.delta_t / self.frame_interval
        if ratio < 0.5 or abs(ratio - round(ratio)) > 1e-6:
            raise ValueError("delta_t must be a positive integer multiple of frame_interval")

    @property
    def step(self):
        """Look-ahead in frames."""
        return int(round(self.delta_t / self.frame_interval))


@dataclass
class IntentionLabels:
    alpha: np.ndarray  # [L, N] lateral
    beta: np.ndarray  # [L, N] longitudinal

    def split(self, obs_len):
        """(observed, future) halves along time."""
        return (IntentionLabels(self.alpha[:obs_len], self.beta[:obs_len]),
                IntentionLabels(self.alpha[obs_len:], self.beta[obs_len:]))


def rotate_to_local(trajectory):
    """Express a [2, L] track in a frame whose +x' axis is the initial heading.

    The origin moves to the first point.  The heading is the direction from
    the first point to the first later point that differs from it.
    """
    traj = np.asarray(trajectory, dtype=np.float64)
    if traj.ndim != 2 or traj.shape[0] != 2 or traj.shape[1] < 2:
        raise ValueError(f"expected a [2, L] track with L >= 2, got {traj.shape}")
    shifted = traj - traj[:, :1]
    norms = np.hypot(shifted[0], shifted[1])
    moving = np.flatnonzero(norms > 0)
    if len(moving) == 0:
        warnings.warn("stationary track; heading defaults to +x", DegenerateHeading,
                      stacklevel=2)
        return shifted
    dx, dy = shifted[:, moving[0]] / norms[moving[0]]
    rot = np.array([[dx, dy], [-dy, dx]])
    return rot @ shifted


def label_intentions(local, config=LabelerConfig()):
    """Label every frame of local-frame tracks.

    ``local`` is [2, L] or [2, L, N].  Frames whose look-ahead point falls
    past the end copy the last computable label.
    """
    arr = np.asarray(local, dtype=np.float64)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, None]
    length = arr.shape[1]
    k = config.step
    if length <= k:
        raise ValueError(f"track of {length} frames is too short for a {k}-frame look-ahead")

    dx = arr[0, k:] - arr[0, :-k]
    dy = arr[1, k:] - arr[1, :-k]
    speed = dx / config.delta_t

    alpha = np.full(dy.shape, KEEP, dtype=np.int64)
    alpha[dy > config.d_lat] = LEFT
    alpha[dy < -config.d_lat] = RIGHT
    beta = np.full(speed.shape, KEEP_SPEED, dtype=np.int64)
    beta[speed < config.v_ref * (1 - config.d_lon)] = DECELERATE
    beta[speed > config.v_ref * (1 + config.d_lon)] = ACCELERATE

    pad = np.repeat(alpha[-1:], k, axis=0), np.repeat(beta[-1:], k, axis=0)
    alpha = np.concatenate([alpha, pad[0]], axis=0)
    beta = np.concatenate([beta, pad[1]], axis=0)
    if squeeze:
        alpha, beta = alpha[:, 0], beta[:, 0]
    return IntentionLabels(alpha=alpha, beta=beta)


def label_window(window, config=LabelerConfig()):
    """Labels over the observed + future frames of a window, [L_o + L_p, N].

    Each pedestrian is rotated into its own frame, anchored on the
    window's first observed step.  A pedestrian who never moves gets
    (keep direction, keep speed) throughout.
    """
    full = window.full
    local = np.stack([rotate_to_local(full[:, :, i]) for i in range(full.shape[2])], axis=2)
    labels = label_intentions(local, config)
    stationary = ~np.any(full != full[:, :1], axis=(0, 1))
    labels.alpha[:, stationary] = KEEP
    labels.beta[:, stationary] = KEEP_SPEED
    return labels


def intention_stats(windows, config=LabelerConfig()):
    """Percentage of labeled frames per intention code.

    Keys follow ``STAT_ROWS``: the lateral codes, then the longitudinal ones.
    """
    if not windows:
        raise EmptyDataset("no windows to label")
    lat = np.zeros(3, dtype=np.int64)
    lon = np.zeros(3, dtype=np.int64)
    for window in windows:
        labels = label_window(window, config)
        lat += np.bincount(labels.alpha.ravel(), minlength=3)
        lon += np.bincount(labels.beta.ravel(), minlength=3)
    out = {}
    for axis, code in STAT_ROWS:
        counts, names = (lat, LATERAL_NAMES) if axis == "lateral" else (lon, LONGITUDINAL_NAMES)
        out[names[code]] = 100.0 * counts[code] / counts.sum()
    return out


def write_stats_csv(stats, fh):
    fh.write("intention,percent\n")
    for name, value in stats.items():
        fh.write(f"{name},{value:.2f}\n")


LABELS_MAGIC = "# stcrf-labels v1"


def write_labels(labels, path):
    """One block per window, in manifest order::

        L <window index> <frames> <N>
        A <lateral codes, row-major [frames, N]>
        B <longitudinal codes, row-major [frames, N]>
    """
    with open(path, "w") as fh:
        fh.write(LABELS_MAGIC + "\n")
        for i, lab in enumerate(labels):
            frames, n = lab.alpha.shape
            fh.write(f"L {i} {frames} {n}\n")
            fh.write("A " + " ".join(map(str, lab.alpha.ravel().tolist())) + "\n")
            fh.write("B " + " ".join(map(str, lab.beta.ravel().tolist())) + "\n")


def read_labels(path):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != LABELS_MAGIC:
        raise ValueError(f"{path}: not a labels file")
    body = [ln.split() for ln in lines[1:] if ln]
    if len(body) % 3:
        raise ValueError(f"{path}: truncated labels file")
    out = []
    for i in range(0, len(body), 3):
        head, a, b = body[i:i + 3]
        if head[0] != "L" or a[0] != "A" or b[0] != "B":
            raise ValueError(f"{path}: bad block starting at record {i // 3}")
        shape = (int(head[2]), int(head[3]))
        out.append(IntentionLabels(np.array(a[1:], dtype=np.int64).reshape(shape),
                                   np.array(b[1:], dtype=np.int64).reshape(shape)))
    return out
