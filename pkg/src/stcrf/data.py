"""Track-file parsing, scene windows and relative-coordinate inputs."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

INTER_PEDESTRIAN = "inter-pedestrian-diff"
PER_STEP = "per-step-displacement"
RELATIVE_MODES = (INTER_PEDESTRIAN, PER_STEP)

MANIFEST_MAGIC = "# stcrf-windows v1"


class MalformedLine(ValueError):
    pass


class DuplicateObservation(ValueError):
    pass


@dataclass
class RawTrackTable:
    """Observations sorted by (pedestrian_id, frame_id)."""

    frame_id: np.ndarray
    pedestrian_id: np.ndarray
    x: np.ndarray
    y: np.ndarray
    frame_interval: float = 0.4
    source: str = ""

    def __len__(self):
        return len(self.frame_id)

    @property
    def rows(self):
        return list(zip(self.frame_id.tolist(), self.pedestrian_id.tolist(),
                        self.x.tolist(), self.y.tolist()))


@dataclass
class SceneWindow:
    observed: np.ndarray  # [2, L_o, N]
    future: np.ndarray  # [2, L_p, N]
    pedestrian_ids: list
    start_frame: int
    scene: str = ""

    @property
    def num_pedestrians(self):
        return self.observed.shape[2]

    @property
    def obs_len(self):
        return self.observed.shape[1]

    @property
    def pred_len(self):
        return self.future.shape[1]

    @property
    def full(self):
        """Observed and future positions stacked in time, [2, L_o + L_p, N]."""
        return np.concatenate([self.observed, self.future], axis=1)


@dataclass
class RelativeInput:
    values: np.ndarray  # [2, L_o, N]
    mode: str = INTER_PEDESTRIAN


def _as_int(token, lineno, line):
    value = float(token)
    if not value.is_integer():
        raise MalformedLine(f"line {lineno}: non-integer id {token!r}: {line!r}")
    return int(value)


def load_track_file(path, frame_interval=0.4, scale=1.0):
    """Parse a ``frame_id ped_id x y`` file into a :class:`RawTrackTable`.

    Lines starting with ``#`` and blank lines are skipped.  Coordinates are
    multiplied by ``scale`` (pixel datasets carry a metric conversion here).
    """
    frames, peds, xs, ys = [], [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = stripped.split()
            if len(tokens) != 4:
                raise MalformedLine(
                    f"{path}:{lineno}: expected 4 fields, got {len(tokens)}: {stripped!r}")
            try:
                frame = _as_int(tokens[0], lineno, stripped)
                ped = _as_int(tokens[1], lineno, stripped)
                x, y = float(tokens[2]), float(tokens[3])
            except ValueError as exc:
                if isinstance(exc, MalformedLine):
                    raise
                raise MalformedLine(f"{path}:{lineno}: non-numeric field: {stripped!r}") from None
            frames.append(frame)
            peds.append(ped)
            xs.append(x)
            ys.append(y)

    frame_id = np.asarray(frames, dtype=np.int64)
    pedestrian_id = np.asarray(peds, dtype=np.int64)
    order = np.lexsort((frame_id, pedestrian_id))
    frame_id, pedestrian_id = frame_id[order], pedestrian_id[order]
    if len(order) > 1:
        same = (np.diff(frame_id) == 0) & (np.diff(pedestrian_id) == 0)
        if same.any():
            i = int(np.flatnonzero(same)[0])
            raise DuplicateObservation(
                f"{path}: pedestrian {pedestrian_id[i]} observed twice at frame {frame_id[i]}")
    return RawTrackTable(
        frame_id=frame_id,
        pedestrian_id=pedestrian_id,
        x=np.asarray(xs, dtype=np.float64)[order] * scale,
        y=np.asarray(ys, dtype=np.float64)[order] * scale,
        frame_interval=frame_interval,
        source=Path(path).stem,
    )


def make_windows(table, obs_len=8, pred_len=12, stride=1):
    """Slide a window of ``obs_len + pred_len`` frames over the table.

    The time axis is the sorted list of distinct frame ids present in the
    file.  Only pedestrians observed at every frame of a window are kept;
    windows left with no pedestrian are dropped.
    """
    if obs_len < 2 or pred_len < 1 or stride < 1:
        raise ValueError("need obs_len >= 2, pred_len >= 1, stride >= 1")
    seq_len = obs_len + pred_len
    frames = np.unique(table.frame_id)
    if len(frames) < seq_len:
        return []
    frame_index = {int(f): i for i, f in enumerate(frames)}
    time_idx = np.array([frame_index[int(f)] for f in table.frame_id], dtype=np.int64)

    # dense [T, P] presence grid; tracks are short enough for this to be cheap
    ped_ids = np.unique(table.pedestrian_id)
    ped_col = np.searchsorted(ped_ids, table.pedestrian_id)
    present = np.zeros((len(frames), len(ped_ids)), dtype=bool)
    pos = np.zeros((len(frames), len(ped_ids), 2))
    present[time_idx, ped_col] = True
    pos[time_idx, ped_col, 0] = table.x
    pos[time_idx, ped_col, 1] = table.y

    counts = np.cumsum(np.vstack([np.zeros((1, len(ped_ids)), dtype=np.int64),
                                  present.astype(np.int64)]), axis=0)
    windows = []
    for start in range(0, len(frames) - seq_len + 1, stride):
        full = (counts[start + seq_len] - counts[start]) == seq_len
        if not full.any():
            continue
        cols = np.flatnonzero(full)  # ascending pedestrian id
        span = pos[start:start + seq_len, cols, :].transpose(2, 0, 1)  # [2, L, N]
        windows.append(SceneWindow(
            observed=span[:, :obs_len].copy(),
            future=span[:, obs_len:].copy(),
            pedestrian_ids=[int(p) for p in ped_ids[cols]],
            start_frame=int(frames[start]),
            scene=table.source,
        ))
    return windows


def to_relative(window, mode=INTER_PEDESTRIAN):
    obs = np.asarray(window.observed if isinstance(window, SceneWindow) else window,
                     dtype=np.float64)
    values = np.zeros_like(obs)
    if mode == INTER_PEDESTRIAN:
        values[:, :, 1:] = obs[:, :, 1:] - obs[:, :, :-1]
    elif mode == PER_STEP:
        values[:, 1:, :] = obs[:, 1:, :] - obs[:, :-1, :]
    else:
        raise ValueError(f"unknown relative mode {mode!r}; expected one of {RELATIVE_MODES}")
    return RelativeInput(values=values, mode=mode)


def integrate_displacements(first, displacements):
    """Inverse of the per-step mode: absolute positions from the first frame."""
    return first[:, None, :] + np.cumsum(displacements, axis=1)


@dataclass
class DatasetConfig:
    name: str = ""
    frame_interval: float = 0.4
    scale: float = 1.0
    splits: dict = field(default_factory=dict)

    def files(self, split=None):
        if split is not None:
            return list(self.splits.get(split, []))
        seen = []
        for paths in self.splits.values():
            seen.extend(p for p in paths if p not in seen)
        return seen


def read_kv_file(path):
    """Read a ``key = value`` text file (no sections, ``#`` comments)."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    text = Path(path).read_text()
    parser.read_string("[root]\n" + text, source=str(path))
    return dict(parser["root"])


def load_dataset_config(path):
    """Dataset config: ``frame_interval``, ``scale`` and comma-separated
    ``train``/``val``/``test`` lists of files or folders, relative to the
    config file."""
    raw = read_kv_file(path)
    base = Path(path).resolve().parent
    splits = {}
    for key in ("train", "val", "test"):
        if raw.get(key):
            paths = []
            for item in raw[key].split(","):
                if not item.strip():
                    continue
                path = (base / item.strip()).resolve()
                # a directory stands for every .txt track file inside it
                paths.extend(sorted(map(str, path.glob("*.txt"))) if path.is_dir() else [str(path)])
            splits[key] = paths
    unknown = set(raw) - {"name", "frame_interval", "scale", "train", "val", "test"}
    if unknown:
        raise ValueError(f"{path}: unknown dataset keys {sorted(unknown)}")
    return DatasetConfig(
        name=raw.get("name", Path(path).stem),
        frame_interval=float(raw.get("frame_interval", 0.4)),
        scale=float(raw.get("scale", 1.0)),
        splits=splits,
    )


def load_split(config, split=None, obs_len=8, pred_len=12, stride=1):
    windows = []
    for path in config.files(split):
        table = load_track_file(path, config.frame_interval, config.scale)
        windows.extend(make_windows(table, obs_len, pred_len, stride))
    return windows


def _fmt(values):
    return " ".join(repr(float(v)) for v in values)


def write_manifest(windows, path):
    """Write windows as text.

    Layout, one block per window::

        W <N> <L_o> <L_p> <start_frame> <scene>
        I <pedestrian ids, ascending; also the space-chain order>
        P <2*(L_o+L_p)*N floats, row-major over [2, L_o+L_p, N]>
    """
    with open(path, "w") as fh:
        fh.write(MANIFEST_MAGIC + "\n")
        for w in windows:
            fh.write(f"W {w.num_pedestrians} {w.obs_len} {w.pred_len} {w.start_frame} "
                     f"{(w.scene or '-').replace(' ', '_')}\n")
            fh.write("I " + " ".join(str(i) for i in w.pedestrian_ids) + "\n")
            fh.write("P " + _fmt(w.full.ravel()) + "\n")


def read_manifest(path):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != MANIFEST_MAGIC:
        raise ValueError(f"{path}: not a window manifest")
    body = [ln for ln in lines[1:] if ln and not ln.startswith("#")]
    if len(body) % 3:
        raise ValueError(f"{path}: truncated manifest")
    windows = []
    for i in range(0, len(body), 3):
        head, ids, data = body[i].split(), body[i + 1].split(), body[i + 2].split()
        if head[0] != "W" or ids[0] != "I" or data[0] != "P":
            raise ValueError(f"{path}: bad block starting at record {i // 3}")
        n, lo, lp, start = (int(v) for v in head[1:5])
        full = np.array([float(v) for v in data[1:]]).reshape(2, lo + lp, n)
        windows.append(SceneWindow(
            observed=full[:, :lo].copy(), future=full[:, lo:].copy(),
            pedestrian_ids=[int(v) for v in ids[1:]], start_frame=start,
            scene="" if head[5] == "-" else head[5]))
    return windows
