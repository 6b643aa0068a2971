"""Small synthetic pedestrian scenes in the ETH/UCY track format."""

from __future__ import annotations

import numpy as np

FRAME_STEP = 10  # frame-id increment per 0.4 s sample, as in the ETH files


def simulate_track(rng, frames, frame_interval=0.4, origin=None):
    """One unicycle-model track [2, frames] with smooth turns and speed changes."""
    pos = np.array(origin if origin is not None else rng.uniform(-4, 4, size=2), dtype=float)
    heading = rng.uniform(-np.pi, np.pi)
    speed = rng.uniform(0.7, 1.7)
    turn_rate = rng.uniform(-0.35, 0.35)
    accel = rng.uniform(-0.25, 0.25)
    out = np.empty((2, frames))
    for t in range(frames):
        out[:, t] = pos
        heading += turn_rate * frame_interval
        speed = float(np.clip(speed + accel * frame_interval, 0.3, 2.5))
        pos = pos + speed * frame_interval * np.array([np.cos(heading), np.sin(heading)])
    return out


def toy_rows(num_scenes=10, max_pedestrians=4, frames_per_scene=20, seed=0,
             frame_interval=0.4):
    """Rows ``(frame_id, ped_id, x, y)``.

    Scenes occupy disjoint frame ranges and every pedestrian spans its whole
    scene, so a window of ``frames_per_scene`` frames yields exactly one
    window per scene.
    """
    rng = np.random.default_rng(seed)
    rows = []
    ped = 1
    for scene in range(num_scenes):
        n = int(rng.integers(1, max_pedestrians + 1))
        base = scene * frames_per_scene
        for _ in range(n):
            track = simulate_track(rng, frames_per_scene, frame_interval)
            for t in range(frames_per_scene):
                rows.append(((base + t) * FRAME_STEP, ped, track[0, t], track[1, t]))
            ped += 1
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def write_tracks(rows, path):
    with open(path, "w") as fh:
        for frame, ped, x, y in rows:
            fh.write(f"{frame}\t{ped}\t{x:.6f}\t{y:.6f}\n")
    return path
