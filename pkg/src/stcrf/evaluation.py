"""ADE/FDE, checkpoint evaluation, the ablation grid and trajectory plots."""

from __future__ import annotations

import csv
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np


def _check_pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.ndim != 3 or pred.shape[0] != 2:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape} (want [2, L_p, N])")
    return pred, truth


def ade(pred, truth, paper_literal=False):
    """Mean Euclidean error over all pedestrians and predicted steps.

    ``paper_literal`` divides the summed error by N only, without the
    time normalisation.
    """
    pred, truth = _check_pair(pred, truth)
    err = np.sqrt(((pred - truth) ** 2).sum(axis=0))  # [L_p, N]
    if paper_literal:
        return float(err.sum() / err.shape[1])
    return float(err.mean())


def fde(pred, truth):
    pred, truth = _check_pair(pred, truth)
    return float(np.sqrt(((pred[:, -1] - truth[:, -1]) ** 2).sum(axis=0)).mean())


@dataclass
class MetricReport:
    ade: float
    fde: float
    windows: int
    per_scene: dict = field(default_factory=dict)  # scene -> (ade, fde, windows)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scene", "windows", "ade", "fde"])
            for scene, (a, f, n) in self.per_scene.items():
                writer.writerow([scene, n, f"{a:.6f}", f"{f:.6f}"])
            writer.writerow(["all", self.windows, f"{self.ade:.6f}", f"{self.fde:.6f}"])


def evaluate(model, windows, predictor=None, paper_literal=False):
    """Deterministic single-output ADE/FDE over ``windows``.

    ``model`` may be an :class:`~stcrf.model.STCRF` or a checkpoint.  A
    ``predictor(window) -> [2, L_p, N]`` overrides the model (test hook).
    Aggregates weight every pedestrian-window equally.
    """
    if predictor is None:
        if hasattr(model, "build_model"):
            model = model.build_model()
        model.eval()

        def predictor(window):
            return model.predict_window(window)[0]

    totals = OrderedDict()
    for window in windows:
        pred = predictor(window)
        n = window.num_pedestrians
        a = ade(pred, window.future, paper_literal) * n
        f = fde(pred, window.future) * n
        acc = totals.setdefault(window.scene or "-", [0.0, 0.0, 0, 0])
        acc[0] += a
        acc[1] += f
        acc[2] += n
        acc[3] += 1
    if not totals:
        raise ValueError("no windows to evaluate")
    per_scene = OrderedDict((s, (v[0] / v[2], v[1] / v[2], v[3])) for s, v in totals.items())
    peds = sum(v[2] for v in totals.values())
    return MetricReport(
        ade=sum(v[0] for v in totals.values()) / peds,
        fde=sum(v[1] for v in totals.values()) / peds,
        windows=len(windows),
        per_scene=per_scene,
    )


# (label, use_l_t, use_l_s): each CRF loss alone, then both
ABLATION_GRID = (
    ("L_S only", False, True),
    ("L_T only", True, False),
    ("L_S + L_T", True, True),
)


def run_ablation(train_windows, eval_windows, train_config, model_config=None,
                 labeler_config=None, out_csv=None, **train_kwargs):
    """Train and evaluate each CRF-loss configuration; rows as dicts."""
    from dataclasses import replace

    from .training import train

    rows = []
    for label, use_t, use_s in ABLATION_GRID:
        cfg = replace(train_config, use_l_t=use_t, use_l_s=use_s)
        ckpt = train(train_windows, cfg, model_config, labeler_config, **train_kwargs)
        report = evaluate(ckpt, eval_windows)
        rows.append({"config": label, "L_T": int(use_t), "L_S": int(use_s),
                     "ade": report.ade, "fde": report.fde})
    if out_csv is not None:
        with open(out_csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["config", "L_T", "L_S", "ade", "fde"])
            writer.writeheader()
            for row in rows:
                writer.writerow({**row, "ade": f"{row['ade']:.6f}", "fde": f"{row['fde']:.6f}"})
    return rows


def plot_trajectories(window, prediction, path, title=None):
    """Observed (solid), true future (dashed) and predicted (dotted) paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pred = np.asarray(prediction, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(5, 5), dpi=100)
    try:
        colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
        for i, pid in enumerate(window.pedestrian_ids):
            c = colors[i % len(colors)]
            obs = window.observed[:, :, i]
            ax.plot(obs[0], obs[1], "-", color=c, label=f"ped {pid}")
            fut = np.concatenate([obs[:, -1:], window.future[:, :, i]], axis=1)
            ax.plot(fut[0], fut[1], "--", color=c)
            prd = np.concatenate([obs[:, -1:], pred[:, :, i]], axis=1)
            ax.plot(prd[0], prd[1], ":", color=c, linewidth=2)
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        if title:
            ax.set_title(title)
        ax.legend(loc="best", fontsize="small")
        fig.savefig(path, format="png", metadata={"Software": None})
    finally:
        plt.close(fig)
    return path
