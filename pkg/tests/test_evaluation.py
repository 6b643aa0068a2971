import csv
import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stcrf.evaluation import ABLATION_GRID, ade, evaluate, fde, plot_trajectories


def loop_ade(pred, truth, per_step=True):
    total = 0.0
    _, steps, n = truth.shape
    for i in range(n):
        for t in range(steps):
            total += np.sqrt((pred[0, t, i] - truth[0, t, i]) ** 2
                             + (pred[1, t, i] - truth[1, t, i]) ** 2)
    return total / (n * steps) if per_step else total / n


def loop_fde(pred, truth):
    n = truth.shape[2]
    return sum(np.hypot(pred[0, -1, i] - truth[0, -1, i], pred[1, -1, i] - truth[1, -1, i])
               for i in range(n)) / n


def test_identical_is_zero():
    y = np.random.default_rng(0).normal(size=(2, 12, 3))
    assert ade(y, y) == 0.0 and fde(y, y) == 0.0


def test_three_four_offset():
    y = np.zeros((2, 12, 2))
    pred = y.copy()
    pred[0] += 3.0
    pred[1] += 4.0
    assert ade(pred, y) == 5.0
    assert fde(pred, y) == 5.0


def test_fde_only_looks_at_last_step():
    y = np.zeros((2, 12, 1))
    pred = y.copy()
    pred[:, :-1] = 100.0
    assert fde(pred, y) == 0.0 and ade(pred, y) > 0


def test_paper_literal_scales_by_horizon():
    rng = np.random.default_rng(1)
    y, p = rng.normal(size=(2, 12, 3)), rng.normal(size=(2, 12, 3))
    assert ade(p, y, paper_literal=True) == pytest.approx(12 * ade(p, y), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), steps=st.integers(1, 12), n=st.integers(1, 6))
def test_metrics_match_loop_oracles(seed, steps, n):
    rng = np.random.default_rng(seed)
    y, p = rng.normal(scale=5, size=(2, steps, n)), rng.normal(scale=5, size=(2, steps, n))
    assert abs(ade(p, y) - loop_ade(p, y)) <= 1e-9
    assert abs(ade(p, y, paper_literal=True) - loop_ade(p, y, False)) <= 1e-9
    assert abs(fde(p, y) - loop_fde(p, y)) <= 1e-9
    # rigid motion of both
    theta = rng.uniform(0, 2 * np.pi)
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    shift = rng.normal(size=(2, 1, 1))
    move = lambda a: np.einsum("ij,jtn->itn", rot, a) + shift  # noqa: E731
    assert ade(move(p), move(y)) == pytest.approx(ade(p, y), abs=1e-9)
    assert fde(move(p), move(y)) == pytest.approx(fde(p, y), abs=1e-9)


def test_shape_mismatch():
    with pytest.raises(ValueError):
        ade(np.zeros((2, 12, 3)), np.zeros((2, 12, 2)))
    with pytest.raises(ValueError):
        fde(np.zeros((3, 12, 2)), np.zeros((3, 12, 2)))


def test_evaluate_with_oracle_predictor(toy_windows, tmp_path):
    report = evaluate(None, toy_windows, predictor=lambda w: w.future)
    assert report.ade == 0.0 and report.fde == 0.0 and report.windows == len(toy_windows)
    report.write_csv(tmp_path / "r.csv")
    with open(tmp_path / "r.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[-1]["scene"] == "all" and float(rows[-1]["ade"]) == 0.0


def test_evaluate_weights_pedestrians_equally(toy_windows):
    def shifted(w):
        return w.future + np.array([3.0, 4.0])[:, None, None]
    report = evaluate(None, toy_windows, predictor=shifted)
    assert report.ade == pytest.approx(5.0) and report.fde == pytest.approx(5.0)


def test_evaluate_constant_velocity_matches_manual(toy_windows):
    def const_vel(w):
        v = w.observed[:, -1] - w.observed[:, -2]
        return w.observed[:, -1:, :] + v[:, None, :] * np.arange(1, 13)[None, :, None]
    report = evaluate(None, toy_windows, predictor=const_vel)
    errs = [ade(const_vel(w), w.future) * w.num_pedestrians for w in toy_windows]
    peds = sum(w.num_pedestrians for w in toy_windows)
    assert report.ade == pytest.approx(sum(errs) / peds, abs=1e-12)


def test_ablation_grid_rows():
    assert [row[0] for row in ABLATION_GRID] == ["L_S only", "L_T only", "L_S + L_T"]


def test_plot_file_and_determinism(toy_windows, tmp_path):
    import matplotlib.image as mpimg
    w = next(w for w in toy_windows if w.num_pedestrians == 3)
    pred = w.future + 0.3
    a = plot_trajectories(w, pred, tmp_path / "a.png", title="t")
    b = plot_trajectories(w, pred, tmp_path / "b.png", title="t")
    assert mpimg.imread(a).shape[2] in (3, 4)
    digest = lambda p: hashlib.sha256(p.read_bytes()).hexdigest()  # noqa: E731
    assert digest(a) == digest(b)


def test_plot_has_one_legend_entry_per_pedestrian(toy_windows, tmp_path, monkeypatch):
    import matplotlib.axes
    seen = {}
    original = matplotlib.axes.Axes.legend

    def spy(self, *args, **kwargs):
        leg = original(self, *args, **kwargs)
        seen["labels"] = [t.get_text() for t in leg.get_texts()]
        return leg

    monkeypatch.setattr(matplotlib.axes.Axes, "legend", spy)
    w = next(w for w in toy_windows if w.num_pedestrians == 4)
    plot_trajectories(w, w.future, tmp_path / "p.png")
    assert seen["labels"] == [f"ped {i}" for i in w.pedestrian_ids]
