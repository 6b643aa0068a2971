import numpy as np
import pytest

from stcrf.data import (INTER_PEDESTRIAN, PER_STEP, DuplicateObservation, MalformedLine,
                        RawTrackTable, SceneWindow, integrate_displacements,
                        load_dataset_config, load_track_file, make_windows, read_manifest,
                        to_relative, write_manifest)


def write(tmp_path, text, name="tracks.txt"):
    path = tmp_path / name
    path.write_text(text)
    return path


def table_from(rows, frame_interval=0.4):
    rows = sorted(rows, key=lambda r: (r[1], r[0]))
    arr = np.array(rows, dtype=float)
    return RawTrackTable(arr[:, 0].astype(int), arr[:, 1].astype(int), arr[:, 2], arr[:, 3],
                         frame_interval)


def straight(ped, frames, start=0, offset=0.0):
    return [(f, ped, 0.5 * (f - start) + offset, float(ped)) for f in range(start, start + frames)]


def count_windows_independently(rows, seq_len):
    """Scan the distinct frames one at a time and count spans where at least
    one pedestrian appears in every frame."""
    frames = sorted({r[0] for r in rows})
    by_frame = {}
    for f, p, _, _ in rows:
        by_frame.setdefault(f, set()).add(p)
    count = 0
    for i in range(len(frames) - seq_len + 1):
        peds = set(by_frame[frames[i]])
        for f in frames[i:i + seq_len]:
            peds &= by_frame[f]
        count += bool(peds)
    return count


def test_load_two_rows(tmp_path):
    table = load_track_file(write(tmp_path, "0 1 0.0 0.0\n10 1 1.0 0.0\n"))
    assert table.rows == [(0, 1, 0.0, 0.0), (10, 1, 1.0, 0.0)]
    assert table.frame_interval == 0.4


def test_load_skips_comments_and_accepts_tabs_and_float_ids(tmp_path):
    path = write(tmp_path, "# frame ped x y\n780.0\t2.0\t8.46\t3.59\n\n770\t1\t1\t2\n")
    table = load_track_file(path)
    assert table.rows == [(770, 1, 1.0, 2.0), (780, 2, 8.46, 3.59)]


def test_load_sorts_by_pedestrian_then_frame(tmp_path):
    table = load_track_file(write(tmp_path, "10 2 0 0\n0 2 0 0\n10 1 0 0\n0 1 0 0\n"))
    assert [(r[1], r[0]) for r in table.rows] == [(1, 0), (1, 10), (2, 0), (2, 10)]


def test_scale_is_applied(tmp_path):
    table = load_track_file(write(tmp_path, "0 1 10 20\n"), scale=0.5)
    assert (table.x[0], table.y[0]) == (5.0, 10.0)


@pytest.mark.parametrize("text", ["0 1 0.0\n", "0 1 0.0 0.0 1\n", "0 a 0.0 0.0\n", "0.5 1 0 0\n"])
def test_malformed(tmp_path, text):
    with pytest.raises(MalformedLine):
        load_track_file(write(tmp_path, text))


def test_duplicate_observation(tmp_path):
    with pytest.raises(DuplicateObservation):
        load_track_file(write(tmp_path, "0 1 0 0\n0 1 1 1\n"))


def test_exact_length_track_gives_one_window():
    windows = make_windows(table_from(straight(1, 20)), 8, 12, 1)
    assert len(windows) == 1
    w = windows[0]
    assert w.observed.shape == (2, 8, 1) and w.future.shape == (2, 12, 1)
    assert w.start_frame == 0 and w.pedestrian_ids == [1]


def test_one_extra_frame_gives_two_windows():
    assert len(make_windows(table_from(straight(1, 21)), 8, 12, 1)) == 2


def test_stride():
    assert len(make_windows(table_from(straight(1, 25)), 8, 12, 2)) == 3


def test_only_fully_covered_pedestrians_are_kept():
    # ped 1 covers frames 0..19, ped 2 covers 5..19 (15 frames), ped 3 covers 0..24
    rows = straight(1, 20) + straight(2, 15, start=5) + straight(3, 25)
    windows = make_windows(table_from(rows), 8, 12, 1)
    # windows start at 0..5; ped 1 only fits the first, ped 3 all six, ped 2 none
    assert [w.pedestrian_ids for w in windows] == [[1, 3]] + [[3]] * 5
    assert len(windows) == count_windows_independently(rows, 20)


def test_windows_without_pedestrians_are_dropped():
    rows = straight(1, 12) + straight(2, 12, start=12)
    assert make_windows(table_from(rows), 8, 12, 1) == []


def test_window_count_matches_independent_counter():
    rng = np.random.default_rng(0)
    rows = []
    for ped in range(1, 16):
        start = int(rng.integers(0, 60))
        rows += straight(ped, int(rng.integers(5, 40)), start=start)
    windows = make_windows(table_from(rows), 8, 12, 1)
    assert len(windows) == count_windows_independently(rows, 20)


def test_window_membership_is_translation_invariant():
    rows = straight(1, 22) + straight(2, 20, start=2)
    shifted = [(f, p, x + 100.0, y - 7.0) for f, p, x, y in rows]
    a = make_windows(table_from(rows))
    b = make_windows(table_from(shifted))
    assert [(w.start_frame, w.pedestrian_ids) for w in a] == \
        [(w.start_frame, w.pedestrian_ids) for w in b]


def test_bad_window_parameters():
    with pytest.raises(ValueError):
        make_windows(table_from(straight(1, 20)), 1, 12)


def window_from(obs):
    obs = np.asarray(obs, dtype=float)
    return SceneWindow(obs, np.zeros((2, 1, obs.shape[2])), list(range(obs.shape[2])), 0)


def test_relative_single_pedestrian_is_zero():
    rng = np.random.default_rng(1)
    rel = to_relative(window_from(rng.normal(size=(2, 8, 1))), INTER_PEDESTRIAN)
    assert not rel.values.any()


def test_relative_two_pedestrians():
    obs = np.zeros((2, 8, 2))
    obs[:, :, 1] = [[3.0], [4.0]]
    rel = to_relative(window_from(obs), INTER_PEDESTRIAN).values
    np.testing.assert_array_equal(rel[:, 3, 1], [3.0, 4.0])
    np.testing.assert_array_equal(rel[:, :, 0], 0.0)


def test_relative_inter_pedestrian_is_successive_difference():
    rng = np.random.default_rng(2)
    obs = rng.normal(size=(2, 8, 4))
    rel = to_relative(window_from(obs), INTER_PEDESTRIAN).values
    for i in range(1, 4):
        np.testing.assert_allclose(rel[:, :, i], obs[:, :, i] - obs[:, :, i - 1])


def test_relative_translation_invariant():
    rng = np.random.default_rng(3)
    obs = rng.normal(size=(2, 8, 3))
    a = to_relative(window_from(obs)).values
    b = to_relative(window_from(obs + np.array([5.0, -2.0])[:, None, None])).values
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_per_step_stationary_is_zero():
    obs = np.ones((2, 8, 2)) * np.array([1.0, 2.0])[:, None, None]
    assert not to_relative(window_from(obs), PER_STEP).values.any()


def test_per_step_roundtrip():
    rng = np.random.default_rng(4)
    obs = rng.normal(size=(2, 8, 3))
    rel = to_relative(window_from(obs), PER_STEP).values
    assert not rel[:, 0].any()
    np.testing.assert_array_equal(integrate_displacements(obs[:, 0], rel)[:, 0], obs[:, 0])
    np.testing.assert_allclose(integrate_displacements(obs[:, 0], rel), obs, atol=1e-12)


def test_unknown_mode():
    with pytest.raises(ValueError):
        to_relative(window_from(np.zeros((2, 8, 1))), "absolute")


def test_manifest_roundtrip(tmp_path):
    rows = straight(1, 21) + straight(4, 21, offset=0.123456789)
    windows = make_windows(table_from(rows))
    for w in windows:
        w.scene = "eth test"
    path = tmp_path / "w.txt"
    write_manifest(windows, path)
    back = read_manifest(path)
    assert len(back) == 2
    for a, b in zip(windows, back):
        np.testing.assert_array_equal(a.observed, b.observed)
        np.testing.assert_array_equal(a.future, b.future)
        assert a.pedestrian_ids == b.pedestrian_ids and a.start_frame == b.start_frame
        assert b.scene == "eth_test"


def test_dataset_config(tmp_path):
    (tmp_path / "a.txt").write_text("0 1 0 0\n")
    cfg = tmp_path / "d.cfg"
    cfg.write_text("# comment\nframe_interval = 0.4\nscale = 2\ntrain = a.txt\ntest = a.txt\n")
    ds = load_dataset_config(cfg)
    assert ds.scale == 2.0 and ds.frame_interval == 0.4
    assert ds.files() == [str((tmp_path / "a.txt").resolve())]
    cfg.write_text("bogus = 1\n")
    with pytest.raises(ValueError):
        load_dataset_config(cfg)
