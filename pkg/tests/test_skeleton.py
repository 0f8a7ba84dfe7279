import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gaitindex.skeleton import (
    AXES, AxisSegment, IngestionError, KEPT_JOINTS, N_JOINTS, normalize_axis,
    read_sequence_csv, select_joints, split_axes, write_sequence_csv,
)


def test_select_joints_origin():
    out = select_joints(np.zeros((25, 3)))
    assert out.shape == (17, 3)
    assert not out.any()


def test_select_joints_index_bookkeeping():
    frame = np.zeros((25, 3))
    frame[:, 0] = np.arange(25)
    xs = select_joints(frame)[:, 0]
    assert xs.tolist() == [0, 3, 4, 5, 7, 8, 9, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20]
    for gone in (1, 2, 6, 10, 21, 22, 23, 24):
        assert gone not in xs


def test_select_joints_count():
    assert len(KEPT_JOINTS) == 25 - 8 == N_JOINTS
    assert select_joints(np.ones((7, 25, 3))).shape == (7, 17, 3)


def test_select_joints_rejects_malformed():
    with pytest.raises(IngestionError):
        select_joints(np.zeros((24, 3)))
    seq = np.zeros((5, 25, 3))
    seq[3, 4, 1] = np.nan
    with pytest.raises(IngestionError, match="frame 3"):
        select_joints(seq)


def test_split_axes_projection():
    seq = np.zeros((1, 17, 3))
    seq[0, 0] = (0.1, 0.2, 0.3)
    X, Y, Z = split_axes(seq)
    assert (X[0, 0], Y[0, 0], Z[0, 0]) == (0.1, 0.2, 0.3)


def test_split_axes_shape_and_lossless(rng):
    seq = rng.normal(size=(12, 17, 3))
    parts = split_axes(seq)
    assert all(p.shape == (12, 17) for p in parts)
    assert np.array_equal(np.stack(parts, axis=-1), seq)


def test_split_axes_empty():
    with pytest.raises(IngestionError):
        split_axes(np.zeros((0, 17, 3)))


def test_normalize_examples():
    out = normalize_axis(np.array([[2.0, 3.0, 4.0]]))
    assert out.tolist() == [[0.0, 0.5, 1.0]]
    assert (normalize_axis(np.full((4, 17), 7.3)) == 0.5).all()


def test_normalize_is_per_window():
    windows = np.stack([np.arange(6.0).reshape(2, 3), 10 + 5 * np.arange(6.0).reshape(2, 3)])
    out = normalize_axis(windows)
    assert np.allclose(out[0], out[1])
    assert out[0].min() == 0 and out[0].max() == 1


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (5, 17), elements=finite),
       st.floats(0.01, 100), st.floats(-100, 100))
def test_normalize_range_and_affine_invariance(raw, a, b):
    out = normalize_axis(raw)
    assert out.min() >= 0 and out.max() <= 1
    if raw.max() - raw.min() > 1e-6:
        assert out.min() == 0 and out.max() == 1
        np.testing.assert_allclose(normalize_axis(a * raw + b), out, atol=1e-7)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (3, 25, 3), elements=finite))
def test_select_always_17(frames):
    out = select_joints(frames)
    assert out.shape == (3, 17, 3)
    assert np.array_equal(out, frames[:, KEPT_JOINTS])


def test_axis_segment():
    seg = AxisSegment("Y", np.zeros((12, 17)))
    assert seg.T == 12
    with pytest.raises(ValueError):
        AxisSegment("W", np.zeros((12, 17)))
    assert AXES == ("X", "Y", "Z")


def test_csv_roundtrip(tmp_path, rng):
    frames = rng.normal(size=(4, 25, 3))
    path = tmp_path / "seq.csv"
    write_sequence_csv(path, frames, decimals=12)
    back = read_sequence_csv(path)
    assert back.shape == (4, 25, 3)
    np.testing.assert_allclose(back, frames, atol=1e-12)


def test_csv_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("# header\n" + ",".join(["0"] * 75) + "\n" + ",".join(["0"] * 74) + "\n")
    with pytest.raises(IngestionError, match="frame 1"):
        read_sequence_csv(bad)
    nan = tmp_path / "nan.csv"
    nan.write_text(",".join(["0"] * 74 + ["nan"]) + "\n")
    with pytest.raises(IngestionError, match="frame 0"):
        read_sequence_csv(nan)
