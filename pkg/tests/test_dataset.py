import json
import os

import numpy as np
import pytest

from dvlalign import dataset, dvl, so3, trajgen
from dvlalign.dataset import DatasetManifest, WindowSet
from dvlalign.dvl import DvlSpec
from dvlalign.exceptions import CorruptManifest, TooShort
from dvlalign.imu import ImuSpec, InsVelocitySeries, imu_grade, simulate_ins
from dvlalign.sampling import nearest_indices


@pytest.fixture(scope="module")
def turn():
    return trajgen.preset("turn")


def test_window_count_formula():
    for n in (5, 17, 1001):
        for W in (1, 3, 5):
            assert len(dataset.window_starts(n, W)) == n - W + 1
    with pytest.raises(TooShort):
        dataset.window_starts(10, 11)


def test_make_windows(turn):
    rng = np.random.default_rng(0)
    d = dvl.simulate_dvl(turn, np.eye(3), DvlSpec(), rng)
    t, v_b = simulate_ins(turn, ImuSpec(), rng)
    ins = InsVelocitySeries(t=t, v_b=v_b[0])
    dw, iw = dataset.make_windows(d, ins, 125)
    assert dw.shape == iw.shape == (877, 125, 3)
    np.testing.assert_array_equal(dw[5], d.v_d[5:130])
    one, _ = dataset.make_windows(d, ins, len(d))
    assert len(one) == 1
    with pytest.raises(TooShort):
        dataset.make_windows(d, ins, len(d) + 1)


def test_nearest_pairing_bound(turn):
    t_dvl = turn.t[dvl.epoch_indices(turn.t, 5.0)]
    t_ins = np.arange(0, 200.0 + 1e-9, 0.01)
    # shift the INS clock by a fraction of a step to exercise the bound
    t_ins = t_ins + 0.0037
    idx = nearest_indices(t_ins, t_dvl[1:])
    assert np.max(np.abs(t_ins[idx] - t_dvl[1:])) <= 0.005 + 1e-12


def test_identity_alignment_noise_free(turn):
    ws = dataset.augment_and_build(turn, [np.zeros(3)], DvlSpec.ideal(), ImuSpec(),
                                   125, np.random.default_rng(0), stride=50)
    assert np.max(np.abs(ws.dvl - ws.ins)) < 1e-5  # float32 storage + integration
    again = dataset.augment_and_build(turn, [np.zeros(3)], DvlSpec.ideal(), ImuSpec(),
                                      125, np.random.default_rng(0), stride=50)
    np.testing.assert_array_equal(ws.dvl, again.dvl)


def test_alignment_only_changes_dvl_path(turn):
    al = np.deg2rad([[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]])
    ws = dataset.augment_and_build(turn, al, DvlSpec(), imu_grade("tactical"), 125,
                                   np.random.default_rng(1), stride=100)
    a, b = ws[ws.config_ids == 0], ws[ws.config_ids == 1]
    np.testing.assert_array_equal(a.ins, b.ins)
    assert not np.allclose(a.dvl, b.dvl)
    np.testing.assert_array_equal(a.labels, 0.0)
    np.testing.assert_allclose(b.labels, np.tile([1, 2, 3], (len(b), 1)), atol=1e-5)


def test_build_counts(turn):
    al = so3.grid_alignments(2, 5.0)
    ws = dataset.augment_and_build(turn, al, DvlSpec(), ImuSpec(), 125,
                                   np.random.default_rng(0))
    assert len(ws) == 8 * 877
    assert ws.X.shape == (8 * 877, 125, 6)
    # full-scale grid: 17^3 configurations at 877 windows each
    n_configs = len(so3.grid_alignments(17, 5.0))
    assert n_configs * len(dataset.window_starts(1001, 125)) == 4_308_701


def test_labels_constant_within_config(turn):
    ws = dataset.augment_and_build(turn, so3.grid_alignments(2, 5.0), DvlSpec(),
                                   ImuSpec(), 125, np.random.default_rng(0), stride=200)
    for c in np.unique(ws.config_ids):
        lab = ws.labels[ws.config_ids == c]
        assert np.all(lab == lab[0])


def test_split_counts():
    assert dataset.split_counts(4913) == (2947, 983, 983)
    assert dataset.split_counts(125) == (75, 25, 25)
    with pytest.raises(ValueError):
        dataset.split_counts(10, (0.5, 0.5, 0.5))


def test_split_partition_and_determinism():
    a = dataset.split_configs(4913, seed=3)
    b = dataset.split_configs(4913, seed=3)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    assert [len(p) for p in a] == [2947, 983, 983]
    allc = np.concatenate(a)
    assert len(np.unique(allc)) == 4913


def test_split_leakage_guard(turn):
    ws = dataset.augment_and_build(turn, so3.grid_alignments(3, 5.0), DvlSpec(),
                                   ImuSpec(), 125, np.random.default_rng(0), stride=100)
    tr, va, te = dataset.split(ws, seed=7)
    assert len(tr) + len(va) + len(te) == len(ws)
    keys = [set(map(tuple, np.round(s.labels, 4))) for s in (tr, va, te)]
    assert not (keys[0] & keys[1]) and not (keys[0] & keys[2]) and not (keys[1] & keys[2])


def _small_set(W=8, n=5, seed=0):
    rng = np.random.default_rng(seed)
    return WindowSet(rng.normal(size=(n, W, 3)), rng.normal(size=(n, W, 3)),
                     rng.uniform(0, 5, size=(n, 3)))


def test_persistence_roundtrip(tmp_path):
    splits = (_small_set(n=6, seed=1), _small_set(n=2, seed=2), _small_set(n=3, seed=3))
    m = DatasetManifest(window_len=8, dvl_rate_hz=5.0, counts={}, seed=3,
                        params={"imu": "tactical"})
    dataset.save_dataset(splits, m, tmp_path)
    loaded, m2 = dataset.load_dataset(tmp_path)
    for a, b in zip(splits, loaded):
        assert a.dvl.tobytes() == b.dvl.tobytes()
        assert a.ins.tobytes() == b.ins.tobytes()
        assert a.labels.tobytes() == b.labels.tobytes()
    assert m2.counts == {"train": 6, "val": 2, "test": 3}
    assert m2.params == {"imu": "tactical"}
    assert m2.split_granularity == "configuration"
    head = (tmp_path / "train.bin").read_bytes()[:16]
    assert head[:8] == b"IDVLDS01"
    assert int.from_bytes(head[8:12], "little") == 6
    assert int.from_bytes(head[12:16], "little") == 8


def test_truncated_file(tmp_path):
    splits = (_small_set(), _small_set(), _small_set())
    dataset.save_dataset(splits, DatasetManifest(8, 5.0, {}), tmp_path)
    path = tmp_path / "val.bin"
    path.write_bytes(path.read_bytes()[:-7])
    with pytest.raises(CorruptManifest):
        dataset.load_dataset(tmp_path)


def test_bad_magic_and_count(tmp_path):
    splits = (_small_set(), _small_set(), _small_set())
    dataset.save_dataset(splits, DatasetManifest(8, 5.0, {}), tmp_path)
    raw = bytearray((tmp_path / "test.bin").read_bytes())
    raw[:8] = b"XXXXXXXX"
    (tmp_path / "test.bin").write_bytes(bytes(raw))
    with pytest.raises(CorruptManifest):
        dataset.load_dataset(tmp_path)
    dataset.save_dataset(splits, DatasetManifest(8, 5.0, {}), tmp_path)
    man = json.loads((tmp_path / "manifest.json").read_text())
    man["counts"]["train"] = 99
    (tmp_path / "manifest.json").write_text(json.dumps(man))
    with pytest.raises(CorruptManifest):
        dataset.load_dataset(tmp_path)


def test_empty_dataset(tmp_path):
    empty = WindowSet.empty(8)
    dataset.save_dataset((empty, empty, empty), DatasetManifest(8, 5.0, {}), tmp_path)
    loaded, m = dataset.load_dataset(tmp_path)
    assert all(len(s) == 0 for s in loaded)
    assert m.counts == {"train": 0, "val": 0, "test": 0}
    assert os.path.getsize(tmp_path / "train.bin") == 16


def test_window_sample_access():
    ws = _small_set()
    s = ws[2]
    assert s.dvl.shape == (8, 3) and s.label.shape == (3,)
    assert len(ws[np.array([0, 1])]) == 2
