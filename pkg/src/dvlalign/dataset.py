"""Supervised window dataset: augmentation, windowing, splits and storage.

On disk a dataset is a directory with ``manifest.json`` and one record file
per split (``train.bin``, ``val.bin``, ``test.bin``). A record file starts with
the 8-byte magic ``IDVLDS01``, a little-endian u32 record count and a u32
window length ``W``; each record is ``3 + 6 W`` little-endian float32 values
laid out as ``label (roll, pitch, yaw in degrees) | dvl (W x 3) | ins (W x 3)``.
"""
import json
import os
import struct
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import CorruptManifest, TooShort
from .pipeline import simulate_streams
from .sampling import nearest_indices

MAGIC = b"IDVLDS01"
SPLITS = ("train", "val", "test")
_HEADER = struct.Struct("<8sII")


class WindowSample(NamedTuple):
    dvl: np.ndarray
    ins: np.ndarray
    label: np.ndarray  # degrees


@dataclass
class WindowSet:
    """Stacked windows: ``dvl``/``ins`` are (n, W, 3) float32, ``labels`` (n, 3) degrees."""

    dvl: np.ndarray
    ins: np.ndarray
    labels: np.ndarray
    config_ids: np.ndarray = None

    def __post_init__(self):
        self.dvl = np.asarray(self.dvl, dtype=np.float32)
        self.ins = np.asarray(self.ins, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.float32)
        if self.config_ids is None:
            self.config_ids = config_ids_from_labels(self.labels)
        if not (len(self.dvl) == len(self.ins) == len(self.labels)):
            raise ValueError("dvl, ins and labels must have equal length")
        if self.dvl.shape != self.ins.shape:
            raise ValueError("dvl and ins blocks must share a shape")

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return WindowSample(self.dvl[i], self.ins[i], self.labels[i])
        return WindowSet(self.dvl[i], self.ins[i], self.labels[i], self.config_ids[i])

    @property
    def window_len(self):
        return self.dvl.shape[1] if self.dvl.ndim == 3 else 0

    @property
    def X(self):
        """Network input ``(n, W, 6)``: DVL velocity then INS velocity."""
        return np.concatenate([self.dvl, self.ins], axis=-1)

    @classmethod
    def empty(cls, W):
        z = np.zeros((0, W, 3), dtype=np.float32)
        return cls(z, z.copy(), np.zeros((0, 3), dtype=np.float32),
                   np.zeros(0, dtype=int))

    @classmethod
    def concat(cls, parts, W):
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls.empty(W)
        return cls(np.concatenate([p.dvl for p in parts]),
                   np.concatenate([p.ins for p in parts]),
                   np.concatenate([p.labels for p in parts]),
                   np.concatenate([p.config_ids for p in parts]))


def config_ids_from_labels(labels):
    labels = np.asarray(labels)
    if len(labels) == 0:
        return np.zeros(0, dtype=int)
    _, inv = np.unique(labels, axis=0, return_inverse=True)
    return inv.reshape(-1)


def window_starts(n, W, stride=1):
    if n < W:
        raise TooShort(f"series of {n} epochs is shorter than window {W}")
    return np.arange(0, n - W + 1, stride)


def make_windows(dvl, ins, W, stride=1):
    """Overlapping windows over DVL epochs with the nearest INS velocity per epoch.

    Returns ``(dvl_windows, ins_windows)``, each ``(n - W + 1, W, 3)`` for stride 1.
    """
    starts = window_starts(len(dvl.t), W, stride)
    ins_v = ins.v_b[nearest_indices(ins.t, dvl.t)]
    dvl_w = sliding_window_view(dvl.v_d, W, axis=0)[starts]
    ins_w = sliding_window_view(ins_v, W, axis=0)[starts]
    # sliding_window_view puts the window axis last
    return np.swapaxes(dvl_w, 1, 2).copy(), np.swapaxes(ins_w, 1, 2).copy()


def augment_and_build(traj, alignments, dvl_spec, imu_spec, W, rng, stride=1,
                      shared_ins=True):
    """Window samples for every alignment (radians) along one trajectory.

    Each alignment gets fresh DVL noise. With ``shared_ins`` one INS solution is
    reused by all alignments, otherwise every alignment gets its own IMU draw.
    """
    alignments = np.atleast_2d(np.asarray(alignments, dtype=float))
    if len(alignments) == 0:
        raise ValueError("alignments must be nonempty")
    streams = simulate_streams(traj, alignments, dvl_spec, imu_spec, rng,
                               shared_ins=shared_ins)
    starts = window_starts(len(streams.t), W, stride)
    n_win = len(starts)
    v_d = streams.v_d.astype(np.float32)
    v_b = np.asarray(streams.v_b, dtype=np.float32)
    dvl_w = np.swapaxes(sliding_window_view(v_d, W, axis=1)[:, starts], 2, 3)
    ins_w = np.swapaxes(sliding_window_view(v_b, W, axis=1)[:, starts], 2, 3)
    labels = np.repeat(np.rad2deg(alignments), n_win, axis=0)
    ids = np.repeat(np.arange(len(alignments)), n_win)
    return WindowSet(dvl_w.reshape(-1, W, 3), ins_w.reshape(-1, W, 3), labels, ids)


def split_counts(n, fractions=(0.6, 0.2, 0.2)):
    """Configurations per split: val and test rounded, the remainder to train."""
    fr = np.asarray(fractions, dtype=float)
    if len(fr) != 3 or np.any(fr < 0) or abs(fr.sum() - 1.0) > 1e-9:
        raise ValueError("fractions must be three non-negative values summing to 1")
    n_val = int(round(fr[1] * n))
    n_test = int(round(fr[2] * n))
    return n - n_val - n_test, n_val, n_test


def split_configs(n_configs, fractions=(0.6, 0.2, 0.2), seed=0):
    """Shuffle configuration ids and partition them into (train, val, test)."""
    n_train, n_val, _ = split_counts(n_configs, fractions)
    perm = np.random.default_rng(seed).permutation(n_configs)
    return (np.sort(perm[:n_train]), np.sort(perm[n_train:n_train + n_val]),
            np.sort(perm[n_train + n_val:]))


def split(samples, fractions=(0.6, 0.2, 0.2), seed=0):
    """Partition a :class:`WindowSet` by alignment configuration."""
    configs = np.unique(samples.config_ids)
    parts = split_configs(len(configs), fractions, seed)
    out = []
    for part in parts:
        mask = np.isin(samples.config_ids, configs[part])
        out.append(samples[mask])
    return tuple(out)


@dataclass
class DatasetManifest:
    window_len: int
    dvl_rate_hz: float
    counts: dict
    alignment_mode: str = "grid"
    range_deg: float = 5.0
    seed: int = 0
    fractions: tuple = (0.6, 0.2, 0.2)
    split_granularity: str = "configuration"
    params: dict = field(default_factory=dict)

    def to_json(self):
        d = dict(self.__dict__)
        d["fractions"] = list(self.fractions)
        return json.dumps(d, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        d["fractions"] = tuple(d["fractions"])
        return cls(**d)


def _write_split(path, ws, W):
    n = len(ws)
    rec = np.empty((n, 3 + 6 * W), dtype="<f4")
    rec[:, :3] = ws.labels
    rec[:, 3:3 + 3 * W] = ws.dvl.reshape(n, 3 * W)
    rec[:, 3 + 3 * W:] = ws.ins.reshape(n, 3 * W)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, n, W))
        fh.write(rec.tobytes())


def _read_split(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise CorruptManifest(f"{path}: truncated header")
        magic, n, W = _HEADER.unpack(head)
        if magic != MAGIC:
            raise CorruptManifest(f"{path}: bad magic {magic!r}")
        body = fh.read()
    width = 3 + 6 * W
    if len(body) != n * width * 4:
        raise CorruptManifest(f"{path}: expected {n} records, file size disagrees")
    rec = np.frombuffer(body, dtype="<f4").reshape(n, width)
    ws = WindowSet(rec[:, 3:3 + 3 * W].reshape(n, W, 3),
                   rec[:, 3 + 3 * W:].reshape(n, W, 3),
                   rec[:, :3].copy())
    return ws, W


def save_dataset(splits, manifest, dir_path):
    """Write ``splits`` (train, val, test WindowSets) and the manifest."""
    os.makedirs(dir_path, exist_ok=True)
    W = manifest.window_len
    manifest.counts = {}
    for name, ws in zip(SPLITS, splits):
        _write_split(os.path.join(dir_path, f"{name}.bin"), ws, W)
        manifest.counts[name] = len(ws)
    with open(os.path.join(dir_path, "manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(manifest.to_json())


def load_dataset(dir_path):
    """Read a dataset directory; returns ``((train, val, test), manifest)``."""
    try:
        with open(os.path.join(dir_path, "manifest.json"), encoding="utf-8") as fh:
            manifest = DatasetManifest.from_json(fh.read())
    except (json.JSONDecodeError, TypeError, KeyError) as exc:
        raise CorruptManifest(f"unreadable manifest: {exc}") from exc
    splits = []
    for name in SPLITS:
        ws, W = _read_split(os.path.join(dir_path, f"{name}.bin"))
        if W != manifest.window_len:
            raise CorruptManifest(f"{name}: window length {W} != {manifest.window_len}")
        if len(ws) != manifest.counts.get(name):
            raise CorruptManifest(f"{name}: {len(ws)} records, manifest says "
                                  f"{manifest.counts.get(name)}")
        splits.append(ws)
    return tuple(splits), manifest
