"""Monte-Carlo experiments: window comparison, bias sweep and domain shift.

Every trial draws from its own generator ``default_rng([seed, trial])`` so
results do not depend on evaluation order. Within a trial one INS solution is
shared by all alignments, each alignment getting fresh DVL noise.
"""
import datetime
from dataclasses import replace
import io
import logging

import numpy as np

from . import so3
from .config import FINE_WINDOWS, ExperimentConfig
from .dataset import (DatasetManifest, WindowSet, augment_and_build, split,
                      split_configs)
from .estimators import ResNetAligner
from .exceptions import MissingModel
from .metrics import EvalReport
from .pipeline import simulate_streams
from .wahba import svd_align_batch, window_length

log = logging.getLogger(__name__)

SVD_COLUMNS = ("window_s", "method", "rmse_deg", "rmse_std", "aoe_deg", "aoe_std",
               "max_err_deg", "n_samples", "n_trials")
SWEEP_COLUMNS = ("accel_bias_mg", "gyro_bias_deg_h", "min_rmse_deg", "rmse_std",
                 "best_window_s")


def trial_rng(seed, trial):
    return np.random.default_rng([int(seed), int(trial)])


def _report(labels_rad, preds_rad, trial_ids, window_s, method):
    return EvalReport.from_euler(np.rad2deg(labels_rad), np.rad2deg(preds_rad),
                                 window_s, method, trial_ids)


def _svd_trials(cfg, traj, alignments, imu_spec, windows):
    """Per-window (labels, preds, trial ids) stacks for the SVD baseline."""
    dvl_spec = cfg.dvl_spec()
    out = {w: ([], [], []) for w in windows}
    for trial in range(cfg.trials):
        streams = simulate_streams(traj, alignments, dvl_spec, imu_spec,
                                   trial_rng(cfg.seed, trial),
                                   duration_s=max(windows),
                                   shared_ins=cfg.shared_ins)
        for w in windows:
            n = window_length(w, dvl_spec.rate_hz)
            R_hat, _ = svd_align_batch(streams.v_b[:, :n], streams.v_d[:, :n])
            labels, preds, ids = out[w]
            labels.append(alignments)
            preds.append(so3.matrix_to_euler(R_hat))
            ids.append(np.full(len(alignments), trial))
    return {w: tuple(np.concatenate(a) for a in v) for w, v in out.items()}


def eval_alignments(cfg):
    """Alignments held out from training by the configuration-level split."""
    alignments = cfg.alignments()
    _, _, test = split_configs(len(alignments), cfg.fractions, cfg.seed)
    return alignments[test]


def _network_trials(cfg, traj, alignments, model, windows):
    dvl_spec = cfg.dvl_spec()
    imu_spec = cfg.imu_spec()
    out = {w: ([], [], []) for w in windows}
    for trial in range(cfg.trials):
        streams = simulate_streams(traj, alignments, dvl_spec, imu_spec,
                                   trial_rng(cfg.seed, trial),
                                   duration_s=max(windows),
                                   shared_ins=cfg.shared_ins)
        for w in windows:
            n = window_length(w, dvl_spec.rate_hz)
            X = np.concatenate([streams.v_d[:, :n], streams.v_b[:, :n]], axis=-1)
            labels, preds, ids = out[w]
            labels.append(alignments)
            preds.append(np.deg2rad(model[n].predict(X.astype(np.float32))))
            ids.append(np.full(len(alignments), trial))
    return {w: tuple(np.concatenate(a) for a in v) for w, v in out.items()}


def load_models(paths):
    """``{window_len: estimator}`` from checkpoint paths."""
    models = {}
    for path in paths:
        est = ResNetAligner.load(path)
        models[int(est.window_len_)] = est
    return models


def run_window_comparison(cfg, models=None):
    """EvalReports for every (method, window) pair of ``cfg``.

    ``models`` maps a window length in epochs to a fitted network; it is only
    needed when ``cfg.methods`` contains ``"resnet"``.
    """
    traj = cfg.trajectory_obj()
    reports = []
    for method in cfg.methods:
        if method == "svd":
            alignments = cfg.alignments()
            res = _svd_trials(cfg, traj, alignments, cfg.imu_spec(), cfg.windows)
        elif method == "resnet":
            models = models if models is not None else load_models(cfg.models.values())
            rate = cfg.dvl_spec().rate_hz
            missing = [w for w in cfg.windows if window_length(w, rate) not in models]
            if missing:
                raise MissingModel(f"no trained network for windows {missing} s")
            res = _network_trials(cfg, traj, eval_alignments(cfg), models, cfg.windows)
        else:
            raise ValueError(f"unknown method {method!r}")
        for w in cfg.windows:
            reports.append(_report(*res[w], w, method))
    return reports


def run_bias_sweep(cfg, accel_grid, gyro_grid, windows=FINE_WINDOWS):
    """Minimum SVD RMSE over ``windows`` for every (accel mg, gyro deg/h) bias pair.

    Noise densities stay at those of ``cfg.imu_grade``; only the biases vary.
    All cells share the per-trial random streams. Returns rows
    ``(accel, gyro, min_rmse, rmse_std, best_window)``.
    """
    if len(accel_grid) == 0 or len(gyro_grid) == 0:
        raise ValueError("bias grids must be nonempty")
    windows = tuple(float(w) for w in windows)
    traj = cfg.trajectory_obj()
    alignments = cfg.alignments()
    base = cfg.imu_spec()
    rows = []
    for a in accel_grid:
        for g in gyro_grid:
            spec = replace(base, accel_bias=float(a), gyro_bias=float(g))
            res = _svd_trials(cfg, traj, alignments, spec, windows)
            reps = [_report(*res[w], w, "svd") for w in windows]
            best = min(reps, key=lambda r: r.rmse_deg)
            rows.append((float(a), float(g), best.rmse_deg, best.rmse_std,
                         best.window_s))
            log.info("bias %.3g mg %.3g deg/h -> %.4f deg at %g s", a, g,
                     best.rmse_deg, best.window_s)
    return rows


# -- network experiments -----------------------------------------------------

def build_dataset(cfg):
    """Windows for every alignment of ``cfg``, split by configuration."""
    samples = augment_and_build(cfg.trajectory_obj(), cfg.alignments(),
                                cfg.dvl_spec(), cfg.imu_spec(), cfg.window_len,
                                np.random.default_rng(cfg.seed),
                                stride=cfg.window_stride, shared_ins=cfg.shared_ins)
    splits = split(samples, cfg.fractions, cfg.seed)
    manifest = DatasetManifest(
        window_len=cfg.window_len, dvl_rate_hz=cfg.dvl_spec().rate_hz,
        counts={n: len(s) for n, s in zip(("train", "val", "test"), splits)},
        alignment_mode=cfg.alignment_mode, range_deg=cfg.range_deg, seed=cfg.seed,
        fractions=cfg.fractions, params=cfg.to_dict())
    return splits, manifest


def make_estimator(cfg):
    m = cfg.model
    return ResNetAligner(
        stem_filters=m.get("stem_filters", 32), stem_kernel=m.get("stem_kernel", 7),
        stem_stride=m.get("stem_stride", 2),
        stage_channels=tuple(m.get("stage_channels", (32, 64, 96, 128))),
        blocks_per_stage=tuple(m.get("blocks_per_stage", (1, 1, 1, 1))),
        block_kernel=m.get("block_kernel", 3), lr=cfg.lr, batch_size=cfg.batch_size,
        max_epochs=cfg.max_epochs, max_steps=cfg.max_steps, patience=cfg.patience,
        standardize=cfg.standardize, random_state=cfg.seed)


def fit_network(cfg, splits=None, callback=None):
    """Train a network on ``splits`` (built from ``cfg`` when omitted)."""
    if splits is None:
        splits, _ = build_dataset(cfg)
    train, val, _ = splits
    est = make_estimator(cfg)
    return est.fit(train.X, train.labels, val.X if len(val) else None,
                   val.labels if len(val) else None, callback=callback)


def evaluate_windows(est, windows, method="resnet", window_s=None):
    """EvalReport of ``est`` on a :class:`WindowSet`."""
    preds = est.predict(windows.X)
    return EvalReport.from_euler(windows.labels, preds,
                                 window_s if window_s is not None else float("nan"),
                                 method)


def held_out_windows(cfg, trial, stride=None):
    """Fresh windows over the test alignments of ``cfg`` for one trial."""
    return augment_and_build(cfg.trajectory_obj(), eval_alignments(cfg),
                             cfg.dvl_spec(), cfg.imu_spec(), cfg.window_len,
                             trial_rng(cfg.seed + 1, trial),
                             stride=stride or cfg.window_len,
                             shared_ins=cfg.shared_ins)


def _evaluate_config(est, cfg):
    parts = [held_out_windows(cfg, t) for t in range(cfg.trials)]
    ids = np.concatenate([np.full(len(p), t) for t, p in enumerate(parts)])
    ws = WindowSet.concat(parts, cfg.window_len)
    preds = est.predict(ws.X)
    window_s = cfg.window_len / cfg.dvl_spec().rate_hz
    return EvalReport.from_euler(ws.labels, preds, window_s, "resnet", ids)


def run_domain_shift(train_cfg, eval_cfg, model=None):
    """Train under ``train_cfg`` (unless ``model`` is given) and evaluate in both domains.

    Returns ``(in_domain, shifted, gap)`` where ``gap`` is the RMSE difference.
    """
    if train_cfg.window_len != eval_cfg.window_len:
        raise ValueError("train and eval configs must share the window length")
    if model is None:
        model = fit_network(train_cfg)
    if not hasattr(model, "model_"):
        raise MissingModel("domain-shift evaluation needs a fitted network")
    in_domain = _evaluate_config(model, train_cfg)
    shifted = _evaluate_config(model, eval_cfg)
    return in_domain, shifted, shifted.rmse_deg - in_domain.rmse_deg


# -- output ------------------------------------------------------------------

def report_rows(reports, n_trials):
    return [(r.window_s, r.method, r.rmse_deg, r.rmse_std, r.aoe_deg, r.aoe_std,
             r.max_err_deg, r.n_samples, n_trials) for r in reports]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6f}"
    return str(v)


def format_csv(columns, rows, cfg=None, timestamp=False):
    """CSV text with a ``# config:`` comment line holding the resolved config."""
    buf = io.StringIO()
    if cfg is not None:
        text = cfg.to_json() if isinstance(cfg, ExperimentConfig) else str(cfg)
        buf.write(f"# config: {text}\n")
    if timestamp:
        now = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
        buf.write(f"# generated: {now}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def strip_timestamp(text):
    return "".join(line for line in text.splitlines(keepends=True)
                   if not line.startswith("# generated:"))
