"""Command line entry point: ``dvlalign <command> [options]``.

Every command builds an :class:`ExperimentConfig` from ``--config`` (JSON)
and then applies flag overrides. Exit codes: 0 success, 1 usage error,
2 runtime error.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np

from . import bench, dvl, imu, so3, trajgen
from .config import FINE_WINDOWS, ExperimentConfig
from .dataset import load_dataset, save_dataset
from .estimators import ResNetAligner
from .exceptions import (CorruptManifest, DegenerateWindow, Diverged, GimbalLock,
                         MissingModel, ShapeMismatch, SingularGeometry, TooShort)
from .imu import IMU_GRADES

log = logging.getLogger("dvlalign")

RUNTIME_ERRORS = (CorruptManifest, DegenerateWindow, Diverged, GimbalLock,
                  MissingModel, ShapeMismatch, SingularGeometry, TooShort,
                  OSError, ValueError, KeyError)


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """Reports usage problems by raising instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def float_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated number list: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _common(p):
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--traj", choices=trajgen.PRESETS, help="trajectory preset")
    p.add_argument("--imu", choices=sorted(IMU_GRADES), help="IMU grade")
    p.add_argument("--trials", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = Parser(prog="dvlalign", description="INS/DVL alignment experiments")
    sub = parser.add_subparsers(dest="command", parser_class=Parser, required=True)

    p = sub.add_parser("simulate", help="write trajectory, DVL and INS CSVs")
    _common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--alignment", type=float_list, default=[0.0, 0.0, 0.0],
                   help="roll,pitch,yaw in degrees")

    p = sub.add_parser("gen-dataset", help="build and save a window dataset")
    _common(p)
    p.add_argument("--out", required=True, help="dataset directory")
    p.add_argument("--levels", type=int)
    p.add_argument("--window-len", type=int)
    p.add_argument("--stride", type=int)

    p = sub.add_parser("svd", help="SVD baseline over a window grid")
    _common(p)
    p.add_argument("--window", type=float_list, help="window lengths in seconds")
    p.add_argument("--levels", type=int)
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("train", help="train the network on a saved dataset")
    _common(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--model-out", required=True, help="checkpoint path")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--history", help="training history CSV path")

    p = sub.add_parser("eval", help="evaluate trained networks")
    _common(p)
    p.add_argument("--model", required=True, action="append",
                   help="checkpoint path (repeat for several window lengths)")
    p.add_argument("--data", help="dataset directory: evaluate on its test split")
    p.add_argument("--with-svd", action="store_true", help="add SVD rows")
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("bias-sweep", help="min SVD RMSE over an IMU bias grid")
    _common(p)
    p.add_argument("--accel", type=float_list, default=[0.1, 1.0, 5.0, 10.0],
                   help="accelerometer biases [mg]")
    p.add_argument("--gyro", type=float_list, default=[1.0, 10.0, 25.0],
                   help="gyro biases [deg/h]")
    p.add_argument("--window", type=float_list, help="window lengths in seconds")
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("domain-shift", help="train in one domain, evaluate in another")
    _common(p)
    p.add_argument("--eval-traj", choices=trajgen.PRESETS)
    p.add_argument("--eval-imu", choices=sorted(IMU_GRADES))
    p.add_argument("--model", help="checkpoint to evaluate instead of training")
    p.add_argument("--out", help="JSON path (default: stdout)")
    return parser


def resolve_config(args, **extra):
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    return cfg.replace(seed=args.seed, trajectory=args.traj, imu_grade=args.imu,
                       trials=args.trials, **extra)


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args):
    cfg = resolve_config(args)
    rng = np.random.default_rng(cfg.seed)
    traj = cfg.trajectory_obj()
    R = so3.euler_to_matrix(np.deg2rad(args.alignment))
    dvl_series = dvl.simulate_dvl(traj, R, cfg.dvl_spec(), rng)
    t, v_b = imu.simulate_ins(traj, cfg.imu_spec(), rng)
    os.makedirs(args.out, exist_ok=True)
    trajgen.to_csv(traj, os.path.join(args.out, "trajectory.csv"))
    dvl.to_csv(dvl_series, os.path.join(args.out, "dvl.csv"))
    imu.to_csv(imu.InsVelocitySeries(t=t, v_b=v_b[0]), os.path.join(args.out, "ins.csv"))
    with open(os.path.join(args.out, "config.json"), "w", encoding="utf-8") as fh:
        fh.write(cfg.to_json())


def cmd_gen_dataset(args):
    cfg = resolve_config(args, levels=args.levels, window_len=args.window_len,
                         window_stride=args.stride)
    splits, manifest = bench.build_dataset(cfg)
    save_dataset(splits, manifest, args.out)
    print(json.dumps(manifest.counts, sort_keys=True))


def cmd_svd(args):
    cfg = resolve_config(args, windows=args.window, levels=args.levels,
                         methods=["svd"])
    reports = bench.run_window_comparison(cfg)
    text = bench.format_csv(bench.SVD_COLUMNS, bench.report_rows(reports, cfg.trials),
                            cfg, timestamp=bool(args.out))
    _emit(text, args.out)


def cmd_train(args):
    cfg = resolve_config(args, max_epochs=args.epochs, lr=args.lr,
                         max_steps=args.max_steps)
    splits, manifest = load_dataset(args.data)
    if manifest.window_len != cfg.window_len:
        cfg = cfg.replace(window_len=manifest.window_len)
    est = bench.fit_network(cfg, splits)
    est.save(args.model_out)
    if args.history:
        est.history_.to_csv(args.history)
    test = splits[2]
    if len(test):
        r = bench.evaluate_windows(est, test, window_s=manifest.window_len / manifest.dvl_rate_hz)
        print(f"test rmse {r.rmse_deg:.4f} deg, aoe {r.aoe_deg:.4f} deg")


def cmd_eval(args):
    cfg = resolve_config(args)
    models = bench.load_models(args.model)
    if args.data:
        splits, manifest = load_dataset(args.data)
        W = manifest.window_len
        if W not in models:
            raise MissingModel(f"no checkpoint for window length {W}")
        reports = [bench.evaluate_windows(models[W], splits[2],
                                          window_s=W / manifest.dvl_rate_hz)]
        cfg = cfg.replace(trials=1)
    else:
        rate = cfg.dvl_spec().rate_hz
        methods = ["resnet"] + (["svd"] if args.with_svd else [])
        cfg = cfg.replace(windows=sorted(W / rate for W in models), methods=methods)
        reports = bench.run_window_comparison(cfg, models)
    text = bench.format_csv(bench.SVD_COLUMNS, bench.report_rows(reports, cfg.trials),
                            cfg, timestamp=bool(args.out))
    _emit(text, args.out)


def cmd_bias_sweep(args):
    # noise densities default to navigation grade, biases come from the grid
    cfg = resolve_config(args, windows=args.window or FINE_WINDOWS)
    if args.imu is None:
        cfg = cfg.replace(imu_grade="navigation")
    rows = bench.run_bias_sweep(cfg, args.accel, args.gyro, cfg.windows)
    text = bench.format_csv(bench.SWEEP_COLUMNS, rows, cfg, timestamp=bool(args.out))
    _emit(text, args.out)


def cmd_domain_shift(args):
    train_cfg = resolve_config(args)
    eval_cfg = train_cfg.replace(trajectory=args.eval_traj, imu_grade=args.eval_imu)
    model = ResNetAligner.load(args.model) if args.model else None
    in_dom, shifted, gap = bench.run_domain_shift(train_cfg, eval_cfg, model)
    out = {"in_domain": json.loads(in_dom.to_json()),
           "shifted": json.loads(shifted.to_json()), "gap_rmse_deg": gap,
           "train_config": train_cfg.to_dict(), "eval_config": eval_cfg.to_dict()}
    _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out)


COMMANDS = {
    "simulate": cmd_simulate, "gen-dataset": cmd_gen_dataset, "svd": cmd_svd,
    "train": cmd_train, "eval": cmd_eval, "bias-sweep": cmd_bias_sweep,
    "domain-shift": cmd_domain_shift,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except RUNTIME_ERRORS as exc:
        print(f"dvlalign {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
