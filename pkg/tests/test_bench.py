import json

import numpy as np
import pytest
from sklearn.base import clone

from dvlalign import bench, so3, trajgen
from dvlalign.config import ExperimentConfig, desk_preset, full_preset
from dvlalign.dvl import DvlSpec
from dvlalign.estimators import ResNetAligner, SVDAligner
from dvlalign.exceptions import DegenerateWindow, MissingModel, ShapeMismatch
from dvlalign.imu import ImuSpec
from dvlalign.pipeline import simulate_streams

TINY = {"stem_filters": 4, "stage_channels": [4, 8], "blocks_per_stage": [1, 1]}


def small_cfg(**kw):
    base = dict(duration_s=30.0, levels=2, trials=2, windows=(5.0, 25.0),
                window_len=25, window_stride=25, model=TINY, max_epochs=2)
    base.update(kw)
    return ExperimentConfig(**base)


def _windows(labels_deg, imu_spec=ImuSpec(), n=125, seed=0):
    tr = trajgen.preset("turn", duration_s=30.0)
    s = simulate_streams(tr, np.deg2rad(labels_deg), DvlSpec.ideal(), imu_spec,
                         np.random.default_rng(seed))
    return np.concatenate([s.v_d[:, :n], s.v_b[:, :n]], axis=-1)


# -- config -------------------------------------------------------------------

def test_config_roundtrip(tmp_path):
    cfg = small_cfg(seed=4, imu={"accel_bias": 2.0})
    path = tmp_path / "c.json"
    path.write_text(cfg.to_json())
    again = ExperimentConfig.from_json(path)
    assert again == cfg
    assert again.imu_spec().accel_bias == 2.0
    assert again.replace(seed=None).seed == 4


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(windows=(300.0,))
    with pytest.raises(ValueError):
        ExperimentConfig(imu_grade="consumer")


def test_presets():
    desk, full = desk_preset(), full_preset()
    assert len(desk.alignments()) == 125 and desk.window_len == 125
    assert len(full.alignments()) == 17**3
    assert full.lr == 1e-7 and desk.lr == 1e-3
    custom = ExperimentConfig(imu_grade="custom", imu={"gyro_bias": 3.0}).imu_spec()
    assert (custom.gyro_bias, custom.accel_bias) == (3.0, 0.0)
    rnd = ExperimentConfig(alignment_mode="random", n_random=10).alignments()
    assert rnd.shape == (10, 3) and np.all((rnd >= 0) & (rnd <= np.deg2rad(5.0)))


# -- estimators ---------------------------------------------------------------

def test_svd_aligner_recovers_alignment():
    labels = np.array([[1.0, 2.0, 3.0], [4.0, 0.5, 2.5]])
    pred = SVDAligner().fit(_windows(labels)).predict(_windows(labels))
    np.testing.assert_allclose(pred, labels, atol=1e-3)
    assert SVDAligner().score(_windows(labels), labels) > 0.99


def test_svd_aligner_degenerate():
    X = np.zeros((1, 10, 6))
    X[..., 0] = X[..., 3] = 2.0
    with pytest.raises(DegenerateWindow):
        SVDAligner().predict(X)
    assert SVDAligner(strict=False).predict(X).shape == (1, 3)
    with pytest.raises(ShapeMismatch):
        SVDAligner().predict(np.zeros((1, 10, 5)))


def test_sklearn_params_and_clone():
    est = ResNetAligner(lr=5e-3, stage_channels=(4, 8), blocks_per_stage=(1, 1))
    c = clone(est)
    assert c.get_params() == est.get_params()
    assert c.set_params(max_epochs=3).max_epochs == 3
    assert clone(SVDAligner(strict=False)).strict is False


def test_resnet_fit_predict_save_load(tmp_path):
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(16, 20, 6)), rng.uniform(0, 5, size=(16, 3))
    est = ResNetAligner(stem_filters=4, stage_channels=(4, 8), blocks_per_stage=(1, 1),
                        max_epochs=2, batch_size=8).fit(X, y, X[:4], y[:4])
    assert est.window_len_ == 20 and len(est.history_.epochs) == 2
    path = tmp_path / "m.ckpt"
    est.save(path)
    back = ResNetAligner.load(path)
    assert back.window_len_ == 20 and back.max_epochs == 2
    assert back.predict(X).tobytes() == est.predict(X).tobytes()
    with pytest.raises(MissingModel):
        ResNetAligner.load(tmp_path / "absent.ckpt")


# -- bench --------------------------------------------------------------------

def test_window_comparison_rows():
    cfg = small_cfg(windows=(5.0, 10.0, 15.0, 20.0, 25.0))
    reports = bench.run_window_comparison(cfg)
    assert [r.window_s for r in reports] == [5.0, 10.0, 15.0, 20.0, 25.0]
    assert all(r.method == "svd" and r.n_samples == 16 for r in reports)


def test_window_comparison_noise_free():
    cfg = small_cfg(imu_grade="ideal", dvl={"noise_sigma": 0.0, "bias": 0.0,
                                            "scale_factor": 0.0})
    for r in bench.run_window_comparison(cfg):
        assert r.rmse_deg < 0.01 and r.max_err_deg < 0.01


def test_window_comparison_trial_order_independent():
    cfg = small_cfg(trials=3)
    full = bench._svd_trials(cfg, cfg.trajectory_obj(), cfg.alignments(), cfg.imu_spec(),
                             (5.0,))
    # trial 2 alone must reproduce the last block of the full run
    one = simulate_streams(cfg.trajectory_obj(), cfg.alignments(), cfg.dvl_spec(),
                           cfg.imu_spec(), bench.trial_rng(cfg.seed, 2), duration_s=5.0)
    R_hat, _ = bench.svd_align_batch(one.v_b[:, :25], one.v_d[:, :25])
    np.testing.assert_array_equal(full[5.0][1][-8:], so3.matrix_to_euler(R_hat))


def test_missing_model():
    cfg = small_cfg(methods=("resnet",))
    with pytest.raises(MissingModel):
        bench.run_window_comparison(cfg, models={})
    with pytest.raises(MissingModel):
        bench.run_domain_shift(cfg, cfg, model=ResNetAligner())


def test_bias_sweep_rows():
    cfg = small_cfg(imu_grade="navigation", trials=1)
    rows = bench.run_bias_sweep(cfg, [0.1, 10.0], [1.0], windows=(5.0, 15.0))
    assert [r[:2] for r in rows] == [(0.1, 1.0), (10.0, 1.0)]
    assert rows[0][2] < rows[1][2]
    assert all(r[4] in (5.0, 15.0) for r in rows)
    with pytest.raises(ValueError):
        bench.run_bias_sweep(cfg, [], [1.0])


def test_noise_only_sweep_floor():
    cfg = small_cfg(imu_grade="navigation", trials=2)
    rows = bench.run_bias_sweep(cfg, [0.0], [0.0], windows=(5.0, 15.0, 25.0))
    assert rows[0][2] < 1.0


def test_build_dataset_and_network_rows():
    cfg = small_cfg()
    splits, manifest = bench.build_dataset(cfg)
    assert sum(manifest.counts.values()) == 8 * 6  # 151 epochs, W = 25, stride 25
    assert manifest.params["window_len"] == 25
    est = bench.fit_network(cfg, splits)
    cmp_cfg = cfg.replace(methods=["resnet", "svd"], windows=[5.0])
    reports = bench.run_window_comparison(cmp_cfg, {25: est})
    assert [r.method for r in reports] == ["resnet", "svd"]
    assert reports[0].n_samples == 2 * len(bench.eval_alignments(cfg))


def test_domain_shift_identical_configs():
    cfg = small_cfg(trials=1)
    est = bench.fit_network(cfg)
    in_dom, shifted, gap = bench.run_domain_shift(cfg, cfg, est)
    assert gap == 0.0 and in_dom.rmse_deg == shifted.rmse_deg
    _, other, gap2 = bench.run_domain_shift(cfg, cfg.replace(trajectory="straight"), est)
    assert np.isfinite(gap2) and other.n_samples > 0
    with pytest.raises(ValueError):
        bench.run_domain_shift(cfg, cfg.replace(window_len=50), est)


def test_domain_shift_to_noisier_imu():
    cfg = ExperimentConfig(duration_s=60.0, levels=3, trials=2, windows=(5.0,),
                           window_len=50, window_stride=2, lr=3e-3, max_epochs=15,
                           patience=15, imu_grade="navigation",
                           model={"stem_filters": 8, "stage_channels": [8, 16],
                                  "blocks_per_stage": [1, 1]})
    in_dom, shifted, gap = bench.run_domain_shift(cfg, cfg.replace(imu_grade="tactical"))
    assert shifted.rmse_deg >= in_dom.rmse_deg and gap > 0


def test_format_csv():
    cfg = small_cfg()
    text = bench.format_csv(("a", "b"), [(1.0, "x"), (2, "y")], cfg, timestamp=True)
    lines = text.splitlines()
    assert lines[0].startswith("# config: ")
    assert json.loads(lines[0][len("# config: "):]) == cfg.to_dict()
    assert lines[1].startswith("# generated: ")
    assert lines[2:] == ["a,b", "1.000000,x", "2,y"]
    assert bench.strip_timestamp(text) == bench.format_csv(("a", "b"), [(1.0, "x"), (2, "y")],
                                                           cfg)
