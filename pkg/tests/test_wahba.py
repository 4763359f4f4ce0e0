import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation
from scipy.stats import spearmanr

from dvlalign import so3, trajgen, wahba
from dvlalign.dvl import DvlSpec
from dvlalign.exceptions import DegenerateWindow
from dvlalign.imu import ImuSpec, imu_grade
from dvlalign.pipeline import simulate_streams

rotations = st.integers(0, 2**32 - 1).map(
    lambda s: Rotation.random(random_state=s).as_matrix())


def generic_pairs(R, n=10, seed=0):
    v_b = np.random.default_rng(seed).normal(size=(n, 3))
    return v_b, v_b @ R  # rows of R^T v_b


def test_identity_sets():
    v = np.random.default_rng(0).normal(size=(10, 3))
    est = wahba.svd_align(v, v)
    np.testing.assert_allclose(est.R_hat, np.eye(3), atol=1e-12)
    assert est.residual_cost < 1e-24


def test_known_rotation():
    R = so3.euler_to_matrix(np.deg2rad([3.0, 2.0, 4.0]))
    v_b, v_d = generic_pairs(R)
    est = wahba.svd_align(v_b, v_d)
    assert so3.geodesic_angle(R, est.R_hat) < 1e-9
    np.testing.assert_allclose(so3.matrix_to_euler(est.R_hat), np.deg2rad([3, 2, 4]),
                               atol=1e-12)


def test_rank_one_is_degenerate():
    v = np.tile([2.0, 0.0, 0.0], (20, 1))
    with pytest.raises(DegenerateWindow):
        wahba.svd_align(v, v)
    with pytest.raises(DegenerateWindow):
        wahba.svd_align(v[:1], v[:1])


def test_reflection_is_corrected():
    # a pure reflection relates the two sets; the best proper rotation must be returned
    v_b = np.random.default_rng(1).normal(size=(30, 3))
    v_d = v_b * [1.0, 1.0, -1.0]
    R = wahba.svd_align(v_b, v_d).R_hat
    assert abs(np.linalg.det(R) - 1.0) < 1e-12
    np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
    # the unconstrained Procrustes answer would be the reflection itself
    U, _, Vt = np.linalg.svd(v_b.T @ v_d)
    assert np.linalg.det(U @ Vt) < 0


@settings(max_examples=100, deadline=None)
@given(rotations, st.integers(3, 40))
def test_rotation_recovery(R, n):
    v_b, v_d = generic_pairs(R, n, seed=n)
    assert so3.geodesic_angle(R, wahba.svd_align(v_b, v_d).R_hat) < 1e-9


@settings(max_examples=50, deadline=None)
@given(rotations, st.floats(1e-3, 1e3))
def test_scale_invariance(R, lam):
    v_b, v_d = generic_pairs(R, 12, seed=3)
    v_d = v_d + np.random.default_rng(4).normal(scale=0.05, size=v_d.shape)
    a = wahba.svd_align(v_b, v_d).R_hat
    b = wahba.svd_align(lam * v_b, lam * v_d).R_hat
    np.testing.assert_allclose(a, b, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(rotations, rotations)
def test_common_rotation_invariance(R, Q):
    v_b, v_d = generic_pairs(R, 15, seed=5)
    v_d = v_d + np.random.default_rng(6).normal(scale=0.05, size=v_d.shape)
    err = so3.geodesic_angle(R, wahba.svd_align(v_b, v_d).R_hat)
    # pre-rotating both sets by Q turns the true rotation into Q R Q^T
    est = wahba.svd_align(v_b @ Q.T, v_d @ Q.T).R_hat
    assert abs(so3.geodesic_angle(Q @ R @ Q.T, est) - err) < 1e-9


def test_batch_matches_single():
    rng = np.random.default_rng(7)
    Rs = Rotation.random(5, random_state=8).as_matrix()
    v_b = rng.normal(size=(5, 20, 3))
    v_d = np.einsum("kni,kij->knj", v_b, Rs) + rng.normal(scale=0.01, size=(5, 20, 3))
    R_batch, s = wahba.svd_align_batch(v_b, v_d)
    for k in range(5):
        np.testing.assert_allclose(R_batch[k], wahba.svd_align(v_b[k], v_d[k]).R_hat,
                                   atol=1e-12)
    assert s.shape == (5, 3)


def test_window_length():
    assert wahba.window_length(25.0, 5.0) == 125
    assert wahba.window_length(5.0, 5.0) == 25


@pytest.mark.parametrize("window_s", [5.0, 15.0, 100.0])
def test_noise_free_trajectory(window_s):
    tr = trajgen.preset("turn")
    for a in so3.grid_alignments(2, 5.0):
        _, err = wahba.svd_align_trajectory(tr, a, DvlSpec.ideal(), ImuSpec(), window_s,
                                            np.random.default_rng(0))
        assert err["geodesic_err_deg"] < 0.01


def test_pure_turn_is_degenerate():
    tr = trajgen.preset("turn-pure")
    with pytest.raises(DegenerateWindow):
        wahba.svd_align_trajectory(tr, np.zeros(3), DvlSpec.ideal(), ImuSpec(), 25.0,
                                   np.random.default_rng(0))


def test_window_longer_than_trajectory():
    tr = trajgen.preset("turn", duration_s=10.0)
    with pytest.raises(ValueError):
        wahba.svd_align_trajectory(tr, np.zeros(3), DvlSpec(), ImuSpec(), 20.0,
                                   np.random.default_rng(0))


def test_median_error_grows_with_bias():
    # 50 independent INS draws per cell at a 15 s window
    tr = trajgen.preset("turn", duration_s=15.0)
    labels = np.deg2rad(np.random.default_rng(0).uniform(0, 5, size=(50, 3)))
    R = so3.euler_to_matrix(labels)
    cells = []
    for a in (0.1, 1.0, 5.0, 10.0):
        for g in (1.0, 10.0, 25.0):
            spec = imu_grade("navigation", accel_bias=a, gyro_bias=g)
            s = simulate_streams(tr, labels, DvlSpec(), spec, np.random.default_rng(1),
                                 shared_ins=False)
            R_hat, _ = wahba.svd_align_batch(s.v_b, s.v_d)
            cells.append((a, g, np.median(np.rad2deg(so3.geodesic_angle(R, R_hat)))))
    a, g, med = np.array(cells).T
    for axis in (a, g):
        levels = np.unique(axis)
        marg = [med[axis == v].mean() for v in levels]
        assert spearmanr(levels, marg)[0] >= 0.9
