import numpy as np
import pytest

from ectkit import phantom
from ectkit.baseline import DivergenceError, LandweberParams, landweber, lbp
from ectkit.forward import average_frames, normalize


def test_lbp_zero_measurement():
    S = np.ones((4, 6))
    assert np.array_equal(lbp(np.zeros(4), S), np.zeros(6))


def test_lbp_single_row_of_ones():
    S = np.ones((1, 5))
    assert np.array_equal(lbp(np.array([1.0]), S), np.ones(5))


def test_lbp_uniform_full_fill(sensitivity):
    g = lbp(np.ones(28), sensitivity)
    assert np.allclose(g, 1.0)


def test_lbp_zero_column_pixels():
    S = np.array([[1.0, 0.0], [2.0, 0.0]])
    out = lbp(np.array([1.0, 1.0]), S)
    assert out[1] == 0.0


def test_landweber_identity_geometric_steps():
    S = np.eye(1)
    lam = np.array([1.0])
    one = landweber(lam, S, LandweberParams(alpha=0.5, iters=1, clamp=False))
    two = landweber(lam, S, LandweberParams(alpha=0.5, iters=2, clamp=False))
    assert one.image[0] == pytest.approx(0.5)
    assert two.image[0] == pytest.approx(0.75)


def test_landweber_zero_data_stays_zero():
    rng = np.random.default_rng(0)
    S = rng.standard_normal((5, 9))
    res = landweber(np.zeros(5), S, LandweberParams(alpha=0.1, iters=20))
    assert np.array_equal(res.image, np.zeros(9))
    assert np.all(res.history["residual"] == 0.0)


def test_landweber_residual_monotone_without_clamp():
    rng = np.random.default_rng(1)
    for trial in range(5):
        S = rng.standard_normal((6, 10))
        lam = rng.standard_normal(6)
        sigma_max = np.linalg.svd(S, compute_uv=False)[0]
        params = LandweberParams(alpha=1.8 / sigma_max**2, iters=200, clamp=False)
        res = landweber(lam, S, params)
        r = np.concatenate([[res.extras["initial_residual"]], res.history["residual"]])
        assert np.all(np.diff(r) <= 1e-12)


def test_landweber_clamped_output_in_unit_interval(sensitivity, simulator, calibration, grid):
    g = phantom("v", grid)
    lam = normalize(
        average_frames(simulator.simulate_frames(g, 35.0, 10, seed=1)), calibration
    )
    res = landweber(lam, sensitivity, LandweberParams(alpha=0.2, iters=50))
    assert res.image.min() >= 0.0
    assert res.image.max() <= 1.0


def test_landweber_history_length_and_params_snapshot():
    S = np.eye(2)
    res = landweber(np.array([1.0, 0.0]), S, LandweberParams(alpha=0.1, iters=7))
    assert len(res.history["residual"]) == 7
    assert res.params == {"alpha": 0.1, "iters": 7, "clamp": True}
    assert res.elapsed >= 0.0


def test_landweber_paper_step_size_still_descends(sensitivity, simulator, calibration, grid):
    # tiny historical relaxation factor: slow, but the residual must drop
    g = phantom("cross", grid)
    lam = normalize(
        average_frames(simulator.simulate_frames(g, 35.0, 10, seed=0)), calibration
    )
    res = landweber(lam, sensitivity, LandweberParams(alpha=0.008, iters=3000))
    assert res.history["residual"][-1] < res.extras["initial_residual"]


def test_landweber_divergence_raises_with_history():
    rng = np.random.default_rng(2)
    S = rng.standard_normal((4, 8))
    lam = rng.standard_normal(4)
    sigma_max = np.linalg.svd(S, compute_uv=False)[0]
    with pytest.raises(DivergenceError) as err:
        landweber(lam, S, LandweberParams(alpha=2000.0 / sigma_max**2, iters=500, clamp=False))
    assert len(err.value.history) >= 1


def test_landweber_param_validation():
    with pytest.raises(ValueError):
        LandweberParams(alpha=0.0)
    with pytest.raises(ValueError):
        LandweberParams(iters=0)
