import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ectkit import phantom
from ectkit.baseline import LandweberParams, landweber
from ectkit.estimators import (
    AADMMReconstructor,
    DepihtReconstructor,
    LandweberReconstructor,
    LinearBackProjection,
)
from ectkit.forward import average_frames, normalize


@pytest.fixture(scope="module")
def lam(simulator, calibration, grid):
    truth = phantom("cross", grid)
    frames = simulator.simulate_frames(truth, 35.0, 20, seed=0)
    return normalize(average_frames(frames), calibration)


def test_get_set_params_and_clone():
    est = LandweberReconstructor(alpha=0.3, iters=10)
    assert est.get_params() == {"alpha": 0.3, "iters": 10, "clamp": True}
    est.set_params(iters=20)
    assert est.iters == 20
    twin = clone(est)
    assert twin.get_params() == est.get_params()


def test_unfitted_transform_raises():
    with pytest.raises(NotFittedError):
        LandweberReconstructor().transform(np.zeros(28))


def test_fit_validates_grid_consistency(sensitivity):
    class FakeGrid:
        n_active = 7

    with pytest.raises(ValueError):
        LandweberReconstructor().fit(sensitivity, grid=FakeGrid())


def test_aadmm_requires_grid(sensitivity):
    with pytest.raises(ValueError):
        AADMMReconstructor().fit(sensitivity)


def test_transform_shapes(sensitivity, lam):
    est = LandweberReconstructor(iters=5).fit(sensitivity)
    single = est.transform(lam)
    assert single.shape == (sensitivity.shape[1],)
    batch = est.transform(np.stack([lam, lam]))
    assert batch.shape == (2, sensitivity.shape[1])
    assert np.array_equal(batch[0], batch[1])
    with pytest.raises(ValueError):
        est.transform(np.zeros(5))


def test_landweber_estimator_matches_function(sensitivity, lam):
    est = LandweberReconstructor(alpha=0.1, iters=50).fit(sensitivity)
    direct = landweber(lam, sensitivity, LandweberParams(alpha=0.1, iters=50))
    assert np.array_equal(est.transform(lam), direct.image)


def test_lbp_estimator(sensitivity, lam):
    est = LinearBackProjection().fit(sensitivity)
    result = est.reconstruct(lam)
    assert result.method == "lbp"
    assert result.image.shape == (sensitivity.shape[1],)


def test_depiht_estimator_full_pipeline(sensitivity, grid, lam):
    est = DepihtReconstructor(
        init=AADMMReconstructor(iters=20), q=2.0, k1=2, k2=5
    ).fit(sensitivity, grid=grid)
    result = est.reconstruct(lam)
    assert result.method == "aadmm-depiht"
    assert "phase1_image" in result.extras
    assert result.extras["init_result"].method == "aadmm"
    # the inner estimator was cloned, not mutated
    assert not hasattr(est.init, "S_")


def test_depiht_estimator_landweber_init(sensitivity, lam):
    est = DepihtReconstructor(
        init=LandweberReconstructor(iters=100), q=2.0, k1=1, k2=5
    ).fit(sensitivity)
    result = est.reconstruct(lam)
    assert result.method == "li-depiht"


def test_depiht_estimator_default_q(sensitivity, grid):
    est = DepihtReconstructor(init=AADMMReconstructor(iters=2)).fit(sensitivity, grid=grid)
    sigma = np.linalg.svd(sensitivity, compute_uv=False)[0]
    assert est.q_ == pytest.approx(sigma**2 + 1.0, rel=1e-3)


def test_depiht_refine_standalone(sensitivity, grid, lam):
    est = DepihtReconstructor(q=2.0, k1=2, k2=5).fit(sensitivity, grid=grid)
    g_init = np.where(phantom("cross", grid) > 0, 0.8, 0.0)
    result = est.refine(lam, g_init)
    assert result.method == "depiht"
    with pytest.raises(ValueError):
        est.refine(lam, np.zeros(3))
