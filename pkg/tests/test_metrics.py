import numpy as np
import pytest

from ectkit.metrics import normalize_image, sd_metric, threshold_op


def test_threshold_basic():
    assert threshold_op(np.array([0.05, 0.5]), 0.1).tolist() == [0.0, 1.0]


def test_threshold_idempotent():
    rng = np.random.default_rng(0)
    g = rng.uniform(size=200)
    once = threshold_op(g, 0.3)
    assert np.array_equal(threshold_op(once, 0.3), once)


def test_threshold_all_below():
    assert np.array_equal(threshold_op(np.full(5, 0.05), 0.1), np.zeros(5))


def test_threshold_tie_maps_to_one():
    assert threshold_op(np.array([0.1]), 0.1)[0] == 1.0


def test_threshold_monotone_in_level():
    rng = np.random.default_rng(1)
    g = rng.uniform(size=500)
    lo = threshold_op(g, 0.2)
    hi = threshold_op(g, 0.7)
    # raising the level never turns a 0 into a 1
    assert np.all(hi <= lo)


def test_threshold_output_binary():
    rng = np.random.default_rng(2)
    out = threshold_op(rng.uniform(size=100), 0.4)
    assert set(np.unique(out)) <= {0.0, 1.0}


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.5, 2.0])
def test_threshold_level_validation(bad):
    with pytest.raises(ValueError):
        threshold_op(np.array([0.5]), bad)


def test_sd_constant_image():
    assert sd_metric(np.full(10, 0.7)) == 0.0


def test_sd_hand_value():
    assert sd_metric(np.array([0.0, 1.0, 0.0, 1.0])) == pytest.approx(0.5)


def test_sd_matches_two_pass_oracle():
    rng = np.random.default_rng(3)
    g = rng.standard_normal(333)
    mean = sum(g) / len(g)
    var = sum((v - mean) ** 2 for v in g) / len(g)
    assert abs(sd_metric(g) - np.sqrt(var)) < 1e-12


def test_sd_translation_invariance_and_scale_equivariance():
    rng = np.random.default_rng(4)
    g = rng.standard_normal(64)
    assert sd_metric(g + 3.7) == pytest.approx(sd_metric(g))
    assert sd_metric(-2.5 * g) == pytest.approx(2.5 * sd_metric(g))


def test_sd_empty_rejected():
    with pytest.raises(ValueError):
        sd_metric(np.array([]))


def test_normalize_image_already_unit_range():
    g = np.array([0.0, 0.25, 1.0])
    assert np.array_equal(normalize_image(g), g)


def test_normalize_image_constant():
    assert np.array_equal(normalize_image(np.full(6, 3.0)), np.zeros(6))


def test_normalize_image_affine_invariance():
    rng = np.random.default_rng(5)
    g = rng.standard_normal(50)
    assert np.allclose(normalize_image(2.5 * g + 1.0), normalize_image(g))
