"""Image post-processing and evaluation metrics."""

import numpy as np

__all__ = ["threshold_op", "sd_metric", "normalize_image"]


def threshold_op(g, thr):
    """Binarize a [0, 1]-normalized image at level ``thr`` in (0, 1).

    Pixels below ``thr`` map to 0, pixels above to 1.  Exact ties map to 1
    so the operator is a total function.
    """
    if not 0.0 < thr < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {thr}")
    g = np.asarray(g, dtype=float)
    return np.where(g >= thr, 1.0, 0.0)


def sd_metric(g):
    """Population standard deviation of the pixel values.

    ``sqrt(mean((g - mean(g))^2))`` over all pixels of the vector.
    """
    g = np.asarray(g, dtype=float)
    if g.size < 1:
        raise ValueError("need at least one pixel")
    return float(np.sqrt(np.mean((g - np.mean(g)) ** 2)))


def normalize_image(g):
    """Min-max normalize to [0, 1]; a constant image maps to all zeros."""
    g = np.asarray(g, dtype=float)
    lo = g.min()
    hi = g.max()
    if hi == lo:
        return np.zeros_like(g)
    return (g - lo) / (hi - lo)
