"""Shared linear operators and scalar thresholding primitives.

Images are length-P vectors over the active pixels of a :class:`PixelGrid`.
The discrete gradient uses forward differences with zero components across
the circular mask boundary, so that ``div`` is exactly the negative adjoint
of ``grad``.
"""

import numpy as np

__all__ = [
    "apply_S",
    "apply_St",
    "grad",
    "div",
    "laplacian",
    "soft_threshold",
    "hard_threshold",
    "spectral_norm",
    "conjugate_gradient",
]


def apply_S(S, g):
    """Forward map: normalized capacitances ``S @ g``."""
    S = np.asarray(S)
    g = np.asarray(g, dtype=float)
    if g.shape != (S.shape[1],):
        raise ValueError(f"image length {g.shape} does not match S columns {S.shape[1]}")
    return S @ g


def apply_St(S, lam):
    """Adjoint map: back projection ``S.T @ lam``."""
    S = np.asarray(S)
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (S.shape[0],):
        raise ValueError(f"measurement length {lam.shape} does not match S rows {S.shape[0]}")
    return S.T @ lam


def _neighbor_indices(grid):
    """Active-index of the right/down neighbor of each active pixel (-1 if none).

    Cached on the grid object; the grid is immutable after construction.
    """
    cached = getattr(grid, "_neighbors", None)
    if cached is not None:
        return cached
    idx = grid.active_index
    right = np.full(grid.n_active, -1, dtype=int)
    down = np.full(grid.n_active, -1, dtype=int)
    rows, cols = np.nonzero(grid.active_mask)
    own = idx[rows, cols]
    has_right = cols + 1 < grid.side
    r_ok = np.zeros(len(rows), dtype=bool)
    r_ok[has_right] = idx[rows[has_right], cols[has_right] + 1] >= 0
    right[own[r_ok]] = idx[rows[r_ok], cols[r_ok] + 1]
    has_down = rows + 1 < grid.side
    d_ok = np.zeros(len(rows), dtype=bool)
    d_ok[has_down] = idx[rows[has_down] + 1, cols[has_down]] >= 0
    down[own[d_ok]] = idx[rows[d_ok] + 1, cols[d_ok]]
    object.__setattr__(grid, "_neighbors", (right, down))
    return right, down


def grad(g, grid):
    """Forward-difference gradient of an image, shape (2, P).

    Row 0 holds x-differences (toward the next column), row 1 y-differences
    (toward the next row).  Components that would reach an inactive cell or
    leave the grid are zero.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (grid.n_active,):
        raise ValueError(f"expected {grid.n_active} pixels, got shape {g.shape}")
    right, down = _neighbor_indices(grid)
    out = np.zeros((2, grid.n_active))
    ok = right >= 0
    out[0, ok] = g[right[ok]] - g[ok]
    ok = down >= 0
    out[1, ok] = g[down[ok]] - g[ok]
    return out


def div(v, grid):
    """Discrete divergence, the exact negative adjoint of :func:`grad`:
    ``<grad(g), v> == -<g, div(v)>`` for all g, v."""
    v = np.asarray(v, dtype=float)
    if v.shape != (2, grid.n_active):
        raise ValueError(f"expected gradient field of shape (2, {grid.n_active}), got {v.shape}")
    right, down = _neighbor_indices(grid)
    out = np.zeros(grid.n_active)
    ok = right >= 0
    out[ok] -= v[0, ok]
    np.add.at(out, right[ok], v[0, ok])
    ok = down >= 0
    out[ok] -= v[1, ok]
    np.add.at(out, down[ok], v[1, ok])
    return -out


def laplacian(g, grid):
    """``grad^T grad`` applied to an image (positive semi-definite)."""
    return -div(grad(g, grid), grid)


def soft_threshold(b, a):
    """Componentwise ``sign(b) * max(|b| - a, 0)``; ``a`` scalar or per-component, >= 0."""
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("soft threshold must be nonnegative")
    return np.sign(b) * np.maximum(np.abs(b) - a, 0.0)


def hard_threshold(b, a):
    """Componentwise keep-if-above: ``b_i`` where ``|b_i| > a_i``, else 0.

    The inequality is strict, so components with ``|b_i| == a_i`` are zeroed.
    ``a`` may be a scalar or a per-component vector, >= 0.
    """
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("hard threshold must be nonnegative")
    return np.where(np.abs(b) > a, b, 0.0)


def spectral_norm(S, n_iter=200, seed=0):
    """Largest singular value of S, estimated by power iteration on S^T S."""
    S = np.asarray(S, dtype=float)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(S.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(n_iter):
        w = S.T @ (S @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        sigma = np.sqrt(norm)
    return sigma


def conjugate_gradient(apply_A, b, x0=None, rtol=1e-6, max_iter=None):
    """Conjugate gradients for a symmetric positive (semi-)definite operator.

    Stops when ``||b - A x||_2 <= rtol * ||b||_2``.  Returns ``(x, n_iter)``.
    ``apply_A`` must not modify its argument.
    """
    b = np.asarray(b, dtype=float)
    n = b.size
    if max_iter is None:
        max_iter = 10 * n
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_A(x)
    target = rtol * np.linalg.norm(b)
    rs = r @ r
    if np.sqrt(rs) <= target:
        return x, 0
    p = r.copy()
    for k in range(1, max_iter + 1):
        Ap = apply_A(p)
        denom = p @ Ap
        if denom <= 0:
            break  # null direction; |denom| ~ 0 means b is in the range already
        alpha = rs / denom
        x += alpha * p
        r -= alpha * Ap
        rs_new = r @ r
        if np.sqrt(rs_new) <= target:
            return x, k
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x, max_iter
