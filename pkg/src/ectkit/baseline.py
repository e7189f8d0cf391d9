"""One-step back projection and iterative Landweber reconstruction."""

import time
from dataclasses import dataclass

import numpy as np

from .operators import apply_S, apply_St
from .results import ReconResult

__all__ = ["LandweberParams", "DivergenceError", "lbp", "landweber"]


@dataclass
class LandweberParams:
    """Relaxation factor, iteration count, and per-step clamping to [0, 1]."""

    alpha: float = 0.2
    iters: int = 3000
    clamp: bool = True

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")


class DivergenceError(RuntimeError):
    """Landweber residual blew up; carries the residual history."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


def lbp(lam, S):
    """Linear back projection ``(S^T lam) / (S^T 1)``, 0 where the scale is 0."""
    back = apply_St(S, lam)
    scale = S.T @ np.ones(S.shape[0])
    out = np.zeros_like(back)
    nz = scale != 0
    out[nz] = back[nz] / scale[nz]
    return out


def landweber(lam, S, params=None):
    """Landweber iteration ``g <- g + alpha S^T (lam - S g)`` from g = 0.

    Each step optionally projects onto [0, 1].  Raises
    :class:`DivergenceError` if the data residual exceeds 1e6 times its
    initial value.
    """
    if params is None:
        params = LandweberParams()
    lam = np.asarray(lam, dtype=float)
    t0 = time.perf_counter()
    g = np.zeros(S.shape[1])
    r0 = float(np.linalg.norm(lam))
    history = np.empty(params.iters)
    for k in range(params.iters):
        g = g + params.alpha * apply_St(S, lam - apply_S(S, g))
        if params.clamp:
            np.clip(g, 0.0, 1.0, out=g)
        res = float(np.linalg.norm(apply_S(S, g) - lam))
        history[k] = res
        if res > 1e6 * max(r0, np.finfo(float).tiny):
            raise DivergenceError(
                f"Landweber diverged at iteration {k + 1}: residual {res:.3e} "
                f"vs initial {r0:.3e}",
                history[: k + 1],
            )
    return ReconResult(
        image=g,
        method="li",
        history={"residual": history},
        elapsed=time.perf_counter() - t0,
        params={"alpha": params.alpha, "iters": params.iters, "clamp": params.clamp},
        extras={"initial_residual": r0},
    )
