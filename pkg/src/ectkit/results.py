"""Result containers shared by the reconstruction solvers and the pipeline."""

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ReconResult"]


@dataclass
class ReconResult:
    """Output of one reconstruction run.

    Attributes
    ----------
    image : ndarray, shape (P,)
        Reconstructed normalized permittivity over the active pixels.
    method : str
        Solver label, e.g. ``"li"`` or ``"aadmm"``.
    history : dict of str -> list/ndarray
        Per-iteration residual/objective traces; each trace has at most one
        entry per iteration of the budget.
    elapsed : float
        Wall-clock seconds spent inside the solver call.
    params : dict
        Snapshot of the solver parameters that produced this result.
    extras : dict
        Additional diagnostics (initial residuals, guard counters, phase
        snapshots) that are not per-iteration traces.
    """

    image: np.ndarray
    method: str
    history: dict = field(default_factory=dict)
    elapsed: float = 0.0
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
