"""Scikit-learn style estimators wrapping the reconstruction solvers.

Each reconstructor is configured with hyperparameters in ``__init__``
(``get_params``/``set_params`` work as usual), bound to a sensitivity
matrix with ``fit(S, grid=...)``, and maps measurement frames to images
with ``transform``: a (n_frames, n_pairs) array yields an
(n_frames, n_pixels) array, a single vector yields a single image.
``reconstruct`` returns the full :class:`~ectkit.results.ReconResult`
for one frame.  Estimators compose with sklearn pipelines and ``clone``.
"""

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_array, check_is_fitted

from .baseline import LandweberParams, landweber, lbp
from .depiht import DepihtParams, EpihtParams, depiht
from .operators import spectral_norm
from .results import ReconResult
from .tv_admm import AADMMParams, aadmm_solve

__all__ = [
    "BaseReconstructor",
    "LinearBackProjection",
    "LandweberReconstructor",
    "AADMMReconstructor",
    "DepihtReconstructor",
]


class BaseReconstructor(BaseEstimator):
    """Common fit/transform plumbing for measurement-to-image estimators."""

    _requires_grid = False

    def fit(self, S, y=None, grid=None):
        """Bind the sensitivity matrix (and optionally the pixel grid).

        Parameters
        ----------
        S : array-like of shape (n_pairs, n_pixels)
            Normalized sensitivity matrix.
        y : ignored
            Present for sklearn API compatibility.
        grid : PixelGrid, optional
            Required by solvers that use the image-space gradient.
        """
        S = check_array(S, dtype=np.float64)
        if self._requires_grid and grid is None:
            raise ValueError(f"{type(self).__name__} requires grid= in fit")
        if grid is not None and grid.n_active != S.shape[1]:
            raise ValueError(
                f"S has {S.shape[1]} columns but the grid has {grid.n_active} active pixels"
            )
        self.S_ = S
        self.grid_ = grid
        self.n_pairs_ = S.shape[0]
        self.n_pixels_ = S.shape[1]
        self._fit_extra()
        return self

    def _fit_extra(self):
        pass

    def _check_lam(self, lam):
        lam = np.asarray(lam, dtype=np.float64)
        width = lam.shape[-1] if lam.ndim else -1
        if lam.ndim not in (1, 2) or width != self.n_pairs_:
            raise ValueError(
                f"expected measurement vector(s) of length {self.n_pairs_}, got shape {lam.shape}"
            )
        return lam

    def transform(self, X):
        """Reconstruct images from normalized capacitance frames."""
        check_is_fitted(self, "S_")
        lam = self._check_lam(X)
        if lam.ndim == 1:
            return self.reconstruct(lam).image
        return np.stack([self.reconstruct(row).image for row in lam])

    def reconstruct(self, lam) -> ReconResult:
        """Full result (image, history, timing) for one measurement frame."""
        check_is_fitted(self, "S_")
        lam = self._check_lam(lam)
        if lam.ndim != 1:
            raise ValueError("reconstruct takes a single measurement frame")
        return self._solve(lam)

    def _solve(self, lam) -> ReconResult:
        raise NotImplementedError


class LinearBackProjection(BaseReconstructor):
    """One-step normalized back projection."""

    def _solve(self, lam):
        import time

        t0 = time.perf_counter()
        img = lbp(lam, self.S_)
        return ReconResult(
            image=img, method="lbp", elapsed=time.perf_counter() - t0, params={}
        )


class LandweberReconstructor(BaseReconstructor):
    """Iterative Landweber solver with optional per-step clamping to [0, 1].

    Parameters
    ----------
    alpha : float
        Relaxation factor; must stay below ``2 / sigma_max(S)^2`` for the
        unclamped iteration to be non-expansive.
    iters : int
        Number of iterations (the effective regularization parameter).
    clamp : bool
        Project each iterate onto [0, 1].
    """

    def __init__(self, alpha=0.2, iters=3000, clamp=True):
        self.alpha = alpha
        self.iters = iters
        self.clamp = clamp

    def _solve(self, lam):
        return landweber(
            lam, self.S_, LandweberParams(alpha=self.alpha, iters=self.iters, clamp=self.clamp)
        )


class AADMMReconstructor(BaseReconstructor):
    """TV-regularized reconstruction via accelerated ADMM (requires a grid)."""

    _requires_grid = True

    def __init__(self, mu=2000.0, eps=1e-3, beta=50.0, iters=300, cg_tol=1e-6,
                 restart_eta=0.999, normalize_output=True):
        self.mu = mu
        self.eps = eps
        self.beta = beta
        self.iters = iters
        self.cg_tol = cg_tol
        self.restart_eta = restart_eta
        self.normalize_output = normalize_output

    def _params(self):
        return AADMMParams(
            mu=self.mu, eps=self.eps, beta=self.beta, iters=self.iters,
            cg_tol=self.cg_tol, restart_eta=self.restart_eta,
            normalize_output=self.normalize_output,
        )

    def _solve(self, lam):
        return aadmm_solve(lam, self.S_, self.grid_, self._params())


class DepihtReconstructor(BaseReconstructor):
    """Initial reconstruction followed by the two-phase l0 post-processor.

    Parameters
    ----------
    init : estimator, optional
        Reconstructor producing the starting image (cloned and fitted
        alongside this estimator).  Defaults to :class:`AADMMReconstructor`.
    q : float, optional
        Shared proximal parameter of both phases.  ``None`` selects
        ``sigma_max(S)^2 + 1`` at fit time (the smallest value that makes
        the surrogate a majorizer).
    r1, w1, r2, w2 : float
        Sparsity and extrapolation weights of phases 1 and 2.
    k1, k2 : int
        Iteration counts of phases 1 and 2.
    nu_policy : str
        Sub-threshold behavior of phase 2: ``"freeze_previous"`` or
        ``"zero"``.
    """

    def __init__(self, init=None, q=None, r1=0.01, w1=1000.0, r2=1.0, w2=1.0,
                 k1=50, k2=50, nu_policy="freeze_previous"):
        self.init = init
        self.q = q
        self.r1 = r1
        self.w1 = w1
        self.r2 = r2
        self.w2 = w2
        self.k1 = k1
        self.k2 = k2
        self.nu_policy = nu_policy

    @property
    def _requires_grid(self):
        inner = self.init if self.init is not None else AADMMReconstructor()
        return getattr(inner, "_requires_grid", False)

    def _fit_extra(self):
        inner = self.init if self.init is not None else AADMMReconstructor()
        self.init_ = clone(inner).fit(self.S_, grid=self.grid_)
        self.q_ = float(self.q) if self.q is not None else spectral_norm(self.S_) ** 2 + 1.0

    def _depiht_params(self):
        return DepihtParams(
            phase1=EpihtParams(r=self.r1, q=self.q_, w=self.w1, k_max=int(self.k1),
                               operator="psi"),
            phase2=EpihtParams(r=self.r2, q=self.q_, w=self.w2, k_max=int(self.k2),
                               operator="nu", nu_policy=self.nu_policy),
        )

    def refine(self, lam, g_init) -> ReconResult:
        """Post-process an existing image (no initial reconstruction run)."""
        check_is_fitted(self, "S_")
        lam = self._check_lam(lam)
        g_init = np.asarray(g_init, dtype=float)
        if g_init.shape != (self.n_pixels_,):
            raise ValueError(f"initial image must have {self.n_pixels_} pixels")
        return depiht(g_init, lam, self.S_, params=self._depiht_params())

    def _solve(self, lam):
        first = self.init_.reconstruct(lam)
        result = self.refine(lam, first.image)
        result.method = f"{first.method}-depiht"
        result.elapsed += first.elapsed
        result.extras["init_result"] = first
        return result
