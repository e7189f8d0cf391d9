"""Capacitance sensor simulator: potentials, capacitances, sensitivity.

The vessel cross-section is discretized on a refined square mesh (default
2x the reconstruction grid).  Cells whose centers fall outside the vessel
circle model the grounded shield and are held at 0 V; boundary-ring cells
under an electrode arc are held at the electrode voltage (1 V excited,
0 V otherwise).  The potential on the remaining cells solves the
divergence-form equation ``div(eps grad phi) = 0`` with a 5-point stencil
and harmonic-mean face permittivities; across the vessel wall the face
takes the interior cell's permittivity (the Dirichlet boundary sits on the
wall itself).

Capacitances are face-weighted fluxes through the discrete contour around
each sensing electrode (Gauss's law) per volt of excitation, so one solve
sweep over the electrodes yields a full frame of pair measurements.

Before solving, the permittivity map is divided by a power-of-two scale so
the linear system is conditioned at unit permittivity; the potential is
invariant under that scaling and reported residuals refer to the scaled
system (see ``PotentialField.scale``).
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .sensor import electrode_pairs

__all__ = [
    "PotentialField",
    "CalibrationPair",
    "ConvergenceError",
    "CapacitanceSimulator",
    "normalize",
    "add_noise",
    "average_frames",
]


class ConvergenceError(RuntimeError):
    """Raised when the potential solve does not reach tolerance within the cap."""


@dataclass
class PotentialField:
    """Solved electrode excitation on the refined mesh.

    ``potential`` includes the Dirichlet values (exact on electrode and
    shield cells).  ``residual`` is the max-norm of the discrete divergence
    over the free cells of the scaled system; multiply by ``scale`` for the
    residual of the raw-permittivity system.
    """

    potential: np.ndarray
    excited: int
    residual: float
    iterations: int
    scale: float


@dataclass
class CalibrationPair:
    """Reference frames for the empty (low) and full (high) vessel."""

    c_low: np.ndarray
    c_high: np.ndarray

    def __post_init__(self):
        self.c_low = np.asarray(self.c_low, dtype=float)
        self.c_high = np.asarray(self.c_high, dtype=float)
        if self.c_low.shape != self.c_high.shape:
            raise ValueError("calibration frames must have equal length")
        if not np.all(self.c_high > self.c_low):
            raise ValueError("degenerate calibration: c_high must exceed c_low per pair")

    @property
    def span(self):
        return self.c_high - self.c_low


def normalize(C, cal):
    """Normalized capacitance ``(C - c_low) / (c_high - c_low)`` per pair."""
    C = np.asarray(C, dtype=float)
    if C.shape != cal.c_low.shape:
        raise ValueError(f"frame length {C.shape} does not match calibration {cal.c_low.shape}")
    return (C - cal.c_low) / cal.span


def add_noise(C, snr_db, seed):
    """Additive zero-mean Gaussian noise at a per-channel SNR in dB.

    Channel ``m`` receives noise of variance ``C[m]^2 / 10^(snr_db/10)``.
    ``snr_db = inf`` disables noise.  ``seed`` may be an integer or a
    ``numpy.random.Generator`` (drawn from in sequence).
    """
    C = np.asarray(C, dtype=float)
    if not np.isfinite(snr_db):
        if snr_db == -math.inf:
            raise ValueError("snr_db must be finite or +inf")
        return C.copy()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sigma = np.abs(C) * 10.0 ** (-snr_db / 20.0)
    return C + sigma * rng.standard_normal(C.shape)


def average_frames(frames):
    """Per-channel arithmetic mean of a non-empty sequence of frames."""
    frames = list(frames)
    if not frames:
        raise ValueError("cannot average an empty list of frames")
    stack = np.asarray([np.asarray(f, dtype=float) for f in frames])
    if stack.ndim != 2:
        raise ValueError("frames must all have the same length")
    return stack.mean(axis=0)


def _cg_sparse(A, b, atol, max_iter):
    """Plain CG on a SPD sparse system, stopping on ||b - A x||_2 <= atol.

    The true residual is recomputed at the stopping check to guard against
    recurrence drift.  Returns (x, true_residual_vector, iterations).
    """
    x = np.zeros_like(b)
    r = b - A @ x
    p = r.copy()
    rs = r @ r
    if math.sqrt(rs) <= atol:
        return x, r, 0
    for k in range(1, max_iter + 1):
        Ap = A @ p
        alpha = rs / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rs_new = r @ r
        if math.sqrt(rs_new) <= atol:
            r_true = b - A @ x
            if np.linalg.norm(r_true) <= atol:
                return x, r_true, k
            r = r_true
            rs_new = r @ r
            p = r.copy()
            rs = rs_new
            continue
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise ConvergenceError(
        f"potential solve: residual {math.sqrt(rs):.3e} above tolerance after {max_iter} iterations"
    )


class CapacitanceSimulator:
    """Forward model for one sensor geometry and reconstruction grid.

    Parameters
    ----------
    geometry : SensorGeometry
    grid : PixelGrid
        Reconstruction grid; the solver mesh is ``refine`` times finer.
    refine : int
        Solver cells per reconstruction cell along each axis.
    tol : float
        Max-norm residual tolerance of the potential solves (at unit
        permittivity scale).
    eps_low, eps_high : float
        Relative permittivities of the calibration materials.
    """

    def __init__(self, geometry, grid, refine=2, tol=1e-10, eps_low=1.0, eps_high=4.0,
                 max_iter=50000):
        if grid.side * refine <= 0:
            raise ValueError("bad mesh size")
        if eps_high <= eps_low:
            raise ValueError("eps_high must exceed eps_low")
        self.geometry = geometry
        self.grid = grid
        self.refine = int(refine)
        self.tol = float(tol)
        self.eps_low = float(eps_low)
        self.eps_high = float(eps_high)
        self.max_iter = int(max_iter)
        self.pairs = electrode_pairs(geometry.n_electrodes)
        self._build_mesh()
        self._low_fields = None
        self._calibration = None
        self._sensitivity = None

    # ------------------------------------------------------------------ mesh

    def _build_mesh(self):
        n = self.grid.side * self.refine
        self.solver_side = n
        half = self.geometry.diameter / 2.0
        h = self.geometry.diameter / n
        xs = -half + (np.arange(n) + 0.5) * h
        ys = half - (np.arange(n) + 0.5) * h
        xx, yy = np.meshgrid(xs, ys)
        inside = xx**2 + yy**2 < half**2
        pad = np.zeros((n + 2, n + 2), dtype=bool)
        pad[1:-1, 1:-1] = inside
        on_ring = inside & ~(
            pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
        )
        angles = np.degrees(np.arctan2(yy, xx)) % 360.0
        electrode = np.full((n, n), -1, dtype=int)
        for k in range(self.geometry.n_electrodes):
            center = k * self.geometry.pitch
            dist = np.abs((angles - center + 180.0) % 360.0 - 180.0)
            electrode[on_ring & (dist <= self.geometry.electrode_span / 2.0)] = k + 1
        self.inside = inside
        self.electrode = electrode
        self.free = inside & (electrode < 0)
        flat_free = self.free.ravel()
        self.free_ids = np.flatnonzero(flat_free)
        self.n_free = len(self.free_ids)
        # contour faces per electrode: (electrode cell, neighbor) flat index pairs
        self._contours = {}
        idx = np.arange(n * n).reshape(n, n)
        for e in range(1, self.geometry.n_electrodes + 1):
            mine = electrode == e
            faces = []
            for d_idx, nb_idx, d_in, nb_in in (
                (idx[:, :-1], idx[:, 1:], mine[:, :-1], mine[:, 1:]),
                (idx[:, 1:], idx[:, :-1], mine[:, 1:], mine[:, :-1]),
                (idx[:-1, :], idx[1:, :], mine[:-1, :], mine[1:, :]),
                (idx[1:, :], idx[:-1, :], mine[1:, :], mine[:-1, :]),
            ):
                sel = d_in & ~nb_in
                faces.append(np.stack([d_idx[sel], nb_idx[sel]], axis=1))
            self._contours[e] = np.concatenate(faces, axis=0)

    def _check_perm(self, perm_map):
        perm_map = np.asarray(perm_map, dtype=float)
        n = self.solver_side
        if perm_map.shape != (n, n):
            raise ValueError(f"permittivity map must be ({n}, {n}), got {perm_map.shape}")
        vals = perm_map[self.inside]
        if not np.all(np.isfinite(vals)):
            raise ValueError("permittivity map contains non-finite values")
        if np.any(vals < 1.0):
            raise ValueError("relative permittivity must be >= 1 inside the vessel")
        return perm_map

    def uniform_map(self, value):
        """Uniform permittivity map (vessel filled with one material)."""
        n = self.solver_side
        return np.full((n, n), float(value))

    def permittivity_map(self, image):
        """Upsample a normalized phantom image to a solver permittivity map.

        Pixel value g maps to ``eps_low + (eps_high - eps_low) * g``.  Solver
        cells under inactive pixels (the sliver between the active-pixel
        footprint and the vessel wall) take the nearest active pixel's
        value, so a uniform image reproduces the uniform calibration map
        exactly.
        """
        from scipy import ndimage

        image = np.asarray(image, dtype=float)
        img = self.grid.to_image(image)
        mask = self.grid.active_mask
        if not mask.all():
            _, (ri, ci) = ndimage.distance_transform_edt(~mask, return_indices=True)
            img = img[ri, ci]
        up = np.repeat(np.repeat(img, self.refine, axis=0), self.refine, axis=1)
        return self.eps_low + (self.eps_high - self.eps_low) * up

    # --------------------------------------------------------------- weights

    def _face_weights(self, eps):
        """Harmonic-mean face permittivities; wall faces take the interior value."""
        inside = self.inside

        def harm(e1, in1, e2, in2):
            a = np.where(in1, e1, np.where(in2, e2, 1.0))
            b = np.where(in2, e2, np.where(in1, e1, 1.0))
            return 2.0 * a * b / (a + b)

        w_right = harm(eps[:, :-1], inside[:, :-1], eps[:, 1:], inside[:, 1:])
        w_down = harm(eps[:-1, :], inside[:-1, :], eps[1:, :], inside[1:, :])
        return w_right, w_down

    def _adjacency(self, eps):
        """Sparse symmetric face-weight matrix over all mesh cells."""
        n = self.solver_side
        idx = np.arange(n * n).reshape(n, n)
        w_right, w_down = self._face_weights(eps)
        rows = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
        cols = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
        vals = np.concatenate([w_right.ravel(), w_down.ravel()])
        W = sp.coo_matrix((np.concatenate([vals, vals]),
                           (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
                          shape=(n * n, n * n))
        return W.tocsr()

    def _system(self, eps_scaled):
        """Stencil system on the free cells: (A, W) with A SPD."""
        W = self._adjacency(eps_scaled)
        deg = np.asarray(W.sum(axis=1)).ravel()
        # mesh borders lose faces; those cells are outside the vessel anyway
        A = sp.diags(deg[self.free_ids]) - W[self.free_ids][:, self.free_ids]
        return A.tocsr(), W

    # ---------------------------------------------------------------- solves

    def _dirichlet(self, excited):
        phi = np.zeros(self.solver_side**2)
        phi[(self.electrode == excited).ravel()] = 1.0
        return phi

    def solve_potential(self, perm_map, excited, tol=None):
        """Solve one electrode excitation; returns a :class:`PotentialField`."""
        if not 1 <= excited <= self.geometry.n_electrodes:
            raise ValueError(f"electrode id {excited} out of range")
        perm_map = self._check_perm(perm_map)
        tol = self.tol if tol is None else float(tol)
        fields = self._solve_all(perm_map, tol=tol, electrodes=[excited])
        return fields[0]

    def _solve_all(self, perm_map, tol=None, electrodes=None):
        perm_map = self._check_perm(perm_map)
        tol = self.tol if tol is None else float(tol)
        if electrodes is None:
            electrodes = range(1, self.geometry.n_electrodes + 1)
        scale = 2.0 ** math.floor(math.log2(perm_map[self.inside].max()))
        eps_scaled = perm_map / scale
        A, W = self._system(eps_scaled)
        out = []
        for e in electrodes:
            phi_d = self._dirichlet(e)
            b = np.asarray(W @ phi_d)[self.free_ids]
            x, r, iters = _cg_sparse(A, b, atol=tol, max_iter=self.max_iter)
            phi = phi_d.copy()
            phi[self.free_ids] = x
            out.append(
                PotentialField(
                    potential=phi.reshape(self.solver_side, self.solver_side),
                    excited=e,
                    residual=float(np.max(np.abs(r))),
                    iterations=iters,
                    scale=scale,
                )
            )
        return out

    def electrode_fields(self, perm_map=None, tol=None):
        """Solve all electrode excitations for a permittivity map.

        With ``perm_map=None`` the empty-vessel (low calibration) fields are
        returned and cached.
        """
        if perm_map is None:
            if self._low_fields is None:
                self._low_fields = self._solve_all(self.uniform_map(self.eps_low), tol=tol)
            return self._low_fields
        return self._solve_all(perm_map, tol=tol)

    # ----------------------------------------------------------- measurement

    def capacitance_frame(self, perm_map=None, fields=None):
        """Capacitances for all electrode pairs, lexicographic order.

        ``C[m]`` for pair (i, j) is the flux of ``eps grad phi_i`` into the
        contour around electrode j, per volt of excitation.
        """
        if perm_map is None:
            perm_map = self.uniform_map(self.eps_low)
        else:
            perm_map = self._check_perm(perm_map)
        if fields is None:
            fields = self.electrode_fields(
                None if np.all(perm_map == self.eps_low) else perm_map
            )
        w_right, w_down = self._face_weights(perm_map)
        n = self.solver_side
        # face weight lookup keyed by the lower flat index of the face
        wr_flat = np.zeros(n * n)
        wr_flat[(np.arange(n * n).reshape(n, n)[:, :-1]).ravel()] = w_right.ravel()
        wd_flat = np.zeros(n * n)
        wd_flat[(np.arange(n * n).reshape(n, n)[:-1, :]).ravel()] = w_down.ravel()

        def face_w(a, b):
            lo = np.minimum(a, b)
            horizontal = np.abs(a - b) == 1
            return np.where(horizontal, wr_flat[lo], wd_flat[lo])

        C = np.empty(len(self.pairs))
        for m, (i, j) in enumerate(self.pairs):
            phi = fields[i - 1].potential.ravel()
            contour = self._contours[j]
            w = face_w(contour[:, 0], contour[:, 1])
            C[m] = float(np.sum(w * (phi[contour[:, 1]] - phi[contour[:, 0]])))
        return C

    def calibration(self):
        """Calibration frames for the uniform low/high fills (cached)."""
        if self._calibration is None:
            c_low = self.capacitance_frame(self.uniform_map(self.eps_low))
            high = self.uniform_map(self.eps_high)
            c_high = self.capacitance_frame(high, fields=self._solve_all(high))
            self._calibration = CalibrationPair(c_low=c_low, c_high=c_high)
        return self._calibration

    def sensitivity(self):
        """Normalized sensitivity matrix S, shape (n_pairs, P) (cached).

        Raw entries are the exact derivatives of the pair capacitances with
        respect to each cell's permittivity at the empty-pipe operating
        point: ``-grad phi_i . grad phi_j`` integrated per cell via face
        differences, each interior face splitting its product half/half
        between its two cells (the derivative of the harmonic mean at equal
        arguments) and wall faces assigning fully to the interior cell.
        Rows are scaled by ``(eps_high - eps_low) / (c_high - c_low)`` so
        the linear model maps normalized permittivity to normalized
        capacitance.
        """
        if self._sensitivity is not None:
            return self._sensitivity
        fields = self.electrode_fields(None)
        cal = self.calibration()
        inside = self.inside
        side = self.grid.side
        r = self.refine
        in_both_r = inside[:, :-1] & inside[:, 1:]
        wall_left = inside[:, :-1] & ~inside[:, 1:]
        wall_right = ~inside[:, :-1] & inside[:, 1:]
        in_both_d = inside[:-1, :] & inside[1:, :]
        wall_up = inside[:-1, :] & ~inside[1:, :]
        wall_down = ~inside[:-1, :] & inside[1:, :]
        diffs = []
        for f in fields:
            phi = f.potential
            diffs.append((phi[:, 1:] - phi[:, :-1], phi[1:, :] - phi[:-1, :]))
        S = np.empty((len(self.pairs), self.grid.n_active))
        for m, (i, j) in enumerate(self.pairs):
            dxi, dyi = diffs[i - 1]
            dxj, dyj = diffs[j - 1]
            prod_r = dxi * dxj
            prod_d = dyi * dyj
            acc = np.zeros_like(inside, dtype=float)
            acc[:, :-1] += np.where(in_both_r, 0.5 * prod_r, 0.0)
            acc[:, 1:] += np.where(in_both_r, 0.5 * prod_r, 0.0)
            acc[:, :-1] += np.where(wall_left, prod_r, 0.0)
            acc[:, 1:] += np.where(wall_right, prod_r, 0.0)
            acc[:-1, :] += np.where(in_both_d, 0.5 * prod_d, 0.0)
            acc[1:, :] += np.where(in_both_d, 0.5 * prod_d, 0.0)
            acc[:-1, :] += np.where(wall_up, prod_d, 0.0)
            acc[1:, :] += np.where(wall_down, prod_d, 0.0)
            pooled = acc.reshape(side, r, side, r).sum(axis=(1, 3))
            S[m] = -pooled[self.grid.active_mask]
            S[m] *= (self.eps_high - self.eps_low) / cal.span[m]
        self._sensitivity = S
        return S

    def simulate_frames(self, image, snr_db, n_frames, seed):
        """Noisy measurement frames for a phantom image, shape (n_frames, M)."""
        if n_frames < 1:
            raise ValueError("need at least one frame")
        clean = self.capacitance_frame(self.permittivity_map(image))
        rng = np.random.default_rng(seed)
        return np.stack([add_noise(clean, snr_db, rng) for _ in range(n_frames)])
