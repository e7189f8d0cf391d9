"""Sensor geometry, reconstruction grid and electrode-pair indexing.

The sensor is a circular vessel of a given diameter with ``n`` electrodes
mounted as arcs on the vessel wall, evenly pitched at ``360/n`` degrees.
Electrode 1 is centered on the positive x axis and numbering proceeds
counter-clockwise.  The reconstruction mesh is a ``side x side`` grid of
square cells covering the bounding square of the vessel; a cell is active
iff its center lies strictly inside the vessel circle.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SensorGeometry",
    "PixelGrid",
    "build_geometry",
    "build_grid",
    "electrode_pairs",
    "pair_index",
]


@dataclass(frozen=True)
class SensorGeometry:
    """Circular ECT sensor layout.

    Attributes
    ----------
    diameter : float
        Vessel diameter in mm.
    n_electrodes : int
        Number of electrodes (>= 3).
    electrode_span : float
        Angular span of each electrode arc in degrees.
    electrode_arcs : tuple of (float, float)
        ``(start, end)`` angles in degrees of each arc, centered at
        ``k * 360 / n_electrodes`` for electrode ``k + 1``.
    """

    diameter: float
    n_electrodes: int
    electrode_span: float
    electrode_arcs: tuple = field(repr=False, default=())

    @property
    def radius(self):
        return self.diameter / 2.0

    @property
    def pitch(self):
        return 360.0 / self.n_electrodes

    @property
    def n_pairs(self):
        n = self.n_electrodes
        return n * (n - 1) // 2

    def electrode_center_angle(self, electrode):
        """Center angle in degrees of a 1-based electrode id."""
        if not 1 <= electrode <= self.n_electrodes:
            raise ValueError(f"electrode id {electrode} out of range 1..{self.n_electrodes}")
        return (electrode - 1) * self.pitch


def build_geometry(n_electrodes, diameter, span):
    """Build a :class:`SensorGeometry` with evenly pitched electrode arcs.

    Raises
    ------
    ValueError
        If the arcs would overlap (``span >= 360 / n_electrodes``) or any
        parameter is out of range.
    """
    if n_electrodes < 3:
        raise ValueError("need at least 3 electrodes")
    if diameter <= 0:
        raise ValueError("diameter must be positive")
    if span <= 0:
        raise ValueError("electrode span must be positive")
    pitch = 360.0 / n_electrodes
    if span >= pitch:
        raise ValueError(
            f"electrode span {span} deg >= pitch {pitch} deg: arcs overlap"
        )
    arcs = tuple(
        (k * pitch - span / 2.0, k * pitch + span / 2.0) for k in range(n_electrodes)
    )
    return SensorGeometry(
        diameter=float(diameter),
        n_electrodes=int(n_electrodes),
        electrode_span=float(span),
        electrode_arcs=arcs,
    )


@dataclass(frozen=True)
class PixelGrid:
    """Square reconstruction mesh masked to the vessel circle.

    Cells are indexed ``[row, col]`` with row 0 at the top (largest y) and
    col 0 at the left (smallest x).  ``active_index`` maps each active cell
    to its position in row-major order; inactive cells hold -1.
    """

    side: int
    cell_size: float
    diameter: float
    active_mask: np.ndarray = field(repr=False)
    active_index: np.ndarray = field(repr=False)

    @property
    def n_active(self):
        """Number of active pixels."""
        return int(self.active_mask.sum())

    def cell_centers(self):
        """(side, side, 2) array of cell-center (x, y) coordinates in mm."""
        half = self.diameter / 2.0
        cols = -half + (np.arange(self.side) + 0.5) * self.cell_size
        rows = half - (np.arange(self.side) + 0.5) * self.cell_size
        xx, yy = np.meshgrid(cols, rows)
        return np.stack([xx, yy], axis=-1)

    def active_centers(self):
        """(P, 2) array of active cell centers, in active-index order."""
        return self.cell_centers()[self.active_mask]

    def to_image(self, values):
        """Expand a length-P vector to a (side, side) image, 0 outside the mask."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_active,):
            raise ValueError(
                f"expected {self.n_active} active-pixel values, got shape {values.shape}"
            )
        img = np.zeros((self.side, self.side))
        img[self.active_mask] = values
        return img

    def from_image(self, img):
        """Extract the active-pixel vector from a (side, side) image."""
        img = np.asarray(img, dtype=float)
        if img.shape != (self.side, self.side):
            raise ValueError(f"expected ({self.side}, {self.side}) image, got {img.shape}")
        return img[self.active_mask].copy()


def build_grid(side, geometry):
    """Build the masked reconstruction grid for a sensor geometry.

    A cell is active iff its center lies strictly inside the vessel circle.
    """
    if side < 2:
        raise ValueError("grid side must be >= 2")
    side = int(side)
    cell = geometry.diameter / side
    half = geometry.diameter / 2.0
    cols = -half + (np.arange(side) + 0.5) * cell
    rows = half - (np.arange(side) + 0.5) * cell
    xx, yy = np.meshgrid(cols, rows)
    mask = xx**2 + yy**2 < half**2
    index = np.full((side, side), -1, dtype=int)
    index[mask] = np.arange(int(mask.sum()))
    return PixelGrid(
        side=side,
        cell_size=cell,
        diameter=geometry.diameter,
        active_mask=mask,
        active_index=index,
    )


def electrode_pairs(n_electrodes):
    """All electrode pairs (i, j), 1-based, i < j, in lexicographic order."""
    return [
        (i, j)
        for i in range(1, n_electrodes + 1)
        for j in range(i + 1, n_electrodes + 1)
    ]


def pair_index(i, j, n_electrodes):
    """0-based measurement index of electrode pair (i, j), 1-based ids, i < j.

    The index is the lexicographic rank of the pair.
    """
    if not (1 <= i < j <= n_electrodes):
        raise ValueError(
            f"invalid electrode pair ({i}, {j}) for {n_electrodes} electrodes"
        )
    # pairs (1,*) ... (i-1,*) come first, then (i, i+1) .. (i, j)
    before = (i - 1) * n_electrodes - (i - 1) * i // 2
    return before + (j - i - 1)
