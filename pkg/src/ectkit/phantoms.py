"""Binary test permittivity distributions on the masked grid.

Pixel membership uses a center-point test against the union of shapes, so
phantom images are binary: 1 for the high-permittivity material, 0 for the
background.  The built-in kinds (``cross``, ``v``, ``two_rects``,
``three_circles``) have default dimensions chosen to sit well inside the
default 76 mm vessel; all are overridable by passing explicit shape lists.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["ShapeSpec", "rasterize", "phantom", "PHANTOM_KINDS", "default_shapes"]


@dataclass(frozen=True)
class ShapeSpec:
    """One solid shape inside the vessel.

    kind : 'rectangle', 'circle' or 'polygon'
    center : (x, y) in mm (ignored for polygons)
    size : (width, height) in mm for rectangles, radius in mm for circles,
        vertex list [(x, y), ...] for polygons
    rotation : counter-clockwise rotation in degrees (rectangles only)
    """

    kind: str
    center: tuple = (0.0, 0.0)
    size: object = None
    rotation: float = 0.0

    def bounding_radius(self):
        """Distance from the vessel center to the farthest point of the shape."""
        cx, cy = self.center
        if self.kind == "circle":
            return math.hypot(cx, cy) + float(self.size)
        if self.kind == "rectangle":
            w, h = self.size
            half_diag = math.hypot(w / 2.0, h / 2.0)
            return math.hypot(cx, cy) + half_diag
        if self.kind == "polygon":
            return max(math.hypot(x, y) for x, y in self.size)
        raise ValueError(f"unknown shape kind {self.kind!r}")

    def contains(self, x, y):
        """Boolean membership for arrays of points (closed shapes)."""
        cx, cy = self.center
        if self.kind == "circle":
            return (x - cx) ** 2 + (y - cy) ** 2 <= float(self.size) ** 2
        if self.kind == "rectangle":
            w, h = self.size
            theta = math.radians(self.rotation)
            dx, dy = x - cx, y - cy
            # rotate points into the rectangle frame
            u = math.cos(theta) * dx + math.sin(theta) * dy
            v = -math.sin(theta) * dx + math.cos(theta) * dy
            return (np.abs(u) <= w / 2.0) & (np.abs(v) <= h / 2.0)
        if self.kind == "polygon":
            return _points_in_polygon(x, y, np.asarray(self.size, dtype=float))
        raise ValueError(f"unknown shape kind {self.kind!r}")


def _points_in_polygon(x, y, vertices):
    # even-odd rule ray casting, vectorized over points
    inside = np.zeros(np.shape(x), dtype=bool)
    n = len(vertices)
    for k in range(n):
        x0, y0 = vertices[k]
        x1, y1 = vertices[(k + 1) % n]
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < np.where(crosses, xint, np.inf))
    return inside


def rasterize(shapes, grid):
    """Binary image: 1 where the cell center falls inside the union of shapes.

    Raises ``ValueError`` if any shape extends outside the vessel circle.
    """
    radius = grid.diameter / 2.0
    for s in shapes:
        if s.bounding_radius() > radius + 1e-9:
            raise ValueError(f"shape {s.kind!r} extends outside the vessel (radius {radius} mm)")
    centers = grid.active_centers()
    x, y = centers[:, 0], centers[:, 1]
    values = np.zeros(grid.n_active)
    for s in shapes:
        values[s.contains(x, y)] = 1.0
    return values


def _v_shape_bars(bar_length=34.0, bar_width=10.0, opening_deg=60.0, apex_y=-16.0):
    """Two bars meeting at the apex, symmetric about the y axis."""
    half = opening_deg / 2.0
    bars = []
    for sign in (-1.0, 1.0):
        theta = math.radians(half) * sign
        # bar axis points up-and-outward from the apex
        dx, dy = math.sin(theta), math.cos(theta)
        cx = dx * bar_length / 2.0
        cy = apex_y + dy * bar_length / 2.0
        bars.append(
            ShapeSpec("rectangle", center=(cx, cy), size=(bar_width, bar_length),
                      rotation=-sign * half)
        )
    return bars


def default_shapes(kind):
    """Default shape list for a named phantom kind."""
    if kind == "cross":
        return [
            ShapeSpec("rectangle", center=(0.0, 0.0), size=(40.0, 12.0)),
            ShapeSpec("rectangle", center=(0.0, 0.0), size=(12.0, 40.0)),
        ]
    if kind == "v":
        return _v_shape_bars()
    if kind == "two_rects":
        return [
            ShapeSpec("rectangle", center=(-14.0, 0.0), size=(20.0, 14.0)),
            ShapeSpec("rectangle", center=(14.0, 0.0), size=(20.0, 14.0)),
        ]
    if kind == "three_circles":
        return [
            ShapeSpec("circle", center=(20.0 * math.cos(math.radians(a)),
                                        20.0 * math.sin(math.radians(a))), size=9.0)
            for a in (90.0, 210.0, 330.0)
        ]
    raise ValueError(f"unknown phantom kind {kind!r}; expected one of {PHANTOM_KINDS}")


PHANTOM_KINDS = ("cross", "v", "two_rects", "three_circles")


def phantom(kind, grid, shapes=None):
    """Rasterize a named test distribution (or explicit shapes) onto the grid."""
    if shapes is None:
        shapes = default_shapes(kind)
    return rasterize(shapes, grid)
