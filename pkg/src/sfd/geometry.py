"""Planar polygon helpers: shoelace centroid and rotation about a pivot."""

import numpy as np


def as_ring(vertices):
    """Return an ``(m, 2)`` float array of ring vertices without a closing repeat."""
    ring = np.asarray(vertices, dtype=float)
    if ring.ndim != 2 or ring.shape[1] != 2:
        raise ValueError("polygon vertices must have shape (m, 2)")
    if len(ring) > 1 and np.array_equal(ring[0], ring[-1]):
        ring = ring[:-1]
    return ring


def polygon_area(vertices):
    """Signed shoelace area (positive for counter-clockwise rings)."""
    ring = as_ring(vertices)
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(vertices):
    """Area-weighted centroid of a simple polygon.

    Coordinates are shifted to the first vertex before the shoelace sums to
    limit cancellation. Degenerate (zero-area) rings fall back to the vertex
    mean.
    """
    ring = as_ring(vertices)
    origin = ring[0]
    shifted = ring - origin
    x, y = shifted[:, 0], shifted[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if abs(area) <= 1e-14 * max(1.0, float(np.abs(shifted).max()) ** 2):
        return ring.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy]) + origin


def rotate(points, theta_deg, pivot=(0.0, 0.0)):
    """Rotate points counter-clockwise by ``theta_deg`` degrees about ``pivot``.

    The result is expressed relative to the pivot; add ``pivot`` back for
    absolute coordinates. Band assignment is translation invariant, so callers
    that only compare rotated coordinates can skip the add.
    """
    pts = np.asarray(points, dtype=float) - np.asarray(pivot, dtype=float)
    if theta_deg == 0:
        return pts
    t = np.deg2rad(theta_deg)
    c, s = np.cos(t), np.sin(t)
    out = np.empty_like(pts)
    out[..., 0] = c * pts[..., 0] - s * pts[..., 1]
    out[..., 1] = s * pts[..., 0] + c * pts[..., 1]
    return out
