"""Adjacency structures for spatial differencing.

An :class:`OrderedPath` partitions (a subset of) unit ids into channels. Units
that are consecutive inside a channel are treated as neighbours; nothing is
ever compared across channels.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, IntegrityError, StructureError
from .geometry import rotate

LATTICE_TOL = 1e-9


@dataclass(frozen=True)
class OrderedPath:
    """Ordered channels of unit ids.

    Attributes
    ----------
    channels : tuple of tuple of str
    direction : str
        Label such as ``"WE"``, ``"NS"``, ``"x"`` or ``"theta=37"``.
    channel_width : float or None
        Band width used by :func:`assign_channels`.
    """

    channels: tuple
    direction: str = ""
    channel_width: float | None = None

    def __post_init__(self):
        chans = tuple(tuple(str(u) for u in ch) for ch in self.channels)
        seen = set()
        for ch in chans:
            if not ch:
                raise StructureError("channels must be non-empty")
            for u in ch:
                if u in seen:
                    raise IntegrityError(f"unit {u!r} appears more than once in the path")
                seen.add(u)
        object.__setattr__(self, "channels", chans)

    def __len__(self):
        return len(self.channels)

    def ids(self):
        return [u for ch in self.channels for u in ch]

    @property
    def n_units(self):
        return sum(len(ch) for ch in self.channels)

    def reversed(self):
        """Same channels traversed in the opposite direction."""
        return OrderedPath(tuple(ch[::-1] for ch in self.channels),
                           self.direction + "-rev", self.channel_width)

    def restrict(self, ids):
        """Drop ids not in ``ids`` (keeping order) and then empty channels."""
        keep = set(ids)
        chans = [tuple(u for u in ch if u in keep) for ch in self.channels]
        return OrderedPath(tuple(ch for ch in chans if ch), self.direction, self.channel_width)

    def to_csv(self, path):
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["channel_index", "position_in_channel", "unit_id"])
            for k, ch in enumerate(self.channels):
                for p, u in enumerate(ch):
                    w.writerow([k, p, u])

    @classmethod
    def from_csv(cls, path, direction="", channel_width=None):
        rows = []
        with Path(path).open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                rows.append((int(row["channel_index"]), int(row["position_in_channel"]),
                             row["unit_id"]))
        rows.sort()
        chans = {}
        for k, _, u in rows:
            chans.setdefault(k, []).append(u)
        return cls(tuple(tuple(chans[k]) for k in sorted(chans)), direction, channel_width)


def order_1d(ds, axis="x"):
    """Single channel with all units sorted by one coordinate (ties by id)."""
    col = {"x": 0, "y": 1}.get(axis)
    if col is None:
        raise DomainError(f"axis must be 'x' or 'y', got {axis!r}")
    key = ds.positions[:, col]
    order = sorted(range(ds.n), key=lambda i: (key[i], ds.ids[i]))
    return OrderedPath((tuple(ds.ids[i] for i in order),), axis)


def _lattice_levels(values, name):
    """Cluster coordinates to lattice levels; verify a common spacing."""
    v = np.sort(np.unique(values))
    scale = max(1.0, float(np.abs(v).max())) if v.size else 1.0
    tol = LATTICE_TOL * scale
    levels = [v[0]]
    for a in v[1:]:
        if a - levels[-1] > tol:
            levels.append(a)
    levels = np.array(levels)
    if len(levels) > 2:
        gaps = np.diff(levels)
        step = gaps.min()
        ratio = gaps / step
        if np.any(np.abs(ratio - np.round(ratio)) * step > tol * max(1.0, ratio.max())):
            raise StructureError(
                f"{name} coordinates are not on a regular lattice; "
                "use assign_channels for irregular data"
            )
    return levels, tol


def _snap(values, levels, tol):
    idx = np.searchsorted(levels, values - tol)
    idx = np.clip(idx, 0, len(levels) - 1)
    if np.any(np.abs(levels[idx] - values) > tol):
        raise StructureError("positions are off the lattice; use assign_channels")
    return idx


def order_grid(ds, direction="WE"):
    """Rows (WE) or columns (NS) of a regular lattice as channels.

    WE gives one channel per row, west to east, rows listed north to south.
    NS gives one channel per column, north to south, columns listed west to
    east.
    """
    if direction not in ("WE", "NS"):
        raise DomainError(f"direction must be 'WE' or 'NS', got {direction!r}")
    if ds.n == 0:
        raise StructureError("empty dataset")
    xs, ys = ds.positions[:, 0], ds.positions[:, 1]
    xl, xt = _lattice_levels(xs, "x")
    yl, yt = _lattice_levels(ys, "y")
    xi, yi = _snap(xs, xl, xt), _snap(ys, yl, yt)
    cells = set(zip(xi.tolist(), yi.tolist()))
    if len(cells) != ds.n:
        raise StructureError("two units occupy the same lattice cell; use assign_channels")
    groups = {}
    if direction == "WE":
        for i in range(ds.n):
            groups.setdefault(yi[i], []).append((xi[i], i))
        keys = sorted(groups, reverse=True)
        chans = [tuple(ds.ids[i] for _, i in sorted(groups[k])) for k in keys]
    else:
        for i in range(ds.n):
            groups.setdefault(xi[i], []).append((-yi[i], i))
        keys = sorted(groups)
        chans = [tuple(ds.ids[i] for _, i in sorted(groups[k])) for k in keys]
    return OrderedPath(tuple(chans), direction)


def default_channel_width(ds):
    """Mean north-south vertex extent of the units' polygons."""
    if not ds.has_polygons():
        raise DomainError("default channel width needs polygons; pass width explicitly")
    extents = [float(np.ptp(r[:, 1])) for r in ds.polygons if r is not None]
    return float(np.mean(extents))


def rotated_frame(ds, theta):
    """Centroids and per-unit (min_y, max_y) after rotating by ``-theta``.

    Coordinates are relative to the dataset pivot (mean centroid). Units
    without a polygon get a zero-height extent at their point.
    """
    cents = ds.centroids()
    pivot = cents.mean(axis=0)
    rc = rotate(cents, -theta, pivot)
    lo = rc[:, 1].copy()
    hi = rc[:, 1].copy()
    has = np.zeros(ds.n, dtype=bool)
    if ds.polygons is not None:
        for i, ring in enumerate(ds.polygons):
            if ring is None:
                continue
            ry = rotate(ring, -theta, pivot)[:, 1]
            lo[i], hi[i] = ry.min(), ry.max()
            has[i] = True
    return rc, lo, hi, has


def assign_channels(ds, width=None, theta=0.0):
    """Channel sampling for irregular units.

    The map is rotated by ``-theta`` degrees about the mean centroid and tiled
    by horizontal bands of ``width`` starting at the northernmost rotated
    coordinate. Bands are processed north to south; each collects the units
    it intersects that no earlier band has taken, ordered west to east by
    rotated centroid. Polygon units intersect a band when their rotated
    vertex y-range overlaps it with positive length; point units belong to the
    band ``(lo, hi]`` containing them (the top band is closed above).

    Parameters
    ----------
    ds : SpatialDataset
    width : float, optional
        Band width; defaults to :func:`default_channel_width`.
    theta : float
        Rotation in degrees, within [-89, 90].
    """
    if width is None:
        width = default_channel_width(ds)
    if not (width > 0 and math.isfinite(width)):
        raise DomainError(f"channel width must be positive, got {width}")
    if not -89 <= theta <= 90:
        raise DomainError(f"theta must be within [-89, 90], got {theta}")
    if ds.n == 0:
        return OrderedPath((), f"theta={theta:g}", float(width))
    rc, lo, hi, has = rotated_frame(ds, theta)
    flat = (hi - lo) <= LATTICE_TOL * max(1.0, width)
    top = float(hi.max())
    bottom = float(lo.min())
    scale = max(1.0, abs(top), abs(bottom), width)
    tol = LATTICE_TOL * scale
    n_bands = int(math.floor((top - bottom) / width + tol / width)) + 1
    assigned = np.zeros(ds.n, dtype=bool)
    channels = []
    for b in range(n_bands):
        b_hi = top - b * width
        b_lo = b_hi - width
        poly_hit = (~flat) & (hi > b_lo + tol) & (lo < b_hi - tol)
        # bands above already claimed every point north of b_hi
        point_hit = flat & ((lo + hi) / 2 > b_lo + tol)
        hit = (poly_hit | point_hit) & ~assigned
        if not hit.any():
            continue
        idx = np.flatnonzero(hit)
        order = sorted(idx, key=lambda i: (rc[i, 0], ds.ids[i]))
        channels.append(tuple(ds.ids[i] for i in order))
        assigned[idx] = True
    if not assigned.all():
        # guard against roundoff at the southern edge
        idx = np.flatnonzero(~assigned)
        order = sorted(idx, key=lambda i: (rc[i, 0], ds.ids[i]))
        channels.append(tuple(ds.ids[i] for i in order))
    return OrderedPath(tuple(channels), f"theta={theta:g}", float(width))
