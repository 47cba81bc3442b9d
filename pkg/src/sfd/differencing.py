"""Spatial first and second differences along an ordered path, and the
spatial-history decomposition of the levels omitted-variable term.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._linalg import check_rank
from .errors import DomainError, IntegrityError


@dataclass(frozen=True, eq=False)
class DifferencedDesign:
    """Differenced outcome and regressors with their audit trail.

    Row ``r`` differences the units in ``pair_map[r]``; the first id is the
    higher-index unit and names the row. ``order`` is 1 (first differences),
    2 (double differences) or 0 (untransformed levels in path order).
    """

    dy: np.ndarray
    dX: np.ndarray
    columns: tuple
    pair_map: tuple
    order: int
    channel_of_row: np.ndarray
    positions: np.ndarray
    direction: str = ""
    outcome_name: str = "y"

    def __post_init__(self):
        for name in ("dy", "dX", "channel_of_row", "positions"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_rows(self):
        return len(self.dy)

    @property
    def row_ids(self):
        return tuple(p[0] for p in self.pair_map)

    def channel_rows(self):
        """Row-index arrays, one per channel that contributed rows."""
        if self.n_rows == 0:
            return []
        cuts = np.flatnonzero(np.diff(self.channel_of_row)) + 1
        return np.split(np.arange(self.n_rows), cuts)

    def to_csv(self, path):
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            lags = [f"unit_lag{j}" if j else "unit" for j in range(max(self.order, 0) + 1)]
            w.writerow(["channel", *lags, "pos_x", "pos_y", f"d{self.order}_{self.outcome_name}",
                        *(f"d{self.order}_{c}" for c in self.columns)])
            for r in range(self.n_rows):
                w.writerow([int(self.channel_of_row[r]), *self.pair_map[r],
                            *map(repr, map(float, self.positions[r])), repr(float(self.dy[r])),
                            *map(repr, map(float, self.dX[r]))])


def _check_path(ds, path):
    missing = [u for u in path.ids() if u not in ds]
    if missing:
        raise IntegrityError(f"path references unknown unit ids: {missing[:5]}")


def difference(ds, path, order=1):
    """Order-``order`` spatial differences within each channel of ``path``.

    Channels with ``order`` or fewer units contribute nothing; no row ever
    spans two channels.
    """
    if order not in (0, 1, 2):
        raise DomainError(f"difference order must be 0, 1 or 2, got {order}")
    _check_path(ds, path)
    dy, dX, pairs, chan, pos = [], [], [], [], []
    for k, channel in enumerate(path.channels):
        m = len(channel)
        if m <= order:
            continue
        idx = ds.indices(channel)
        y = ds.outcome[idx]
        X = ds.regressors[idx]
        if order:
            y = np.diff(y, n=order)
            X = np.diff(X, n=order, axis=0)
        dy.append(y)
        dX.append(X)
        chan.append(np.full(m - order, k))
        pos.append(ds.positions[idx[order:]])
        pairs.extend(tuple(channel[i - j] for j in range(order + 1)) for i in range(order, m))
    if dy:
        dy, dX = np.concatenate(dy), np.concatenate(dX)
        chan, pos = np.concatenate(chan), np.concatenate(pos)
    else:
        dy, dX = np.empty(0), np.empty((0, ds.k))
        chan, pos = np.empty(0, dtype=int), np.empty((0, 2))
    return DifferencedDesign(dy, dX, ds.columns, tuple(pairs), order, chan, pos,
                             path.direction, ds.outcome_name)


def spatial_first_difference(ds, path):
    """Rows ``y_i - y_{i-1}`` and ``x_i - x_{i-1}`` for in-channel neighbours."""
    return difference(ds, path, 1)


def spatial_double_difference(ds, path):
    """Rows ``y_i - 2 y_{i-1} + y_{i-2}`` (and likewise for x) within channels."""
    return difference(ds, path, 2)


@dataclass(frozen=True, eq=False)
class BiasDecomposition:
    """Levels omitted-variable term split by spatial history.

    ``W1 = x~'c~``, ``W2 = dx'c~ + x~'dc``, ``W3 = dx'dc`` and
    ``total = x'c``, all on per-channel demeaned data, so that
    ``W1 + W2 + W3 == total`` up to roundoff. ``implied_bias_levels`` is
    ``(x'x)^-1 (W1 + W2) alpha``.
    """

    W1: np.ndarray
    W2: np.ndarray
    W3: np.ndarray
    total: np.ndarray
    alpha: np.ndarray
    implied_bias_levels: np.ndarray
    xtx: np.ndarray

    def identity_error(self):
        """Max relative deviation of ``W1 + W2 + W3`` from ``total``."""
        scale = max(np.abs(self.total).max(), np.abs(self.W1).max(), 1e-300)
        return float(np.abs(self.W1 + self.W2 + self.W3 - self.total).max() / scale)


def _histories(v):
    """(history, change) per the convention v_i = v~_i + dv_i, v~_1 = 0."""
    hist = np.zeros_like(v)
    hist[1:] = v[:-1]
    return hist, v - hist


def decompose_bias(x, c, alpha, path, ids=None):
    """Spatial-history decomposition of ``x'c alpha``.

    Parameters
    ----------
    x : array_like, shape (n, K)
    c : array_like, shape (n, M)
        Omitted variables; only available in simulation.
    alpha : array_like, shape (M,)
    path : OrderedPath
    ids : sequence of str, optional
        Unit id of each row of ``x``/``c``. Without it, rows are taken to be
        in path order (channels concatenated).

    Histories restart at the first unit of every channel, and each channel
    is demeaned first so the identity holds with an intercept in the model.
    Raises CollinearityError when the demeaned ``x`` is rank deficient.
    """
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    x = x.reshape(len(x), -1)
    c = c.reshape(len(c), -1)
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if len(x) != len(c):
        raise DomainError(f"x has {len(x)} rows but c has {len(c)}")
    if alpha.shape != (c.shape[1],):
        raise DomainError(f"alpha has shape {alpha.shape}, expected ({c.shape[1]},)")
    if ids is None:
        if len(x) != path.n_units:
            raise DomainError(f"x has {len(x)} rows but the path has {path.n_units} units")
        order = np.arange(len(x))
    else:
        pos = {u: i for i, u in enumerate(ids)}
        if len(pos) != len(x):
            raise DomainError("ids must be unique and match the rows of x")
        try:
            order = np.array([pos[u] for u in path.ids()], dtype=np.intp)
        except KeyError as e:
            raise IntegrityError(f"path references unknown unit id {e.args[0]!r}") from None
    K, M = x.shape[1], c.shape[1]
    W1 = np.zeros((K, M))
    W2 = np.zeros((K, M))
    W3 = np.zeros((K, M))
    total = np.zeros((K, M))
    xtx = np.zeros((K, K))
    start = 0
    demeaned = [np.empty((0, K))]
    for channel in path.channels:
        rows = order[start:start + len(channel)]
        start += len(channel)
        xc = x[rows] - x[rows].mean(axis=0)
        cc = c[rows] - c[rows].mean(axis=0)
        demeaned.append(xc)
        xh, dx = _histories(xc)
        ch, dc = _histories(cc)
        W1 += xh.T @ ch
        W2 += dx.T @ ch + xh.T @ dc
        W3 += dx.T @ dc
        total += xc.T @ cc
        xtx += xc.T @ xc
    check_rank(np.concatenate(demeaned), [f"x{j}" for j in range(K)])
    implied = np.linalg.solve(xtx, (W1 + W2) @ alpha)
    return BiasDecomposition(W1, W2, W3, total, alpha, implied, xtx)
