"""Cross-sectional spatial data: the immutable dataset, CSV ingestion, and
feature transforms that have to be computed in levels before differencing.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .errors import DomainError, IntegrityError, ParseError, SchemaError
from .geometry import as_ring, polygon_centroid

if TYPE_CHECKING:
    from .ordering import OrderedPath


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpatialDataset:
    """Outcome, regressors and planar positions for a set of spatial units.

    Parameters
    ----------
    ids : sequence of str
        Unique unit identifiers.
    positions : array_like, shape (n, 2)
        Planar (x, y) coordinates.
    outcome : array_like, shape (n,)
    regressors : array_like, shape (n, k)
    columns : sequence of str
        Regressor names, aligned with the columns of ``regressors``.
    polygons : sequence of (m, 2) arrays or None, optional
        Per-unit boundary rings; individual entries may be None.
    outcome_name : str
    metadata : mapping
        Free-form provenance (transform warnings, simulation settings, ...).
    """

    ids: tuple
    positions: np.ndarray
    outcome: np.ndarray
    regressors: np.ndarray
    columns: tuple
    polygons: tuple | None = None
    outcome_name: str = "y"
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        n = len(ids)
        pos = _frozen(self.positions).reshape(n, 2) if n else _frozen(np.empty((0, 2)))
        y = _frozen(self.outcome).reshape(n)
        X = np.asarray(self.regressors, dtype=float)
        if X.ndim == 1:
            X = X.reshape(n, -1) if n else X.reshape(0, len(self.columns))
        X = _frozen(X)
        columns = tuple(str(c) for c in self.columns)
        if X.shape != (n, len(columns)):
            raise DomainError(
                f"regressor matrix has shape {X.shape}, expected ({n}, {len(columns)})"
            )
        if len(set(columns)) != len(columns):
            raise IntegrityError(f"duplicate regressor names in {columns}")
        if len(set(ids)) != n:
            seen, dup = set(), None
            for i in ids:
                if i in seen:
                    dup = i
                    break
                seen.add(i)
            raise IntegrityError(f"duplicate unit id {dup!r}")
        for name, arr in (("outcome", y), ("regressors", X), ("positions", pos)):
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"non-finite values in {name}")
        polys = None
        if self.polygons is not None:
            if len(self.polygons) != n:
                raise DomainError("polygons must have one entry per unit")
            polys = []
            for uid, ring in zip(ids, self.polygons):
                if ring is None:
                    polys.append(None)
                    continue
                ring = as_ring(ring)
                if len(ring) < 3:
                    raise DomainError(f"polygon for unit {uid!r} has fewer than 3 vertices")
                if not np.all(np.isfinite(ring)):
                    raise DomainError(f"non-finite polygon vertex for unit {uid!r}")
                polys.append(_frozen(ring))
            polys = tuple(polys)
        set_ = object.__setattr__
        set_(self, "ids", ids)
        set_(self, "positions", pos)
        set_(self, "outcome", y)
        set_(self, "regressors", X)
        set_(self, "columns", columns)
        set_(self, "polygons", polys)
        set_(self, "metadata", dict(self.metadata))
        set_(self, "_index", {u: i for i, u in enumerate(ids)})

    @property
    def n(self):
        return len(self.ids)

    @property
    def k(self):
        return len(self.columns)

    def __len__(self):
        return len(self.ids)

    def __contains__(self, uid):
        return uid in self._index

    def index_of(self, uid):
        try:
            return self._index[uid]
        except KeyError:
            raise IntegrityError(f"unknown unit id {uid!r}") from None

    def indices(self, ids):
        """Row indices for ``ids``; raises IntegrityError on unknown ids."""
        return np.fromiter((self.index_of(u) for u in ids), dtype=np.intp, count=len(ids))

    def column(self, name):
        try:
            return self.regressors[:, self.columns.index(name)]
        except ValueError:
            raise SchemaError(name, "regressors") from None

    def has_polygons(self):
        return self.polygons is not None and any(p is not None for p in self.polygons)

    def centroids(self):
        """Shoelace centroid for units with polygons, position otherwise."""
        if not self.has_polygons():
            return np.array(self.positions)
        out = np.array(self.positions)
        for i, ring in enumerate(self.polygons):
            if ring is not None:
                out[i] = polygon_centroid(ring)
        return out

    def take(self, ids, metadata=None):
        """New dataset restricted to ``ids`` in the given order."""
        idx = self.indices(list(ids))
        return self._replace_rows(idx, metadata)

    def _replace_rows(self, idx, metadata=None):
        return SpatialDataset(
            ids=[self.ids[i] for i in idx],
            positions=self.positions[idx],
            outcome=self.outcome[idx],
            regressors=self.regressors[idx],
            columns=self.columns,
            polygons=None if self.polygons is None else [self.polygons[i] for i in idx],
            outcome_name=self.outcome_name,
            metadata=self.metadata if metadata is None else metadata,
        )

    def with_columns(self, names, values, metadata=None):
        """Append regressor columns; ``values`` has shape (n, len(names))."""
        names = list(names)
        for name in names:
            if name in self.columns:
                raise DomainError(f"column {name!r} already exists")
        values = np.asarray(values, dtype=float).reshape(self.n, len(names))
        return SpatialDataset(
            ids=self.ids,
            positions=self.positions,
            outcome=self.outcome,
            regressors=np.column_stack([self.regressors, values]),
            columns=self.columns + tuple(names),
            polygons=self.polygons,
            outcome_name=self.outcome_name,
            metadata=self.metadata if metadata is None else metadata,
        )

    def select(self, columns):
        """Dataset keeping only the named regressor columns, in that order."""
        columns = list(columns)
        idx = [self.columns.index(c) if c in self.columns else None for c in columns]
        for c, i in zip(columns, idx):
            if i is None:
                raise SchemaError(c, "regressors")
        return SpatialDataset(
            ids=self.ids,
            positions=self.positions,
            outcome=self.outcome,
            regressors=self.regressors[:, idx],
            columns=columns,
            polygons=self.polygons,
            outcome_name=self.outcome_name,
            metadata=self.metadata,
        )

    def with_outcome(self, outcome, name=None):
        return SpatialDataset(
            ids=self.ids,
            positions=self.positions,
            outcome=outcome,
            regressors=self.regressors,
            columns=self.columns,
            polygons=self.polygons,
            outcome_name=name or self.outcome_name,
            metadata=self.metadata,
        )

    def with_polygons(self, polygons):
        """Attach rings from a ``{id: vertices}`` mapping; missing ids get None."""
        unknown = set(polygons) - set(self.ids)
        if unknown:
            raise IntegrityError(f"polygons reference unknown ids: {sorted(unknown)[:5]}")
        return SpatialDataset(
            ids=self.ids,
            positions=self.positions,
            outcome=self.outcome,
            regressors=self.regressors,
            columns=self.columns,
            polygons=[polygons.get(u) for u in self.ids],
            outcome_name=self.outcome_name,
            metadata=self.metadata,
        )

    def to_csv(self, path, id_col="id", x_col="x", y_col="y"):
        """Write id, coordinates, outcome and regressors with a header row.

        Raises
        ------
        SchemaError
            If the header would contain a repeated name (for example a
            regressor called ``x`` with the default coordinate header).
        """
        header = [id_col, x_col, y_col, self.outcome_name, *self.columns]
        dup = sorted({h for h in header if header.count(h) > 1})
        if dup:
            raise SchemaError(f"repeated CSV header name(s) {dup}; pass other coordinate names")
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i, uid in enumerate(self.ids):
                w.writerow(
                    [uid, *map(repr, map(float, self.positions[i])), repr(float(self.outcome[i])),
                     *map(repr, map(float, self.regressors[i]))]
                )


@dataclass(frozen=True)
class Schema:
    """Column roles for :func:`load_csv`. ``regressors=None`` takes every
    column not claimed by another role."""

    id: str = "id"
    x: str = "x"
    y: str = "y"
    outcome: str = "y_outcome"
    regressors: tuple | None = None

    @classmethod
    def from_mapping(cls, m):
        if isinstance(m, Schema):
            return m
        regs = m.get("regressors")
        if isinstance(regs, str):
            regs = tuple(r.strip() for r in regs.split(",") if r.strip())
        return cls(
            id=m.get("id", "id"),
            x=m.get("x", "x"),
            y=m.get("y", "y"),
            outcome=m["outcome"],
            regressors=None if regs is None else tuple(regs),
        )


def _parse_float(text, row, column):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ParseError(
            f"row {row}: column {column!r} has non-numeric value {text!r}", row=row
        ) from None
    if not math.isfinite(value):
        raise ParseError(f"row {row}: column {column!r} is not finite ({text!r})", row=row)
    return value


def load_csv(path, schema, polygons=None):
    """Read a cross-sectional CSV into a :class:`SpatialDataset`.

    Rows keep file order. ``row`` in a :class:`ParseError` is the 1-based data
    row (the header is row 0).

    Parameters
    ----------
    path : path-like
    schema : Schema or mapping
        Needs at least ``outcome``; ``id``, ``x``, ``y`` default to those names.
    polygons : path-like, optional
        Companion ring file read by :func:`load_polygons`.
    """
    schema = Schema.from_mapping(schema)
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(schema.id, str(path)) from None
        for col in (schema.id, schema.x, schema.y, schema.outcome):
            if col not in header:
                raise SchemaError(col, str(path))
        claimed = {schema.id, schema.x, schema.y, schema.outcome}
        regs = schema.regressors
        if regs is None:
            regs = tuple(h for h in header if h not in claimed)
        for col in regs:
            if col not in header:
                raise SchemaError(col, str(path))
        if not regs:
            raise SchemaError("<regressor>", str(path))
        pos = {h: i for i, h in enumerate(header)}
        ids, xy, y, X = [], [], [], []
        for r, fields in enumerate(reader, start=1):
            if not fields or all(not f.strip() for f in fields):
                continue
            if len(fields) != len(header):
                raise ParseError(
                    f"row {r}: expected {len(header)} fields, got {len(fields)}", row=r
                )
            ids.append(fields[pos[schema.id]].strip())
            xy.append(
                (_parse_float(fields[pos[schema.x]], r, schema.x),
                 _parse_float(fields[pos[schema.y]], r, schema.y))
            )
            y.append(_parse_float(fields[pos[schema.outcome]], r, schema.outcome))
            X.append([_parse_float(fields[pos[c]], r, c) for c in regs])
    ds = SpatialDataset(
        ids=ids,
        positions=np.array(xy, dtype=float).reshape(-1, 2),
        outcome=y,
        regressors=np.array(X, dtype=float).reshape(len(ids), len(regs)),
        columns=regs,
        outcome_name=schema.outcome,
        metadata={"source": str(path)},
    )
    if polygons is not None:
        ds = ds.with_polygons(load_polygons(polygons))
    return ds


def load_polygons(path):
    """Read an ``id, vertex_index, x, y`` ring file into ``{id: (m, 2) array}``."""
    path = Path(path)
    rings = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = [f.strip() for f in (reader.fieldnames or [])]
        for col in ("id", "vertex_index", "x", "y"):
            if col not in fields:
                raise SchemaError(col, str(path))
        for r, row in enumerate(reader, start=1):
            row = {k.strip(): v for k, v in row.items()}
            k = int(_parse_float(row["vertex_index"], r, "vertex_index"))
            rings.setdefault(row["id"].strip(), []).append(
                (k, _parse_float(row["x"], r, "x"), _parse_float(row["y"], r, "y"))
            )
    out = {}
    for uid, verts in rings.items():
        verts.sort()
        idx = [v[0] for v in verts]
        if len(set(idx)) != len(idx):
            raise IntegrityError(f"duplicate vertex_index in polygon {uid!r}")
        out[uid] = np.array([(v[1], v[2]) for v in verts])
    return out


def write_polygons(path, ds):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "vertex_index", "x", "y"])
        for uid, ring in zip(ds.ids, ds.polygons or ()):
            if ring is None:
                continue
            for k, (x, y) in enumerate(ring):
                w.writerow([uid, k, repr(float(x)), repr(float(y))])


def degree_days(hourly_temps, threshold):
    """Degree-days below and above ``threshold`` from hourly temperatures (C).

    below = sum(max(T, 0) - max(T - threshold, 0)) / 24
    above = sum(max(T - threshold, 0)) / 24
    """
    temps = np.asarray(hourly_temps, dtype=float).ravel()
    if temps.size == 0:
        raise DomainError("degree_days needs at least one hourly temperature")
    if not threshold > 0:
        raise DomainError(f"threshold must be positive, got {threshold}")
    if not np.all(np.isfinite(temps)):
        raise DomainError("hourly temperatures must be finite")
    excess = np.maximum(temps - threshold, 0.0)
    below = (np.maximum(temps, 0.0) - excess).sum() / 24.0
    above = excess.sum() / 24.0
    return float(below), float(above)


@dataclass(frozen=True)
class TransformSpec:
    """A level-space feature transform.

    Use the constructors :meth:`polynomial`, :meth:`degree_days` and
    :meth:`spatial_lag` rather than filling fields by hand.
    """

    kind: str
    output: str
    column: str | None = None
    degree: int | None = None
    threshold: float | None = None
    offset: int | None = None
    sources: tuple = ()

    def __post_init__(self):
        if self.kind == "polynomial":
            if self.degree is None or self.degree < 2:
                raise DomainError("polynomial degree must be >= 2")
        elif self.kind == "spatial_lag":
            if self.offset is None or self.offset < 1:
                raise DomainError("spatial_lag offset must be >= 1")
        elif self.kind == "degree_days":
            if not self.sources:
                raise DomainError("degree_days needs hourly temperature columns")
            if self.threshold is None or not self.threshold > 0:
                raise DomainError("degree_days threshold must be positive")
        else:
            raise DomainError(f"unknown transform kind {self.kind!r}")

    @classmethod
    def polynomial(cls, column, degree=2, output=None):
        return cls("polynomial", output or f"{column}_pow{degree}", column=column, degree=degree)

    @classmethod
    def spatial_lag(cls, column, offset=1, output=None):
        return cls("spatial_lag", output or f"{column}_lag{offset}", column=column, offset=offset)

    @classmethod
    def degree_days(cls, sources, threshold, output=None):
        """Two columns ``<output>_below`` and ``<output>_above`` from hourly
        temperature columns; the hourly columns are removed afterwards."""
        tag = f"{threshold:g}".replace(".", "p")
        return cls("degree_days", output or f"dday{tag}", threshold=float(threshold),
                   sources=tuple(sources))

    @property
    def outputs(self):
        if self.kind == "degree_days":
            return (f"{self.output}_below", f"{self.output}_above")
        return (self.output,)


def apply_transforms(ds, path: OrderedPath | None, specs: Sequence[TransformSpec]):
    """Append transformed columns computed in levels.

    Polynomial and degree-day transforms keep every unit. Spatial lags take the
    value ``offset`` positions earlier in the same channel of ``path``; the
    first ``max(offset)`` units of every channel, channels that are too short,
    and units outside ``path`` are dropped. Counts of dropped channels and
    units are recorded in ``metadata['transform_warnings']``. Restrict the path
    with ``path.restrict(result.ids)`` before fitting.
    """
    specs = list(specs)
    meta = dict(ds.metadata)
    out = ds
    for spec in specs:
        for name in spec.outputs:
            if name in out.columns:
                raise DomainError(f"transform output {name!r} already exists")
        if spec.kind == "polynomial":
            out = out.with_columns([spec.output], out.column(spec.column) ** spec.degree)
        elif spec.kind == "degree_days":
            hourly = np.column_stack([out.column(c) for c in spec.sources])
            vals = np.array([degree_days(row, spec.threshold) for row in hourly])
            keep = [c for c in out.columns if c not in spec.sources]
            out = out.with_columns(spec.outputs, vals).select(keep + list(spec.outputs))
    lags = [s for s in specs if s.kind == "spatial_lag"]
    if not lags:
        return SpatialDataset(out.ids, out.positions, out.outcome, out.regressors, out.columns,
                              out.polygons, out.outcome_name, meta)
    if path is None:
        raise DomainError("spatial_lag transforms need an OrderedPath")
    kmax = max(s.offset for s in lags)
    values = np.full((out.n, len(lags)), np.nan)
    keep = np.zeros(out.n, dtype=bool)
    dropped_channels = 0
    for channel in path.channels:
        idx = out.indices(channel)
        if len(idx) < kmax + 1:
            dropped_channels += 1
            continue
        for j, spec in enumerate(lags):
            src = out.column(spec.column)[idx]
            values[idx[spec.offset:], j] = src[:-spec.offset]
        keep[idx[kmax:]] = True
    placed = set(path.ids())
    unplaced = sum(1 for u in out.ids if u not in placed)
    if dropped_channels:
        warnings.warn(f"{dropped_channels} channel(s) shorter than {kmax + 1} dropped by spatial_lag")
    meta["transform_warnings"] = {
        "dropped_channels": dropped_channels,
        "dropped_units": int((~keep).sum()),
        "unplaced_units": unplaced,
    }
    out = out.with_columns([s.output for s in lags], np.nan_to_num(values))
    rows = np.flatnonzero(keep)
    return out._replace_rows(rows, meta)
