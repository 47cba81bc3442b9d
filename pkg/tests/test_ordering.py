import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from sfd import (DomainError, IntegrityError, OrderedPath, SpatialDataset, StructureError,
                 assign_channels, order_1d, order_grid)
from sfd.geometry import polygon_area, polygon_centroid, rotate
from sfd.ordering import default_channel_width

from conftest import make_ds, square_grid


def pts(coords, ids=None):
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    return make_ds(np.zeros(n), np.zeros((n, 1)), positions=coords, ids=ids)


def test_order_1d_sort():
    ds = pts([(2, 0), (0, 0), (1, 0)], ids=["p", "q", "r"])
    assert order_1d(ds, "x").channels == (("q", "r", "p"),)


def test_order_1d_single_and_ties():
    assert order_1d(pts([(3, 3)], ["z"]), "y").channels == (("z",),)
    ds = pts([(5, 0), (5, 0)], ids=["b", "a"])
    assert order_1d(ds, "x").channels == (("a", "b"),)


def test_order_1d_bad_axis():
    with pytest.raises(DomainError):
        order_1d(pts([(0, 0)]), "z")


def test_order_grid_2x2():
    ds = pts([(0, 0), (1, 0), (0, 1), (1, 1)], ids=["sw", "se", "nw", "ne"])
    assert order_grid(ds, "WE").channels == (("nw", "ne"), ("sw", "se"))
    assert order_grid(ds, "NS").channels == (("nw", "sw"), ("ne", "se"))


def test_order_grid_single_row():
    ds = pts([(2, 4), (0, 4), (1, 4)], ids=["c", "a", "b"])
    assert order_grid(ds, "WE").channels == (("a", "b", "c"),)


def test_order_grid_rejects_irregular():
    with pytest.raises(StructureError, match="assign_channels"):
        order_grid(pts([(0, 0), (1, 0), (2.5, 0)]), "WE")
    with pytest.raises(StructureError):
        order_grid(pts([(0, 0), (0, 0), (1, 0)]), "WE")


def test_order_grid_tolerates_roundoff():
    ds = pts([(0, 0), (1 + 1e-12, 0), (0, 1), (1, 1 - 1e-12)], ids=["a", "b", "c", "d"])
    assert order_grid(ds, "WE").channels == (("c", "d"), ("a", "b"))


def grid_ds(nx, ny):
    ids, cents, rings = square_grid(nx, ny)
    n = len(ids)
    return SpatialDataset(ids, cents, np.zeros(n), np.zeros((n, 1)), ["x"], rings)


def test_assign_channels_aligned_grid():
    ds = grid_ds(3, 3)
    path = assign_channels(ds, 1.0, 0.0)
    assert path.channels == (("c0_2", "c1_2", "c2_2"), ("c0_1", "c1_1", "c2_1"),
                             ("c0_0", "c1_0", "c2_0"))
    assert sorted(path.ids()) == sorted(ds.ids)


def test_assign_channels_theta_90_columns():
    # rotating by -90 maps (x, y) to (y, -x): bands now slice x, north band is
    # the western column, and order within a band runs south to north
    path = assign_channels(grid_ds(3, 3), 1.0, 90.0)
    assert path.channels == (("c0_0", "c0_1", "c0_2"), ("c1_0", "c1_1", "c1_2"),
                             ("c2_0", "c2_1", "c2_2"))


def test_assign_channels_dedupe_north_first():
    rings = {"top": [(0, 2), (1, 2), (1, 3), (0, 3)],
             "mid": [(2, 1.5), (3, 1.5), (3, 2.5), (2, 2.5)],
             "low": [(4, 1), (5, 1), (5, 2), (4, 2)]}
    ids = list(rings)
    cents = np.array([polygon_centroid(rings[u]) for u in ids])
    ds = SpatialDataset(ids, cents, np.zeros(3), np.zeros((3, 1)), ["x"],
                        [np.array(rings[u], dtype=float) for u in ids])
    path = assign_channels(ds, 1.0, 0.0)
    assert path.channels == (("top", "mid"), ("low",))


def test_assign_channels_validation():
    ds = grid_ds(2, 2)
    with pytest.raises(DomainError):
        assign_channels(ds, 0.0)
    with pytest.raises(DomainError):
        assign_channels(ds, 1.0, theta=91)
    with pytest.raises(DomainError):
        assign_channels(ds, 1.0, theta=-90)


def test_default_width_is_mean_height():
    assert default_channel_width(grid_ds(2, 2)) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        default_channel_width(pts([(0, 0)]))


def test_points_channels_match_grid():
    ds = pts([(i, j) for j in range(4) for i in range(5)])
    assert assign_channels(ds, 1.0, 0.0).channels == order_grid(ds, "WE").channels


def test_polygon_grid_matches_order_grid():
    ds = grid_ds(6, 4)
    assert assign_channels(ds, 1.0, 0.0).channels == order_grid(ds, "WE").channels


@st.composite
def random_quads(draw):
    n = draw(st.integers(1, 25))
    rng = np.random.default_rng(draw(st.integers(0, 2 ** 31)))
    rings = []
    for _ in range(n):
        cx, cy = rng.uniform(-20, 20, 2)
        ang = np.sort(rng.uniform(0, 2 * np.pi, 4))
        r = rng.uniform(0.2, 3.0, 4)
        rings.append(np.column_stack([cx + r * np.cos(ang), cy + r * np.sin(ang)]))
    theta = draw(st.floats(-89, 90))
    width = draw(st.floats(0.3, 8))
    return rings, theta, width


@settings(max_examples=60, deadline=None)
@given(random_quads())
def test_partition_property(case):
    rings, theta, width = case
    n = len(rings)
    ids = [f"u{i}" for i in range(n)]
    cents = np.array([r.mean(axis=0) for r in rings])
    ds = SpatialDataset(ids, cents, np.zeros(n), np.zeros((n, 1)), ["x"], rings)
    path = assign_channels(ds, width, theta)
    flat = path.ids()
    assert len(flat) == len(set(flat)) == n
    from sfd.ordering import rotated_frame
    rc = rotated_frame(ds, theta)[0]
    pos = {u: i for i, u in enumerate(ids)}
    for ch in path.channels:
        keys = [rc[pos[u], 0] for u in ch]
        assert all(a <= b for a, b in zip(keys, keys[1:]))


@given(st.floats(-89, 90), st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)),
                                    min_size=1, max_size=10))
def test_rotation_roundtrip(theta, points):
    p = np.array(points)
    back = rotate(rotate(p, theta), -theta)
    assert_allclose(back, p, atol=1e-9)


def test_centroid_symmetric_polygons():
    hexagon = np.array([(np.cos(a) + 3, np.sin(a) - 2)
                        for a in np.linspace(0, 2 * np.pi, 6, endpoint=False)])
    assert_allclose(polygon_centroid(hexagon), hexagon.mean(axis=0), atol=1e-12)
    rect = [(0, 0), (4, 0), (4, 2), (0, 2), (0, 0)]
    assert_allclose(polygon_centroid(rect), [2, 1])
    assert polygon_area(rect) == pytest.approx(8)


def test_centroid_l_shape():
    # two rectangles: [0,2]x[0,1] (area 2, centroid (1, .5)) and [0,1]x[1,3]
    # (area 2, centroid (.5, 2)) -> combined centroid (.75, 1.25)
    ring = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 3), (0, 3)]
    assert_allclose(polygon_centroid(ring), [0.75, 1.25], atol=1e-12)


def test_ordered_path_checks_and_csv(tmp_path):
    with pytest.raises(IntegrityError):
        OrderedPath((("a", "b"), ("b",)))
    with pytest.raises(StructureError):
        OrderedPath((("a",), ()))
    path = OrderedPath((("a", "b", "c"), ("d",)), "WE")
    p = tmp_path / "path.csv"
    path.to_csv(p)
    assert OrderedPath.from_csv(p).channels == path.channels
    assert path.reversed().channels == (("c", "b", "a"), ("d",))
    assert path.restrict(["a", "c", "d"]).channels == (("a", "c"), ("d",))
