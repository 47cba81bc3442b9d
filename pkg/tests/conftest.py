import numpy as np
import pytest

from sfd import SpatialDataset


def make_ds(y, X, positions=None, ids=None, columns=None, polygons=None):
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    n = len(y)
    if ids is None:
        ids = [f"u{i:04d}" for i in range(n)]
    if positions is None:
        positions = np.column_stack([np.arange(n), np.zeros(n)])
    if columns is None:
        columns = [f"x{j + 1}" for j in range(X.shape[1])] if X.shape[1] > 1 else ["x"]
    return SpatialDataset(ids, positions, y, X, columns, polygons)


def square_grid(nx, ny, spacing=1.0):
    """Unit cells [i, i+1] x [j, j+1] (scaled); returns ids, centroids, rings."""
    ids, cents, rings = [], [], []
    for j in range(ny):
        for i in range(nx):
            x0, y0 = i * spacing, j * spacing
            ids.append(f"c{i}_{j}")
            cents.append((x0 + spacing / 2, y0 + spacing / 2))
            rings.append(np.array([(x0, y0), (x0 + spacing, y0), (x0 + spacing, y0 + spacing),
                                   (x0, y0 + spacing)]))
    return ids, np.array(cents), rings


def grid_dataset(nx, ny, rng, beta=1.0, with_polygons=True, confounder_scale=1.0):
    """Lattice DGP with a smooth confounder; point positions are cell centroids."""
    ids, cents, rings = square_grid(nx, ny)
    c = confounder_scale * (np.sin(cents[:, 0] / 3) + np.cos(cents[:, 1] / 4))
    x = c + rng.standard_normal(len(ids))
    y = beta * x + c + 0.5 * rng.standard_normal(len(ids))
    return SpatialDataset(ids, cents, y, x[:, None], ["x"], rings if with_polygons else None)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
