"""Graph geodesic distance on the periodic lattice.

In 1d the 2-neighbor graph is exact for any metric. In 2d the 8-neighbor
stencil overestimates Euclidean length by at most 1/cos(pi/8), with equality
only for directions falling between stencil rays; axis and diagonal
directions are exact.
"""

import numpy as np
import pytest

from rhflow.distance import METRICATION_8, flat_torus_distance, geodesic_distance
from rhflow.grid import Grid


def flat_metric(grid):
    return np.broadcast_to(np.eye(grid.dim), grid.shape + (grid.dim, grid.dim)).copy()


def test_flat_1d_exact_wrap_distance():
    grid = Grid(1, (40,), (2.0,))
    h = grid.h[0]
    d = geodesic_distance(grid, flat_metric(grid), (0,))
    idx = np.arange(40)
    wrapped = np.minimum(idx, 40 - idx)
    np.testing.assert_allclose(d, wrapped * h, atol=1e-12)


def test_flat_1d_nonuniform_metric_sums_edge_lengths():
    grid = Grid(1, (32,), (1.0,))
    x = grid.coords()[0]
    g = ((1.0 + 0.5 * np.sin(2.0 * np.pi * x)) ** 2)[..., None, None]
    d = geodesic_distance(grid, g, (0,))
    # each edge carries length h * sqrt(endpoint-averaged metric entry)
    gxx = g[..., 0, 0]
    h = grid.h[0]
    expected = sum(h * np.sqrt(0.5 * (gxx[i] + gxx[i + 1])) for i in range(3))
    assert np.isclose(d[3], expected, rtol=1e-12)


def test_flat_2d_band_and_exact_directions():
    grid = Grid(2, (64, 64), (2.0, 2.0))
    d = geodesic_distance(grid, flat_metric(grid), (0, 0))
    ref = np.array([[flat_torus_distance(grid, (0, 0), (i, j)) for j in range(64)]
                    for i in range(64)])
    mask = ref > 0
    ratio = d[mask] / ref[mask]
    assert np.min(ratio) > 1.0 - 1e-12
    assert np.max(ratio) < METRICATION_8 + 1e-12
    # on-axis and main-diagonal targets are representable by stencil moves
    h = grid.h[0]
    assert np.isclose(d[7, 0], 7 * h, atol=1e-12)
    assert np.isclose(d[0, 7], 7 * h, atol=1e-12)
    assert np.isclose(d[5, 5], 5 * h * np.sqrt(2.0), rtol=1e-12)


def test_metric_scaling_scales_distance_by_sqrt():
    grid = Grid(2, (24, 24), (1.0, 1.0))
    g = flat_metric(grid)
    d1 = geodesic_distance(grid, g, (3, 4))
    d2 = geodesic_distance(grid, 2.0 * g, (3, 4))
    np.testing.assert_allclose(d2, np.sqrt(2.0) * d1, rtol=1e-12)


def test_conformal_metric_sandwich_bounds():
    # exp(2 w_min) flat <= g <= exp(2 w_max) flat pointwise, and the graph
    # distance is monotone in the edge weights
    grid = Grid(2, (32, 32), (2.0 * np.pi, 2.0 * np.pi))
    X, Y = grid.coords()
    w = 0.2 * np.sin(X) * np.cos(Y)
    g = np.exp(2.0 * w)[..., None, None] * np.eye(2)
    d = geodesic_distance(grid, g, (0, 0))
    d_flat = geodesic_distance(grid, flat_metric(grid), (0, 0))
    lo = np.exp(np.min(w))
    hi = np.exp(np.max(w))
    assert np.all(d >= lo * d_flat - 1e-12)
    assert np.all(d <= hi * d_flat + 1e-12)


def test_distance_symmetry():
    grid = Grid(2, (16, 16), (1.0, 1.0))
    X, Y = grid.coords()
    w = 0.1 * np.sin(2.0 * np.pi * X)
    g = np.exp(2.0 * w)[..., None, None] * np.eye(2)
    a, b = (2, 3), (11, 7)
    da = geodesic_distance(grid, g, a)
    db = geodesic_distance(grid, g, b)
    assert np.isclose(da[b], db[a], rtol=1e-12)


def test_flat_torus_distance_closed_form():
    grid = Grid(2, (8, 8), (1.0, 1.0))
    assert flat_torus_distance(grid, (0, 0), (0, 0)) == 0.0
    assert np.isclose(flat_torus_distance(grid, (0, 0), (4, 0)), 0.5)   # half wrap
    assert np.isclose(flat_torus_distance(grid, (0, 0), (0, 7)), 0.125)
    assert np.isclose(flat_torus_distance(grid, (0, 0), (3, 4)),
                      np.hypot(3 * 0.125, 0.5))


def test_source_index_wraps():
    grid = Grid(1, (16,), (1.0,))
    g = flat_metric(grid)
    d0 = geodesic_distance(grid, g, (0,))
    d16 = geodesic_distance(grid, g, (16,))
    assert np.array_equal(d0, d16)
