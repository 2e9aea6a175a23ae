import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heiscurves import grid as gm
from heiscurves.errors import ConfigError
from heiscurves.grid import (
    BOUNDARY,
    INTERIOR,
    OUTSIDE,
    ScalarField,
    build_grid,
    cutoff_eta,
    field_to_csv,
    grid_from_spec,
    integrate,
    laplacian,
)


def test_rectangle_mask_and_spacing():
    g = build_grid("rectangle", [(0, 1), (0, 2)], [5, 9])
    assert g.h == (0.25, 0.25)
    assert (g.mask == INTERIOR).sum() == 3 * 7
    assert (g.mask == BOUNDARY).sum() == 5 * 9 - 21
    assert not (g.mask == OUTSIDE).any()
    with pytest.raises(ValueError):
        g.mask[0, 0] = 0


def test_ball_annulus_halfball_labels():
    box = [(-1, 1), (-1, 1)]
    ball = build_grid("ball", box, 41, center=[0, 0], radius=1.0)
    ann = build_grid("annulus", box, 41, center=[0, 0], r1=0.5, r2=1.0)
    half = build_grid("halfball", box, 41, center=[0, 0], radius=1.0)
    d = ball.distance([0, 0])
    assert np.all(d[ball.inset] <= 1 + 1e-12) and np.all(d[~ball.inset] > 1)
    assert np.all(d[ann.inset] >= 0.5 - 1e-12)
    X = half.coords()
    assert np.all(X[1][half.inset] >= 0)
    flat = half.flat_boundary()
    assert flat.sum() == 41 and np.all(X[1][flat] == 0)
    # every interior node has all 2n neighbours in the domain
    for g in (ball, ann, half):
        for k in range(2):
            for off in (1, -1):
                assert np.all(gm._shift(g.inset, k, off, False)[g.interior])


@pytest.mark.parametrize("spec,key", [
    ({"kind": "disc", "bbox": [[0, 1]], "shape": [5]}, "domain.kind"),
    ({"kind": "rectangle", "bbox": [[0, 1], [0, 1]], "shape": [2, 5]}, "domain.shape"),
    ({"kind": "rectangle", "bbox": [[1, 0]], "shape": [5]}, "domain.bbox"),
    ({"kind": "ball", "bbox": [[0, 1], [0, 1]], "shape": 5, "radius": -1}, "domain.radius"),
    ({"kind": "annulus", "bbox": [[0, 1], [0, 1]], "shape": 5, "r1": 0.5, "r2": 0.2}, "domain.r1"),
    ({"bbox": [[0, 1]], "shape": [5], "colour": 1}, "domain"),
])
def test_bad_domains_name_the_key(spec, key):
    with pytest.raises(ConfigError) as info:
        grid_from_spec(spec)
    assert info.value.key == key


def test_laplacian_exact_on_quadratics(unit_square):
    g = unit_square(17)
    f = g.node_field(lambda x, y: 3 * x * x - x * y + 2 * y * y + x)
    lap = laplacian(f)
    assert np.allclose(lap.interior_values, 10.0, atol=1e-10)
    assert np.all(np.isnan(lap.values[g.boundary]))


def test_gradient_exact_on_quadratics_including_boundary(unit_square):
    g = unit_square(9)
    f = g.node_field(lambda x, y: x * x + x * y - y * y)
    X, Y = g.coords()
    gx, gy = gm.gradient(f)
    assert np.allclose(gx.values, 2 * X + Y, atol=1e-12)
    assert np.allclose(gy.values, X - 2 * Y, atol=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_edge_gradient_product_rule(seed):
    # u Lap_h u + edge_grad_sq(u) == Lap_h(u^2)/2 at every interior node
    rng = np.random.default_rng(seed)
    g = build_grid("ball", [(-1, 1), (-1, 1)], 15, radius=1.0)
    u = ScalarField(g, np.where(g.inset, rng.normal(size=g.shape), np.nan))
    lhs = u.values * laplacian(u).values + gm.edge_grad_sq(u).values
    rhs = 0.5 * laplacian(ScalarField(g, u.values**2)).values
    assert np.allclose(lhs[g.interior], rhs[g.interior], rtol=1e-12, atol=1e-9)


def test_integrate_trapezoid(unit_square):
    g = unit_square(11)
    assert integrate(g.node_field(lambda x, y: x + y)) == pytest.approx(1.0, abs=1e-14)
    assert integrate(g.node_field(lambda x, y: np.ones_like(x))) == pytest.approx(1.0, abs=1e-14)
    ball = build_grid("ball", [(-1, 1), (-1, 1)], 201, radius=1.0)
    area = integrate(ball.node_field(lambda x, y: np.ones_like(x)))
    assert area == pytest.approx(math.pi, rel=2e-2)


def test_cutoff_eta_profile():
    g = build_grid("rectangle", [(-1, 1), (-1, 1)], 41)
    eta = cutoff_eta(g, 0.25, [0, 0])
    d = g.distance([0, 0])
    assert np.all(eta.values[d <= 0.25] == 1.0)
    assert np.all(eta.values[d >= 0.5] == 0.0)
    with pytest.raises(ValueError):
        cutoff_eta(g, 0.6, [0, 0])


def test_sphere_band_and_ball_mask():
    g = build_grid("rectangle", [(-1, 1), (-1, 1), (-1, 1)], 17)
    band = g.sphere_band([0, 0, 0], 0.5)
    d = g.distance([0, 0, 0])
    assert band.any() and np.all(np.abs(d[band] - 0.5) <= g.hmax + 1e-12)
    assert g.ball_mask([0, 0, 0], 0.5).sum() == (d <= 0.5 + 1e-12).sum()


def test_connectivity():
    g = build_grid("annulus", [(-1, 1), (-1, 1)], 21, r1=0.3, r2=1.0)
    gm.check_connected(g)
    order, parent = gm.bfs_tree(g)
    assert order.size == g.inset.sum()
    assert parent[order[0]] == -1 and np.all(parent[order[1:]] >= 0)


def test_csv_contract():
    g = build_grid("rectangle", [(0, 1), (0, 2)], [3, 3])
    f = g.node_field(lambda x, y: x + 10 * y)
    lines = field_to_csv(f).splitlines()
    assert lines[0] == "i,j,k,x1,x2,x3,value"
    assert len(lines) == 10
    assert lines[1] == "0,0,0,0.0,0.0,0.0,0.0"
    assert lines[-1] == "2,2,0,1.0,2.0,0.0,21.0"
