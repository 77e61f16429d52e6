import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halfspace_hls.discretization import (
    DomainKind,
    GridError,
    QuadratureSet,
    ScalarField,
    boundary_polar_rule,
    build_ball_quadrature,
    build_halfspace_grids,
    build_sphere_mesh,
    cell_order,
    composite_gauss,
    graded_breaks,
    graded_radial_rule,
    hemisphere_directions,
    read_csv,
    rearrange_decreasing,
    vertical_layers,
    volume_polar_rule,
    write_csv,
)


def test_sphere_mesh_moments():
    s = build_sphere_mesh(3, 12)
    assert s.measure() == pytest.approx(4 * math.pi, rel=1e-14)
    assert s.integrate(s.points[:, 2] ** 2) == pytest.approx(4 * math.pi / 3, rel=1e-13)
    assert np.allclose(np.linalg.norm(s.points, axis=1), 1.0)


def test_three_sphere_area():
    s = build_sphere_mesh(4, 8)
    assert s.measure() == pytest.approx(2 * math.pi**2, rel=1e-13)


def test_shifted_scaled_sphere():
    s = build_sphere_mesh(3, 6, radius=2.0, center=(1.0, 0.0, -1.0))
    assert s.measure() == pytest.approx(16 * math.pi, rel=1e-13)
    assert np.allclose(np.linalg.norm(s.points - [1, 0, -1], axis=1), 2.0)


def test_ball_moments_and_layout():
    b = build_ball_quadrature(3, 8, 12)
    assert b.measure() == pytest.approx(4 * math.pi / 3, rel=1e-13)
    r2 = np.sum(b.points**2, axis=1)
    assert b.integrate(r2) == pytest.approx(4 * math.pi / 5, rel=1e-13)
    rays = np.asarray(b.meta["ray_index"])
    s = build_sphere_mesh(3, 12)
    dirs = b.points / np.sqrt(r2)[:, None]
    assert np.allclose(dirs, s.points[rays])


def test_halfspace_grid_sums():
    bdy, vol = build_halfspace_grids(3, 4.0, 0.5, 4.0)
    assert bdy.measure() == pytest.approx(64.0)
    assert vol.measure() == pytest.approx(256.0)
    assert np.all(vol.points[:, -1] > 0)
    g = bdy.integrate(np.exp(-np.sum(bdy.points**2, axis=1)))
    assert g == pytest.approx(math.pi, rel=1e-6)


def test_halfspace_grid_errors():
    with pytest.raises(GridError, match="n in"):
        build_halfspace_grids(4, 2.0, 0.5, 2.0)
    with pytest.raises(GridError, match="cap"):
        build_halfspace_grids(3, 8.0, 0.05, 4.0, node_cap=1000)


def test_vertical_layers_cover_depth():
    z, w = vertical_layers(5.0, 0.25)
    assert w.sum() == pytest.approx(5.0)
    assert np.all(np.diff(z) > 0) and z[0] > 0


def test_composite_gauss_padded_rows():
    br = np.array([[0.0, 0.5, 1.0], [0.0, 0.0, 2.0]])
    x, w = composite_gauss(br, 4)
    assert np.allclose(w.sum(axis=1), [1.0, 2.0])
    assert np.allclose((w * x**3).sum(axis=1), [0.25, 4.0])


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.1, 5.0),
       st.lists(st.floats(-10.0, 20.0), max_size=4), st.floats(1e-3, 0.5))
def test_graded_breaks_stay_inside_interval(a, width, focus, min_scale):
    b = a + width
    br = graded_breaks(a, b, focus, min_scale)
    assert br[0] == a and br[-1] == b
    assert np.all(np.diff(br) > 0)


@pytest.mark.parametrize("r_min,r_max", [(0.0, 1.5), (1.5, None), (0.5, 3.0)])
def test_radial_rule_ranges(r_min, r_max):
    r, w = graded_radial_rule(r_max, focus=[0.7, 2.0, 5.0], scales=[1.0, 1.125],
                              order=6, min_scale=0.02, r_min=r_min)
    assert r.min() > r_min
    if r_max is not None:
        assert r.max() < r_max
        assert w.sum() == pytest.approx(r_max - r_min, rel=1e-13)
    else:
        # int_{r_min}^inf r^-3 dr
        assert np.dot(w, r**-3.0) == pytest.approx(0.5 / r_min**2, rel=1e-10)


def test_hemisphere_rule_measure():
    d, w = hemisphere_directions(3, 6, azimuths=24)
    assert w.sum() == pytest.approx(2 * math.pi, rel=1e-13)
    assert np.all(d[:, -1] > 0)
    assert np.dot(w, d[:, -1]) == pytest.approx(math.pi, rel=1e-12)


def test_polar_rules():
    b = boundary_polar_rule(3, (0.5, 0.0), (1.0,), (), 8, 32, r_max=2.0)
    assert b.measure() == pytest.approx(4 * math.pi, rel=1e-12)
    v = volume_polar_rule(3, (0.0, 0.0, 0.0), (1.0,), (), 6, 6, r_max=1.5, min_scale=0.02,
                          azimuths=32)
    assert v.measure() == pytest.approx(2 * math.pi * 1.5**3 / 3, rel=1e-12)
    outer = volume_polar_rule(3, (0.0, 0.0, 0.0), (1.0,), (1.5,), 6, 6, r_min=1.5,
                              min_scale=0.02, azimuths=32)
    r = np.linalg.norm(outer.points, axis=1)
    assert r.min() > 1.5
    assert np.dot(outer.weights, r**-5) == pytest.approx(math.pi / 1.5**2, rel=1e-10)


def test_quadrature_set_is_read_only():
    s = build_sphere_mesh(3, 4)
    with pytest.raises(ValueError):
        s.points[0, 0] = 2.0
    with pytest.raises(TypeError):
        s.meta["level"] = 9


def test_scalar_field_rejects_non_finite():
    s = build_sphere_mesh(3, 4)
    with pytest.raises(GridError):
        ScalarField(s, np.full(s.size, np.nan))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1.0, 4.0))
def test_rearrangement_is_norm_preserving_and_radially_decreasing(seed, p):
    bdy, _ = build_halfspace_grids(3, 2.0, 0.25, 1.0)
    vals = np.random.default_rng(seed).standard_normal(bdy.size)
    f = ScalarField(bdy, vals)
    g = rearrange_decreasing(f)
    w = bdy.weights
    assert np.dot(w, np.abs(g.values) ** p) == pytest.approx(np.dot(w, np.abs(vals) ** p),
                                                            rel=1e-12)
    order = cell_order(bdy)
    assert np.all(np.diff(g.values[order]) <= 0)


def test_rearrangement_fixes_radial_decreasing_field():
    bdy, _ = build_halfspace_grids(3, 2.0, 0.25, 1.0)
    f = ScalarField(bdy, np.exp(-np.sum(bdy.points**2, axis=1)))
    assert np.array_equal(rearrange_decreasing(f).values, f.values)


def test_rearrangement_needs_uniform_grid():
    s = build_sphere_mesh(3, 4)
    with pytest.raises(GridError, match="uniform"):
        rearrange_decreasing(ScalarField(s, np.ones(s.size)))


def test_csv_round_trip(tmp_path):
    s = build_sphere_mesh(3, 4)
    f = ScalarField(s, np.arange(s.size, dtype=float) / 7)
    write_csv(tmp_path / "f.csv", f)
    g = read_csv(tmp_path / "f.csv", DomainKind.SPHERE)
    assert np.array_equal(g.values, f.values)
    assert np.array_equal(g.grid.points, s.points)
    write_csv(tmp_path / "g.csv", s)
    assert isinstance(read_csv(tmp_path / "g.csv", DomainKind.SPHERE), QuadratureSet)
