import numpy as np
import pytest

from thinlens import (ChangRefsdalLens, ConfocalPowerProfile, ConfocalProfileLens,
                      DegenerateConfiguration, EllipseGeometry, IsothermalEllipseLens,
                      IsothermalProfile, PointMassLens, PowerProfile, RadialLens,
                      UniformEllipseLens, lens_map)
from thinlens.analytic_reduction import solve_rational
from thinlens.harmonic_solver import (SearchRegion, interior_image_uniform_ellipse,
                                      make_starts, search_radius, sets_agree, solve_all,
                                      solve_region)
from thinlens.kernels import newton_multistart

G21 = EllipseGeometry(2.0, 1.0)


def test_search_region_validation():
    with pytest.raises(ValueError):
        SearchRegion("square", {})
    with pytest.raises(ValueError):
        SearchRegion("disk", {"radius": 1.0}, grid=4)
    with pytest.raises(ValueError):
        SearchRegion("annulus", {"r_in": 2.0, "r_out": 1.0})
    r = SearchRegion("exterior_of_ellipse", {"a": 2.0, "b": 1.0})
    assert r.contains(3.0) and not r.contains(0.0)


def test_starts_are_deterministic_and_avoid_the_cut():
    lens = UniformEllipseLens(G21, 1.0)
    a = make_starts(lens, 0.1, 32, 7)
    b = make_starts(lens, 0.1, 32, 7)
    assert np.array_equal(a, b)
    cut = (np.abs(a.imag) < 1e-6) & (np.abs(a.real) <= G21.c)
    assert not cut.any()
    assert not np.array_equal(a, make_starts(lens, 0.1, 32, 8))


def test_far_source_single_image():
    lens = UniformEllipseLens(G21, 1.0)
    out = solve_region(lens, 100.0, SearchRegion("exterior_of_ellipse", {"a": 2.0, "b": 1.0}))
    assert out.count == 1
    assert abs(out.images[0].z - 100.0) < 0.1


def test_exterior_count_bound_uniform_ellipse():
    rng = np.random.default_rng(0)
    for _ in range(30):
        lens = UniformEllipseLens(G21, rng.uniform(0.2, 3.0), rng.uniform(0.0, 0.9))
        w = complex(*rng.uniform(-2, 2, 2))
        out = solve_all(lens, w)
        assert len(out.exterior) <= 4 and len(out.interior) <= 1 and out.count <= 5


def test_chang_refsdal_solvers_agree():
    lens = ChangRefsdalLens(1.0, 0.1)
    a = solve_rational(lens, 0.3)
    b = solve_region(lens, 0.3, SearchRegion("disk", {"radius": search_radius(lens, 0.3)}))
    assert sets_agree(a, b)


def test_interior_closed_form_examples():
    lens = UniformEllipseLens(G21, 1.0)
    im = interior_image_uniform_ellipse(lens, 0.1)
    # for density 1 the map is conj-linear; x = Re w / (A + B) with A = 0, B = 1/3
    assert im.z == pytest.approx(0.3, abs=1e-15)
    assert abs(lens_map(lens, im.z) - 0.1) < 1e-12
    assert im.location == "interior"
    assert interior_image_uniform_ellipse(lens, 10.0) is None
    assert interior_image_uniform_ellipse(lens, 0.0).z == 0


def test_interior_closed_form_general_density():
    rng = np.random.default_rng(2)
    for _ in range(50):
        lens = UniformEllipseLens(G21, rng.uniform(0.2, 3), rng.uniform(0, 0.9))
        w = complex(*rng.uniform(-0.5, 0.5, 2))
        im = interior_image_uniform_ellipse(lens, w)
        if im is not None:
            assert abs(lens_map(lens, im.z) - w) < 1e-12
            assert G21.contains(im.z)


def test_interior_degenerate_coefficient():
    # A + B = 0 when 1 - s + s/3 - gamma = 0
    lens = UniformEllipseLens(G21, 1.5, 0.0)
    with pytest.raises(DegenerateConfiguration) as exc:
        interior_image_uniform_ellipse(lens, 0.2j)
    assert exc.value.kind == "interior_continuum"
    assert interior_image_uniform_ellipse(lens, 0.2) is None


def test_four_exterior_one_interior_regime():
    lens = UniformEllipseLens(G21, 2.0, 0.05)
    out = solve_all(lens, 0.0)
    assert len(out.exterior) == 4 and len(out.interior) == 1
    assert all(im.residual < 1e-9 for im in out)


def test_grid_doubling_stability():
    cases = [(UniformEllipseLens(G21, 2.0, 0.05), 0.02 + 0.01j),
             (ConfocalProfileLens(G21, ConfocalPowerProfile(1.0, -0.25), 0.1), 0.1),
             (IsothermalEllipseLens(G21, 0.8, 0.1), 0.05j),
             (RadialLens(1.0, IsothermalProfile(0.2), 0.2), 0.05)]
    for lens, w in cases:
        assert sets_agree(solve_all(lens, w, grid=32), solve_all(lens, w, grid=64))


def test_newton_fixed_points():
    lens = UniformEllipseLens(G21, 2.0, 0.05)
    out = solve_all(lens, 0.01)
    ext = np.array([im.z for im in out.exterior])
    z2, res, conv, _ = newton_multistart(lens.plan("exterior"), ext, 0.01, 1, 1e-10)
    assert np.all(np.abs(z2 - ext) < 1e-11)
    assert np.all(np.abs(lens_map(lens, ext) - 0.01) < 1e-10)


def test_confocal_exterior_bound():
    rng = np.random.default_rng(3)
    for _ in range(20):
        prof = ConfocalPowerProfile(rng.uniform(0.3, 2.0), rng.uniform(-0.4, 1.0))
        lens = ConfocalProfileLens(G21, prof, rng.uniform(0, 0.5))
        out = solve_all(lens, complex(*rng.uniform(-2, 2, 2)))
        assert out.count <= 4
        assert all(im.location != "interior" for im in out)


def test_isothermal_sphere_gamma_zero_small_source():
    lens = RadialLens(1.0, IsothermalProfile(0.2))
    out = solve_all(lens, 0.05)
    assert out.count >= 1
    assert all(im.residual < 1e-9 for im in out)


def test_radial_ring_raises():
    lens = RadialLens(0.5, PowerProfile(2.0, 2.0))
    with pytest.raises(DegenerateConfiguration):
        solve_all(lens, 0.0)


def test_point_mass_ring_raises_from_solve_all():
    with pytest.raises(DegenerateConfiguration):
        solve_all(PointMassLens(((1.0, 0.0),)), 0.0)


def test_image_sets_sorted_and_separated():
    lens = PointMassLens(((0.3, -0.6), (0.4, 0.5j), (0.3, 0.7)))
    out = solve_all(lens, 0.05 + 0.02j)
    keys = [(im.z.real, im.z.imag) for im in out]
    assert keys == sorted(keys)
    z = out.positions
    assert (np.abs(z[:, None] - z[None, :]) + np.eye(z.size)).min() > 1e-8
