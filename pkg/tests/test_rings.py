import math

import numpy as np
import pytest

from thinlens import (DegenerateConfiguration, DomainError, EllipseGeometry, NoRingError,
                      PointMassLens, UniformEllipseLens, jacobian_det, lens_map, solve_all)
from thinlens.rings import (RingSolution, find_ring_uniform_ellipse, fit_circle, fit_ellipse,
                            joukowski_curve, point_mass_ring, ring_parameters, verify_ring)

G21 = EllipseGeometry(2.0, 1.0)


@pytest.mark.parametrize("sigma", [0.25, 1.0, 2.0, 7.5])
def test_point_mass_ring_radius(sigma):
    ring = point_mass_ring(sigma)
    assert ring.kind == "circle"
    assert abs(ring.semi_axes[0] - math.sqrt(sigma)) < 1e-12
    assert ring.residual_max < 1e-12


def test_point_mass_ring_rejects_nonpositive():
    with pytest.raises(ValueError):
        point_mass_ring(0.0)


def test_ring_parameters_match_quartic_oracle():
    # independent route: R^4 - s R^2 - c^4/16 = 0 solved by numpy's companion matrix
    for a, b, s in [(2.0, 1.0, 2.0), (3.0, 0.5, 1.3), (1.5, 1.2, 4.0)]:
        g = EllipseGeometry(a, b)
        c2 = a * a - b * b
        rts = np.roots([1.0, 0.0, -s * a * b, 0.0, -c2 * c2 / 16])
        R = max(r.real for r in rts if abs(r.imag) < 1e-12 and r.real > 0)
        R0, gamma = ring_parameters(g, s)
        assert R0 == pytest.approx(R, rel=1e-12)
        assert gamma == pytest.approx(c2 / (4 * R * R), rel=1e-12)


def test_uniform_ellipse_ring_frozen_value():
    # frozen from the closed form evaluated at 30 digits
    ring = find_ring_uniform_ellipse(G21, 2.0)
    assert ring.shear_used == pytest.approx(0.18133458177251039, abs=1e-15)
    assert ring.residual_max < 1e-9
    assert ring.confocal_defect < 1e-8
    A, B = ring.semi_axes
    assert A > 2.0 and B > 1.0


def test_ring_verification_and_fits():
    ring = find_ring_uniform_ellipse(G21, 2.0)
    lens = UniformEllipseLens(G21, 2.0, ring.shear_used)
    diag = verify_ring(lens, ring.sample(256))
    assert diag.is_ring and diag.kind == "ellipse"
    assert diag.residual_max < 1e-9
    assert diag.ellipse.residual < 1e-9
    assert diag.ellipse.semi_axes == pytest.approx(ring.semi_axes, rel=1e-10)
    assert diag.confocal_defect < 1e-8


def test_joukowski_and_axis_parametrisations_agree():
    R, _ = ring_parameters(G21, 2.0)
    ring = find_ring_uniform_ellipse(G21, 2.0)
    assert np.abs(joukowski_curve(R, G21.c, 64) - ring.sample(64)).max() < 1e-12


def test_perturbed_ring_is_flagged():
    ring = find_ring_uniform_ellipse(G21, 2.0)
    lens = UniformEllipseLens(G21, 2.0, ring.shear_used)
    diag = verify_ring(lens, 1.001 * ring.sample(256))
    assert not diag.is_ring
    off = UniformEllipseLens(G21, 2.0, ring.shear_used + 1e-3)
    assert not verify_ring(off, ring.sample(256)).is_ring


def test_ring_inside_support_rejected():
    lens = UniformEllipseLens(G21, 2.0)
    with pytest.raises(DomainError):
        verify_ring(lens, 0.5 * np.exp(1j * np.linspace(0, 6, 50)))


def test_unit_density_ring_touches_boundary():
    # at density 1 the candidate coincides with the lens edge
    with pytest.raises(NoRingError):
        find_ring_uniform_ellipse(G21, 1.0)


def test_ring_is_a_critical_curve_and_solver_detects_continuum():
    ring = find_ring_uniform_ellipse(G21, 2.0)
    lens = UniformEllipseLens(G21, 2.0, ring.shear_used)
    pts = ring.sample(64)
    assert np.abs(jacobian_det(lens, pts)).max() < 1e-8
    with pytest.raises(DegenerateConfiguration):
        solve_all(lens, 0.0)


def test_near_ring_images_hug_the_ring():
    ring = find_ring_uniform_ellipse(G21, 2.0)
    lens = UniformEllipseLens(G21, 2.0, ring.shear_used)
    w = 1e-4
    imgs = solve_all(lens, w)
    ext = [im.z for im in imgs.exterior]
    assert ext
    curve = ring.sample(4096)
    for z in ext:
        assert np.abs(curve - z).min() < 0.05
        assert abs(lens_map(lens, z) - w) < 1e-9


def test_circular_limit():
    b = 2.0 - 1e-6
    ring = find_ring_uniform_ellipse(EllipseGeometry(2.0, b), 2.0)
    assert ring.shear_used < 1e-6
    A, B = ring.semi_axes
    assert A == pytest.approx(math.sqrt(2.0 * 2.0 * b), rel=1e-6)
    assert A - B < 1e-5


def test_fit_circle_and_ellipse_recover_shapes():
    t = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    c = fit_circle(1 + 2j + 3 * np.exp(1j * t))
    assert c.center == pytest.approx(1 + 2j, abs=1e-12) and c.radius == pytest.approx(3, abs=1e-12)
    z = (0.5 - 1j) + np.exp(0.4j) * (3 * np.cos(t) + 1j * 1.5 * np.sin(t))
    e = fit_ellipse(z)
    assert e.semi_axes == pytest.approx((3, 1.5), abs=1e-10)
    assert e.rotation == pytest.approx(0.4, abs=1e-10)
    assert e.residual < 1e-10


def test_ring_solution_validation():
    with pytest.raises(ValueError):
        RingSolution("circle", 0j, (1.0, 0.5), 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        RingSolution("ellipse", 0j, (1.0, 2.0), 0.0, 0.0, 0.0)
