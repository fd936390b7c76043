import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from thinlens import (ChangRefsdalLens, ConfocalPowerProfile, ConfocalProfileLens, DomainError,
                      EllipseGeometry, IntegrabilityError, IsothermalEllipseLens,
                      IsothermalProfile, PointMassLens, PowerProfile, RadialLens,
                      UniformEllipseLens, UniformProfile, UnsupportedRegionError, deflection,
                      jacobian, jacobian_det, lens_map)
from thinlens.lens_models import (JacobianInfo, confocal_mass_constant, jacobian_fd,
                                  schwarz_decompose, sqrt_focal)

G21 = EllipseGeometry(2.0, 1.0)


# -- sqrt_focal -------------------------------------------------------------------

def test_sqrt_focal_real_axis_outside_cut():
    assert sqrt_focal(2.0, 1.0) == pytest.approx(math.sqrt(3.0), abs=1e-15)
    assert sqrt_focal(-2.0, 1.0) == pytest.approx(-math.sqrt(3.0), abs=1e-15)


@pytest.mark.parametrize("y", [0.1, 1.0, 7.5])
def test_sqrt_focal_imaginary_axis(y):
    assert sqrt_focal(1j * y, 1.0) == pytest.approx(1j * math.sqrt(y * y + 1), abs=1e-14)


def test_sqrt_focal_matches_path_continuation():
    z = 0.5 + 0.5j
    assert abs(sqrt_focal(z, 1.0) - oracles.continued_sqrt(z, 1.0)) < 1e-12


def test_sqrt_focal_on_cut_returns_upper_limit_and_flags():
    s, flag = sqrt_focal(np.array([0.3, 2.0]), 1.0, return_flag=True)
    assert flag.tolist() == [True, False]
    assert s[0] == pytest.approx(1j * math.sqrt(1 - 0.09), abs=1e-15)
    above = sqrt_focal(0.3 + 1e-12j, 1.0)
    assert abs(s[0] - above) < 1e-9


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_sqrt_focal_squares_and_grows_like_z(x, y):
    z = complex(x, y)
    s = sqrt_focal(z, 1.3)
    assert abs(s * s - (z * z - 1.69)) < 1e-12 * (1 + abs(z) ** 2)
    # asymptotic branch: s/z has non-negative real part off the cut
    if abs(z) > 1e-9 and not (abs(y) < 1e-300 and abs(x) < 1.3):
        assert (s / z).real >= -1e-12


# -- geometry -----------------------------------------------------------------------

def test_geometry_requires_a_greater_than_b():
    with pytest.raises(ValueError):
        EllipseGeometry(1.0, 1.0)
    with pytest.raises(ValueError):
        EllipseGeometry(1.0, 2.0)


def test_geometry_location():
    assert G21.location(0.0) == "interior"
    assert G21.location(2.0) == "boundary"
    assert G21.location(3.0) == "exterior"
    assert G21.c == pytest.approx(math.sqrt(3.0))


def test_confocal_family_keeps_foci():
    for lam in (-0.75, -0.5, -0.25, 1.0):
        g = G21.confocal(lam)
        assert g.c == pytest.approx(G21.c, rel=1e-14)
        assert G21.area_ratio(lam) == pytest.approx(g.area / G21.area, rel=1e-14)
    with pytest.raises(ValueError):
        G21.confocal(-1.0)


# -- deflection examples ------------------------------------------------------------

def test_point_lens_deflection():
    assert deflection(PointMassLens(((1.0, 0.0),)), 2.0) == pytest.approx(0.5)


def test_point_lens_domain_error_at_mass():
    with pytest.raises(DomainError):
        deflection(PointMassLens(((1.0, 0.5j),)), 0.5j)


def test_uniform_ellipse_exterior_closed_form_and_oracles():
    lens = UniformEllipseLens(G21, 1.0)
    expected = 4.0 / 3.0 * (3.0 - math.sqrt(6.0))
    assert deflection(lens, 3.0) == pytest.approx(expected, abs=1e-14)
    assert abs(oracles.ellipse_cauchy_midpoint(3.0, 2.0, 1.0) - expected) < 1e-4
    assert lens_map(lens, 3.0) == pytest.approx(3.0 - expected, abs=1e-14)


def test_uniform_ellipse_exterior_matches_2d_quadrature():
    rng = np.random.default_rng(1)
    lens = UniformEllipseLens(G21, 1.7)
    for _ in range(10):
        z = complex(*rng.uniform(-5, 5, 2))
        if G21.q(z) < 0.2:
            continue
        assert abs(deflection(lens, z) - oracles.ellipse_cauchy(z, 2.0, 1.0, 1.7)) < 1e-10


def test_uniform_ellipse_boundary_consistency():
    lens = UniformEllipseLens(G21, 1.3, 0.2)
    zb = G21.boundary(1000)
    inside = deflection(lens, zb * (1 - 1e-13))
    outside = deflection(lens, zb * (1 + 1e-13))
    assert np.all(G21.q(zb * (1 - 1e-13)) < 0) and np.all(G21.q(zb * (1 + 1e-13)) > 0)
    assert np.abs(inside - outside).max() < 1e-9
    # the interior formula is the linear Schwarz part
    k1, _ = schwarz_decompose(G21)
    z = 0.3 - 0.4j
    assert deflection(lens, z) == pytest.approx(1.3 * (np.conj(z) - k1 * z), abs=1e-14)


def test_radial_lens_exterior_is_total_mass_over_z():
    for prof in (UniformProfile(0.8), PowerProfile(1.5, 2.0), IsothermalProfile(0.3)):
        lens = RadialLens(1.0, prof)
        assert deflection(lens, 2.0) == pytest.approx(lens.total_mass / 2.0, rel=1e-14)


def test_radial_interior_matches_polar_quadrature():
    rng = np.random.default_rng(2)
    smooth = RadialLens(1.0, PowerProfile(1.3, 2.0))
    flat = RadialLens(1.5, UniformProfile(0.7))
    iso = RadialLens(1.0, IsothermalProfile(0.4))
    for _ in range(5):
        r, t = rng.uniform(0.05, 0.95), rng.uniform(0, 2 * np.pi)
        z = r * np.exp(1j * t)
        ref = oracles.radial_cauchy(z, 1.0, lambda s: 1.3 * (1 - s * s) ** 2)
        assert abs(deflection(smooth, z) - ref) < 1e-6 * abs(ref)
        ref = oracles.radial_cauchy(1.5 * z, 1.5, lambda s: 0.7 + 0 * s)
        assert abs(deflection(flat, 1.5 * z) - ref) < 1e-6 * abs(ref)
        ref = oracles.radial_cauchy_isothermal(z, 1.0, 0.4)
        assert abs(deflection(iso, z) - ref) < 1e-6 * abs(ref)


def test_isothermal_closed_form_matches_quadrature():
    lens = IsothermalEllipseLens(G21, 0.8)
    rng = np.random.default_rng(3)
    n = 0
    while n < 50:
        z = complex(*rng.uniform(-4, 4, 2))
        if abs(z) <= G21.c * 1.05:
            continue
        n += 1
        ref = oracles.isothermal_integral(z, G21.c, 0.8)
        assert abs(deflection(lens, z) - ref) < 1e-9


def test_chang_refsdal_is_point_mass_plus_shear():
    cr = ChangRefsdalLens(0.7, 0.2)
    pm = PointMassLens(((0.7, 0.0),), 0.2)
    z = 0.4 - 1.1j
    assert lens_map(cr, z) == pytest.approx(lens_map(pm, z), abs=1e-15)


# -- lens map and jacobian ----------------------------------------------------------

def test_zero_mass_lens_is_identity():
    lens = RadialLens(1.0, UniformProfile(0.0))
    assert lens_map(lens, 0.3 + 0.2j) == pytest.approx(0.3 + 0.2j, abs=1e-16)
    info = jacobian(lens, 0.3 + 0.2j)
    assert info.det == 1.0 and info.parity == "sense_preserving" and info.magnification == 1.0


def test_point_lens_ring_point_and_jacobian():
    lens = PointMassLens(((1.0, 0.0),))
    assert lens_map(lens, 1.0) == 0.0
    assert jacobian(lens, 2.0).det == pytest.approx(0.9375, abs=1e-15)
    info = jacobian(lens, np.exp(0.7j))
    assert info.critical and info.magnification == math.inf


def test_jacobian_info_parity_rule():
    assert JacobianInfo.from_det(0.5).parity == "sense_preserving"
    assert JacobianInfo.from_det(-0.5).parity == "sense_reversing"
    assert JacobianInfo.from_det(-0.5).magnification == 2.0


MODELS = [
    PointMassLens(((0.5, -1.0), (0.5, 1.0)), 0.1),
    ChangRefsdalLens(1.0, 0.3),
    UniformEllipseLens(G21, 2.0, 0.15),
    ConfocalProfileLens(G21, ConfocalPowerProfile(1.0, -0.25)),
    IsothermalEllipseLens(G21, 0.9, 0.1),
    RadialLens(1.0, PowerProfile(1.2, 2.0), 0.2),
    RadialLens(1.0, IsothermalProfile(0.3), 0.1),
]


@pytest.mark.parametrize("lens", MODELS, ids=lambda m: m.type_name)
def test_jacobian_matches_finite_differences(lens):
    rng = np.random.default_rng(4)
    count = 0
    while count < 100:
        z = complex(*rng.uniform(-3, 3, 2))
        if isinstance(lens, ConfocalProfileLens) and G21.q(z) < 0.05:
            continue
        if abs(z.imag) < 1e-3 or min([abs(z - p) for p in lens.poles] + [1.0]) < 0.1:
            continue
        if isinstance(lens, RadialLens) and abs(abs(z) - 1.0) < 1e-3:
            continue
        if isinstance(lens, UniformEllipseLens) and abs(G21.q(z)) < 1e-3:
            continue
        count += 1
        det = jacobian_det(lens, z)
        fd = oracles.fd_jacobian_det(lambda u: lens_map(lens, u), z)
        assert abs(det - fd) <= 1e-6 * max(1.0, abs(det)), (z, det, fd)
        assert abs(jacobian_fd(lens, z) - fd) < 1e-12 * max(1.0, abs(fd))


# -- Schwarz function ------------------------------------------------------------------

def test_schwarz_decomposition():
    k1, S2 = schwarz_decompose(G21)
    assert k1 == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert k1 * 2.0 + S2(2.0) == pytest.approx(2.0, abs=1e-14)
    assert k1 * 1j + S2(1j) == pytest.approx(-1j, abs=1e-14)
    # Laurent tail: S2(zeta) = ab/zeta + O(zeta**-3)
    assert abs(1e6 * S2(1e6) - 2.0) < 1e-5
    assert abs(S2(1e6)) < 1e-5
    zb = G21.boundary(1000)
    assert np.abs(k1 * zb + S2(zb) - np.conj(zb)).max() < 1e-10


# -- confocal profiles -------------------------------------------------------------------

def test_confocal_mass_constant_uniform_is_one():
    assert confocal_mass_constant(ConfocalPowerProfile(1.0, 0.0), G21) == pytest.approx(1.0, abs=1e-12)


def test_confocal_mass_constant_against_mpmath():
    got = confocal_mass_constant(ConfocalPowerProfile(1.0, -0.25), G21)
    ref = oracles.confocal_mass_constant_mp(2.0, 1.0, -0.25)
    assert abs(got - ref) < 1e-8


def test_confocal_mass_constant_plain_callable():
    got = confocal_mass_constant(lambda lam: (1.0 + lam) ** -0.25, G21)
    ref = oracles.confocal_mass_constant_mp(2.0, 1.0, -0.25)
    assert abs(got - ref) < 1e-8


def test_confocal_mass_constant_divergent_profile():
    with pytest.raises(IntegrabilityError):
        confocal_mass_constant(ConfocalPowerProfile(1.0, -1.0), G21)
    with pytest.raises(IntegrabilityError):
        confocal_mass_constant(lambda lam: (1.0 + lam) ** -1.0, G21)


def test_confocal_exterior_is_scaled_uniform_and_matches_layer_quadrature():
    prof = ConfocalPowerProfile(1.0, -0.25)
    lens = ConfocalProfileLens(G21, prof)
    uni = UniformEllipseLens(G21, 1.0)
    rng = np.random.default_rng(5)
    n = 0
    while n < 10:
        z = complex(*rng.uniform(-4, 4, 2))
        if G21.q(z) < 0.2:
            continue
        n += 1
        assert deflection(lens, z) == pytest.approx(lens.mass_constant * deflection(uni, z), rel=1e-15)
        ref = oracles.confocal_layer_cauchy(z, 2.0, 1.0, lambda u: u ** -0.25)
        assert abs(deflection(lens, z) - ref) < 1e-5 * abs(ref)


def test_confocal_interior_is_unsupported():
    lens = ConfocalProfileLens(G21, ConfocalPowerProfile(1.0, 0.5))
    with pytest.raises(UnsupportedRegionError):
        deflection(lens, 0.1)


def test_maclaurin_scaling():
    rng = np.random.default_rng(6)
    lens = UniformEllipseLens(G21, 1.0)
    for lam in (-0.75, -0.5, -0.25):
        g = G21.confocal(lam)
        n = 0
        while n < 20:
            z = complex(*rng.uniform(-5, 5, 2))
            if G21.q(z) < 0.1:
                continue
            n += 1
            shrunk = oracles.ellipse_cauchy(z, g.a, g.b)
            full = oracles.ellipse_cauchy(z, 2.0, 1.0)
            assert abs(shrunk - G21.area_ratio(lam) * full) < 1e-5 * abs(shrunk)
            assert abs(shrunk - G21.area_ratio(lam) * deflection(lens, z)) < 1e-5 * abs(shrunk)
