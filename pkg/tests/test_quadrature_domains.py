import math

import numpy as np
import pytest

import oracles
from thinlens import (ConformalMap, InjectivityError, certify, deflection, nodes_and_weights,
                      reduce_to_point_lens, solve_all)
from thinlens.quadrature_domains import disk, mass_conservation_error, membership


def exterior_points(radius, n=20, seed=0):
    rng = np.random.default_rng(seed)
    r = radius * rng.uniform(1.2, 3.0, n)
    return r * np.exp(2j * np.pi * rng.uniform(size=n))


def test_disk_single_node():
    qd = nodes_and_weights(disk(1.5), density=2.0)
    assert np.abs(qd.nodes).max() < 1e-14
    assert qd.weights[0] == pytest.approx(2.0 * 1.5 ** 2, rel=1e-12)
    assert qd.area == pytest.approx(math.pi * 2.25, rel=1e-12)


@pytest.mark.parametrize("q", [0.1, 0.2, 0.3])
def test_degree_two_polynomial_map(q):
    phi = lambda t: t + q * t * t
    dphi = lambda t: 1 + 2 * q * t
    qd = nodes_and_weights(ConformalMap.polynomial([0.0, 1.0, q]), density=1.5)
    assert len(qd.moments[0]) == 2
    for z in exterior_points(1 + q):
        assert abs(qd.potential(z) - oracles.conformal_cauchy(z, phi, dphi, 1.5)) < 1e-6


@pytest.mark.parametrize("s", [0.2, 0.4])
def test_degree_one_rational_map(s):
    phi = lambda t: t / (1 - s * t)
    dphi = lambda t: 1 / (1 - s * t) ** 2
    qd = nodes_and_weights(ConformalMap([0.0, 1.0], [1.0, -s]))
    assert qd.nodes[0] == pytest.approx(phi(s), abs=1e-12)
    for z in exterior_points(1 / (1 - s), seed=1):
        assert abs(qd.potential(z) - oracles.conformal_cauchy(z, phi, dphi)) < 1e-6


def test_reduced_lens_deflection_matches_oracle():
    q = 0.2
    lens = reduce_to_point_lens(nodes_and_weights(ConformalMap.polynomial([0.0, 1.0, q])))
    for z in exterior_points(1 + q, n=8, seed=2):
        ref = oracles.conformal_cauchy(z, lambda t: t + q * t * t, lambda t: 1 + 2 * q * t)
        assert abs(complex(deflection(lens, z)) - ref) < 1e-6


@pytest.mark.parametrize("cmap, rho", [
    (ConformalMap.polynomial([0.0, 1.0, 0.25]), 1.0),
    (ConformalMap.polynomial([0.5j, 2.0, 0.3 + 0.1j]), 0.7),
    (ConformalMap([0.0, 1.0], [1.0, -0.35]), 3.0),
    (ConformalMap.polynomial([0.0, 1.0, 0.1, 0.05]), 1.0),
])
def test_mass_conservation(cmap, rho):
    qd = nodes_and_weights(cmap, density=rho)
    assert mass_conservation_error(qd) < 1e-8


def test_area_against_shoelace():
    cmap = ConformalMap.polynomial([0.0, 1.0, 0.3, 0.1j])
    z = cmap.boundary(20000)
    shoelace = 0.5 * np.sum(z.real * np.roll(z.imag, -1) - np.roll(z.real, -1) * z.imag)
    assert cmap.area() == pytest.approx(shoelace, rel=1e-7)


def test_injectivity_rejections():
    with pytest.raises(InjectivityError):
        nodes_and_weights(ConformalMap.polynomial([0.0, 1.0, 0.5]))  # phi' vanishes on |t|=1
    with pytest.raises(InjectivityError):
        nodes_and_weights(ConformalMap.polynomial([0.0, 1.0, 0.0, 0.0, 0.0, 0.9]))
    with pytest.raises(InjectivityError):
        nodes_and_weights(ConformalMap([0.0, 1.0], [1.0, -1.2]))  # pole inside the disk


def test_membership():
    cmap = ConformalMap.polynomial([0.0, 1.0, 0.2])
    assert membership(cmap, 0.1) == "interior"
    assert membership(cmap, 3.0) == "exterior"
    assert membership(cmap, cmap(np.exp(0.7j))) == "boundary"


@pytest.mark.parametrize("gamma, bound", [(0.0, 5), (0.3, 10)])
def test_reduction_image_bounds(gamma, bound):
    lens = reduce_to_point_lens(nodes_and_weights(ConformalMap.polynomial([0.0, 1.0, 0.2]), 2.0),
                                gamma)
    rng = np.random.default_rng(5)
    for _ in range(15):
        w = complex(*rng.uniform(-1.5, 1.5, 2))
        imgs = solve_all(lens, w)
        assert len(imgs.exterior) <= bound
        cert = certify(lens, w, imgs)
        assert cert.passed, cert.to_dict()
