import numpy as np
import pytest

from thinlens import (ChangRefsdalLens, ConfocalPowerProfile, ConfocalProfileLens, ConformalMap,
                      EllipseGeometry, IsothermalEllipseLens, IsothermalProfile, PointMassLens,
                      PowerProfile, RadialLens, UniformEllipseLens, UniformProfile,
                      nodes_and_weights, reduce_to_point_lens)
from thinlens import kernels
from thinlens import _pykernels

pytestmark = pytest.mark.skipif(kernels.compiled_backend is None, reason="compiled kernels not built")

G21 = EllipseGeometry(2.0, 1.0)
LENSES = [
    PointMassLens(((0.5, 1.0), (0.3, -0.5j), (0.2, -1.0)), 0.2),
    ChangRefsdalLens(1.0, 0.3),
    UniformEllipseLens(G21, 2.0, 0.05),
    ConfocalProfileLens(G21, ConfocalPowerProfile(1.0, 0.5), 0.1),
    IsothermalEllipseLens(G21, 0.8, 0.1),
    RadialLens(1.0, UniformProfile(1.5), 0.1),
    RadialLens(1.0, PowerProfile(1.0, 2.0)),
    RadialLens(1.0, IsothermalProfile(0.2), 0.2),
    reduce_to_point_lens(nodes_and_weights(ConformalMap.polynomial([0.0, 1.0, 0.2])), 0.1),
]
IDS = [type(l).__name__ for l in LENSES]


def sample(n=400, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-3, 3, n) + 1j * rng.uniform(-3, 3, n)


@pytest.mark.parametrize("lens", LENSES, ids=IDS)
@pytest.mark.parametrize("branch", ["physical", "exterior"])
def test_evaluate_backends_agree(lens, branch):
    try:
        plan = lens.plan(branch)
    except (ValueError, KeyError):
        pytest.skip("branch not defined for this model")
    z = sample()
    a = _pykernels.evaluate(plan, z)
    b = kernels.compiled_backend.evaluate(plan, z)
    for x, y in zip(a, b):
        fin = np.isfinite(x)
        assert np.array_equal(fin, np.isfinite(y))
        assert np.abs(x[fin] - y[fin]).max() <= 1e-12 * (1 + np.abs(x[fin]).max())


@pytest.mark.parametrize("lens", LENSES, ids=IDS)
def test_newton_backends_agree(lens):
    plan = lens.plan()
    starts = sample(64, seed=1)
    w = 0.1 + 0.05j
    za, ra, ca, _ = _pykernels.newton_multistart(plan, starts, w, 60, 1e-10, np.inf)
    zb, rb, cb, _ = kernels.compiled_backend.newton_multistart(plan, starts, w, 60, 1e-10, np.inf)
    assert np.array_equal(ca, cb)
    assert np.abs(za[ca] - zb[ca]).max(initial=0.0) < 1e-9


def test_aberth_backends_agree():
    rng = np.random.default_rng(3)
    for d in (1, 4, 9, 17):
        c = rng.normal(size=d + 1) + 1j * rng.normal(size=d + 1)
        starts = _pykernels.initial_roots(c)
        za, da = _pykernels.aberth(c, starts, 500)
        zb, db = kernels.compiled_backend.aberth(c, starts, 500)
        assert da.all() and db.all()
        key = lambda z: np.sort_complex(np.round(z, 8))
        assert np.abs(key(za) - key(zb)).max() < 1e-9


def test_backend_switch_roundtrip():
    before = kernels.BACKEND
    try:
        assert kernels.use("python").BACKEND == "python"
        assert kernels.BACKEND == "python"
        assert kernels.use("cython").BACKEND == "cython"
        with pytest.raises(ValueError):
            kernels.use("fortran")
    finally:
        kernels.use(before)


def test_full_solve_identical_across_backends():
    from thinlens import solve_all
    lens = UniformEllipseLens(G21, 2.0, 0.05)
    before = kernels.BACKEND
    try:
        kernels.use("python")
        a = solve_all(lens, 0.02 + 0.01j)
        kernels.use("cython")
        b = solve_all(lens, 0.02 + 0.01j)
    finally:
        kernels.use(before)
    assert a.count == b.count
    assert np.abs(a.positions - b.positions).max() < 1e-10
