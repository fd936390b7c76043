"""Multistart damped Newton for lens equations that are not rational in z.

The lens map is treated as a real map of the plane.  Starts are laid on
deterministic grids covering a window that provably contains every
image, refined around poles and the source, and jittered by a seeded
generator; the converged points are deduplicated and classified.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import kernels
from ._pykernels import lens_map_parts
from .analytic_reduction import FILTER_TOL, solve_rational
from .errors import DegenerateConfiguration, DomainError
from .images import DEDUPE_RADIUS, Image, ImageSet, dedupe, make_image
from .lens_models import (ChangRefsdalLens, ConfocalProfileLens, EllipseGeometry,
                          IsothermalEllipseLens, JacobianInfo, MultipoleLens,
                          PointMassLens, RadialLens, UniformEllipseLens,
                          jacobian_det)

NEWTON_TOL = 1e-10
CUT_OFFSET = 1e-6
CONTINUUM_DET = 1e-6
CONTINUUM_MIN_POINTS = 8
DEFAULT_GRID = 64
DEFAULT_SEED = 42

REGION_KINDS = ("exterior_of_ellipse", "interior_of_ellipse", "annulus", "disk")


@dataclass(frozen=True)
class SearchRegion:
    """Where images are sought.

    ``bounds`` holds ``a, b`` for the ellipse kinds, ``r_in, r_out`` for an
    annulus and ``radius`` for a disk.
    """

    kind: str
    bounds: dict = field(default_factory=dict)
    grid: int = DEFAULT_GRID

    def __post_init__(self):
        if self.kind not in REGION_KINDS:
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.grid < 8:
            raise ValueError("grid must be at least 8 starts per axis")
        b = self.bounds
        if self.kind in ("exterior_of_ellipse", "interior_of_ellipse"):
            EllipseGeometry(b["a"], b["b"])
        elif self.kind == "annulus":
            if not 0 <= b["r_in"] < b["r_out"]:
                raise ValueError("annulus needs 0 <= r_in < r_out")
        elif not b["radius"] > 0:
            raise ValueError("disk radius must be positive")

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        b = self.bounds
        if self.kind in ("exterior_of_ellipse", "interior_of_ellipse"):
            q = (z.real / b["a"]) ** 2 + (z.imag / b["b"]) ** 2 - 1.0
            if self.kind == "interior_of_ellipse":
                return q < 0.0
            return q > -1e-10
        r = np.abs(z)
        if self.kind == "annulus":
            return (r > b["r_in"]) & (r < b["r_out"])
        return r < b["radius"]

    def extent(self):
        b = self.bounds
        if self.kind in ("exterior_of_ellipse", "interior_of_ellipse"):
            return b["a"], b["b"]
        r = b["r_out"] if self.kind == "annulus" else b["radius"]
        return r, r


def search_radius(lens, w):
    """Radius outside which the lens map cannot vanish.

    With ``|alpha(z)| <= sum_k |m_k| / (|z| - Ls)**(k+1)`` outside the
    support radius ``Ls``, ``|z - gamma conj(z) - conj(alpha)| >=
    (1 - |gamma|)|z| - bound`` exceeds ``|w|`` beyond the returned value.
    """
    g = abs(lens.shear)
    if g >= 1.0:
        raise DomainError("external shear must satisfy |gamma| < 1 for a bounded image set")
    ls = lens.support_radius
    terms = lens.far_field()
    mass = sum(abs(m) for k, m in terms if k == 0)
    d0 = max(ls, math.sqrt(mass), 1e-3)
    bound = sum(abs(m) / d0 ** (k + 1) for k, m in terms)
    return max(ls + d0, (abs(w) + bound) / (1.0 - g)) * 1.05 + 1e-9


def _grid(cx, cy, hx, hy, n):
    x = cx + np.linspace(-hx, hx, n)
    y = cy + np.linspace(-hy, hy, n)
    X, Y = np.meshgrid(x, y)
    return (X + 1j * Y).ravel()


def make_starts(lens, w, grid=DEFAULT_GRID, seed=DEFAULT_SEED, radius=None):
    """Deterministic start set for the multistart solver."""
    rng = np.random.default_rng(seed)
    rwin = search_radius(lens, w) if radius is None else radius
    ls = max(lens.support_radius, 1e-3)
    inner = min(1.6 * ls + 0.5, rwin)
    pts = [_grid(0.0, 0.0, inner, inner, grid),
           _grid(0.0, 0.0, rwin, rwin, max(8, grid // 2)),
           _grid(w.real, w.imag, 0.3 * inner, 0.3 * inner, max(8, grid // 4))]
    for pole in lens.poles:
        for r in (1e-3, 1e-2, 0.1):
            ang = 2 * np.pi * (np.arange(16) + 0.5) / 16
            pts.append(pole + r * (1.0 + abs(pole)) * np.exp(1j * ang))
    z = np.concatenate(pts)
    span = 2.0 * rwin / max(grid - 1, 1)
    z = z + 1e-3 * span * (rng.random(z.size) - 0.5 + 1j * (rng.random(z.size) - 0.5))
    c = _focal_half_distance(lens)
    if c:
        near_cut = (np.abs(z.imag) < CUT_OFFSET) & (np.abs(z.real) <= c)
        z = np.where(near_cut, z.real + 1j * CUT_OFFSET, z)
    return z[np.abs(z) <= rwin]


def _focal_half_distance(lens):
    geom = getattr(lens, "geometry", None)
    return geom.c if geom is not None else 0.0


def _plan_for(lens, region):
    if region.kind == "exterior_of_ellipse":
        return lens.plan("exterior")
    if isinstance(lens, RadialLens) and region.kind == "annulus" \
            and region.bounds["r_in"] >= lens.radius:
        return lens.plan("exterior")
    return lens.plan()


def _location(lens, z, region):
    loc = lens.location(z)
    if region.kind == "exterior_of_ellipse" and loc == "interior":
        return None
    return loc


def solve_region(lens, w, region, seed=DEFAULT_SEED, tol=NEWTON_TOL, raise_on_continuum=True):
    """All isolated solutions found in ``region`` by multistart damped Newton."""
    w = complex(w)
    plan = _plan_for(lens, region)
    rwin = search_radius(lens, w)
    rmax = rwin
    if region.kind != "exterior_of_ellipse":
        rmax = min(rwin, max(region.extent()) * 1.05)
    starts = make_starts(lens, w, region.grid, seed, radius=rwin)
    if region.kind in ("interior_of_ellipse", "disk", "annulus"):
        hx, hy = region.extent()
        extra = _grid(0.0, 0.0, hx, hy, region.grid)
        extra = extra + 1e-4 * (hx / region.grid) * (0.37 + 0.61j)
        starts = np.concatenate([starts[np.abs(starts) <= rmax], extra])
    z, res, conv, _ = kernels.newton_multistart(plan, starts, w, 60, tol, 2.0 * rwin)
    z, res = z[conv], res[conv]
    keep = region.contains(z)
    z, res = z[keep], res[keep]
    if z.size == 0:
        return ImageSet((), lens.summary(), w, info={"method": "multistart",
                                                      "region": region.kind, "starts": int(starts.size)})
    # one extra polished pass: each point should be a fixed point
    z2, res2, conv2, _ = kernels.newton_multistart(plan, z, w, 4, tol, 2.0 * rwin)
    z = np.where(conv2, z2, z)
    res = np.where(conv2, res2, res)
    idx = dedupe(z, res, DEDUPE_RADIUS)
    z, res = z[idx], res[idx]
    _check_continuum(lens, z, w, raise_on_continuum)
    z, res = _merge_near_degenerate(lens, z, res)
    images = []
    for zi in z:
        loc = _location(lens, zi, region)
        if loc is None:
            continue
        im = _image_from_plan(lens, plan, zi, w, loc)
        if im.residual < max(tol, FILTER_TOL):
            images.append(im)
    info = {"method": "multistart", "region": region.kind, "starts": int(starts.size),
            "grid": region.grid, "seed": seed}
    return ImageSet(tuple(images), lens.summary(), w, info=info)


def _image_from_plan(lens, plan, z, w, location):
    try:
        return make_image(lens, z, w, location)
    except DomainError:
        F, dA, dB = lens_map_parts(plan, np.array([complex(z)]), w)
        det = abs(dA[0]) ** 2 - abs(dB[0]) ** 2
        return Image(z=complex(z), residual=float(abs(F[0])),
                     jacobian=JacobianInfo.from_det(det), location=location)


def _check_continuum(lens, z, w, raise_on_continuum):
    if z.size < CONTINUUM_MIN_POINTS:
        return
    try:
        det = np.abs(jacobian_det(lens, z))
    except DomainError:
        return
    flat = z[det < CONTINUUM_DET]
    if flat.size >= CONTINUUM_MIN_POINTS and raise_on_continuum:
        r = np.abs(flat)
        raise DegenerateConfiguration(
            f"{flat.size} distinct converged points lie on a critical curve: continuum of images",
            kind="ring", payload={"points": [[p.real, p.imag] for p in flat[:64]],
                                  "radius_min": float(r.min()), "radius_max": float(r.max())})


def _merge_near_degenerate(lens, z, res, radius=1e-6, det_tol=1e-4):
    """Merge pairs that straddle a fold: close together and both nearly critical."""
    if z.size < 2:
        return z, res
    try:
        det = np.abs(jacobian_det(lens, z))
    except DomainError:
        return z, res
    keep = np.ones(z.size, dtype=bool)
    order = np.argsort(res, kind="stable")
    for a_i, i in enumerate(order):
        if not keep[i] or det[i] >= det_tol:
            continue
        for j in order[a_i + 1:]:
            if keep[j] and det[j] < det_tol and abs(z[i] - z[j]) < radius * (1 + abs(z[i])):
                keep[j] = False
    return z[keep], res[keep]


def interior_image_uniform_ellipse(lens, w):
    """Closed-form image inside a uniform ellipse, or ``None``.

    Inside, the lens map is the real-linear ``A z + B conj(z)`` with
    ``A = 1 - sigma0`` and ``B = sigma0 (a-b)/(a+b) - gamma``, so
    ``x = Re w / (A + B)`` and ``y = Im w / (A - B)``.
    """
    w = complex(w)
    A, B = lens.interior_coefficients()
    p, m = A + B, A - B
    comps = []
    for coef, target, name in ((p, w.real, "x"), (m, w.imag, "y")):
        if abs(coef) < 1e-14:
            if abs(target) < 1e-14:
                raise DegenerateConfiguration(
                    f"interior lens map is singular along {name} and the source is aligned: "
                    "continuum of interior images", kind="interior_continuum",
                    payload={"A": A, "B": B, "axis": name})
            return None
        comps.append(target / coef)
    z = complex(comps[0], comps[1])
    if not lens.geometry.contains(z):
        return None
    residual = abs(A * z + B * z.conjugate() - w)
    return Image(z=z, residual=float(residual),
                 jacobian=JacobianInfo.from_det(A * A - B * B), location="interior")


def _merge(lens, w, sets, info):
    images = [im for s in sets for im in s.images]
    idx = dedupe([im.z for im in images], [im.residual for im in images])
    return ImageSet(tuple(images[k] for k in idx), lens.summary(), w, info=info)


def _exterior_region(lens, grid):
    g = lens.geometry
    return SearchRegion("exterior_of_ellipse", {"a": g.a, "b": g.b}, grid)


def solve_all(lens, w, grid=DEFAULT_GRID, seed=DEFAULT_SEED, tol=FILTER_TOL, cross_check=False):
    """Every image of ``w``, using the best strategy for each model."""
    w = complex(w)
    if isinstance(lens, (PointMassLens, ChangRefsdalLens)) or (
            isinstance(lens, MultipoleLens) and lens.support is None):
        out = solve_rational(lens, w, tol=tol)
        if cross_check:
            other = solve_region(lens, w, SearchRegion("disk", {"radius": search_radius(lens, w)}, grid), seed)
            out = ImageSet(out.images, out.model, w, info={**out.info, "cross_check": _agree(out, other)})
        return out
    if isinstance(lens, MultipoleLens):
        full = solve_rational(lens, w, tol=tol)
        kept = tuple(im for im in full.images if im.location != "interior")
        return ImageSet(kept, lens.summary(), w,
                        info={**full.info, "discarded_interior": full.count - len(kept)})
    if isinstance(lens, UniformEllipseLens):
        ext = solve_region(lens, w, _exterior_region(lens, grid), seed)
        inner = interior_image_uniform_ellipse(lens, w)
        sets = [ext] + ([ImageSet((inner,), lens.summary(), w)] if inner is not None else [])
        return _merge(lens, w, sets, {**ext.info, "interior": "closed_form"})
    if isinstance(lens, ConfocalProfileLens):
        return solve_region(lens, w, _exterior_region(lens, grid), seed)
    if isinstance(lens, IsothermalEllipseLens):
        rwin = search_radius(lens, w)
        return solve_region(lens, w, SearchRegion("disk", {"radius": rwin}, grid), seed)
    if isinstance(lens, RadialLens):
        return _solve_radial(lens, w, grid, seed, tol)
    raise TypeError(f"no solver for {type(lens).__name__}")


def _solve_radial(lens, w, grid, seed, tol):
    R = lens.radius
    ext_lens = lens.exterior_equivalent()
    try:
        ext = solve_rational(ext_lens, w, tol=tol)
        ext_images = [make_image(lens, im.z, w) for im in ext.images if abs(im.z) > R]
    except DegenerateConfiguration as exc:
        ring_radius = math.sqrt(ext_lens.mass)
        if ring_radius >= R:
            raise DegenerateConfiguration(
                "exterior Einstein ring of a radial lens", kind="ring",
                payload={"kind": "circle", "center": [0.0, 0.0], "radius": ring_radius}) from exc
        ext_images = []
    ext_images = [im for im in ext_images if im.location != "interior"]
    inner = solve_region(lens, w, SearchRegion("disk", {"radius": R}, grid), seed)
    inner_images = [im for im in inner.images if im.location == "interior"]
    info = {"method": "analytic+multistart", "grid": grid, "seed": seed}
    return _merge(lens, w, [ImageSet(tuple(ext_images), {}, w), ImageSet(tuple(inner_images), {}, w)], info)


def _agree(a, b, tol=1e-7):
    if a.count != b.count:
        return False
    pa, pb = a.positions, b.positions
    if pa.size == 0:
        return True
    d = np.abs(pa[:, None] - pb[None, :])
    return bool(np.all(d.min(axis=1) < tol) and np.all(d.min(axis=0) < tol))


def sets_agree(a, b, tol=1e-7):
    """Same cardinality and every image matched within ``tol``."""
    return _agree(a, b, tol)
