"""Argument-principle certificates, bound checks, critical curves and surveys.

For a sense-preserving zero the lens map winds +1, for a sense-reversing
zero -1, so on a contour enclosing all images the winding equals
``n_plus - n_minus`` plus the windings of any enclosed singularities.
Winding numbers are measured by phase tracking with adaptive sampling.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np
from skimage.measure import find_contours

from ._pykernels import lens_map_parts
from .analytic_reduction import solve_rational
from .errors import ContourError, DegenerateConfiguration, DomainError
from .harmonic_solver import (DEFAULT_GRID, DEFAULT_SEED, SearchRegion, search_radius,
                              solve_all, solve_region)
from .images import ImageSet, dedupe
from .lens_models import (ChangRefsdalLens, ConfocalProfileLens, IsothermalEllipseLens,
                          MultipoleLens, PointMassLens, RadialLens, UniformEllipseLens,
                          jacobian_det, lens_map)

MIN_SAMPLES = 512
MAX_SAMPLES = 1 << 20
CONTOUR_CLEARANCE = 1e-8
NEAR_CAUSTIC = 1e-6


@dataclass(frozen=True)
class Contour:
    """Closed counter-clockwise curve ``t in [0, 1) -> z(t)``."""

    kind: str
    param: object
    center: complex = 0j
    radius: float = 0.0

    @classmethod
    def circle(cls, center, radius):
        center, radius = complex(center), float(radius)
        return cls("circle", lambda t: center + radius * np.exp(2j * np.pi * t), center, radius)

    @classmethod
    def curve(cls, kind, func, scale=0.0):
        return cls(kind, func, 0j, float(scale))

    def points(self, n):
        return np.asarray(self.param(np.arange(n) / n), dtype=complex)

    def describe(self):
        out = {"kind": self.kind}
        if self.kind == "circle":
            out.update(center=[self.center.real, self.center.imag], radius=self.radius)
        return out


@dataclass(frozen=True)
class WindingReport:
    contour: dict
    winding: int
    raw: float
    samples: int

    def to_dict(self):
        return {"contour": self.contour, "winding": self.winding, "raw": self.raw,
                "samples": self.samples}


def _phase_increments(F, contour, n):
    vals = np.asarray(F(contour.points(n)), dtype=complex)
    if not np.all(np.isfinite(vals)) or np.abs(vals).min() < CONTOUR_CLEARANCE:
        bump = contour.radius * 1.05 if contour.radius else None
        raise ContourError(
            f"contour {contour.kind} passes within {CONTOUR_CLEARANCE:g} of a zero or pole",
            suggested_radius=bump)
    return np.angle(np.roll(vals, -1) / vals)


def winding_number(F, contour, samples=MIN_SAMPLES):
    """Winding of ``F`` around 0 along ``contour`` by adaptive phase tracking.

    Small phase steps alone do not rule out aliasing, so the count is
    accepted only once it also agrees with the count at 3/4 of the samples, a
    ratio that does not alias onto powers of two.
    """
    n = max(int(samples), MIN_SAMPLES)
    prev = int(round(_phase_increments(F, contour, 3 * n // 4).sum() / (2.0 * np.pi)))
    while True:
        incr = _phase_increments(F, contour, n)
        raw = float(incr.sum() / (2.0 * np.pi))
        wind = int(round(raw))
        if np.abs(incr).max() < np.pi / 2 and wind == prev:
            break
        if n >= MAX_SAMPLES:
            raise ContourError(f"phase not resolved with {n} samples on {contour.kind}")
        prev = int(round(_phase_increments(F, contour, 3 * n // 2).sum() / (2.0 * np.pi)))
        n *= 2
    return WindingReport(contour.describe(), wind, raw, n)


@dataclass(frozen=True)
class BoundCheck:
    name: str
    bound: int
    observed: int
    ok: bool
    binding: bool = True

    def to_dict(self):
        return {"name": self.name, "bound": self.bound, "observed": self.observed,
                "ok": self.ok, "binding": self.binding}


def _check(name, bound, observed, binding=True):
    return BoundCheck(name, int(bound), int(observed), observed <= bound, binding)


@dataclass(frozen=True)
class CountCertificate:
    n_plus: int
    n_minus: int
    winding_at_infinity: WindingReport
    pole_contributions: int
    identity_ok: bool
    bound_checks: tuple
    inner_windings: tuple = ()
    strategy: str = "plane"
    escalated: bool = False
    near_caustic: bool = False
    images: ImageSet = field(default=None, repr=False, compare=False)

    @property
    def passed(self):
        return self.identity_ok and all(b.ok for b in self.bound_checks if b.binding)

    @property
    def failures(self):
        return [b.name for b in self.bound_checks if b.binding and not b.ok]

    def to_dict(self):
        return {
            "n_plus": self.n_plus,
            "n_minus": self.n_minus,
            "winding_at_infinity": self.winding_at_infinity.to_dict(),
            "pole_contributions": self.pole_contributions,
            "inner_windings": [r.to_dict() for r in self.inner_windings],
            "identity_ok": self.identity_ok,
            "bound_checks": [b.to_dict() for b in self.bound_checks],
            "strategy": self.strategy,
            "escalated": self.escalated,
            "near_caustic": self.near_caustic,
            "passed": self.passed,
        }


def _annulus_model(lens):
    if isinstance(lens, (ConfocalProfileLens, IsothermalEllipseLens)):
        return True
    return isinstance(lens, MultipoleLens) and lens.support is not None


def _inner_boundary(lens):
    if isinstance(lens, MultipoleLens):
        support = lens.support
        return Contour.curve("support_boundary", support.boundary_param)
    g = lens.geometry
    return Contour.curve(
        "ellipse_boundary", lambda t: g.a * np.cos(2 * np.pi * t) + 1j * g.b * np.sin(2 * np.pi * t),
        g.a)


def _map(lens, w, branch):
    plan = lens.plan(branch)
    return lambda z: lens_map_parts(plan, z, w)[0]


def big_radius(lens, w, images):
    pos = images.positions
    extent = max([lens.support_radius] + [float(np.abs(pos).max()) if pos.size else 0.0]
                 + [float(np.abs(lens.poles).max()) if lens.poles.size else 0.0])
    r = 2.0 * (extent + abs(w) + 1.0)
    return max(r, 1.1 * search_radius(lens, w))


def _pole_radius(pole, poles, images):
    others = [abs(pole - p) for p in poles if p != pole] + [abs(pole - z) for z in images.positions]
    if not others:
        return 0.5
    return 0.5 * min(others)


def _local_order(lens, k):
    """Winding of the lens map on a small circle about pole ``k``, when known."""
    if isinstance(lens, (PointMassLens, ChangRefsdalLens)):
        return 1
    if isinstance(lens, MultipoleLens):
        ms = lens.terms[k][1]
        return max(j + 1 for j, m in enumerate(ms) if m != 0)
    return None


def _pole_winding(F, lens, k, poles, images, max_halvings=40):
    """Pole circle shrunk until no image can hide inside it.

    With a known local order the circle shrinks until the measured winding
    equals it; otherwise until the winding is stable under halving.
    """
    p = poles[k]
    r = _pole_radius(p, poles, images)
    want = _local_order(lens, k)
    prev = None
    for _ in range(max_halvings):
        try:
            rep = winding_number(F, Contour.circle(p, r))
        except ContourError:
            r *= 0.7
            prev = None
            continue
        if (want is not None and rep.winding == want) or (want is None and prev == rep.winding):
            return rep
        prev = rep.winding
        r *= 0.5
    raise ContourError(f"winding about pole {p} did not settle")


def _windings(lens, w, images):
    """(big winding, inner windings, signed inner contribution, strategy)."""
    if _annulus_model(lens):
        F = _map(lens, w, "exterior")
        big = winding_number(F, Contour.circle(0.0, big_radius(lens, w, images)))
        inner = winding_number(F, _inner_boundary(lens))
        return big, (inner,), -inner.winding, "annulus"
    F = _map(lens, w, "physical")
    big = winding_number(F, Contour.circle(0.0, big_radius(lens, w, images)))
    poles = lens.poles
    reports = tuple(_pole_winding(F, lens, k, poles, images) for k in range(len(poles)))
    return big, reports, -sum(r.winding for r in reports), "plane"


def _counted(lens, images):
    if _annulus_model(lens):
        return [im for im in images.images if im.location != "interior"]
    return list(images.images)


def _real_weights(lens, tol=1e-12):
    return all(abs(m.imag) <= tol * max(1.0, abs(m)) for _, ms in lens.terms for m in ms)


def bound_checks(lens, w, images):
    """Known image-count bounds applicable to ``lens``."""
    n_tot = images.count
    n_ext = len(images.exterior)
    n_int = len(images.interior)
    gamma = lens.shear
    near = images.min_abs_det < NEAR_CAUSTIC
    checks = []
    if isinstance(lens, ChangRefsdalLens) or (isinstance(lens, PointMassLens) and lens.n == 1 and gamma):
        checks.append(_check("chang_refsdal_4", 4, n_tot))
    elif isinstance(lens, PointMassLens):
        n = lens.n
        if gamma == 0.0:
            if n > 1:
                checks.append(_check("max_images_5n-5", 5 * n - 5, n_tot))
            else:
                checks.append(_check("single_mass_2", 2, n_tot))
            checks.append(_check("witt_n2+1", n * n + 1, n_tot))
            want = 0 if n % 2 else 1
            checks.append(BoundCheck("count_parity", want, n_tot % 2, n_tot % 2 == want,
                                     binding=not near))
        else:
            checks.append(_check("max_images_5n", 5 * n, n_tot))
    elif isinstance(lens, UniformEllipseLens):
        checks += [_check("ellipse_exterior_4", 4, n_ext), _check("ellipse_interior_1", 1, n_int),
                   _check("ellipse_total_5", 5, n_tot)]
    elif isinstance(lens, ConfocalProfileLens):
        checks.append(_check("confocal_exterior_4", 4, n_ext))
    elif isinstance(lens, MultipoleLens):
        n = sum(lens.pole_orders)
        binding = _real_weights(lens)
        if gamma == 0.0 and n == 1:
            checks.append(_check("quadrature_exterior_2", 2, n_ext, binding))
        elif gamma == 0.0:
            checks.append(_check("quadrature_exterior_5n-5", 5 * n - 5, n_ext, binding))
        else:
            checks.append(_check("quadrature_exterior_5n", 5 * n, n_ext, binding))
    elif isinstance(lens, RadialLens) and lens.isothermal:
        bound = 1 if gamma == 0.0 else 2
        checks += [_check(f"isothermal_interior_{bound}", bound, n_int, binding=False),
                   _check("isothermal_total_5", 5, n_tot, binding=False)]
    if _burke_applies(lens, w):
        checks.append(BoundCheck("burke_odd", 1, n_tot % 2, n_tot % 2 == 1, binding=not near))
    return tuple(checks)


def _burke_applies(lens, w):
    if lens.shear != 0.0:
        return False
    if isinstance(lens, UniformEllipseLens):
        return not lens.geometry.contains(w)
    if isinstance(lens, RadialLens) and not lens.isothermal:
        return abs(w) > lens.radius
    return False


def _escalated_images(lens, w, grid, seed):
    if isinstance(lens, (PointMassLens, ChangRefsdalLens)) or (
            isinstance(lens, MultipoleLens) and lens.support is None):
        a = solve_rational(lens, w)
        b = solve_region(lens, w, SearchRegion("disk", {"radius": search_radius(lens, w)}, 2 * grid), seed)
        imgs = list(a.images) + list(b.images)
        keep = dedupe([im.z for im in imgs], [im.residual for im in imgs])
        return ImageSet(tuple(imgs[k] for k in keep), a.model, w, info={**a.info, "escalated": True})
    return solve_all(lens, w, grid=2 * grid, seed=seed)


def certify(lens, w, images, escalate=True, grid=None, seed=DEFAULT_SEED):
    """Certificate for ``images``; on identity failure re-solves once with 4x starts."""
    w = complex(w)
    cert = _certify_once(lens, w, images)
    if cert.identity_ok or not escalate:
        return cert
    grid = grid or images.info.get("grid", DEFAULT_GRID)
    again = _escalated_images(lens, w, grid, seed)
    cert2 = _certify_once(lens, w, again)
    return CountCertificate(**{**cert2.__dict__, "escalated": True})


def _certify_once(lens, w, images):
    big, inner, contrib, strategy = _windings(lens, w, images)
    counted = _counted(lens, images)
    n_plus = sum(1 for im in counted if im.jacobian.det > 0)
    n_minus = len(counted) - n_plus
    identity = (n_plus - n_minus) == big.winding + contrib
    return CountCertificate(
        n_plus=n_plus, n_minus=n_minus, winding_at_infinity=big, pole_contributions=contrib,
        identity_ok=identity, bound_checks=bound_checks(lens, w, images), inner_windings=inner,
        strategy=strategy, near_caustic=bool(images.min_abs_det < NEAR_CAUSTIC), images=images)


# -- critical curves -------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalCurve:
    vertices: np.ndarray
    caustic: np.ndarray
    closed: bool

    def to_dict(self):
        return {"closed": self.closed,
                "critical": [[z.real, z.imag] for z in self.vertices],
                "caustic": [[z.real, z.imag] for z in self.caustic]}


def _det_field(lens, z):
    with np.errstate(all="ignore"):
        try:
            det = np.asarray(jacobian_det(lens, z), float)
        except DomainError:
            det = np.full(z.shape, np.nan)
            ok = np.ones(z.shape, dtype=bool)
            if lens.poles.size:
                ok &= np.abs(z[..., None] - lens.poles).min(axis=-1) > 0
            if isinstance(lens, ConfocalProfileLens):
                ok &= lens.geometry.q(z) >= -1e-10
            det[ok] = jacobian_det(lens, z[ok])
    return det


def _polish_vertices(lens, z, cell, iters=4):
    h = 1e-7 * (1.0 + np.abs(z))
    for _ in range(iters):
        d0 = _det_field(lens, z)
        gx = (_det_field(lens, z + h) - _det_field(lens, z - h)) / (2 * h)
        gy = (_det_field(lens, z + 1j * h) - _det_field(lens, z - 1j * h)) / (2 * h)
        g2 = gx * gx + gy * gy
        with np.errstate(all="ignore"):
            step = -d0 * (gx + 1j * gy) / g2
        cand = z + step
        ok = np.isfinite(cand) & (np.abs(step) < 2 * cell)
        cand = np.where(ok, cand, z)
        better = np.abs(_det_field(lens, cand)) < np.abs(d0)
        z = np.where(better, cand, z)
    return z


def critical_curves(lens, window, resolution=256, polish=True):
    """Zero set of det J on ``window = (xmin, xmax, ymin, ymax)`` and its caustics."""
    xmin, xmax, ymin, ymax = map(float, window)
    x = np.linspace(xmin, xmax, resolution)
    y = np.linspace(ymin, ymax, resolution)
    X, Y = np.meshgrid(x, y)
    Z = X + 1j * Y
    det = _det_field(lens, Z)
    mask = np.isfinite(det)
    if not mask.any() or (np.nanmin(det) > 0) == (np.nanmax(det) > 0):
        return []
    det = np.where(mask, det, 0.0)
    curves = []
    cell = max((xmax - xmin), (ymax - ymin)) / (resolution - 1)
    for path in find_contours(det, 0.0, mask=mask):
        rows, cols = path[:, 0], path[:, 1]
        z = np.interp(cols, np.arange(resolution), x) + 1j * np.interp(rows, np.arange(resolution), y)
        closed = bool(np.allclose(path[0], path[-1]))
        if polish:
            z = _polish_vertices(lens, z, cell)
        try:
            caustic = np.asarray(lens_map(lens, z), complex)
        except DomainError:
            caustic = np.full(z.shape, np.nan + 0j)
        curves.append(CriticalCurve(z, caustic, closed))
    return curves


# -- survey ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurveyMap:
    window: tuple
    resolution: int
    counts: np.ndarray
    mask: np.ndarray
    degenerate: np.ndarray
    certified: np.ndarray = None

    @property
    def sources(self):
        xmin, xmax, ymin, ymax = self.window
        x = np.linspace(xmin, xmax, self.resolution)
        y = np.linspace(ymin, ymax, self.resolution)
        X, Y = np.meshgrid(x, y)
        return X + 1j * Y

    def to_csv(self):
        lines = []
        for row in self.counts:
            lines.append(",".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"

    def to_dict(self):
        out = {"window": list(self.window), "resolution": self.resolution,
               "counts": self.counts.tolist(), "mask": self.mask.astype(int).tolist(),
               "max_count": int(self.counts.max()) if self.counts.size else 0}
        if self.certified is not None:
            out["certified"] = self.certified.astype(int).tolist()
        return out


def _survey_cell(lens, w, grid, seed, do_certify):
    try:
        imgs = solve_all(lens, w, grid=grid, seed=seed)
    except DegenerateConfiguration:
        return -1, True, True, False
    masked = imgs.min_abs_det < NEAR_CAUSTIC
    ok = False
    if do_certify:
        try:
            ok = certify(lens, w, imgs, grid=grid, seed=seed).passed
        except ContourError:
            ok = False
    return imgs.count, masked, False, ok


def survey(lens, window, resolution=32, grid=32, seed=DEFAULT_SEED, threads=1, certify_cells=False):
    """Image counts for a grid of sources; row ``i`` has ``Im w = y_i``."""
    xmin, xmax, ymin, ymax = map(float, window)
    x = np.linspace(xmin, xmax, resolution)
    y = np.linspace(ymin, ymax, resolution)
    ws = [complex(xi, yi) for yi in y for xi in x]
    job = lambda w: _survey_cell(lens, w, grid, seed, certify_cells)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, ws))
    else:
        results = [job(w) for w in ws]
    shape = (resolution, resolution)
    counts = np.array([r[0] for r in results], dtype=int).reshape(shape)
    mask = np.array([r[1] for r in results], dtype=bool).reshape(shape)
    degenerate = np.array([r[2] for r in results], dtype=bool).reshape(shape)
    certified = np.array([r[3] for r in results], dtype=bool).reshape(shape) if certify_cells else None
    return SurveyMap((xmin, xmax, ymin, ymax), resolution, counts, mask | degenerate,
                     degenerate, certified)
