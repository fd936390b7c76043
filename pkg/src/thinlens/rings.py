"""Einstein rings: construction and verification of continuum image curves.

A ring is a closed curve on which the lens equation holds identically.
For a point mass at the origin the ring is ``|z|**2 = sigma``.  For the
uniform ellipse with shear the candidate is the confocal ellipse

    z(theta) = R e^{i theta} + (c**2 / 4R) e^{-i theta},

on which ``z - sqrt(z**2 - c**2) = (c**2 / 2R) e^{-i theta}``; the lens map
is then a combination of ``e^{i theta}`` and ``e^{-i theta}`` whose two
coefficients vanish for ``gamma = c**2 / 4R**2`` and
``R**4 - sigma0 a b R**2 - c**4 / 16 = 0``.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError, NoRingError
from .lens_models import EllipseGeometry, PointMassLens, UniformEllipseLens, lens_map

RING_RESIDUAL = 1e-9
CIRCLE_TOL = 1e-10


@dataclass(frozen=True)
class RingSolution:
    kind: str
    center: complex
    semi_axes: tuple
    rotation: float
    shear_used: float
    residual_max: float
    confocal_defect: float = float("nan")
    branches: int = 1

    def __post_init__(self):
        A, B = self.semi_axes
        if B > A:
            raise ValueError("semi_axes must be ordered (A, B) with A >= B")
        if self.kind == "circle" and abs(A - B) > CIRCLE_TOL * max(1.0, A):
            raise ValueError("a circle needs equal semi-axes")

    def sample(self, n=256):
        t = 2.0 * np.pi * np.arange(n) / n
        A, B = self.semi_axes
        local = A * np.cos(t) + 1j * B * np.sin(t)
        return self.center + np.exp(1j * self.rotation) * local

    def to_dict(self):
        return {"kind": self.kind, "center": [self.center.real, self.center.imag],
                "semi_axes": list(self.semi_axes), "rotation": self.rotation,
                "shear": self.shear_used, "residual_max": self.residual_max,
                "confocal_defect": self.confocal_defect, "branches": self.branches}


def point_mass_ring(sigma, samples=256):
    """Ring of a single mass at the origin: the circle of radius sqrt(sigma)."""
    if not sigma > 0:
        raise ValueError("mass must be positive")
    r = math.sqrt(sigma)
    ring = RingSolution("circle", 0j, (r, r), 0.0, 0.0, 0.0)
    pts = ring.sample(samples)
    res = float(np.abs(lens_map(PointMassLens(((sigma, 0.0),)), pts)).max())
    return RingSolution("circle", 0j, (r, r), 0.0, 0.0, res)


def ring_parameters(geometry, density):
    """Closed-form ``(R, gamma)`` of the confocal ring; one positive root exists."""
    ab = geometry.a * geometry.b
    c2 = geometry.c ** 2
    s = density * ab
    R2 = 0.5 * (s + math.sqrt(s * s + 0.25 * c2 * c2))
    R = math.sqrt(R2)
    return R, c2 / (4.0 * R2)


def joukowski_curve(R, c, n=256):
    t = 2.0 * np.pi * np.arange(n) / n
    return R * np.exp(1j * t) + (c * c / (4.0 * R)) * np.exp(-1j * t)


def find_ring_uniform_ellipse(geometry, density, samples=256):
    """Einstein ring of a uniform elliptical lens and the shear that produces it."""
    if not density > 0:
        raise ValueError("density must be positive")
    R, gamma = ring_parameters(geometry, density)
    c = geometry.c
    if not R > c / 2:
        raise NoRingError("no admissible ring radius R > c/2")
    A = R + c * c / (4.0 * R)
    B = R - c * c / (4.0 * R)
    if not (B > geometry.b and A > geometry.a):
        raise NoRingError(
            f"candidate ring with semi-axes ({A:.6g}, {B:.6g}) is not outside the lens")
    lens = UniformEllipseLens(geometry, density, gamma)
    pts = joukowski_curve(R, c, samples)
    res = float(np.abs(lens_map(lens, pts)).max())
    return RingSolution("ellipse", 0j, (A, B), 0.0, gamma, res,
                        confocal_defect=abs(A * A - B * B - c * c))


# -- fitting ----------------------------------------------------------------------

@dataclass(frozen=True)
class CircleFit:
    center: complex
    radius: float
    residual: float


@dataclass(frozen=True)
class EllipseFit:
    center: complex
    semi_axes: tuple
    rotation: float
    residual: float


def fit_circle(z):
    """Algebraic (Kasa) circle fit; residual is the max radial deviation."""
    z = np.asarray(z, complex)
    x, y = z.real, z.imag
    M = np.column_stack([x, y, np.ones_like(x)])
    rhs = x * x + y * y
    (p, q, s), *_ = np.linalg.lstsq(M, rhs, rcond=None)
    cen = complex(p / 2, q / 2)
    r = math.sqrt(max(s + abs(cen) ** 2, 0.0))
    return CircleFit(cen, r, float(np.abs(np.abs(z - cen) - r).max()))


def fit_ellipse(z):
    """Conic fit ``A x^2 + B xy + C y^2 + D x + E y + F = 0`` with ``A + C = 1``.

    The residual is the max Sampson distance of the samples to the conic.
    """
    z = np.asarray(z, complex)
    scale = float(np.abs(z - z.mean()).max()) or 1.0
    off = z.mean()
    u = (z - off) / scale
    x, y = u.real, u.imag
    # A = 1 - C substituted: (x^2) + C (y^2 - x^2) + B xy + D x + E y + F = 0
    M = np.column_stack([x * y, y * y - x * x, x, y, np.ones_like(x)])
    (B, C, D, E, F), *_ = np.linalg.lstsq(M, -(x * x), rcond=None)
    A = 1.0 - C
    val = A * x * x + B * x * y + C * y * y + D * x + E * y + F
    gx = 2 * A * x + B * y + D
    gy = B * x + 2 * C * y + E
    sampson = np.abs(val) / np.sqrt(gx * gx + gy * gy)
    Q = np.array([[A, B / 2], [B / 2, C]])
    cen = np.linalg.solve(2 * Q, -np.array([D, E]))
    k = -(F + 0.5 * (D * cen[0] + E * cen[1]))
    evals, evecs = np.linalg.eigh(Q)
    if not (np.all(evals > 0) and k > 0) and not (np.all(evals < 0) and k < 0):
        return EllipseFit(complex(off + scale * complex(*cen)), (math.nan, math.nan), math.nan,
                          float(sampson.max() * scale))
    axes = np.sqrt(k / evals) * scale
    order = np.argsort(axes)[::-1]
    major_dir = evecs[:, order[0]]
    rot = math.atan2(major_dir[1], major_dir[0]) % math.pi
    return EllipseFit(complex(off + scale * complex(*cen)), (float(axes[order[0]]), float(axes[order[1]])),
                      rot, float(sampson.max() * scale))


@dataclass(frozen=True)
class RingDiagnostics:
    residual_max: float
    is_ring: bool
    kind: str
    circle: CircleFit
    ellipse: EllipseFit
    confocal_defect: float

    def to_dict(self):
        c, e = self.circle, self.ellipse
        return {"residual_max": self.residual_max, "is_ring": self.is_ring, "kind": self.kind,
                "circle_fit": {"center": [c.center.real, c.center.imag], "radius": c.radius,
                               "residual": c.residual},
                "ellipse_fit": {"center": [e.center.real, e.center.imag],
                                "semi_axes": list(e.semi_axes), "rotation": e.rotation,
                                "residual": e.residual},
                "confocal_defect": self.confocal_defect}


def verify_ring(lens, curve, w=0j, samples=256, tol=RING_RESIDUAL):
    """Lens-equation residual along ``curve`` plus circle and ellipse fits.

    ``curve`` is an array of points or a callable of ``theta`` in
    ``[0, 2 pi)``.
    """
    if callable(curve):
        pts = np.asarray(curve(2.0 * np.pi * np.arange(samples) / samples), complex)
    else:
        pts = np.asarray(curve, complex)
    if any(lens.location(z) == "interior" for z in pts):
        raise DomainError("ring candidate intersects the lens support")
    res = float(np.abs(lens_map(lens, pts) - complex(w)).max())
    circle = fit_circle(pts)
    ellipse = fit_ellipse(pts)
    kind = "circle" if circle.residual < CIRCLE_TOL * max(1.0, circle.radius) else "ellipse"
    geom = getattr(lens, "geometry", None)
    defect = math.nan
    if isinstance(geom, EllipseGeometry) and np.all(np.isfinite(ellipse.semi_axes)):
        A, B = ellipse.semi_axes
        defect = abs(A * A - B * B - geom.c ** 2)
    return RingDiagnostics(res, res < tol, kind, circle, ellipse, defect)
