"""Lens models, their Cauchy-transform deflections, lens maps and Jacobians.

Conventions
-----------
The deflection of a mass distribution is the Cauchy transform
``alpha(z) = ∫ dmu(zeta) / (z - zeta)``, with a uniform density
``sigma0`` contributing ``sigma0 / pi * ∫ dA / (z - zeta)``.  The lens map
is always ``w = z - conj(alpha(z)) - gamma * conj(z)``.

Each model lowers to a :class:`~thinlens._plan.Plan`; the functions here
evaluate plans with the numpy kernel so that the public API never
depends on which compiled backend is active.
"""
from dataclasses import dataclass, field
from functools import cached_property
import math
import warnings

import numpy as np
from scipy import integrate

from . import _pykernels
from ._plan import (ELL_EXTERIOR, ELL_PIECEWISE, RAD_ISOTHERMAL, RAD_POWER,
                    RAD_UNIFORM, Plan)
from .errors import DomainError, IntegrabilityError, UnsupportedRegionError

BOUNDARY_TOL = 1e-10
CRITICAL_DET = 1e-12

__all__ = [
    "EllipseGeometry", "PointMassLens", "MultipoleLens", "UniformEllipseLens",
    "ConfocalProfileLens", "IsothermalEllipseLens", "RadialLens",
    "ChangRefsdalLens", "ConfocalPowerProfile", "UniformProfile", "IsothermalProfile", "PowerProfile",
    "JacobianInfo", "sqrt_focal", "deflection", "lens_map", "jacobian",
    "jacobian_parts", "jacobian_fd", "schwarz_decompose",
    "confocal_mass_constant",
]


def sqrt_focal(z, c, return_flag=False):
    """Branch of ``sqrt(z**2 - c**2)`` analytic off the segment ``[-c, c]``.

    Computed as ``sqrt(z - c) * sqrt(z + c)`` with principal roots, so the
    value is asymptotic to ``z`` at infinity.  On the open segment the
    limit from the upper half-plane is returned; with ``return_flag`` the
    second return value marks those on-cut points.
    """
    if c <= 0:
        raise ValueError("focal half-distance must be positive")
    z = np.asarray(z, dtype=complex)
    s = _pykernels.sqrt_focal_array(z, c)
    if return_flag:
        on_cut = (z.imag == 0.0) & (np.abs(z.real) < c)
        return (s[()], on_cut[()]) if s.ndim == 0 else (s, on_cut)
    return s[()] if s.ndim == 0 else s


@dataclass(frozen=True)
class EllipseGeometry:
    """Ellipse ``x**2/a**2 + y**2/b**2 <= 1`` with foci at ``±c``."""

    a: float
    b: float
    c: float = field(init=False)

    def __post_init__(self):
        if not (self.a > self.b > 0):
            raise ValueError(f"need a > b > 0, got a={self.a}, b={self.b}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "c", math.sqrt((self.a - self.b) * (self.a + self.b)))

    @property
    def area(self):
        return math.pi * self.a * self.b

    def q(self, z):
        z = np.asarray(z, dtype=complex)
        return (z.real / self.a) ** 2 + (z.imag / self.b) ** 2 - 1.0

    def contains(self, z):
        return self.q(z) < 0.0

    def location(self, z, tol=BOUNDARY_TOL):
        q = float(self.q(z))
        if abs(q) < tol:
            return "boundary"
        return "interior" if q < 0 else "exterior"

    def boundary(self, n):
        t = 2.0 * np.pi * np.arange(n) / n
        return self.a * np.cos(t) + 1j * self.b * np.sin(t)

    def confocal(self, lam):
        """Member ``x**2/(a**2+lam) + y**2/(b**2+lam) = 1`` of the confocal family."""
        if not -self.b * self.b < lam:
            raise ValueError("confocal parameter must exceed -b**2")
        return EllipseGeometry(math.sqrt(self.a * self.a + lam), math.sqrt(self.b * self.b + lam))

    def area_ratio(self, lam):
        """``Area(confocal(lam)) / Area(self)``, the exterior-potential scale factor."""
        return math.sqrt((self.a * self.a + lam) * (self.b * self.b + lam)) / (self.a * self.b)

    def to_dict(self):
        return {"a": self.a, "b": self.b, "c": self.c}


@dataclass(frozen=True)
class JacobianInfo:
    det: float
    parity: str
    magnification: float
    critical: bool = False

    @classmethod
    def from_det(cls, det):
        det = float(det)
        critical = abs(det) < CRITICAL_DET
        mag = math.inf if critical else 1.0 / abs(det)
        parity = "sense_preserving" if det > 0 else "sense_reversing"
        return cls(det=det, parity=parity, magnification=mag, critical=critical)

    @property
    def sign(self):
        return 1 if self.parity == "sense_preserving" else -1


# -- confocal profiles ------------------------------------------------------

@dataclass(frozen=True)
class ConfocalPowerProfile:
    """mu(lambda) = coefficient * (b**2 + lambda)**exponent.

    Evaluating through ``of_core_offset`` keeps full precision near the
    core, where ``b**2 + lambda`` would otherwise cancel.
    """

    coefficient: float = 1.0
    exponent: float = 0.0
    b: float = None  # only needed to evaluate as a function of lambda

    def __call__(self, lam):
        if self.b is None:
            raise ValueError("set b to evaluate the profile as a function of lambda")
        return self.of_core_offset(self.b * self.b + np.asarray(lam, float))

    def of_core_offset(self, u):
        u = np.asarray(u, float)
        return self.coefficient * u ** self.exponent

    def to_dict(self):
        return {"kind": "power", "coefficient": self.coefficient, "exponent": self.exponent}


# -- radial profiles ---------------------------------------------------------

@dataclass(frozen=True)
class UniformProfile:
    """phi(r) = density."""

    density: float
    kind = RAD_UNIFORM

    def __post_init__(self):
        if self.density < 0:
            raise ValueError("density must be non-negative")

    def params(self, R):
        return self.density, 0.0

    def to_dict(self):
        return {"kind": "uniform", "density": self.density}


@dataclass(frozen=True)
class IsothermalProfile:
    """phi(r) = k / r, singular at the origin."""

    k: float
    kind = RAD_ISOTHERMAL

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("isothermal coefficient must be positive")

    def params(self, R):
        return self.k, 0.0

    def to_dict(self):
        return {"kind": "isothermal", "coefficient": self.k}


@dataclass(frozen=True)
class PowerProfile:
    """phi(r) = density * (1 - r**2/R**2)**exponent, smooth for exponent >= 1."""

    density: float
    exponent: float
    kind = RAD_POWER

    def __post_init__(self):
        if self.density < 0 or self.exponent < 0:
            raise ValueError("density and exponent must be non-negative")

    def params(self, R):
        return self.density, self.exponent

    def to_dict(self):
        return {"kind": "power", "density": self.density, "exponent": self.exponent}


def _radial_density(profile, R, r):
    p0, p1 = profile.params(R)
    mass, phi = _pykernels._radial_mass(profile.kind, np.asarray(r, float), R, p0, p1)
    return phi


def _radial_enclosed(profile, R, r):
    """Normalised enclosed mass M(r) = 2 ∫_0^r phi(s) s ds."""
    p0, p1 = profile.params(R)
    mass, phi = _pykernels._radial_mass(profile.kind, np.asarray(r, float), R, p0, p1)
    return mass


# -- lens models --------------------------------------------------------------

class Lens:
    """Shared behaviour; subclasses are frozen dataclasses."""

    type_name = "lens"

    def plan(self, branch="physical"):
        raise NotImplementedError

    def location(self, z):
        return "exterior"

    @property
    def poles(self):
        """Points where the deflection is singular (excluded from images)."""
        return np.zeros(0, dtype=complex)

    @property
    def support_radius(self):
        return 0.0

    def far_field(self):
        """``[(k, |m_k|)]`` such that |alpha(z)| <= sum |m_k| / dist**(k+1)."""
        raise NotImplementedError

    def summary(self):
        return {"type": self.type_name}


def _check_shear(gamma):
    gamma = float(gamma)
    if not math.isfinite(gamma):
        raise ValueError("shear must be finite")
    return gamma


@dataclass(frozen=True)
class PointMassLens(Lens):
    """n point masses ``sigma_j`` at ``z_j`` plus external shear."""

    masses: tuple
    shear: float = 0.0
    type_name = "point_masses"

    def __post_init__(self):
        masses = tuple((float(s), complex(p)) for s, p in self.masses)
        if not masses:
            raise ValueError("at least one mass is required")
        if any(s <= 0 for s, _ in masses):
            raise ValueError("masses must be positive")
        pos = np.array([p for _, p in masses])
        if len(pos) > 1:
            d = np.abs(pos[:, None] - pos[None, :])
            d[np.diag_indices(len(pos))] = np.inf
            if d.min() <= 0:
                raise ValueError("mass positions must be distinct")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "shear", _check_shear(self.shear))

    @property
    def n(self):
        return len(self.masses)

    @property
    def sigmas(self):
        return np.array([s for s, _ in self.masses])

    @property
    def positions(self):
        return np.array([p for _, p in self.masses])

    @property
    def poles(self):
        return self.positions

    @property
    def total_mass(self):
        return float(self.sigmas.sum())

    @property
    def support_radius(self):
        return float(np.abs(self.positions).max())

    def multipole_terms(self):
        return [(p, (complex(s),)) for s, p in self.masses]

    def far_field(self):
        return [(0, self.total_mass)]

    def plan(self, branch="physical"):
        return Plan(gamma=self.shear, nodes=self.positions,
                    orders=np.zeros(self.n, dtype=np.int64),
                    weights=self.sigmas.astype(complex))

    def summary(self):
        return {"type": self.type_name, "shear": self.shear,
                "masses": [{"sigma": s, "z": [p.real, p.imag]} for s, p in self.masses]}


@dataclass(frozen=True)
class MultipoleLens(Lens):
    """Rational deflection ``sum_j sum_k m_jk / (z - z_j)**(k+1)``.

    Produced by the quadrature-domain reduction; weights may be complex.
    ``support`` (optional) supplies ``location`` and ``boundary`` for the
    region the terms replace.
    """

    terms: tuple
    shear: float = 0.0
    support: object = None
    type_name = "multipole"

    def __post_init__(self):
        terms = tuple((complex(z), tuple(complex(m) for m in ms)) for z, ms in self.terms)
        if not terms:
            raise ValueError("at least one term is required")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "shear", _check_shear(self.shear))

    def multipole_terms(self):
        return list(self.terms)

    @property
    def poles(self):
        return np.array([z for z, _ in self.terms])

    @property
    def pole_orders(self):
        return [len(ms) for _, ms in self.terms]

    @property
    def total_mass(self):
        return complex(sum(ms[0] for _, ms in self.terms))

    @property
    def support_radius(self):
        r = float(np.abs(self.poles).max())
        if self.support is not None:
            r = max(r, float(np.abs(self.support.boundary(512)).max()))
        return r

    def far_field(self):
        out = {}
        for _, ms in self.terms:
            for k, m in enumerate(ms):
                out[k] = out.get(k, 0.0) + abs(m)
        return sorted(out.items())

    def location(self, z):
        if self.support is None:
            return "exterior"
        return self.support.location(z)

    def plan(self, branch="physical"):
        nodes, orders, weights = [], [], []
        for z, ms in self.terms:
            for k, m in enumerate(ms):
                nodes.append(z)
                orders.append(k)
                weights.append(m)
        return Plan(gamma=self.shear, nodes=np.array(nodes, complex),
                    orders=np.array(orders, np.int64), weights=np.array(weights, complex))

    def summary(self):
        return {"type": self.type_name, "shear": self.shear,
                "terms": [{"z": [z.real, z.imag], "moments": [[m.real, m.imag] for m in ms]}
                          for z, ms in self.terms]}


@dataclass(frozen=True)
class ChangRefsdalLens(Lens):
    """Point mass at the origin plus shear: ``z - c/conj(z) - gamma*conj(z)``."""

    mass: float
    shear: float = 0.0
    type_name = "chang_refsdal"

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        object.__setattr__(self, "shear", _check_shear(self.shear))

    @property
    def poles(self):
        return np.zeros(1, dtype=complex)

    @property
    def total_mass(self):
        return float(self.mass)

    def as_point_lens(self):
        return PointMassLens(((self.mass, 0.0),), self.shear)

    def multipole_terms(self):
        return [(0j, (complex(self.mass),))]

    def far_field(self):
        return [(0, self.mass)]

    def plan(self, branch="physical"):
        return self.as_point_lens().plan(branch)

    def summary(self):
        return {"type": self.type_name, "mass": self.mass, "shear": self.shear}


@dataclass(frozen=True)
class UniformEllipseLens(Lens):
    geometry: EllipseGeometry
    density: float = 1.0
    shear: float = 0.0
    type_name = "uniform_ellipse"

    def __post_init__(self):
        if not self.density > 0:
            raise ValueError("density must be positive")
        object.__setattr__(self, "shear", _check_shear(self.shear))

    @property
    def total_mass(self):
        return self.density * self.geometry.a * self.geometry.b

    @property
    def support_radius(self):
        return self.geometry.a

    def far_field(self):
        return [(0, self.total_mass)]

    def location(self, z):
        return self.geometry.location(z)

    def plan(self, branch="physical"):
        g = self.geometry
        mode = ELL_PIECEWISE if branch == "physical" else ELL_EXTERIOR
        return Plan(gamma=self.shear, ell_mode=mode, ell_a=g.a, ell_b=g.b,
                    ell_c=g.c, ell_density=self.density)

    def interior_coefficients(self):
        """(A, B) with lens map ``A z + B conj(z)`` inside the ellipse."""
        g = self.geometry
        kappa0 = (g.a - g.b) / (g.a + g.b)
        return 1.0 - self.density, self.density * kappa0 - self.shear

    def summary(self):
        return {"type": self.type_name, **self.geometry.to_dict(),
                "density": self.density, "shear": self.shear}


def confocal_mass_constant(profile, geometry):
    """Effective mass factor of a density constant on confocal ellipses.

    Integrates ``mu(lambda) c'(lambda)`` over ``(-b**2, 0)`` where
    ``c(lambda) = sqrt((a**2+lambda)(b**2+lambda)) / (a b)``.  With
    ``t = sqrt(b**2 + lambda)`` the area-ratio derivative becomes the
    bounded weight ``(c**2 + 2 t**2) / (a b sqrt(c**2 + t**2))``; any
    remaining power-law singularity of the profile at the core is
    absorbed by a further substitution ``t = b s**m``.
    """
    a, b, c = geometry.a, geometry.b, geometry.c

    core = getattr(profile, "of_core_offset", None)

    def mu(t):
        t = np.asarray(t, float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if core is not None:
                return np.asarray(core(t * t), float)
            return np.asarray(profile(t * t - b * b), float)

    def weight(t):
        return (c * c + 2.0 * t * t) / (a * b * np.sqrt(c * c + t * t))

    probe = mu(np.linspace(0.0, b, 65)[1:])
    if np.any(probe < 0) or not np.all(np.isfinite(probe)):
        raise IntegrabilityError("profile must be finite and non-negative on (-b^2, 0]")
    # a callable of lambda loses about eps * b**2 / t**2 to cancellation, so it is
    # probed where that loss stays near 1e-8
    t1, t2 = (b * 1e-9, b * 1e-12) if core is not None else (b * 1e-4, b * 1e-3)
    m1, m2 = float(mu(t1)), float(mu(t2))
    if m1 == 0.0 and m2 == 0.0:
        p = 1.0
    elif m1 <= 0.0 or m2 <= 0.0 or not (math.isfinite(m1) and math.isfinite(m2)):
        raise IntegrabilityError("profile is not resolvable near the focal core")
    else:
        p = math.log(m1 / m2) / math.log(t1 / t2)
    if p <= -1.0 + 1e-6:
        raise IntegrabilityError(
            f"profile diverges like (b^2+lambda)^{p / 2:.3g} at the core; "
            "the mass integral needs an exponent above -1/2")
    m = 1 if p >= 1.0 else math.ceil(2.0 / (p + 1.0))

    # below t1 the profile's leading power law measured at (t1, t2) is continued to the core
    t_floor = 0.0 if core is not None else t1

    def g(s):
        t = b * s ** m
        mt = m1 * (t / t_floor) ** p if t < t_floor else float(mu(t))
        return mt * weight(t) * m * b * s ** (m - 1)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(g, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=400)
        except integrate.IntegrationWarning as exc:
            raise IntegrabilityError(f"mass integral did not converge: {exc}") from None
    if not math.isfinite(value) or err > 1e-10 * max(abs(value), 1e-300):
        raise IntegrabilityError("mass integral did not reach the 1e-10 accuracy target")
    return value


@dataclass(frozen=True)
class ConfocalProfileLens(Lens):
    """Density ``mu(lambda)`` constant on ellipses confocal with the boundary.

    Only the exterior potential is available: it equals ``mass_constant``
    times the potential of the unit-density ellipse.
    """

    geometry: EllipseGeometry
    profile: object
    shear: float = 0.0
    mass_constant: float = field(init=False)
    type_name = "confocal_ellipse"

    def __post_init__(self):
        object.__setattr__(self, "shear", _check_shear(self.shear))
        object.__setattr__(self, "mass_constant",
                           confocal_mass_constant(self.profile, self.geometry))

    @property
    def total_mass(self):
        return self.mass_constant * self.geometry.a * self.geometry.b

    @property
    def support_radius(self):
        return self.geometry.a

    def far_field(self):
        return [(0, self.total_mass)]

    def location(self, z):
        return self.geometry.location(z)

    def plan(self, branch="physical"):
        g = self.geometry
        return Plan(gamma=self.shear, ell_mode=ELL_EXTERIOR, ell_a=g.a, ell_b=g.b,
                    ell_c=g.c, ell_density=self.mass_constant)

    def summary(self):
        out = {"type": self.type_name, **self.geometry.to_dict(),
               "shear": self.shear, "mass_constant": self.mass_constant}
        to_dict = getattr(self.profile, "to_dict", None)
        if to_dict is not None:
            out["profile"] = to_dict()
        return out


@dataclass(frozen=True)
class IsothermalEllipseLens(Lens):
    """Density constant on homothetic ellipses, deflection ``(C0/c) arcsin(c/z)``.

    The closed form is used everywhere off the focal cut; images inside
    the ellipse are reported but carry no count guarantee.
    """

    geometry: EllipseGeometry
    strength: float
    shear: float = 0.0
    type_name = "isothermal_ellipse"

    def __post_init__(self):
        if not self.strength > 0:
            raise ValueError("strength must be positive")
        object.__setattr__(self, "shear", _check_shear(self.shear))

    @property
    def total_mass(self):
        return float(self.strength)

    @property
    def support_radius(self):
        return self.geometry.a

    def far_field(self):
        return [(0, self.strength)]

    def location(self, z):
        return self.geometry.location(z)

    def plan(self, branch="physical"):
        return Plan(gamma=self.shear, iso_strength=self.strength, iso_c=self.geometry.c)

    def summary(self):
        return {"type": self.type_name, **self.geometry.to_dict(),
                "strength": self.strength, "shear": self.shear}


@dataclass(frozen=True)
class RadialLens(Lens):
    """Radially symmetric density on the disk ``|z| < radius``."""

    radius: float
    profile: object
    shear: float = 0.0
    type_name = "radial"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "shear", _check_shear(self.shear))

    @cached_property
    def total_mass(self):
        return float(_radial_enclosed(self.profile, self.radius, self.radius))

    @property
    def support_radius(self):
        return self.radius

    @property
    def isothermal(self):
        return self.profile.kind == RAD_ISOTHERMAL

    @property
    def poles(self):
        if self.isothermal:
            return np.zeros(1, dtype=complex)
        return np.zeros(0, dtype=complex)

    def far_field(self):
        return [(0, self.total_mass)]

    def density(self, r):
        return _radial_density(self.profile, self.radius, r)

    def enclosed_mass(self, r):
        return _radial_enclosed(self.profile, self.radius, r)

    def location(self, z):
        r = abs(complex(z))
        if abs(r - self.radius) < BOUNDARY_TOL * max(1.0, self.radius):
            return "boundary"
        return "interior" if r < self.radius else "exterior"

    def exterior_equivalent(self):
        return ChangRefsdalLens(self.total_mass, self.shear)

    def plan(self, branch="physical"):
        if branch == "exterior":
            return self.exterior_equivalent().plan()
        p0, p1 = self.profile.params(self.radius)
        return Plan(gamma=self.shear, rad_kind=self.profile.kind,
                    rad_radius=self.radius, rad_p0=p0, rad_p1=p1)

    def summary(self):
        return {"type": self.type_name, "radius": self.radius,
                "profile": self.profile.to_dict(), "shear": self.shear,
                "total_mass": self.total_mass}


# -- evaluation ----------------------------------------------------------------

def _check_evaluable(lens, z):
    z = np.asarray(z, dtype=complex)
    poles = lens.poles
    if poles.size:
        d = np.abs(z[..., None] - poles)
        if np.any(d == 0.0):
            raise DomainError("deflection is singular at a point mass")
    if isinstance(lens, ConfocalProfileLens):
        if np.any(lens.geometry.q(z) < -BOUNDARY_TOL):
            raise UnsupportedRegionError(
                "confocal-profile lenses only provide the exterior potential")
    return z


def _scalar(x):
    return x[()] if isinstance(x, np.ndarray) and x.ndim == 0 else x


def deflection(lens, z):
    """Cauchy transform ``∫ dmu(zeta)/(z - zeta)`` under the module normalisation."""
    z = _check_evaluable(lens, z)
    G, _, _ = _pykernels.evaluate(lens.plan(), z)
    return _scalar(np.conj(G))


def lens_map(lens, z):
    """Source position ``w = z - conj(alpha(z)) - gamma conj(z)``."""
    z = _check_evaluable(lens, z)
    G, _, _ = _pykernels.evaluate(lens.plan(), z)
    return _scalar(z - lens.shear * np.conj(z) - G)


def jacobian_parts(lens, z):
    """Wirtinger derivatives ``(dF/dz, dF/dconj(z))`` of the lens map."""
    z = _check_evaluable(lens, z)
    _, gz, gzb = _pykernels.evaluate(lens.plan(), z)
    return _scalar(1.0 - gz), _scalar(-lens.shear - gzb)


def jacobian(lens, z):
    """:class:`JacobianInfo` for a single point."""
    A, B = jacobian_parts(lens, complex(z))
    return JacobianInfo.from_det(abs(A) ** 2 - abs(B) ** 2)


def jacobian_det(lens, z):
    A, B = jacobian_parts(lens, z)
    return np.abs(A) ** 2 - np.abs(B) ** 2


def jacobian_fd(lens, z, h=None):
    """Central-difference determinant of the lens map as a real 2D map."""
    z = complex(z)
    if h is None:
        h = 1e-6 * max(1.0, abs(z))
    fx = (lens_map(lens, z + h) - lens_map(lens, z - h)) / (2 * h)
    fy = (lens_map(lens, z + 1j * h) - lens_map(lens, z - 1j * h)) / (2 * h)
    return fx.real * fy.imag - fx.imag * fy.real


def schwarz_decompose(geometry):
    """Split the ellipse's Schwarz function into inner and outer parts.

    Returns ``(k1, S2)``: ``S1(zeta) = k1 * zeta`` is analytic inside the
    ellipse and ``S2`` is analytic outside it with ``S2(inf) = 0``; on the
    boundary ``S1 + S2`` equals ``conj(zeta)``.
    """
    a, b, c = geometry.a, geometry.b, geometry.c
    k1 = (a - b) / (a + b)  # (a - b)**2 / c**2
    k2 = 2.0 * a * b

    def S2(zeta):
        zeta = np.asarray(zeta, dtype=complex)
        out = k2 / (zeta + sqrt_focal(zeta, c))  # (2ab/c^2)(zeta - sqrt(zeta^2 - c^2))
        return _scalar(out)

    return k1, S2
