"""Uniform masses on quadrature domains and their point-term reduction.

For ``Omega = phi(D)`` with rational ``phi``, Green's theorem gives, for
``z`` outside ``Omega``,

    (1/pi) ∫_Omega dA / (z - zeta)
        = (1 / 2 pi i) ∮_{|t|=1} phit(1/t) phi'(t) / (z - phi(t)) dt,

where ``phit`` has conjugated coefficients, so ``phit(1/t) = conj(phi(t))``
on the circle.  Inside the disk the integrand is singular only where
``phit(1/t)`` is, at ``t_j = 1/conj(beta_j)`` for the poles ``beta_j`` of
``phi`` and at ``t = 0`` when ``phi`` has a polynomial part.  Expanding
``1/(z - phi)`` around ``z_j = phi(t_j)`` turns each residue into finitely
many moments ``m_jk / (z - z_j)**(k+1)``.
"""
from dataclasses import dataclass
import math

import numpy as np
from shapely.geometry import LinearRing

from .analytic_reduction import Polynomial, roots
from .errors import ClusteringError, InjectivityError
from .lens_models import MultipoleLens

BOUNDARY_SAMPLES = 4096
RESIDUE_SAMPLES = 256
BOUNDARY_TOL = 1e-10


@dataclass(frozen=True)
class ConformalMap:
    """``phi(t) = numerator(t) / denominator(t)``, ascending complex coefficients."""

    numerator: Polynomial
    denominator: Polynomial

    def __post_init__(self):
        num = self.numerator if isinstance(self.numerator, Polynomial) else Polynomial(self.numerator)
        den = self.denominator if isinstance(self.denominator, Polynomial) else Polynomial(self.denominator)
        object.__setattr__(self, "numerator", num.trim(0.0))
        object.__setattr__(self, "denominator", den.trim(0.0))
        if self.denominator.is_zero(scale=1.0, rel=0.0):
            raise ValueError("denominator is identically zero")

    @classmethod
    def polynomial(cls, coeffs):
        return cls(Polynomial(coeffs), Polynomial([1.0]))

    @property
    def degree(self):
        return max(self.numerator.degree, self.denominator.degree)

    @property
    def poles(self):
        if self.denominator.degree == 0:
            return np.zeros(0, complex)
        return roots(self.denominator).roots

    @property
    def polynomial_order(self):
        """Order of the pole of phi at infinity (0 if finite there)."""
        return max(self.numerator.degree - self.denominator.degree, 0)

    def __call__(self, t):
        return self.numerator(t) / self.denominator(t)

    def derivative(self, t):
        n, d = self.numerator, self.denominator
        dn, dd = n.deriv(), d.deriv()
        den = d(t)
        return (dn(t) * den - n(t) * dd(t)) / (den * den)

    def reflected(self, t):
        """``phit(1/t)``: equals ``conj(phi(t))`` on the unit circle."""
        u = 1.0 / np.asarray(t, complex)
        return self.numerator.conj()(u) / self.denominator.conj()(u)

    def boundary(self, n=BOUNDARY_SAMPLES):
        return self(np.exp(2j * np.pi * np.arange(n) / n))

    def boundary_param(self, s):
        return self(np.exp(2j * np.pi * np.asarray(s, float)))

    def area(self):
        """Area via (1/2i)∮ conj(zeta) dzeta on the sampled boundary (spectral trapezoid)."""
        n = BOUNDARY_SAMPLES
        t = np.exp(2j * np.pi * np.arange(n) / n)
        z = self(t)
        dz = self.derivative(t) * 1j * t
        return float((np.conj(z) * dz).sum().imag / (2.0 * n) * 2.0 * np.pi)

    def check_injective(self, grid=64):
        poles = self.poles
        if poles.size and np.abs(poles).min() <= 1.0 + 1e-12:
            raise InjectivityError("a pole of the map lies in the closed unit disk")
        if poles.size > 1:
            d = np.abs(poles[:, None] - poles[None, :]) + np.eye(poles.size)
            if d.min() < 1e-8:
                raise InjectivityError("multiple poles are not supported")
        if not LinearRing(np.column_stack([self.boundary().real, self.boundary().imag])).is_simple:
            raise InjectivityError("boundary curve is not simple")
        r = np.linspace(0.0, 1.0, grid)
        th = 2 * np.pi * np.arange(grid) / grid
        t = (r[:, None] * np.exp(1j * th[None, :])).ravel()
        dphi = np.abs(self.derivative(t))
        if not np.all(np.isfinite(dphi)) or dphi.min() <= 1e-12 * max(1.0, dphi.max()):
            raise InjectivityError("derivative vanishes in the closed unit disk")

    def preimages(self, z):
        """All ``t`` with ``phi(t) = z``."""
        p = self.numerator - complex(z) * self.denominator
        p = p.trim()
        if p.degree < 1:
            return np.zeros(0, complex)
        return roots(p).roots

    def location(self, z, tol=BOUNDARY_TOL):
        t = self.preimages(z)
        if t.size == 0:
            return "exterior"
        r = np.abs(t).min()
        if abs(r - 1.0) < tol:
            return "boundary"
        return "interior" if r < 1.0 else "exterior"

    def to_dict(self):
        enc = lambda p: [[c.real, c.imag] for c in p.coefficients]
        return {"numerator": enc(self.numerator), "denominator": enc(self.denominator)}


@dataclass(frozen=True)
class QuadratureDomain:
    """Support object for a :class:`MultipoleLens` built from a conformal map."""

    cmap: ConformalMap

    def location(self, z):
        return self.cmap.location(z)

    def boundary(self, n=BOUNDARY_SAMPLES):
        return self.cmap.boundary(n)

    def boundary_param(self, s):
        return self.cmap.boundary_param(s)


@dataclass(frozen=True)
class QuadratureData:
    nodes: np.ndarray
    moments: tuple  # per node: (m_0, m_1, ...)
    density: float
    area: float
    cmap: ConformalMap = None

    @property
    def weights(self):
        return np.array([ms[0] for ms in self.moments], dtype=complex)

    @property
    def total_mass(self):
        """Sum of point weights, i.e. density * area / pi in the lens normalisation."""
        return complex(self.weights.sum())

    def potential(self, z):
        z = np.asarray(z, complex)
        out = np.zeros_like(z)
        for zj, ms in zip(self.nodes, self.moments):
            for k, m in enumerate(ms):
                out = out + m / (z - zj) ** (k + 1)
        return out

    def to_dict(self):
        return {"nodes": [[z.real, z.imag] for z in self.nodes],
                "moments": [[[m.real, m.imag] for m in ms] for ms in self.moments],
                "weights": [[c.real, c.imag] for c in self.weights],
                "density": self.density, "area": self.area,
                "total_mass": [self.total_mass.real, self.total_mass.imag]}


def _singular_points(cmap):
    """``(t_j, order)`` of the singularities of ``phit(1/t)`` inside the unit disk."""
    pts = [(1.0 / np.conj(b), 1) for b in cmap.poles]
    if cmap.polynomial_order:
        pts.append((0j, cmap.polynomial_order))
    return pts


def nodes_and_weights(cmap, density=1.0, samples=RESIDUE_SAMPLES, check=True):
    """Nodes ``z_j = phi(t_j)`` and moments reproducing the exterior Cauchy transform."""
    if check:
        cmap.check_injective()
    sing = _singular_points(cmap)
    if not sing:
        raise InjectivityError("the conformal map must be non-constant")
    ts = np.array([t for t, _ in sing])
    nodes = cmap(ts)
    if len(nodes) > 1:
        d = np.abs(nodes[:, None] - nodes[None, :]) + np.eye(len(nodes))
        if d.min() < 1e-10:
            raise ClusteringError("two quadrature nodes coincide")
    others = list(ts) + list(cmap.poles)
    moments = []
    theta = 2 * np.pi * np.arange(samples) / samples
    for (tj, order), zj in zip(sing, nodes):
        dist = [abs(tj - o) for o in others if o != tj]
        rho = 0.5 * min(dist) if dist else 0.5
        t = tj + rho * np.exp(1j * theta)
        dt = 1j * rho * np.exp(1j * theta)
        base = cmap.reflected(t) * cmap.derivative(t) * dt
        shift = cmap(t) - zj
        ms = []
        for k in range(order):
            val = density * (base * shift ** k).mean() / 1j  # (1/2 pi i) ∮ f dt
            ms.append(complex(val))
        moments.append(tuple(ms))
    return QuadratureData(nodes=nodes, moments=tuple(moments), density=float(density),
                          area=cmap.area(), cmap=cmap)


def reduce_to_point_lens(qd, shear=0.0):
    """Multipole lens equivalent to the uniform domain outside it."""
    terms = tuple((z, ms) for z, ms in zip(qd.nodes, qd.moments))
    support = QuadratureDomain(qd.cmap) if qd.cmap is not None else None
    return MultipoleLens(terms, shear, support)


def membership(cmap, z):
    """'interior', 'exterior' or 'boundary' from the preimage of ``z`` under phi."""
    return cmap.location(z)


def disk(radius):
    return ConformalMap.polynomial([0.0, radius])


def mass_conservation_error(qd):
    expected = qd.density * qd.area / math.pi
    return abs(qd.total_mass - expected) / abs(expected)
