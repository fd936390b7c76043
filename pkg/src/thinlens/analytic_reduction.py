"""Reduction of rational lens equations to one analytic polynomial.

For a lens whose conjugate deflection is rational, the lens equation is
``conj(z) = r(z)`` with ``r(z) = alpha(z) + gamma z + conj(w)``.
Conjugating gives ``z = rt(conj(z))`` where ``rt`` has the conjugated
coefficients, and substituting the first relation into the second leaves
the analytic equation ``z = rt(r(z))``.  Clearing denominators yields a
polynomial whose roots contain every image; extraneous roots are removed
by checking the original equation.
"""
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import kernels
from ._pykernels import initial_roots
from .errors import DegenerateConfiguration
from .images import DEDUPE_RADIUS, ImageSet, dedupe, make_image
from .lens_models import ChangRefsdalLens, MultipoleLens, PointMassLens

LEAD_TRIM = 1e-14
DEGENERATE_SCALE = 1e-12
POLE_EXCLUSION = 1e-10
FILTER_TOL = 1e-9
POLISH_MAX_MOVE = 1e-3


@dataclass(frozen=True)
class Polynomial:
    """Complex polynomial with ascending coefficients."""

    coefficients: np.ndarray
    trimmed: int = 0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        if c.size == 0:
            c = np.zeros(1, complex)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def from_roots(cls, roots, lead=1.0):
        return cls(lead * npoly.polyfromroots(np.asarray(roots, complex)))

    @property
    def degree(self):
        return self.coefficients.size - 1

    @property
    def lead(self):
        return self.coefficients[-1]

    @property
    def scale(self):
        return float(np.abs(self.coefficients).max())

    def is_zero(self, scale=None, rel=DEGENERATE_SCALE):
        ref = self.scale if scale is None else scale
        return ref == 0.0 or self.scale <= rel * ref

    def trim(self, rel=LEAD_TRIM):
        """Drop leading coefficients with ``|a_k| <= rel * max|a|``; records the count."""
        c = self.coefficients
        cut = rel * np.abs(c).max()
        k = c.size
        while k > 1 and abs(c[k - 1]) <= cut:
            k -= 1
        return Polynomial(c[:k], trimmed=self.trimmed + c.size - k)

    def conj(self):
        return Polynomial(np.conj(self.coefficients))

    def __call__(self, z):
        return npoly.polyval(np.asarray(z, complex), self.coefficients)

    def deriv(self, m=1):
        if self.degree < m:
            return Polynomial(np.zeros(1, complex))
        return Polynomial(npoly.polyder(self.coefficients, m))

    def __add__(self, other):
        return Polynomial(npoly.polyadd(self.coefficients, _coeffs(other)))

    def __sub__(self, other):
        return Polynomial(npoly.polysub(self.coefficients, _coeffs(other)))

    def __mul__(self, other):
        return Polynomial(npoly.polymul(self.coefficients, _coeffs(other)))

    __rmul__ = __mul__

    def __pow__(self, k):
        return Polynomial(npoly.polypow(self.coefficients, k)) if k else Polynomial([1.0])


def _coeffs(p):
    if isinstance(p, Polynomial):
        return p.coefficients
    return np.atleast_1d(np.asarray(p, dtype=complex))


@dataclass(frozen=True)
class RationalFunction:
    numerator: Polynomial
    denominator: Polynomial

    def __post_init__(self):
        if self.denominator.is_zero(scale=1.0, rel=0.0):
            raise ValueError("denominator is identically zero")

    def __call__(self, z):
        return self.numerator(z) / self.denominator(z)

    @property
    def degree(self):
        return max(self.numerator.trim().degree, self.denominator.trim().degree)

    def conj(self):
        return RationalFunction(self.numerator.conj(), self.denominator.conj())

    def poles(self):
        return roots(self.denominator).roots


def _terms_of(lens):
    if isinstance(lens, (PointMassLens, MultipoleLens, ChangRefsdalLens)):
        return lens.multipole_terms()
    raise TypeError(f"{type(lens).__name__} has no rational deflection")


def build_r(lens, w):
    """``r(z) = alpha(z) + gamma z + conj(w)`` over the common denominator."""
    terms = _terms_of(lens)
    lin = Polynomial(np.array([np.conj(complex(w)), lens.shear], dtype=complex))
    factors = [Polynomial([-z0, 1.0]) ** len(ms) for z0, ms in terms]
    Q = Polynomial([1.0])
    for f in factors:
        Q = Q * f
    P = lin * Q
    for j, (z0, ms) in enumerate(terms):
        rest = Polynomial([1.0])
        for i, f in enumerate(factors):
            if i != j:
                rest = rest * f
        order = len(ms)
        base = Polynomial([-z0, 1.0])
        for k, m in enumerate(ms):
            P = P + m * base ** (order - k - 1) * rest
    return RationalFunction(P.trim(0.0), Q)


def polynomialize(r, w=None):
    """Polynomial ``z * Den - Num`` from ``z = rt(r(z))``.

    ``w`` is accepted for symmetry with the lens-equation call sites; the
    source is already folded into ``r``.  Raises
    :class:`DegenerateConfiguration` when the composition cancels
    identically, which happens exactly for a continuum of solutions.
    """
    P, Q = r.numerator.trim(0.0), r.denominator.trim(0.0)
    Pt, Qt = P.conj(), Q.conj()
    d = max(Pt.degree, Qt.degree)
    powP = [Polynomial([1.0])]
    powQ = [Polynomial([1.0])]
    for _ in range(d):
        powP.append(powP[-1] * P)
        powQ.append(powQ[-1] * Q)
    num = Polynomial([0.0])
    den = Polynomial([0.0])
    for k in range(d + 1):
        basis = powP[k] * powQ[d - k]
        if k <= Pt.degree and Pt.coefficients[k] != 0:
            num = num + Pt.coefficients[k] * basis
        if k <= Qt.degree and Qt.coefficients[k] != 0:
            den = den + Qt.coefficients[k] * basis
    zden = Polynomial([0.0, 1.0]) * den
    poly = zden - num
    scale = max(zden.scale, num.scale)
    if poly.is_zero(scale=scale):
        raise DegenerateConfiguration(
            "lens equation reduces to the zero polynomial: continuum of images",
            kind="ring", payload={"scale": scale, "residual_scale": poly.scale})
    return poly.trim()


def polynomialize_chang_refsdal(lens, w):
    """Quartic for ``z - c/conj(z) - gamma conj(z) = w``."""
    if lens.shear == 0.0 and complex(w) == 0.0:
        raise DegenerateConfiguration(
            "Chang-Refsdal lens with zero shear and source at the origin",
            kind="ring", payload={"kind": "circle", "center": [0.0, 0.0],
                                  "radius": float(np.sqrt(lens.mass))})
    return polynomialize(build_r(lens, w), w)


@dataclass(frozen=True)
class RootResult:
    roots: np.ndarray
    converged: np.ndarray
    clusters: tuple  # ((center, multiplicity), ...)
    backward_error: float

    @property
    def all_converged(self):
        return bool(np.all(self.converged))

    @property
    def distinct(self):
        return np.array([c for c, _ in self.clusters], dtype=complex)

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return self.roots.size


def _backward_errors(c, z):
    p = npoly.polyval(z, c)
    mag = npoly.polyval(np.abs(z), np.abs(c))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(mag > 0, np.abs(p) / mag, 0.0)


def _refine_multiple(c, center, m):
    """Newton on the (m-1)-th derivative, which has a simple root at an m-fold root."""
    dm1 = npoly.polyder(c, m - 1)
    dm = npoly.polyder(c, m)
    for _ in range(4):
        den = npoly.polyval(center, dm)
        if den == 0:
            break
        step = npoly.polyval(center, dm1) / den
        if not np.isfinite(step):
            break
        center = center - step
    return center


def _taylor_small(c, center, m, eps=1e-13):
    """True when p and its first m-1 derivatives nearly vanish at ``center``.

    An m-fold root perturbed at level eps spreads by about eps**(1/m), so
    the j-th derivative is allowed a relative size eps**((m-j)/m).
    """
    absc = np.abs(c)
    r = abs(center)
    for j in range(m):
        dj = npoly.polyder(c, j) if j else c
        ref = npoly.polyval(r, npoly.polyder(absc, j) if j else absc)
        if ref and abs(npoly.polyval(center, dj)) > 10.0 * eps ** ((m - j) / m) * ref:
            return False
    return True


def _cluster(c, z, tight=DEDUPE_RADIUS, loose=1e-4):
    n = z.size
    labels = -np.ones(n, dtype=int)
    groups = []

    def link(radius_fn):
        lab = -np.ones(n, dtype=int)
        g = 0
        for i in range(n):
            if lab[i] >= 0:
                continue
            lab[i] = g
            stack = [i]
            while stack:
                k = stack.pop()
                near = np.flatnonzero((lab < 0) & (np.abs(z - z[k]) <= radius_fn(z[k])))
                lab[near] = g
                stack.extend(near.tolist())
            g += 1
        return lab, g

    loose_lab, ng = link(lambda x: loose * (1.0 + abs(x)))
    for g in range(ng):
        members = np.flatnonzero(loose_lab == g)
        centroid = z[members].mean()
        if members.size > 1:
            centroid = _refine_multiple(c, centroid, members.size)
        if members.size == 1 or _taylor_small(c, centroid, members.size):
            labels[members] = len(groups)
            groups.append((centroid, members.size))
            continue
        sub = z[members]
        sub_lab = -np.ones(members.size, dtype=int)
        for i in range(members.size):
            if sub_lab[i] >= 0:
                continue
            near = np.abs(sub - sub[i]) <= tight * (1.0 + abs(sub[i]))
            sub_lab[near & (sub_lab < 0)] = i
        for i in np.unique(sub_lab):
            pick = members[sub_lab == i]
            labels[pick] = len(groups)
            groups.append((z[pick].mean(), pick.size))
    order = sorted(range(len(groups)), key=lambda k: (groups[k][0].real, groups[k][0].imag))
    return tuple((complex(groups[k][0]), int(groups[k][1])) for k in order)


def roots(p, maxit=500):
    """All ``degree`` roots by Aberth iteration, Newton-polished on ``p``."""
    if not isinstance(p, Polynomial):
        p = Polynomial(p)
    p = p.trim()
    c = p.coefficients
    d = p.degree
    if d < 1:
        raise ValueError("polynomial must have degree >= 1")
    z, done = kernels.aberth(c, initial_roots(c), maxit)
    dc = npoly.polyder(c)
    for _ in range(3):
        pz = npoly.polyval(z, c)
        dpz = npoly.polyval(z, dc)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = z - pz / dpz
        better = np.isfinite(cand) & (np.abs(npoly.polyval(cand, c)) < np.abs(pz))
        z = np.where(better, cand, z)
    berr = _backward_errors(c, z)
    converged = done | (berr < 1e-13)
    scaled = np.abs(npoly.polyval(z, c)) / (np.abs(c).max() * (1.0 + np.abs(z)) ** d)
    return RootResult(roots=z, converged=converged, clusters=_cluster(c, z),
                      backward_error=float(scaled.max()))


def filter_spurious(candidates, lens, w, tol=FILTER_TOL, info=None):
    """Keep the candidates that solve the lens equation to ``tol``.

    Each candidate first gets a short Newton polish on the lens equation,
    accepted only if it moves less than ``1e-3 (1 + |z|)``.  Roots close to
    a mass are ill-conditioned in the polynomial, so the polish has to be
    allowed to travel; a spurious root dragged onto a genuine image is
    removed by the deduplication.
    """
    z = np.asarray(candidates, dtype=complex).ravel()
    w = complex(w)
    poles = lens.poles
    if poles.size and z.size:
        far = np.abs(z[:, None] - poles[None, :]).min(axis=1) > POLE_EXCLUSION
        z = z[far]
    z = z[np.isfinite(z)]
    if z.size:
        zp, res, _, _ = kernels.newton_multistart(lens.plan(), z, w, maxit=8, tol=tol)
        moved = np.abs(zp - z) < POLISH_MAX_MOVE * (1.0 + np.abs(z))
        z = np.where(moved & np.isfinite(res), zp, z)
    images = []
    for zi in z:
        if poles.size and np.abs(zi - poles).min() <= POLE_EXCLUSION:
            continue
        im = make_image(lens, zi, w)
        if im.residual < tol:
            images.append(im)
    keep = dedupe([im.z for im in images], [im.residual for im in images])
    return ImageSet(tuple(images[k] for k in keep), lens.summary(), w, info=dict(info or {}))


def solve_rational(lens, w, tol=FILTER_TOL):
    """Full analytic path: build ``r``, polynomialize, root, filter."""
    if isinstance(lens, ChangRefsdalLens):
        poly = polynomialize_chang_refsdal(lens, w)
    else:
        poly = polynomialize(build_r(lens, w), w)
    rr = roots(poly)
    info = {"method": "analytic", "degree": poly.degree, "trimmed": poly.trimmed,
            "roots_converged": rr.all_converged}
    return filter_spurious(rr.roots, lens, w, tol=tol, info=info)
