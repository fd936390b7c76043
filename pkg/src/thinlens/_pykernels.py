"""Pure-numpy kernels: plan evaluation, multistart damped Newton, Aberth.

These are the reference implementations; ``_ckernels.pyx`` mirrors them
loop for loop.  Vectorisation is over starts (Newton) and over roots
(Aberth).
"""
import numpy as np

from ._plan import (ELL_EXTERIOR, ELL_NONE, ELL_PIECEWISE, RAD_ISOTHERMAL,
                    RAD_NONE, RAD_POWER, RAD_UNIFORM)

BACKEND = "python"

ARMIJO_SLOPE = 1e-4
ARMIJO_FACTOR = 0.5
MAX_BACKTRACK = 40
NEWTON_SWITCH = 1e-10  # relative |det J| below which the step is regularised


def sqrt_focal_array(z, c):
    """sqrt(z**2 - c**2) with the cut on [-c, c]; upper limit on the cut."""
    z = np.asarray(z, dtype=complex) + 0.0  # folds -0.0 imaginary parts to +0.0
    return np.sqrt(z - c) * np.sqrt(z + c)


def clog1p(u):
    """log(1 + u) on the principal branch, accurate for small |u|."""
    re = u.real
    im = u.imag
    return 0.5 * np.log1p(2.0 * re + re * re + im * im) + 1j * np.arctan2(im, 1.0 + re)


def _radial_mass(kind, rho, R, p0, p1):
    inside = rho < R
    r = np.minimum(rho, R)
    if kind == RAD_UNIFORM:
        phi = np.full_like(r, p0)
        mass = p0 * r * r
    elif kind == RAD_ISOTHERMAL:
        with np.errstate(divide="ignore"):
            phi = p0 / r
        mass = 2.0 * p0 * r
    elif kind == RAD_POWER:
        u = np.maximum(1.0 - (r / R) ** 2, 0.0)
        phi = p0 * u ** p1
        mass = p0 * R * R * (1.0 - u ** (p1 + 1.0)) / (p1 + 1.0)
    else:
        raise ValueError(f"unknown radial kind {kind}")
    phi = np.where(inside, phi, 0.0)
    return mass, phi


def evaluate(plan, z):
    """Conjugate deflection G(z) and its Wirtinger derivatives.

    The lens map is ``z - gamma*conj(z) - G``; returns ``(G, dG/dz,
    dG/dconj(z))`` with the same shape as ``z``.
    """
    z = np.asarray(z, dtype=complex)
    zb = np.conj(z)
    G = np.zeros_like(z)
    gz = np.zeros_like(z)
    gzb = np.zeros_like(z)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for node, k, m in zip(plan.nodes, plan.orders, plan.weights):
            inv = 1.0 / (z - node)
            p = inv ** (k + 1)
            G += np.conj(m * p)
            gzb += np.conj(-(k + 1) * m * p * inv)

        if plan.ell_mode != ELL_NONE:
            a, b, c = plan.ell_a, plan.ell_b, plan.ell_c
            scale = plan.ell_density * 2.0 * a * b / (c * c)
            s = sqrt_focal_array(z, c)
            zs = z + s  # z - s == c**2 / (z + s) without cancellation
            ext = np.conj(scale * c * c / zs)
            ext_d = np.conj(-scale * c * c / (zs * s))
            if plan.ell_mode == ELL_EXTERIOR:
                G += ext
                gzb += ext_d
            elif plan.ell_mode == ELL_PIECEWISE:
                q = (z.real / a) ** 2 + (z.imag / b) ** 2 - 1.0
                inside = q < 0.0
                sig = plan.ell_density
                kappa0 = (a - b) / (a + b)
                G += np.where(inside, sig * (z - kappa0 * zb), ext)
                gz += np.where(inside, sig, 0.0)
                gzb += np.where(inside, -sig * kappa0, ext_d)

        if plan.iso_strength:
            C0, c = plan.iso_strength, plan.iso_c
            s = sqrt_focal_array(z, c)
            alpha = (C0 / c) * (-1j) * clog1p((1j * c - c * c / (z + s)) / z)
            G += np.conj(alpha)
            gzb += np.conj(-C0 / (z * s))

        if plan.rad_kind != RAD_NONE:
            rho = np.abs(z)
            mass, phi = _radial_mass(plan.rad_kind, rho, plan.rad_radius,
                                     plan.rad_p0, plan.rad_p1)
            regular = rho > 0.0
            safe = np.where(regular, zb, 1.0)
            term = np.where(regular, mass / safe, 0.0)
            if plan.rad_kind == RAD_ISOTHERMAL:
                term = np.where(regular, term, np.nan)
            G += term
            gz += phi
            gzb += np.where(regular, phi * z / safe - mass / (safe * safe), 0.0)
    return G, gz, gzb


def lens_map_parts(plan, z, w=0.0):
    """Return ``(F, A, B)`` where F = lens_map - w, A = dF/dz, B = dF/dz̄."""
    z = np.asarray(z, dtype=complex)
    G, gz, gzb = evaluate(plan, z)
    F = z - plan.gamma * np.conj(z) - G - w
    return F, 1.0 - gz, -plan.gamma - gzb


def newton_direction(F, A, B):
    """Solve A·d + B·conj(d) = -F, regularised where det J is tiny."""
    aa = np.abs(A) ** 2
    bb = np.abs(B) ** 2
    det = aa - bb
    scale = aa + bb
    with np.errstate(divide="ignore", invalid="ignore"):
        newton = (np.conj(A) * (-F) - B * np.conj(-F)) / det
        # Levenberg–Marquardt on the real 2x2 system
        j11 = (A + B).real
        j21 = (A + B).imag
        j12 = -(A - B).imag
        j22 = (A - B).real
        mu = 1e-12 * scale
        m11 = j11 * j11 + j21 * j21 + mu
        m22 = j12 * j12 + j22 * j22 + mu
        m12 = j11 * j12 + j21 * j22
        g1 = -(j11 * F.real + j21 * F.imag)
        g2 = -(j12 * F.real + j22 * F.imag)
        dm = m11 * m22 - m12 * m12
        lm = ((m22 * g1 - m12 * g2) + 1j * (m11 * g2 - m12 * g1)) / dm
    return np.where(np.abs(det) > NEWTON_SWITCH * scale, newton, lm)


def newton_multistart(plan, starts, w, maxit=60, tol=1e-10, zmax=np.inf):
    """Damped Newton from every start.

    Returns ``(z, residual, converged, iterations)`` arrays.
    """
    z = np.array(starts, dtype=complex, copy=True).ravel()
    n = z.size
    res = np.full(n, np.inf)
    its = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)

    F, A, B = lens_map_parts(plan, z, w)
    res = np.abs(F)
    active &= np.isfinite(res)
    for it in range(maxit):
        floor = 1e-14 * (1.0 + np.abs(z) + abs(w))
        active &= res > floor
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        its[idx] += 1
        d = newton_direction(F[idx], A[idx], B[idx])
        f0 = res[idx] ** 2
        zi = z[idx]
        t = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        new_z = zi.copy()
        new_F = F[idx].copy()
        new_A = A[idx].copy()
        new_B = B[idx].copy()
        new_r = res[idx].copy()
        pending = np.isfinite(d)
        for _ in range(MAX_BACKTRACK):
            pi = np.flatnonzero(pending)
            if pi.size == 0:
                break
            zc = zi[pi] + t[pi] * d[pi]
            Fc, Ac, Bc = lens_map_parts(plan, zc, w)
            rc = np.abs(Fc)
            ok = np.isfinite(rc) & (rc * rc <= (1.0 - 2.0 * ARMIJO_SLOPE * t[pi]) * f0[pi])
            acc = pi[ok]
            new_z[acc] = zc[ok]
            new_F[acc] = Fc[ok]
            new_A[acc] = Ac[ok]
            new_B[acc] = Bc[ok]
            new_r[acc] = rc[ok]
            accepted[acc] = True
            pending[acc] = False
            t[pi[~ok]] *= ARMIJO_FACTOR
        step = np.abs(new_z - zi)
        z[idx] = new_z
        F[idx] = new_F
        A[idx] = new_A
        B[idx] = new_B
        res[idx] = new_r
        stop = ~accepted | (step <= 1e-15 * (1.0 + np.abs(zi))) | (np.abs(new_z) > zmax)
        active[idx[stop]] = False
    converged = np.isfinite(res) & (res < tol) & (np.abs(z) <= zmax)
    return z, res, converged, its


def _horner(coeffs, z):
    """p(z) and p'(z) for ascending coefficients."""
    p = np.full_like(z, coeffs[-1])
    dp = np.zeros_like(z)
    for a in coeffs[-2::-1]:
        dp = dp * z + p
        p = p * z + a
    return p, dp


def initial_roots(coeffs):
    """Aberth starting points on a circle of half the Fujiwara root bound.

    Exact zero roots (vanishing low-order coefficients) start at 0.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    d = coeffs.size - 1
    lead = coeffs[-1]
    nz = np.flatnonzero(coeffs)
    low = nz[0]
    k = np.arange(1, d - low + 1)
    ratios = np.abs(coeffs[d - k]) / abs(lead)
    if ratios.size:
        ratios[-1] *= 0.5
    radius = float((ratios ** (1.0 / k)).max()) if k.size else 1.0
    if not np.isfinite(radius) or radius == 0.0:
        radius = 1.0
    theta = 2.0 * np.pi * np.arange(d) / max(d, 1) + 0.7 / max(d, 1)
    start = radius * np.exp(1j * theta)
    start[:low] = 0.0  # exact zero roots
    return start


def aberth(coeffs, starts, maxit=500):
    """Simultaneous Aberth–Ehrlich iteration.  Returns (roots, converged)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    z = np.array(starts, dtype=complex, copy=True)
    d = z.size
    done = np.zeros(d, dtype=bool)
    eye = np.eye(d, dtype=bool)
    for _ in range(maxit):
        p, dp = _horner(coeffs, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(p == 0, 0.0, p / dp)
            diff = z[:, None] - z[None, :]
            diff[eye] = 1.0
            inv = 1.0 / diff
            inv[eye] = 0.0
            s = inv.sum(axis=1)
            corr = ratio / (1.0 - ratio * s)
        bad = ~np.isfinite(corr)
        corr = np.where(bad, 1e-7 * (1.0 + np.abs(z)) * (0.6 + 0.8j), corr)
        corr[done] = 0.0
        z = z - corr
        done |= ~bad & (np.abs(corr) <= 4e-16 * (1.0 + np.abs(z)))
        if done.all():
            break
    return z, done
