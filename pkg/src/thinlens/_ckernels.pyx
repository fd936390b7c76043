# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels mirroring ``_pykernels`` loop for loop."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, hypot, atan2, log, fabs, copysign, isfinite, pow, log1p, NAN

cnp.import_array()

BACKEND = "cython"

cdef double ARMIJO_SLOPE = 1e-4
cdef double ARMIJO_FACTOR = 0.5
cdef int MAX_BACKTRACK = 40
cdef double NEWTON_SWITCH = 1e-10

cdef enum:
    ELL_NONE = 0
    ELL_EXTERIOR = 1
    ELL_PIECEWISE = 2
    RAD_NONE = 0
    RAD_UNIFORM = 1
    RAD_ISOTHERMAL = 2
    RAD_POWER = 3


cdef struct CPlan:
    double gamma
    int ell_mode
    double ea, eb, ec, edens
    int iso_on
    double iso_C0, iso_c
    int rad_kind
    double rR, rp0, rp1
    Py_ssize_t nterms
    double complex* nodes
    long long* orders
    double complex* weights


cdef inline double complex csqrt_p(double complex u) noexcept nogil:
    cdef double x = u.real
    cdef double y = u.imag + 0.0
    cdef double r = hypot(x, y)
    cdef double t
    if r == 0.0:
        return 0.0
    if x >= 0.0:
        t = sqrt(0.5 * (r + x))
        return t + 1j * (y / (2.0 * t))
    t = sqrt(0.5 * (r - x))
    return fabs(y) / (2.0 * t) + 1j * copysign(t, y)


cdef inline double complex sqrt_focal(double complex z, double c) noexcept nogil:
    cdef double complex zz = z.real + 1j * (z.imag + 0.0)
    return csqrt_p(zz - c) * csqrt_p(zz + c)


cdef inline double complex clog1p(double complex u) noexcept nogil:
    cdef double re = u.real
    cdef double im = u.imag
    return 0.5 * log1p(2.0 * re + re * re + im * im) + 1j * atan2(im, 1.0 + re)


cdef inline double complex conj(double complex u) noexcept nogil:
    return u.real - 1j * u.imag


cdef inline void plan_eval(CPlan* p, double complex z, double complex* G,
                           double complex* gz, double complex* gzb) noexcept nogil:
    cdef double complex inv, pw, m, s, ext, ext_d, alpha, zb, safe
    cdef Py_ssize_t j
    cdef long long k, e
    cdef double scale, q, kappa0, rho, r, mass, phi, u
    G[0] = 0
    gz[0] = 0
    gzb[0] = 0
    zb = conj(z)
    for j in range(p.nterms):
        k = p.orders[j]
        m = p.weights[j]
        inv = 1.0 / (z - p.nodes[j])
        pw = inv
        for e in range(k):
            pw = pw * inv
        G[0] = G[0] + conj(m * pw)
        gzb[0] = gzb[0] + conj(-(k + 1) * m * pw * inv)
    if p.ell_mode != ELL_NONE:
        scale = p.edens * 2.0 * p.ea * p.eb / (p.ec * p.ec)
        s = sqrt_focal(z, p.ec)
        ext = conj(scale * p.ec * p.ec / (z + s))
        ext_d = conj(-scale * p.ec * p.ec / ((z + s) * s))
        if p.ell_mode == ELL_EXTERIOR:
            G[0] = G[0] + ext
            gzb[0] = gzb[0] + ext_d
        else:
            q = (z.real / p.ea) * (z.real / p.ea) + (z.imag / p.eb) * (z.imag / p.eb) - 1.0
            if q < 0.0:
                kappa0 = (p.ea - p.eb) / (p.ea + p.eb)
                G[0] = G[0] + p.edens * (z - kappa0 * zb)
                gz[0] = gz[0] + p.edens
                gzb[0] = gzb[0] - p.edens * kappa0
            else:
                G[0] = G[0] + ext
                gzb[0] = gzb[0] + ext_d
    if p.iso_on:
        s = sqrt_focal(z, p.iso_c)
        alpha = (p.iso_C0 / p.iso_c) * (-1j) * clog1p((1j * p.iso_c - p.iso_c * p.iso_c / (z + s)) / z)
        G[0] = G[0] + conj(alpha)
        gzb[0] = gzb[0] + conj(-p.iso_C0 / (z * s))
    if p.rad_kind != RAD_NONE:
        rho = hypot(z.real, z.imag)
        r = rho if rho < p.rR else p.rR
        phi = 0.0
        if p.rad_kind == RAD_UNIFORM:
            phi = p.rp0
            mass = p.rp0 * r * r
        elif p.rad_kind == RAD_ISOTHERMAL:
            phi = p.rp0 / r
            mass = 2.0 * p.rp0 * r
        else:
            u = 1.0 - (r / p.rR) * (r / p.rR)
            if u < 0.0:
                u = 0.0
            phi = p.rp0 * pow(u, p.rp1)
            mass = p.rp0 * p.rR * p.rR * (1.0 - pow(u, p.rp1 + 1.0)) / (p.rp1 + 1.0)
        if rho >= p.rR:
            phi = 0.0
        if rho > 0.0:
            G[0] = G[0] + mass / zb
            gz[0] = gz[0] + phi
            gzb[0] = gzb[0] + phi * z / zb - mass / (zb * zb)
        elif p.rad_kind == RAD_ISOTHERMAL:
            G[0] = G[0] + NAN
            gz[0] = gz[0] + phi


cdef inline void parts(CPlan* p, double complex z, double complex w, double complex* F,
                       double complex* A, double complex* B) noexcept nogil:
    cdef double complex G, gz, gzb
    plan_eval(p, z, &G, &gz, &gzb)
    F[0] = z - p.gamma * conj(z) - G - w
    A[0] = 1.0 - gz
    B[0] = -p.gamma - gzb


cdef inline double complex direction(double complex F, double complex A,
                                     double complex B) noexcept nogil:
    cdef double aa = A.real * A.real + A.imag * A.imag
    cdef double bb = B.real * B.real + B.imag * B.imag
    cdef double det = aa - bb
    cdef double scale = aa + bb
    cdef double j11, j21, j12, j22, mu, m11, m22, m12, g1, g2, dm
    if fabs(det) > NEWTON_SWITCH * scale:
        return (conj(A) * (-F) - B * conj(-F)) / det
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
    return ((m22 * g1 - m12 * g2) + 1j * (m11 * g2 - m12 * g1)) / dm


cdef inline double cabs(double complex u) noexcept nogil:
    return hypot(u.real, u.imag)


cdef inline bint cfinite(double complex u) noexcept nogil:
    return isfinite(u.real) and isfinite(u.imag)


cdef CPlan make_plan(double[::1] params, double complex[::1] nodes,
                     long long[::1] orders, double complex[::1] weights):
    cdef CPlan p
    p.gamma = params[0]
    p.ell_mode = <int> params[1]
    p.ea = params[2]
    p.eb = params[3]
    p.ec = params[4]
    p.edens = params[5]
    p.iso_on = <int> params[6]
    p.iso_C0 = params[7]
    p.iso_c = params[8]
    p.rad_kind = <int> params[9]
    p.rR = params[10]
    p.rp0 = params[11]
    p.rp1 = params[12]
    p.nterms = nodes.shape[0]
    p.nodes = &nodes[0] if p.nterms > 0 else NULL
    p.orders = &orders[0] if p.nterms > 0 else NULL
    p.weights = &weights[0] if p.nterms > 0 else NULL
    return p


def _packed(plan):
    params, nodes, orders, weights = plan.pack()
    if nodes.size == 0:
        # memoryviews need a buffer even when empty
        nodes = np.zeros(1, dtype=np.complex128)[:0]
        orders = np.zeros(1, dtype=np.int64)[:0]
        weights = np.zeros(1, dtype=np.complex128)[:0]
    return params, nodes, orders, weights


def evaluate(plan, z):
    params, nodes, orders, weights = _packed(plan)
    zin = np.asarray(z, dtype=np.complex128)
    flat = np.ascontiguousarray(zin.ravel())
    cdef double[::1] pv = params
    cdef double complex[::1] nv = nodes
    cdef long long[::1] ov = orders
    cdef double complex[::1] wv = weights
    cdef CPlan p = make_plan(pv, nv, ov, wv)
    cdef Py_ssize_t n = flat.shape[0], i
    G = np.empty(n, dtype=np.complex128)
    gz = np.empty(n, dtype=np.complex128)
    gzb = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] zv = flat
    cdef double complex[::1] Gv = G
    cdef double complex[::1] gzv = gz
    cdef double complex[::1] gzbv = gzb
    with nogil:
        for i in range(n):
            plan_eval(&p, zv[i], &Gv[i], &gzv[i], &gzbv[i])
    shape = zin.shape
    return G.reshape(shape), gz.reshape(shape), gzb.reshape(shape)


def newton_multistart(plan, starts, w, int maxit=60, double tol=1e-10, double zmax=np.inf):
    params, nodes, orders, weights = _packed(plan)
    cdef double[::1] pv = params
    cdef double complex[::1] nv = nodes
    cdef long long[::1] ov = orders
    cdef double complex[::1] wv = weights
    cdef CPlan p = make_plan(pv, nv, ov, wv)
    z_out = np.array(starts, dtype=np.complex128, copy=True).ravel()
    cdef Py_ssize_t n = z_out.shape[0], i
    res_out = np.empty(n, dtype=np.float64)
    its_out = np.zeros(n, dtype=np.int64)
    conv_out = np.zeros(n, dtype=np.uint8)
    cdef double complex[::1] zv = z_out
    cdef double[::1] rv = res_out
    cdef long long[::1] itv = its_out
    cdef unsigned char[::1] cv = conv_out
    cdef double complex ww = w
    cdef double complex z, F, A, B, d, zc, Fc, Ac, Bc
    cdef double r, f0, t, rc, floor_, az
    cdef int it, bt
    cdef bint accepted
    with nogil:
        for i in range(n):
            z = zv[i]
            parts(&p, z, ww, &F, &A, &B)
            r = cabs(F)
            if isfinite(r):
                for it in range(maxit):
                    floor_ = 1e-14 * (1.0 + cabs(z) + cabs(ww))
                    if r <= floor_:
                        break
                    itv[i] += 1
                    d = direction(F, A, B)
                    if not cfinite(d):
                        break
                    f0 = r * r
                    t = 1.0
                    accepted = False
                    for bt in range(MAX_BACKTRACK):
                        zc = z + t * d
                        parts(&p, zc, ww, &Fc, &Ac, &Bc)
                        rc = cabs(Fc)
                        if isfinite(rc) and rc * rc <= (1.0 - 2.0 * ARMIJO_SLOPE * t) * f0:
                            accepted = True
                            break
                        t *= ARMIJO_FACTOR
                    if not accepted:
                        break
                    az = cabs(z)
                    if cabs(zc - z) <= 1e-15 * (1.0 + az):
                        z = zc
                        F = Fc
                        A = Ac
                        B = Bc
                        r = rc
                        break
                    z = zc
                    F = Fc
                    A = Ac
                    B = Bc
                    r = rc
                    if cabs(z) > zmax:
                        break
            zv[i] = z
            rv[i] = r
            cv[i] = isfinite(r) and r < tol and cabs(z) <= zmax
    return z_out, res_out, conv_out.astype(bool), its_out


def aberth(coeffs, starts, int maxit=500):
    cdef double complex[::1] a = np.ascontiguousarray(coeffs, dtype=np.complex128)
    z_out = np.array(starts, dtype=np.complex128, copy=True)
    cdef double complex[::1] z = z_out
    cdef Py_ssize_t d = z.shape[0], m = a.shape[0], i, j, it
    done_out = np.zeros(d, dtype=np.uint8)
    cdef unsigned char[::1] done = done_out
    corr_arr = np.zeros(d, dtype=np.complex128)
    cdef double complex[::1] corr = corr_arr
    bad_arr = np.zeros(d, dtype=np.uint8)
    cdef unsigned char[::1] bad = bad_arr
    cdef double complex p, dp, ratio, s
    cdef bint all_done
    with nogil:
        for it in range(maxit):
            for i in range(d):
                if done[i]:
                    corr[i] = 0
                    continue
                p = a[m - 1]
                dp = 0
                for j in range(m - 2, -1, -1):
                    dp = dp * z[i] + p
                    p = p * z[i] + a[j]
                if p == 0:
                    corr[i] = 0
                    continue
                ratio = p / dp
                s = 0
                for j in range(d):
                    if j != i:
                        s = s + 1.0 / (z[i] - z[j])
                corr[i] = ratio / (1.0 - ratio * s)
                bad[i] = not cfinite(corr[i])
                if bad[i]:
                    corr[i] = 1e-7 * (1.0 + cabs(z[i])) * (0.6 + 0.8j)
            all_done = True
            for i in range(d):
                if done[i]:
                    continue
                z[i] = z[i] - corr[i]
                if not bad[i] and cabs(corr[i]) <= 4e-16 * (1.0 + cabs(z[i])):
                    done[i] = 1
                else:
                    all_done = False
            if all_done:
                break
    return z_out, done_out.astype(bool)
