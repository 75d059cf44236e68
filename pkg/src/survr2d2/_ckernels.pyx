# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see ``_pykernels`` for the reference implementation.

Uniforms come straight from the numpy bit generator (``next_double``) so the
stream matches ``Generator.random()`` one-for-one.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport (INFINITY, NAN, M_PI, acos, cos, exp, expm1, fabs, isfinite,
                        log, log1p, pow, sqrt)
from libc.float cimport DBL_MAX, DBL_MIN
from numpy.random cimport bitgen_t
from scipy.special.cython_special cimport log_ndtr, ndtr, ndtri, ndtri_exp

BACKEND = "cython"

cdef double _TINY_U = 5.551115123125783e-17  # 2**-54
cdef double _OMEGA_EPS = 1e-14
cdef double _FAR_TAIL = 1e8


cdef inline bitgen_t* _bg(object rng) except NULL:
    return <bitgen_t*> PyCapsule_GetPointer(rng.bit_generator.capsule, "BitGenerator")


cdef inline double _unif(bitgen_t* bg) noexcept nogil:
    cdef double u = bg.next_double(bg.state)
    return u if u > 0.0 else _TINY_U


cdef inline double _norm(bitgen_t* bg) noexcept nogil:
    return ndtri(_unif(bg))


cdef double _gamma1(double shape, bitgen_t* bg) noexcept nogil:
    cdef double d = shape - 1.0 / 3.0
    cdef double c = 1.0 / sqrt(9.0 * d)
    cdef double x, v, u
    while True:
        x = _norm(bg)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = _unif(bg)
        if log(u) < 0.5 * x * x + d - d * v + d * log(v):
            return d * v


cdef double _gamma(double shape, double rate, bitgen_t* bg) noexcept nogil:
    cdef double g, u, x
    if shape >= 1.0:
        return _gamma1(shape, bg) / rate
    g = _gamma1(shape + 1.0, bg)
    u = _unif(bg)
    x = exp(log(g) + log(u) / shape) / rate
    return x if x >= DBL_MIN else DBL_MIN


cdef inline double _gig_mode(double lam, double omega) noexcept nogil:
    if lam >= 1.0:
        return (sqrt((lam - 1.0) * (lam - 1.0) + omega * omega) + (lam - 1.0)) / omega
    return omega / (sqrt((1.0 - lam) * (1.0 - lam) + omega * omega) + (1.0 - lam))


cdef double _rou_shift(double lam, double omega, bitgen_t* bg) noexcept nogil:
    cdef double t = 0.5 * (lam - 1.0)
    cdef double s = 0.25 * omega
    cdef double xm = _gig_mode(lam, omega)
    cdef double nc = t * log(xm) - s * (xm + 1.0 / xm)
    cdef double a = -(2.0 * (lam + 1.0) / omega + xm)
    cdef double b = 2.0 * (lam - 1.0) * xm / omega - 1.0
    cdef double c = xm
    cdef double p = b - a * a / 3.0
    cdef double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c
    cdef double fi = acos(-q / (2.0 * sqrt(-(p * p * p) / 27.0)))
    cdef double fak = 2.0 * sqrt(-p / 3.0)
    cdef double y1 = fak * cos(fi / 3.0) - a / 3.0
    cdef double y2 = fak * cos(fi / 3.0 + 4.0 / 3.0 * M_PI) - a / 3.0
    cdef double uplus = (y1 - xm) * exp(t * log(y1) - s * (y1 + 1.0 / y1) - nc)
    cdef double uminus = (y2 - xm) * exp(t * log(y2) - s * (y2 + 1.0 / y2) - nc)
    cdef double u, v, x
    while True:
        u = uminus + _unif(bg) * (uplus - uminus)
        v = _unif(bg)
        x = u / v + xm
        if x > 0.0 and log(v) <= t * log(x) - s * (x + 1.0 / x) - nc:
            return x


cdef double _rou_noshift(double lam, double omega, bitgen_t* bg) noexcept nogil:
    cdef double t = 0.5 * (lam - 1.0)
    cdef double s = 0.25 * omega
    cdef double xm = _gig_mode(lam, omega)
    cdef double nc = t * log(xm) - s * (xm + 1.0 / xm)
    cdef double ym = ((lam + 1.0) + sqrt((lam + 1.0) * (lam + 1.0) + omega * omega)) / omega
    cdef double um = exp(0.5 * (lam + 1.0) * log(ym) - s * (ym + 1.0 / ym) - nc)
    cdef double u, v, x
    while True:
        u = um * _unif(bg)
        v = _unif(bg)
        x = u / v
        if log(v) <= t * log(x) - s * (x + 1.0 / x) - nc:
            return x


cdef double _gig_concave(double lam, double omega, bitgen_t* bg) noexcept nogil:
    cdef double xm = _gig_mode(lam, omega)
    cdef double x0 = omega / (1.0 - lam)
    cdef double k0 = exp((lam - 1.0) * log(xm) - 0.5 * omega * (xm + 1.0 / xm))
    cdef double a0 = k0 * x0
    cdef double k1, a1, k2, a2, atot, v, x, hx, u, lo
    if x0 >= 2.0 / omega:
        k1 = 0.0
        a1 = 0.0
        k2 = pow(x0, lam - 1.0)
        a2 = k2 * 2.0 * exp(-omega * x0 / 2.0) / omega
    else:
        k1 = exp(-omega)
        if lam == 0.0:
            a1 = k1 * log(2.0 / (omega * omega))
        else:
            a1 = k1 / lam * (pow(2.0 / omega, lam) - pow(x0, lam))
        k2 = pow(2.0 / omega, lam - 1.0)
        a2 = k2 * 2.0 * exp(-1.0) / omega
    atot = a0 + a1 + a2
    while True:
        v = atot * _unif(bg)
        if v <= a0:
            x = x0 * v / a0
            hx = k0
        else:
            v -= a0
            if v <= a1:
                if lam == 0.0:
                    x = omega * exp(exp(omega) * v)
                    hx = k1 / x
                else:
                    x = pow(pow(x0, lam) + lam / k1 * v, 1.0 / lam)
                    hx = k1 * pow(x, lam - 1.0)
            else:
                v -= a1
                lo = x0 if x0 > 2.0 / omega else 2.0 / omega
                x = -2.0 / omega * log(exp(-omega / 2.0 * lo) - omega / (2.0 * k2) * v)
                hx = k2 * exp(-omega / 2.0 * x)
        u = _unif(bg) * hx
        if log(u) <= (lam - 1.0) * log(x) - omega / 2.0 * (x + 1.0 / x):
            return x


cdef double _gig(double chi, double psi, double lam, bitgen_t* bg) noexcept nogil:
    cdef double x = _gig_raw(chi, psi, lam, bg)
    if x != x:
        return x
    return DBL_MIN if x < DBL_MIN else (DBL_MAX if x > DBL_MAX else x)


cdef double _gig_raw(double chi, double psi, double lam, bitgen_t* bg) noexcept nogil:
    cdef double omega, alpha, lab, y
    if not (chi >= 0.0 and psi >= 0.0 and isfinite(chi) and isfinite(psi) and isfinite(lam)):
        return NAN
    if chi == 0.0:
        if psi > 0.0 and lam > 0.0:
            return _gamma(lam, 0.5 * psi, bg)
        return NAN
    if psi == 0.0:
        if lam < 0.0:
            return 0.5 * chi / _gamma(-lam, 1.0, bg)
        return NAN
    omega = sqrt(chi * psi)
    if omega < _OMEGA_EPS and lam != 0.0:
        if lam > 0.0:
            return _gamma(lam, 0.5 * psi, bg)
        return 0.5 * chi / _gamma(-lam, 1.0, bg)
    alpha = sqrt(chi / psi)
    lab = fabs(lam)
    if lab > 2.0 or omega > 3.0:
        y = _rou_shift(lab, omega, bg)
    elif lab >= 1.0 - 2.25 * omega * omega or omega > 0.2:
        y = _rou_noshift(lab, omega, bg)
    else:
        y = _gig_concave(lab, omega, bg)
    return alpha / y if lam < 0.0 else alpha * y


cdef double _upper_tail(double a, double b, double u) noexcept nogil:
    cdef double width, la, lb, lp
    if a > _FAR_TAIL:
        width = b - a
        if width == INFINITY:
            return a - log1p(-u) / a
        return a - log1p(-u * -expm1(-a * width)) / a
    la = log_ndtr(-a)
    lb = log_ndtr(-b) if b != INFINITY else -INFINITY
    lp = la + log1p(u * expm1(lb - la))
    return -ndtri_exp(lp)


cdef double _truncnorm(double mean, double sd, double lower, double upper,
                       bitgen_t* bg) noexcept nogil:
    cdef double a = (lower - mean) / sd
    cdef double b = (upper - mean) / sd
    cdef double u = _unif(bg)
    cdef double z, pa, pb, x
    if a >= 0.0:
        z = _upper_tail(a, b, u)
    elif b <= 0.0:
        z = -_upper_tail(-b, -a, 1.0 - u)
    else:
        pa = ndtr(a)
        pb = ndtr(b)
        z = ndtri(pa + u * (pb - pa))
    x = mean + sd * z
    if x < lower:
        x = lower
    elif x > upper:
        x = upper
    return x


def uniform(rng):
    cdef bitgen_t* bg = _bg(rng)
    with rng.bit_generator.lock:
        return _unif(bg)


def std_normal(rng):
    cdef bitgen_t* bg = _bg(rng)
    with rng.bit_generator.lock:
        return _norm(bg)


def exponential(rng):
    cdef bitgen_t* bg = _bg(rng)
    with rng.bit_generator.lock:
        return -log(_unif(bg))


def gamma(double shape, double rate, rng):
    cdef bitgen_t* bg = _bg(rng)
    with rng.bit_generator.lock:
        return _gamma(shape, rate, bg)


def gig(double chi, double psi, double lam, rng):
    cdef bitgen_t* bg = _bg(rng)
    with rng.bit_generator.lock:
        return _gig(chi, psi, lam, bg)


def truncnorm(double mean, double sd, double lower, double upper, rng):
    cdef bitgen_t* bg = _bg(rng)
    with rng.bit_generator.lock:
        return _truncnorm(mean, sd, lower, upper, bg)


def gig_fill(const double[::1] chi, double psi, double lam, rng, double[::1] out):
    cdef bitgen_t* bg = _bg(rng)
    cdef Py_ssize_t k
    with rng.bit_generator.lock:
        for k in range(chi.shape[0]):
            out[k] = _gig(chi[k], psi, lam, bg)


def gamma_fill(double shape, const double[::1] rates, rng, double[::1] out):
    cdef bitgen_t* bg = _bg(rng)
    cdef Py_ssize_t k
    with rng.bit_generator.lock:
        for k in range(rates.shape[0]):
            out[k] = _gamma(shape, rates[k], bg)


def normal_fill(rng, double[::1] out):
    cdef bitgen_t* bg = _bg(rng)
    cdef Py_ssize_t k
    with rng.bit_generator.lock:
        for k in range(out.shape[0]):
            out[k] = _norm(bg)


def truncnorm_fill(double mean, double sd, double lower, double upper, rng, double[::1] out):
    cdef bitgen_t* bg = _bg(rng)
    cdef Py_ssize_t k
    with rng.bit_generator.lock:
        for k in range(out.shape[0]):
            out[k] = _truncnorm(mean, sd, lower, upper, bg)


def refresh_gaps(const double[::1] log_y, const double[::1] xb, double beta0, double theta,
                 rng, double[::1] gap):
    cdef bitgen_t* bg = _bg(rng)
    cdef Py_ssize_t i
    cdef double e, s
    with rng.bit_generator.lock:
        for i in range(log_y.shape[0]):
            e = -log(_unif(bg))
            s = log(e) - theta * (log_y[i] - beta0 - xb[i])
            gap[i] = s + log1p(exp(-s)) if s > 0.0 else log1p(exp(s))


def beta_sweep(const double[:, ::1] XT, double[::1] beta, double[::1] xb, double[::1] gap,
               double theta, const double[::1] prior_var, const double[::1] score, rng):
    cdef bitgen_t* bg = _bg(rng)
    cdef Py_ssize_t p = XT.shape[0]
    cdef Py_ssize_t n = XT.shape[1]
    cdef Py_ssize_t i, j
    cdef double bj, lo, hi, x, bnd, v, mean, new, delta, g
    with rng.bit_generator.lock:
        for j in range(p):
            bj = beta[j]
            lo = -INFINITY
            hi = INFINITY
            for i in range(n):
                x = XT[j, i]
                if x > 0.0:
                    bnd = bj - gap[i] / (theta * x)
                    if bnd > lo:
                        lo = bnd
                elif x < 0.0:
                    bnd = bj - gap[i] / (theta * x)
                    if bnd < hi:
                        hi = bnd
            if lo > hi:
                return j
            v = prior_var[j]
            mean = -theta * v * score[j]
            if lo == hi:
                new = lo
            else:
                new = _truncnorm(mean, sqrt(v), lo, hi, bg)
            delta = new - bj
            if delta != 0.0:
                beta[j] = new
                for i in range(n):
                    x = XT[j, i]
                    if x != 0.0:
                        xb[i] += x * delta
                        g = gap[i] + theta * x * delta
                        gap[i] = g if g > 0.0 else 0.0
    return -1


def weibull_loglik(const double[::1] log_y, const long[::1] events, const double[::1] xb,
                   double beta0, double theta):
    cdef Py_ssize_t i
    cdef double lt = log(theta)
    cdef double acc = 0.0
    cdef double tz
    for i in range(log_y.shape[0]):
        tz = theta * (log_y[i] - beta0 - xb[i])
        if tz > 709.0:
            return -INFINITY
        if events[i]:
            acc += lt - log_y[i] + tz
        acc -= exp(tz)
    return acc
