"""Pure-Python reference kernels.

Mirror of ``_ckernels.pyx``. Every random quantity is derived from uniform
doubles taken one at a time from ``rng.random()``, so both backends consume
the generator stream identically and agree draw for draw up to floating
point rounding.
"""

import math
import sys

from scipy.special import log_ndtr, ndtr, ndtri, ndtri_exp

BACKEND = "python"

_TINY_U = 2.0 ** -54
_OMEGA_EPS = 1e-14
_FAR_TAIL = 1e8
_INF = math.inf
_TINY = sys.float_info.min
_HUGE = sys.float_info.max


def uniform(rng):
    u = rng.random()
    return u if u > 0.0 else _TINY_U


def std_normal(rng):
    return float(ndtri(uniform(rng)))


def exponential(rng):
    return -math.log(uniform(rng))


def _gamma1(shape, rng):
    """Marsaglia-Tsang Gamma(shape, 1) for shape >= 1."""
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = std_normal(rng)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = uniform(rng)
        if math.log(u) < 0.5 * x * x + d - d * v + d * math.log(v):
            return d * v


def gamma(shape, rate, rng):
    if shape >= 1.0:
        return _gamma1(shape, rng) / rate
    g = _gamma1(shape + 1.0, rng)
    u = uniform(rng)
    x = math.exp(math.log(g) + math.log(u) / shape) / rate
    # tiny shapes put real mass below the double range
    return x if x >= _TINY else _TINY


def _gig_mode(lam, omega):
    if lam >= 1.0:
        return (math.sqrt((lam - 1.0) ** 2 + omega * omega) + (lam - 1.0)) / omega
    return omega / (math.sqrt((1.0 - lam) ** 2 + omega * omega) + (1.0 - lam))


def _rou_shift(lam, omega, rng):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    a = -(2.0 * (lam + 1.0) / omega + xm)
    b = 2.0 * (lam - 1.0) * xm / omega - 1.0
    c = xm
    p = b - a * a / 3.0
    q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c
    fi = math.acos(-q / (2.0 * math.sqrt(-(p * p * p) / 27.0)))
    fak = 2.0 * math.sqrt(-p / 3.0)
    y1 = fak * math.cos(fi / 3.0) - a / 3.0
    y2 = fak * math.cos(fi / 3.0 + 4.0 / 3.0 * math.pi) - a / 3.0
    uplus = (y1 - xm) * math.exp(t * math.log(y1) - s * (y1 + 1.0 / y1) - nc)
    uminus = (y2 - xm) * math.exp(t * math.log(y2) - s * (y2 + 1.0 / y2) - nc)
    while True:
        u = uminus + uniform(rng) * (uplus - uminus)
        v = uniform(rng)
        x = u / v + xm
        if x > 0.0 and math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return x


def _rou_noshift(lam, omega, rng):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    ym = ((lam + 1.0) + math.sqrt((lam + 1.0) ** 2 + omega * omega)) / omega
    um = math.exp(0.5 * (lam + 1.0) * math.log(ym) - s * (ym + 1.0 / ym) - nc)
    while True:
        u = um * uniform(rng)
        v = uniform(rng)
        x = u / v
        if math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return x


def _gig_concave(lam, omega, rng):
    """Rejection from a piecewise hat for 0 <= lam < 1 and small omega."""
    xm = _gig_mode(lam, omega)
    x0 = omega / (1.0 - lam)
    k0 = math.exp((lam - 1.0) * math.log(xm) - 0.5 * omega * (xm + 1.0 / xm))
    a0 = k0 * x0
    if x0 >= 2.0 / omega:
        k1 = 0.0
        a1 = 0.0
        k2 = x0 ** (lam - 1.0)
        a2 = k2 * 2.0 * math.exp(-omega * x0 / 2.0) / omega
    else:
        k1 = math.exp(-omega)
        if lam == 0.0:
            a1 = k1 * math.log(2.0 / (omega * omega))
        else:
            a1 = k1 / lam * ((2.0 / omega) ** lam - x0 ** lam)
        k2 = (2.0 / omega) ** (lam - 1.0)
        a2 = k2 * 2.0 * math.exp(-1.0) / omega
    atot = a0 + a1 + a2
    while True:
        v = atot * uniform(rng)
        if v <= a0:
            x = x0 * v / a0
            hx = k0
        else:
            v -= a0
            if v <= a1:
                if lam == 0.0:
                    x = omega * math.exp(math.exp(omega) * v)
                    hx = k1 / x
                else:
                    x = (x0 ** lam + lam / k1 * v) ** (1.0 / lam)
                    hx = k1 * x ** (lam - 1.0)
            else:
                v -= a1
                lo = x0 if x0 > 2.0 / omega else 2.0 / omega
                x = -2.0 / omega * math.log(math.exp(-omega / 2.0 * lo) - omega / (2.0 * k2) * v)
                hx = k2 * math.exp(-omega / 2.0 * x)
        u = uniform(rng) * hx
        if math.log(u) <= (lam - 1.0) * math.log(x) - omega / 2.0 * (x + 1.0 / x):
            return x


def gig(chi, psi, lam, rng):
    """GIG draw, density proportional to x^(lam-1) exp(-(chi/x + psi x)/2).

    Returns NaN for an unsupported parameter triple. Draws outside the
    double range are clamped to [DBL_MIN, DBL_MAX].
    """
    x = _gig(chi, psi, lam, rng)
    if x != x:
        return x
    return _TINY if x < _TINY else (_HUGE if x > _HUGE else x)


def _gig(chi, psi, lam, rng):
    if not (chi >= 0.0 and psi >= 0.0 and math.isfinite(chi) and math.isfinite(psi)
            and math.isfinite(lam)):
        return math.nan
    if chi == 0.0:
        if psi > 0.0 and lam > 0.0:
            return gamma(lam, 0.5 * psi, rng)
        return math.nan
    if psi == 0.0:
        if lam < 0.0:
            return 0.5 * chi / gamma(-lam, 1.0, rng)
        return math.nan
    omega = math.sqrt(chi * psi)
    if omega < _OMEGA_EPS and lam != 0.0:
        if lam > 0.0:
            return gamma(lam, 0.5 * psi, rng)
        return 0.5 * chi / gamma(-lam, 1.0, rng)
    alpha = math.sqrt(chi / psi)
    lab = abs(lam)
    if lab > 2.0 or omega > 3.0:
        y = _rou_shift(lab, omega, rng)
    elif lab >= 1.0 - 2.25 * omega * omega or omega > 0.2:
        y = _rou_noshift(lab, omega, rng)
    else:
        y = _gig_concave(lab, omega, rng)
    return alpha / y if lam < 0.0 else alpha * y


def _upper_tail(a, b, u):
    """Inverse CDF of the standard normal restricted to [a, b], 0 <= a < b."""
    if a > _FAR_TAIL:
        # Mills-ratio regime: Z - a is exponential with rate a
        width = b - a
        if width == _INF:
            return a - math.log1p(-u) / a
        return a - math.log1p(-u * -math.expm1(-a * width)) / a
    la = float(log_ndtr(-a))
    lb = float(log_ndtr(-b)) if b != _INF else -_INF
    lp = la + math.log1p(u * math.expm1(lb - la))
    return -float(ndtri_exp(lp))


def truncnorm(mean, sd, lower, upper, rng):
    """N(mean, sd^2) restricted to (lower, upper) by inversion; one uniform per draw."""
    a = (lower - mean) / sd
    b = (upper - mean) / sd
    u = uniform(rng)
    if a >= 0.0:
        z = _upper_tail(a, b, u)
    elif b <= 0.0:
        z = -_upper_tail(-b, -a, 1.0 - u)
    else:
        pa = float(ndtr(a))
        pb = float(ndtr(b))
        z = float(ndtri(pa + u * (pb - pa)))
    x = mean + sd * z
    if x < lower:
        x = lower
    elif x > upper:
        x = upper
    return x


def gig_fill(chi, psi, lam, rng, out):
    for k in range(chi.shape[0]):
        out[k] = gig(chi[k], psi, lam, rng)


def gamma_fill(shape, rates, rng, out):
    for k in range(rates.shape[0]):
        out[k] = gamma(shape, rates[k], rng)


def normal_fill(rng, out):
    for k in range(out.shape[0]):
        out[k] = std_normal(rng)


def truncnorm_fill(mean, sd, lower, upper, rng, out):
    for k in range(out.shape[0]):
        out[k] = truncnorm(mean, sd, lower, upper, rng)


def refresh_gaps(log_y, xb, beta0, theta, rng, gap):
    """Redraw the latent exponentials; store ``gap = log u - theta (log y - eta)``.

    ``u = A + E`` with ``A = exp(theta (log y - eta))`` and ``E ~ Exp(1)``,
    so ``gap = log1p(E / A)`` evaluated as a softplus in log space.
    """
    for i in range(log_y.shape[0]):
        e = exponential(rng)
        s = math.log(e) - theta * (log_y[i] - beta0 - xb[i])
        gap[i] = s + math.log1p(math.exp(-s)) if s > 0.0 else math.log1p(math.exp(s))


def beta_sweep(XT, beta, xb, gap, theta, prior_var, score, rng):
    """Sequential truncated-normal update of every coefficient.

    ``XT`` is the p x n transposed design. The constraint set for
    coefficient j is the intersection over i of ``gap_i + theta X_ij d > 0``
    where ``d`` is the change in the coefficient. The untruncated conditional
    is ``N(-theta v_j score_j, v_j)`` with ``score_j = sum_i events_i X_ij``.

    Returns -1 on success or the index of the first coefficient whose
    intersected region is empty.
    """
    p, n = XT.shape
    for j in range(p):
        row = XT[j]
        bj = beta[j]
        lo = -_INF
        hi = _INF
        for i in range(n):
            x = row[i]
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
            new = truncnorm(mean, math.sqrt(v), lo, hi, rng)
        delta = new - bj
        if delta != 0.0:
            beta[j] = new
            for i in range(n):
                x = row[i]
                if x != 0.0:
                    xb[i] += x * delta
                    g = gap[i] + theta * x * delta
                    gap[i] = g if g > 0.0 else 0.0
    return -1


def weibull_loglik(log_y, events, xb, beta0, theta):
    """Censored Weibull log-likelihood; -inf on overflow."""
    lt = math.log(theta)
    acc = 0.0
    for i in range(log_y.shape[0]):
        z = log_y[i] - beta0 - xb[i]
        tz = theta * z
        if tz > 709.0:
            return -_INF
        if events[i]:
            acc += lt - log_y[i] + tz
        acc -= math.exp(tz)
    return acc
