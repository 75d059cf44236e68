"""Samplers for the non-standard full conditionals.

All draws are built from uniforms taken off the caller's
``numpy.random.Generator`` by the active kernel backend, so a given seed
gives the same stream with either backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import EmptyRegion, InvalidParams

__all__ = [
    "GIGSpec",
    "gig_mean",
    "gig_second_moment",
    "sample_gig",
    "sample_truncated_normal",
    "sample_truncated_exponential",
]


@dataclass(frozen=True)
class GIGSpec:
    """GIG law with density proportional to ``x**(lam-1) exp(-(chi/x + psi*x)/2)``."""

    chi: float
    psi: float
    lam: float

    def __post_init__(self):
        chi, psi, lam = float(self.chi), float(self.psi), float(self.lam)
        if not all(map(math.isfinite, (chi, psi, lam))) or chi < 0 or psi < 0:
            raise InvalidParams(f"invalid GIG parameters chi={chi}, psi={psi}, lambda={lam}")
        ok = (chi > 0 and psi > 0) or (chi == 0 and psi > 0 and lam > 0) \
            or (psi == 0 and chi > 0 and lam < 0)
        if not ok:
            raise InvalidParams(f"unsupported GIG parameters chi={chi}, psi={psi}, lambda={lam}")


def _bessel_moment(spec: GIGSpec, r):
    from scipy.special import kve
    chi, psi, lam = spec.chi, spec.psi, spec.lam
    if chi == 0:
        # Gamma(lam, rate psi/2)
        from scipy.special import gammaln
        return math.exp(gammaln(lam + r) - gammaln(lam) + r * math.log(2 / psi))
    if psi == 0:
        from scipy.special import gammaln
        if -lam - r <= 0:
            return math.inf
        return math.exp(gammaln(-lam - r) - gammaln(-lam) + r * math.log(chi / 2))
    om = math.sqrt(chi * psi)
    if om < 1e-10 and lam != 0:
        # Bessel ratio underflows; use the Gamma / inverse-Gamma limit
        return _bessel_moment(GIGSpec(0.0, psi, lam) if lam > 0 else GIGSpec(chi, 0.0, lam), r)
    return (chi / psi) ** (r / 2) * kve(lam + r, om) / kve(lam, om)


def gig_mean(spec: GIGSpec) -> float:
    return _bessel_moment(spec, 1)


def gig_second_moment(spec: GIGSpec) -> float:
    return _bessel_moment(spec, 2)


def sample_gig(spec: GIGSpec, rng, size=None):
    """Draw from the GIG law (scalar, or an array of ``size`` draws)."""
    if size is None:
        return kernels.gig(spec.chi, spec.psi, spec.lam, rng)
    n = int(np.prod(size))
    out = np.empty(n)
    kernels.gig_fill(np.full(n, float(spec.chi)), float(spec.psi), float(spec.lam), rng, out)
    return out.reshape(size)


def sample_truncated_normal(mean, sd, lower, upper, rng, size=None):
    """Draw from N(mean, sd^2) restricted to (lower, upper) by stable inversion.

    Uses log-space tail probabilities, so extreme regions cost one uniform
    per draw with no rejection loop.
    """
    mean, sd, lower, upper = float(mean), float(sd), float(lower), float(upper)
    if not sd > 0 or not math.isfinite(sd):
        raise InvalidParams("sd must be positive and finite")
    if not lower < upper:
        raise EmptyRegion(f"empty truncation region ({lower}, {upper})")
    if size is None:
        return kernels.truncnorm(mean, sd, lower, upper, rng)
    n = int(np.prod(size))
    out = np.empty(n)
    kernels.truncnorm_fill(mean, sd, lower, upper, rng, out)
    return out.reshape(size)


def sample_truncated_exponential(lower, rng, size=None):
    """Exp(1) conditioned to exceed ``lower``: ``lower + E`` by memorylessness."""
    lower = float(lower)
    if not (lower >= 0 and math.isfinite(lower)):
        raise InvalidParams("lower must be finite and non-negative")
    if size is None:
        return lower + kernels.exponential(rng)
    n = int(np.prod(size))
    out = np.array([kernels.exponential(rng) for _ in range(n)])
    return (lower + out).reshape(size)
