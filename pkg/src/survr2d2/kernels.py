"""Kernel backend selection.

The compiled ``_ckernels`` module is used when it was built; otherwise the
pure-Python ``_pykernels`` fallback is loaded. ``SURVR2D2_PURE=1`` forces
the fallback. Both expose the same functions and consume the RNG stream
identically.
"""

import os

if os.environ.get("SURVR2D2_PURE") == "1":
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        from . import _pykernels as _impl

BACKEND = _impl.BACKEND

uniform = _impl.uniform
std_normal = _impl.std_normal
exponential = _impl.exponential
gamma = _impl.gamma
gig = _impl.gig
truncnorm = _impl.truncnorm
gig_fill = _impl.gig_fill
gamma_fill = _impl.gamma_fill
normal_fill = _impl.normal_fill
truncnorm_fill = _impl.truncnorm_fill
refresh_gaps = _impl.refresh_gaps
beta_sweep = _impl.beta_sweep
weibull_loglik = _impl.weibull_loglik


def get_backend(name):
    """Return the kernel module by name (``"cython"`` or ``"python"``)."""
    if name == "python":
        from . import _pykernels
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
