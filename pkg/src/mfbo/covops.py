"""Backend dispatch for covariance construction.

The compiled extension (mfbo._covcore) is used when it imported cleanly;
otherwise the numpy fallback takes over. Set the environment variable
MFBO_PURE_PY=1 before import, or call use_backend("numpy"), to force the
fallback explicitly (benchmarks/bench_covops.py does this to time both).
"""

import os

import numpy as np

from . import _covnumpy

try:
    from . import _covcore
except ImportError:
    _covcore = None

_IMPL = _covnumpy
if _covcore is not None and not os.environ.get("MFBO_PURE_PY"):
    _IMPL = _covcore


def available_backends():
    names = ["numpy"]
    if _covcore is not None:
        names.insert(0, "compiled")
    return tuple(names)


def active_backend():
    return "compiled" if _IMPL is _covcore else "numpy"


def use_backend(name):
    """Switch backend at runtime. Returns the previously active name."""
    global _IMPL
    prev = active_backend()
    if name == "numpy":
        _IMPL = _covnumpy
    elif name == "compiled":
        if _covcore is None:
            raise RuntimeError("compiled covariance core is not available")
        _IMPL = _covcore
    else:
        raise ValueError("unknown backend %r" % (name,))
    return prev


def _prep(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected a 2-d point array, got shape %s" % (x.shape,))
    return x


def se_cross(xa, xb, lengthscales, signal_variance):
    """k(xa_i, xb_j) = signal_variance * exp(-0.5 * sum_k ((a-b)_k/ls_k)^2)."""
    xa = _prep(xa)
    xb = _prep(xb)
    ls = np.ascontiguousarray(lengthscales, dtype=np.float64)
    if xa.shape[1] != xb.shape[1] or xa.shape[1] != ls.shape[0]:
        raise ValueError(
            "dimension mismatch: xa %s, xb %s, lengthscales %s"
            % (xa.shape, xb.shape, ls.shape)
        )
    return _IMPL.se_cross(xa, xb, 1.0 / ls**2, float(signal_variance))


def se_sym(xa, lengthscales, signal_variance):
    """Symmetric SE covariance of one point set (exactly symmetric output)."""
    xa = _prep(xa)
    ls = np.ascontiguousarray(lengthscales, dtype=np.float64)
    if xa.shape[1] != ls.shape[0]:
        raise ValueError(
            "dimension mismatch: xa %s, lengthscales %s" % (xa.shape, ls.shape)
        )
    return _IMPL.se_sym(xa, 1.0 / ls**2, float(signal_variance))
