"""Kernel dispatch.

The compiled extension is preferred; ``SCRAMBLE_PURE_PYTHON=1`` or a
failed import selects the numpy fallback.  ``BACKEND`` names the one in use.
"""
import os

import numpy as np

from . import _kernels_py as fallback

compiled = None
if not os.environ.get("SCRAMBLE_PURE_PYTHON"):
    try:
        from . import _kernels as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else fallback
BACKEND = "cython" if compiled is not None else "python"


def _f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def spectral_sum(energies, weights, t, tau):
    t, tau = np.broadcast_arrays(np.atleast_1d(_f64(t)), np.atleast_1d(_f64(tau)))
    weights = _f64(weights)
    # zero-weight levels may sit outside the support and overflow the shift
    live = weights != 0.0
    return _impl.spectral_sum(
        _f64(np.asarray(energies)[live]), weights[live], _f64(t.ravel()), _f64(tau.ravel())
    )


def double_exp_sum(nodes, qweights, rate, depth):
    return _impl.double_exp_sum(_f64(nodes), _f64(qweights), float(rate), float(depth))


def shifted_fourier_sum(nodes, qweights, rate, theta, energy):
    return _impl.shifted_fourier_sum(
        _f64(nodes), _f64(qweights), float(rate), float(theta), float(energy)
    )
