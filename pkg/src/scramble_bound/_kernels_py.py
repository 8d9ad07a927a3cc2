"""Numpy fallbacks for the compiled kernels in ``_kernels.pyx``.

Each function computes exactly the same quantity as its compiled twin.
"""
import numpy as np

_CHUNK = 1 << 20


def spectral_sum(energies, weights, t, tau):
    """Peak-shifted ``sum_n w_n exp(-E_n tau - i E_n t)``.

    Returns ``(re, im, shift)`` such that the sum equals
    ``exp(shift) * (re + 1j * im)``.
    """
    energies = np.asarray(energies, dtype=float)
    weights = np.asarray(weights, dtype=float)
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    support = weights != 0.0
    e = energies[support]
    w = weights[support]
    e_lo, e_hi = (e.min(), e.max()) if e.size else (0.0, 0.0)
    shift = np.where(tau >= 0.0, -e_lo * tau, -e_hi * tau)

    re = np.empty(t.shape)
    im = np.empty(t.shape)
    step = max(1, _CHUNK // max(e.size, 1))
    for start in range(0, t.size, step):
        sl = slice(start, start + step)
        amp = w * np.exp(-np.outer(tau[sl], e) - shift[sl, None])
        ph = np.outer(t[sl], e)
        re[sl] = (amp * np.cos(ph)).sum(axis=1)
        im[sl] = -(amp * np.sin(ph)).sum(axis=1)
    return re, im, shift


def double_exp_sum(nodes, qweights, rate, depth):
    """``sum_j q_j exp(-2 depth sinh^2(rate y_j / 2))``."""
    sh = np.sinh(0.5 * rate * np.asarray(nodes))
    return float(np.dot(qweights, np.exp(-2.0 * depth * sh * sh)))


def shifted_fourier_sum(nodes, qweights, rate, theta, energy):
    """Quadrature sum of ``g(y + i theta/rate) exp(i y E)`` with the
    ``y = 0`` magnitude ``exp(-2 cos theta)`` divided out."""
    y = np.asarray(nodes)
    sh = np.sinh(0.5 * rate * y)
    amp = qweights * np.exp(-4.0 * np.cos(theta) * sh * sh)
    ph = y * energy - 2.0 * np.sinh(rate * y) * np.sin(theta)
    return float(np.dot(amp, np.cos(ph))), float(np.dot(amp, np.sin(ph)))
