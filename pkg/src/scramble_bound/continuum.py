"""Continuum profile whose spectral form factor decays double-exponentially.

The profile is ``g(t) = exp(-2 cosh(a t))`` with ``a = pi / width``.  Its
normalized self-convolution ``N(t) = (g*g)(t) / ||g||^2`` is the
characteristic function of the nonnegative density
``(2 pi / ||g||^2) (g_hat(E))^2``.

All integrands are handled in log form with the peak factored out, so tails
down to ``exp(-400)`` are representable in double precision.  Integrals are
composite Gauss-Legendre rules whose panel count doubles until the result
stops moving.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import kernels
from .errors import QuadratureError
from .operators import RegularizedDOS


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre settings.

    Parameters
    ----------
    order : int
        Nodes per panel.
    tol : float
        Convergence threshold on successive panel doublings.  For positive
        integrands this is a log-domain (relative) tolerance; for oscillatory
        ones it is relative to the integral of the modulus.
    truncation : float
        Integration stops where the log-integrand is this many nats below
        its peak.
    panels : int
        Initial panel count.
    max_doublings : int
        Refinement budget before :class:`QuadratureError` is raised.
    """

    order: int = 20
    tol: float = 1e-13
    truncation: float = 120.0
    panels: int = 4
    max_doublings: int = 14

    def refined(self):
        """Same rule with the tolerance halved."""
        return QuadratureSpec(self.order, self.tol / 2, self.truncation, self.panels, self.max_doublings)


DEFAULT_QUAD = QuadratureSpec()


@functools.lru_cache(maxsize=None)
def _rule(order):
    x, w = leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _composite(upper, panels, order):
    """Nodes and weights of ``panels`` equal panels on ``[0, upper]``."""
    x, w = _rule(order)
    h = upper / panels
    starts = np.arange(panels) * h
    nodes = (starts[:, None] + h * x[None, :]).ravel()
    weights = np.tile(h * w, panels)
    return nodes, weights


def _half_line_cutoff(rate, depth, truncation):
    # depth * (cosh(rate u) - 1) reaches `truncation` here
    return math.acosh(1.0 + truncation / depth) / rate


def _tail_bound(rate, depth, cutoff, truncation):
    """Upper bound on the dropped tail relative to the unit peak."""
    return math.exp(-truncation) / (depth * rate * math.sinh(rate * cutoff))


def _double_exp_integral(rate, depth, quad):
    """``int_R exp(-2 depth sinh^2(rate u / 2)) du`` and the truncation bound."""
    cutoff = _half_line_cutoff(rate, depth, quad.truncation)
    panels = quad.panels
    previous = None
    for _ in range(quad.max_doublings + 1):
        nodes, weights = _composite(cutoff, panels, quad.order)
        value = 2.0 * kernels.double_exp_sum(nodes, weights, rate, depth)
        if previous is not None and abs(math.log(value / previous)) <= quad.tol:
            return value, 2.0 * _tail_bound(rate, depth, cutoff, quad.truncation)
        previous = value
        panels *= 2
    raise QuadratureError(
        f"double-exponential integral did not converge (rate={rate}, depth={depth}, "
        f"panels={panels // 2}, last change={abs(math.log(value / previous)):.3g})"
    )


def log_g(t, width):
    """``-exp(pi t / width) - exp(-pi t / width)``."""
    if width <= 0:
        raise ValueError("width must be positive")
    return -2.0 * np.cosh(math.pi * np.asarray(t, dtype=float) / width)


def g(t, width):
    return np.exp(log_g(t, width))


def g_modulus_strip(t, tau, width):
    """``|g(t - i tau)|``, at most 1 while ``|tau| < width / 2``."""
    tau = np.asarray(tau, dtype=float)
    if np.any(np.abs(tau) >= width / 2):
        warnings.warn("|tau| >= width/2: the profile is unbounded there", RuntimeWarning)
    a = math.pi / width
    return np.exp(log_g(t, width) * np.cos(a * tau))


@dataclass(frozen=True)
class ContinuumProfile:
    """Normalization data for the profile at a given width.

    ``c_const = 2 int g`` bounds ``(g*g)(t) / g(t/2)``; the corresponding
    constant for the normalized ``N`` is ``c_normalized``.
    """

    width: float
    norm_sq: float
    c_const: float
    tail_bound: float = 0.0

    @classmethod
    def build(cls, width, quad=DEFAULT_QUAD):
        if width <= 0:
            raise ValueError("width must be positive")
        a = math.pi / width
        # g^2 = e^{-4} exp(-8 sinh^2(a t/2)),  g = e^{-2} exp(-4 sinh^2(a t/2))
        sq, tail_sq = _double_exp_integral(a, 4.0, quad)
        one, tail_one = _double_exp_integral(a, 2.0, quad)
        return cls(width, math.exp(-4.0) * sq, 2.0 * math.exp(-2.0) * one, max(tail_sq, tail_one))

    @property
    def rate(self):
        return math.pi / self.width

    @property
    def int_g(self):
        return self.c_const / 2.0

    @property
    def c_normalized(self):
        return self.c_const / self.norm_sq


def self_convolution(t, profile, quad=DEFAULT_QUAD):
    """Normalized self-convolution ``N(t)``; returns ``(value, log_value)``.

    The exponent ``log g(y) + log g(t - y)`` peaks at ``y = t/2`` (it is even
    about that point and concave), where it equals ``-4 cosh(a t / 2)``.
    """
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    a = profile.rate
    logs = np.empty(ts.size)
    for i, ti in enumerate(ts):
        depth = 4.0 * math.cosh(a * ti / 2.0)
        integral, _ = _double_exp_integral(a, depth, quad)
        logs[i] = -depth + math.log(integral) - math.log(profile.norm_sq)
    values = np.exp(logs)
    if scalar:
        return float(values[0]), float(logs[0])
    return values, logs


@dataclass(frozen=True)
class EnvelopeSlack:
    t: float
    log_n: float
    log_bound: float
    slack: float
    holds: bool
    log_bound_normalized: float
    slack_normalized: float
    holds_normalized: bool


ENVELOPE_ATOL = 1e-9


def decay_envelope_check(t, profile, quad=DEFAULT_QUAD):
    """Compare ``log N(t)`` with ``log C + log g(t/2)``.

    ``holds`` uses ``C = 2 int g`` as stated for the unnormalized
    convolution; ``holds_normalized`` uses ``C / ||g||^2``, which is the
    constant that actually bounds the normalized ``N``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    _, log_n = self_convolution(t, profile, quad)
    lg = float(log_g(t / 2.0, profile.width))
    bound = math.log(profile.c_const) + lg
    bound_norm = math.log(profile.c_normalized) + lg
    return EnvelopeSlack(
        t=float(t),
        log_n=log_n,
        log_bound=bound,
        slack=bound - log_n,
        holds=log_n <= bound + ENVELOPE_ATOL,
        log_bound_normalized=bound_norm,
        slack_normalized=bound_norm - log_n,
        holds_normalized=log_n <= bound_norm + ENVELOPE_ATOL,
    )


def double_exponential_slope(profile, quad=DEFAULT_QUAD, t_lo=3.0, t_hi=6.0, points=13):
    """Least-squares slope of ``ln(-ln N(t))`` on ``[t_lo, t_hi]``."""
    ts = np.linspace(t_lo, t_hi, points)
    _, logs = self_convolution(ts, profile, quad)
    return float(np.polyfit(ts, np.log(-logs), 1)[0])


# --- inverse Fourier transform ---------------------------------------------

FOURIER_TRUNCATION = 60.0


def _shift_angle(rate, energy):
    # shifting the contour by theta/rate damps the oscillation by e^{-theta E / rate};
    # stopping 2 rate / E short of pi/2 keeps the integrand O(1)
    e = abs(energy)
    if e <= 2.0 * rate:
        return 0.0
    return math.pi / 2.0 - 2.0 * rate / e


def log_abs_g_hat(energy, profile, quad=DEFAULT_QUAD):
    """``(log|g_hat(E)|, sign)`` with ``g_hat(E) = (1/pi) int_0^inf g(t) cos(E t) dt``."""
    a = profile.rate
    e = abs(float(energy))
    theta = _shift_angle(a, e)
    cos_t = math.cos(theta)
    cutoff = math.acosh(1.0 + FOURIER_TRUNCATION / cos_t) / a
    phase_span = cutoff * e + 2.0 * math.sinh(a * cutoff) * math.sin(theta)
    panels = max(quad.panels, int(math.ceil(phase_span / math.pi)))
    previous = None
    for _ in range(quad.max_doublings + 1):
        nodes, weights = _composite(cutoff, panels, quad.order)
        re, _ = kernels.shifted_fourier_sum(nodes, weights, a, theta, e)
        scale = kernels.double_exp_sum(nodes, weights, a, 2.0 * cos_t)
        if previous is not None and abs(re - previous) <= quad.tol * scale:
            break
        previous = re
        panels *= 2
    else:
        raise QuadratureError(
            f"inverse Fourier transform did not converge at E={energy} ({panels // 2} panels)"
        )
    if re == 0:
        return -math.inf, 0.0
    log_abs = -theta / a * e - 2.0 * cos_t - math.log(math.pi) + math.log(abs(re))
    return log_abs, math.copysign(1.0, re)


def inverse_fourier_dos(e_value, profile, quad=DEFAULT_QUAD):
    """Density ``(2 pi / ||g||^2) g_hat(E)^2``; returns ``(value, log_value)``."""
    scalar = np.ndim(e_value) == 0
    es = np.atleast_1d(np.asarray(e_value, dtype=float))
    logs = np.empty(es.size)
    for i, e in enumerate(es):
        la, _ = log_abs_g_hat(e, profile, quad)
        logs[i] = math.log(2.0 * math.pi / profile.norm_sq) + 2.0 * la
    values = np.exp(logs)
    if scalar:
        return float(values[0]), float(logs[0])
    return values, logs


def default_energy_cutoff(profile):
    # the density falls like exp(-pi E / a) for large E
    return 50.0 * profile.rate


def dos_grid(profile, quad=DEFAULT_QUAD, spacing=0.025, e_max=None):
    """Symmetric uniform energy grid and the density on it."""
    e_max = default_energy_cutoff(profile) if e_max is None else e_max
    half = np.arange(0, int(math.floor(e_max / spacing)) + 1) * spacing
    values, _ = inverse_fourier_dos(half, profile, quad)
    energies = np.concatenate([-half[:0:-1], half])
    return energies, np.concatenate([values[:0:-1], values])


def discretized_dos(profile, quad=DEFAULT_QUAD, spacing=0.025, e_max=None):
    """The density sampled on a uniform grid, renormalized to unit mass."""
    energies, values = dos_grid(profile, quad, spacing, e_max)
    weights = values / values.sum()
    return RegularizedDOS(energies, weights, beta=None, f_beta=1.0)


@dataclass
class GaussianComparison:
    sigma_sq: float
    energies: np.ndarray = field(repr=False)
    dos: np.ndarray = field(repr=False)
    gaussian_dos: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    ntilde: np.ndarray = field(repr=False)
    gaussian_ntilde: np.ndarray = field(repr=False)
    mass: float = 1.0

    @property
    def relative_deviation(self):
        return np.abs(self.ntilde - self.gaussian_ntilde) / self.gaussian_ntilde


def gaussian_reference(profile, quad=DEFAULT_QUAD, times=None, spacing=0.025, e_max=None):
    """Variance of the density and side-by-side Gaussian samples."""
    energies, dos = dos_grid(profile, quad, spacing, e_max)
    mass = float(np.trapezoid(dos, energies))
    sigma_sq = float(np.trapezoid(energies**2 * dos, energies))
    gauss = np.exp(-(energies**2) / (2 * sigma_sq)) / math.sqrt(2 * math.pi * sigma_sq)
    times = np.linspace(0.0, 2.0 * profile.width, 201) if times is None else np.asarray(times)
    ntilde, _ = self_convolution(times, profile, quad)
    return GaussianComparison(
        sigma_sq=sigma_sq,
        energies=energies,
        dos=dos,
        gaussian_dos=gauss,
        times=times,
        ntilde=np.atleast_1d(ntilde),
        gaussian_ntilde=np.exp(-sigma_sq * times**2 / 2),
        mass=mass,
    )


@dataclass(frozen=True)
class ContinuumTime:
    t_upper: float | str
    leading: float
    width: float
    n_s: float


def continuum_ts_upper(d_s, epsilon, f_beta, profile, quad=None):
    """Time after which the double-exponential envelope guarantees scrambling.

    Smallest ``t`` with ``f^2 C^2 exp(-exp(pi t / (2 width))) <= d_s^{-1-eps}``.
    ``leading`` is the large-``d_s`` form ``(2 width / pi) ln(N_S ln 2)``.
    """
    if d_s < 2:
        raise ValueError("d_s must be at least 2")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    scale = 2.0 * profile.width / math.pi
    n_s = math.log2(d_s)
    inner = 2.0 * math.log(f_beta * profile.c_const) + (1.0 + epsilon) * math.log(d_s)
    leading = scale * math.log(n_s * math.log(2.0))
    if inner <= 0 or math.log(inner) <= 0:
        return ContinuumTime("trivial", leading, profile.width, n_s)
    return ContinuumTime(scale * math.log(inner), leading, profile.width, n_s)
