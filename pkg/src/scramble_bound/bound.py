"""Lower bounds on the sustained scrambling time.

Everything here is driven by the partition function ``Z(tau)`` of a
regularized density of states on a Euclidean strip ``[tau1, tau2]``.  Any
object with ``log_partition(tau)`` and ``mean_energy(tau)`` methods can act
as the source (:class:`~scramble_bound.operators.RegularizedDOS`,
:class:`TriangleDOS`).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate, optimize

from .errors import ConsistencyError, PreconditionError, RangeOverflowError
from .operators import LOG_OVERFLOW

ELL_OPT = math.sqrt(3.0) - 1.0
HAYMAN = math.pi**2 + 8.0
GRID_POINTS = 2001
TAU_XTOL = 1e-10
VIOLATION_SLACK = 1e-9
TIE_RTOL = 1e-14


@dataclass(frozen=True)
class StripInterval:
    tau1: float
    tau2: float

    def __post_init__(self):
        if not (self.tau1 <= 0.0 <= self.tau2) or self.tau2 - self.tau1 <= 0:
            raise ValueError(
                f"strip [{self.tau1}, {self.tau2}] must contain 0 and have positive width"
            )

    @property
    def width(self):
        return self.tau2 - self.tau1

    @property
    def mid(self):
        return 0.5 * (self.tau1 + self.tau2)

    def angle(self, tau):
        """Argument of the secant weight, in ``[-pi/2, pi/2]``."""
        return math.pi * (np.asarray(tau) - self.mid) / self.width


def reference_beta(beta):
    # infinite temperature has no natural Euclidean scale; fall back to 1
    return beta if beta and beta > 0 else 1.0


def default_interval(beta):
    b = reference_beta(beta)
    return StripInterval(-b / 4.0, b / 4.0)


class TriangleDOS:
    """Triangular density on ``[-2pi/beta, 2pi/beta]``.

    Its characteristic function is ``sinc^2(pi t / beta)`` and its partition
    function ``(sinh(x)/x)^2`` with ``x = pi tau / beta``, both in closed form.
    """

    def __init__(self, beta):
        self.beta = float(beta)
        self.half_width = 2.0 * math.pi / self.beta
        self.f_beta = 1.0

    def char(self, t, tau=0.0):
        x = math.pi * (np.asarray(t, dtype=float) - 1j * np.asarray(tau, dtype=float)) / self.beta
        safe = np.where(x == 0, 1.0, x)
        out = np.where(x == 0, 1.0 + 0j, (np.sin(safe) / safe) ** 2)
        return out if out.ndim else complex(out)

    def log_partition(self, tau):
        x = np.abs(math.pi * np.asarray(tau, dtype=float) / self.beta)
        small = x < 1e-4
        xs = np.where(small, 1.0, x)
        log_sinhc = xs + np.log1p(-np.exp(-2 * xs)) - math.log(2.0) - np.log(xs)
        out = 2.0 * np.where(small, x**2 / 6.0, log_sinhc)
        return out if out.ndim else float(out)

    def mean_energy(self, tau):
        x = math.pi * np.asarray(tau, dtype=float) / self.beta
        small = np.abs(x) < 1e-4
        xs = np.where(small, 1.0, x)
        langevin = np.where(small, x / 3.0, 1.0 / np.tanh(xs) - 1.0 / xs)
        out = -self.half_width * langevin
        return out if out.ndim else float(out)

    @property
    def is_degenerate(self):
        return False


def sinc_squared_trace(times, beta):
    """``|N(t)|^2`` for the triangle DOS, i.e. ``sinc^4(pi t / beta)``."""
    return np.sinc(np.asarray(times) / beta) ** 4


# --- strip quantities -------------------------------------------------------


def z_max(dos, interval):
    """Largest partition function on the strip, attained at an endpoint.

    Returns ``(value, endpoint)`` with ``endpoint`` either ``"tau1"`` or
    ``"tau2"``; exact ties go to ``"tau2"``.
    """
    log1, log2 = (float(dos.log_partition(t)) for t in (interval.tau1, interval.tau2))
    top = max(log1, log2)
    if top > LOG_OVERFLOW:
        raise RangeOverflowError(
            f"Z overflows at the strip edge (ln Z = {top:.1f}); choose a narrower strip"
        )
    tie = abs(log1 - log2) <= TIE_RTOL * max(1.0, abs(top))
    endpoint = "tau2" if tie or log2 >= log1 else "tau1"
    return math.exp(top), endpoint


def _log_zmax(dos, interval):
    return max(float(dos.log_partition(interval.tau1)), float(dos.log_partition(interval.tau2)))


def _endpoint_limits(dos, interval, log_zmax):
    """One-sided limits of the secant-weighted log ratio at both endpoints.

    At an endpoint where ``Z = Z_max`` the 0/0 limit is
    ``(width/pi) |d ln Z / d tau|``; elsewhere the weight diverges.
    """
    out = []
    for tau, inward in ((interval.tau1, 1.0), (interval.tau2, -1.0)):
        gap = log_zmax - float(dos.log_partition(tau))
        if gap <= TIE_RTOL * max(1.0, abs(log_zmax)):
            # d ln Z/d tau = -E; ln Z decreases moving inward
            slope = inward * float(dos.mean_energy(tau))
            out.append(interval.width / math.pi * max(slope, 0.0))
        else:
            out.append(math.inf)
    return out


def _secant_objective(dos, interval, log_zmax):
    def objective(tau):
        gap = log_zmax - dos.log_partition(tau)
        return gap / np.cos(interval.angle(tau))

    return objective


def lambda_tilde_detail(dos, interval, points=GRID_POINTS):
    """Minimum of ``sec(angle) ln(Z_max / Z(tau))`` and its location."""
    if getattr(dos, "is_degenerate", False):
        return 0.0, 0.0
    log_zmax = _log_zmax(dos, interval)
    grid = np.linspace(interval.tau1, interval.tau2, points)
    inner = grid[1:-1]
    gaps = log_zmax - dos.log_partition(inner)
    if gaps.min() < -1e-12 * max(1.0, abs(log_zmax)):
        raise ConsistencyError("Z exceeds its endpoint maximum inside the strip")
    objective = _secant_objective(dos, interval, log_zmax)
    values = np.concatenate(
        [[np.inf], np.maximum(gaps, 0.0) / np.cos(interval.angle(inner)), [np.inf]]
    )
    lim1, lim2 = _endpoint_limits(dos, interval, log_zmax)
    values[0], values[-1] = lim1, lim2
    i = int(np.argmin(values))
    best, where = float(values[i]), float(grid[i])
    if 0 < i < points - 1:
        res = optimize.minimize_scalar(
            objective,
            bounds=(grid[i - 1], grid[i + 1]),
            method="bounded",
            options={"xatol": TAU_XTOL},
        )
        if res.fun < best:
            best, where = float(res.fun), float(res.x)
    return max(best, 0.0), where


def lambda_tilde(dos, interval, points=GRID_POINTS):
    return lambda_tilde_detail(dos, interval, points)[0]


def lambda_thermo(dos, interval, points=GRID_POINTS):
    """The same decay rate via mean energy and excess free energy.

    Stationary points ``tau0`` of the secant objective are located by
    bisection; at each, ``sqrt((tau0 dF)^2 + (width/pi)^2 E^2)`` is evaluated.
    The endpoint where ``Z = Z_max`` contributes ``(width/pi)|E|``.
    """
    if getattr(dos, "is_degenerate", False):
        return 0.0
    log_zmax = _log_zmax(dos, interval)
    w = interval.width

    def stationarity(tau):
        gap = log_zmax - dos.log_partition(tau)
        return math.pi / w * np.tan(interval.angle(tau)) * gap + dos.mean_energy(tau)

    def thermo(tau):
        # tau0 * excess free energy is exactly ln(Z_max / Z(tau0))
        tau_df = log_zmax - float(dos.log_partition(tau))
        energy = float(dos.mean_energy(tau))
        return math.hypot(tau_df, w / math.pi * energy)

    grid = np.linspace(interval.tau1, interval.tau2, points)[1:-1]
    g = stationarity(grid)
    candidates = []
    for i in np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) <= 0)[0]:
        a, b = grid[i], grid[i + 1]
        root = a if g[i] == 0 else optimize.bisect(stationarity, a, b, xtol=TAU_XTOL)
        candidates.append(thermo(root))
    for lim in _endpoint_limits(dos, interval, log_zmax):
        if math.isfinite(lim):
            candidates.append(lim)
    if not candidates:
        warnings.warn("no stationary point and no finite boundary limit; using lambda_tilde")
        return lambda_tilde(dos, interval, points)
    return min(candidates)


def ell_prefactor(ell):
    if ell <= 0:
        raise ValueError(f"ell must be positive, got {ell}")
    return (2.0 + ell) / ell


def lambda_ell_from_tilde(lt, ell):
    return ell_prefactor(ell) * 2.0 * HAYMAN * lt


def lambda_eff_from_tilde(lt, ell=ELL_OPT):
    return math.exp(ell) * lambda_ell_from_tilde(lt, ell)


def lambda_ell(dos, interval, ell):
    ell_prefactor(ell)
    return lambda_ell_from_tilde(lambda_tilde(dos, interval), ell)


# --- envelope and exceptional set -------------------------------------------


@dataclass(frozen=True)
class EnvelopeParams:
    z_max: float
    lam: float
    width: float

    def __post_init__(self):
        if self.z_max <= 0 or self.lam < 0 or self.width <= 0:
            raise ValueError("envelope needs z_max > 0, lam >= 0, width > 0")


def envelope(params, t):
    """Double-exponential lower envelope; returns ``(value, log_value)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("envelope is defined for t >= 0")
    with np.errstate(over="ignore"):
        log_value = 2.0 * math.log(params.z_max) - params.lam * np.exp(math.pi * t / params.width)
    if params.lam == 0:
        log_value = np.full_like(t, 2.0 * math.log(params.z_max))
    value = np.exp(log_value)
    if not t.ndim:
        return float(value), float(log_value)
    return value, log_value


@dataclass
class ExceptionalSetReport:
    length: float
    budget: float | None
    spacing: float
    passed: bool | None
    violations: np.ndarray = field(repr=False)
    warnings: list = field(default_factory=list)


def exceptional_set_measure(trace, params, ell=None):
    """Length of ``{t >= 0 : trace(t) < envelope(t)}`` by the trapezoid rule.

    ``trace`` is a :class:`~scramble_bound.dynamics.SignalTrace` of
    ``|N(t)|^2``.  With ``ell`` given, the length is compared against
    ``width * ell / pi`` plus one grid spacing.
    """
    times = np.asarray(trace.times)
    values = np.asarray(trace.values)
    if np.iscomplexobj(values) or np.any(values < 0):
        raise ValueError("exceptional-set trace must be real and nonnegative")
    notes = []
    if times.size < 100:
        notes.append(f"grid has only {times.size} points; measure is coarse")
    keep = times >= 0
    times, values = times[keep], values[keep]
    _, log_env = envelope(params, times)
    with np.errstate(divide="ignore"):
        log_trace = np.log(values)
    bad = log_trace < log_env + math.log1p(-VIOLATION_SLACK)
    length = float(np.trapezoid(bad.astype(float), times)) if times.size > 1 else 0.0
    spacing = float(times[1] - times[0]) if times.size > 1 else 0.0
    budget = passed = None
    if ell is not None:
        budget = params.width * ell / math.pi
        passed = length <= budget + spacing
    return ExceptionalSetReport(length, budget, spacing, passed, times[bad], notes)


def theorem_envelope(dos, interval, ell):
    zm, _ = z_max(dos, interval)
    return EnvelopeParams(zm, lambda_ell(dos, interval, ell), interval.width)


# --- scrambling time bounds ---------------------------------------------------


@dataclass
class BoundReport:
    z_max: float
    lambda_tilde: float
    ell: float
    lambda_ell: float
    lambda_eff: float
    f_beta: float
    p_scr: float
    ts_lower: float | str
    nontrivial: bool
    exceptional_budget: float
    tau1: float
    tau2: float
    z_max_endpoint: str = "tau2"
    ts_value: float = -math.inf
    uncertainty: tuple | None = None

    @property
    def width(self):
        return self.tau2 - self.tau1

    def to_dict(self):
        return asdict(self)


def ts_formula(width, log_ratio, lam_ell, ell):
    """``(width/pi) (ln[log_ratio / Lambda_ell] - ell)``, the general-ell bound."""
    if log_ratio <= 0:
        return -math.inf
    if lam_ell == 0:
        return math.inf
    return width / math.pi * (math.log(log_ratio / lam_ell) - ell)


def ts_entropy_formula(width, s2s, f_beta, zmax, lam_eff):
    """``(width/pi) ln[(S2 + 4 ln(f Z_max)) / (2 Lambda_eff)]``."""
    inner = s2s + 4.0 * math.log(f_beta * zmax)
    if inner <= 0:
        return -math.inf
    if lam_eff == 0:
        return math.inf
    return width / math.pi * math.log(inner / (2.0 * lam_eff))


def _validate(f_beta, p_scr):
    if not 0 < p_scr < 1:
        raise ValueError(f"p_scr must lie in (0, 1), got {p_scr}")
    if not 0 < f_beta <= 1 + 1e-9:
        raise ValueError(f"f_beta must lie in (0, 1], got {f_beta}")


def _report(interval, zm, endpoint, lt, ell, f_beta, p_scr, ts):
    lam = lambda_ell_from_tilde(lt, ell)
    budget = interval.width * ell / math.pi
    nontrivial = f_beta**2 > p_scr and ts > 0
    if nontrivial:
        ts_lower = ts
        uncertainty = (ts, ts + budget)
    else:
        ts_lower, uncertainty = "trivial", None
    return BoundReport(
        z_max=zm,
        lambda_tilde=lt,
        ell=ell,
        lambda_ell=lam,
        lambda_eff=math.exp(ell) * lam,
        f_beta=f_beta,
        p_scr=p_scr,
        ts_lower=ts_lower,
        nontrivial=nontrivial,
        exceptional_budget=budget,
        tau1=interval.tau1,
        tau2=interval.tau2,
        z_max_endpoint=endpoint,
        ts_value=ts if f_beta**2 > p_scr else -math.inf,
        uncertainty=uncertainty,
    )


def ts_lower_bound(dos, interval, f_beta, p_scr, ell=None):
    """Lower bound on the sustained scrambling time.

    With the default ``ell = sqrt(3) - 1`` this is
    ``(width/pi) ln[ln(f^2 Z_max^2 / p_scr) / Lambda_eff]``; for other ``ell``
    the exceptional-set length ``ell`` is subtracted inside the bracket.
    """
    _validate(f_beta, p_scr)
    ell = ELL_OPT if ell is None else ell
    ell_prefactor(ell)
    zm, endpoint = z_max(dos, interval)
    lt = lambda_tilde(dos, interval)
    log_ratio = 2.0 * math.log(f_beta) + 2.0 * math.log(zm) - math.log(p_scr)
    ts = ts_formula(interval.width, log_ratio, lambda_ell_from_tilde(lt, ell), ell)
    return _report(interval, zm, endpoint, lt, ell, f_beta, p_scr, ts)


def ts_entropy_lower_bound(dos, interval, f_beta, s2s, ell=None):
    """The same bound phrased through a scrambled second Renyi entropy ``s2s``."""
    if s2s <= 0:
        raise ValueError("s2s must be positive")
    p_scr = math.exp(-s2s / 2.0)
    _validate(f_beta, p_scr)
    ell = ELL_OPT if ell is None else ell
    zm, endpoint = z_max(dos, interval)
    lt = lambda_tilde(dos, interval)
    lam_eff = lambda_eff_from_tilde(lt, ell)
    ts = ts_entropy_formula(interval.width, s2s, f_beta, zm, lam_eff)
    return _report(interval, zm, endpoint, lt, ell, f_beta, p_scr, ts)


def is_nontrivial(f_beta, p_scr):
    return f_beta**2 > p_scr


class OptimizedStrip(NamedTuple):
    interval: StripInterval
    report: BoundReport
    trail: list


def optimize_interval(dos, beta, f_beta, p_scr, ell=None, max_width=None, points=11):
    """Grid search over strips maximizing the scrambling-time bound.

    Candidates are ``tau1`` in ``[-0.49 beta, 0]`` and ``tau2`` in
    ``[0, 0.49 beta]`` (plus the default ``[-beta/4, beta/4]``).  Ties go to
    the wider strip, then the larger ``tau2``.
    """
    b = reference_beta(beta)
    t1s = np.linspace(-0.49 * b, 0.0, points)
    t2s = np.linspace(0.0, 0.49 * b, points)
    pairs = {(float(a), float(c)) for a in t1s for c in t2s if c - a > 0}
    default = default_interval(beta)
    pairs.add((default.tau1, default.tau2))
    best = None
    trail = []
    for tau1, tau2 in sorted(pairs):
        if max_width is not None and tau2 - tau1 > max_width + 1e-15:
            continue
        interval = StripInterval(tau1, tau2)
        try:
            report = ts_lower_bound(dos, interval, f_beta, p_scr, ell)
        except RangeOverflowError:
            continue
        score = report.ts_value if report.nontrivial or report.ts_value == math.inf else -math.inf
        trail.append((tau1, tau2, score))
        key = (score, interval.width, tau2)
        if best is None or key > best[0]:
            best = (key, interval, report)
    if best is None:
        raise ValueError("no admissible strip under the given constraints")
    return OptimizedStrip(best[1], best[2], trail)


def measured_scrambling_time(trace, threshold, t_max=None):
    """Earliest grid time after which ``trace`` stays at or below ``threshold``.

    Returns ``None`` when the last sample (at ``t_max``) is above threshold.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    times = np.asarray(trace.times)
    values = np.abs(np.asarray(trace.values))
    if t_max is not None:
        keep = times <= t_max
        times, values = times[keep], values[keep]
    above = np.nonzero(values > threshold)[0]
    if above.size == 0:
        return float(times[0])
    last = above[-1]
    if last == times.size - 1:
        return None
    return float(times[last + 1])


# --- conformal map and half-plane potential theory ---------------------------


def strip_to_halfplane(t, tau, interval):
    """``z = exp[pi (t - i tau + i mid) / width]``."""
    bold_t = np.asarray(t) - 1j * np.asarray(tau)
    return np.exp(math.pi * (bold_t + 1j * interval.mid) / interval.width)


def halfplane_to_strip(z, interval):
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("z = 0 corresponds to t = -infinity")
    bold_t = interval.width / math.pi * np.log(z) - 1j * interval.mid
    return bold_t.real, -bold_t.imag


def _segments(v_set):
    segs = [(float(a), float(b)) for a, b in v_set]
    for a, b in segs:
        if not a < b:
            raise ValueError(f"segment [{a}, {b}] is empty")
    return segs


def poisson_potential(x, y, v_set, lam, boundary=None):
    """Harmonic extension of boundary data ``lam * y'`` on ``v_set`` (0 elsewhere).

    ``boundary`` replaces the data with an arbitrary callable of ``y'``.
    """
    if x <= 0:
        raise ValueError("the Poisson kernel needs x > 0")
    data = boundary if boundary is not None else (lambda yp: lam * yp)
    total = 0.0
    for a, b in _segments(v_set):
        kernel = lambda yp: x / (x * x + (yp - y) ** 2) * data(yp)
        kw = {}
        if math.isfinite(a) and math.isfinite(b) and a < y < b:
            kw["points"] = [y]
        val, _ = integrate.quad(kernel, a, b, epsabs=1e-10, epsrel=1e-12, limit=500, **kw)
        total += val
    return total / math.pi


def log_length(v_set):
    return sum(math.log(b / a) for a, b in _segments(v_set))


@dataclass
class Lemma1Report:
    log_length: float
    slacks: np.ndarray
    min_slack: float
    holds: bool
    v_condition: bool


def _check_subunit(f_sampler, zs):
    mags = np.abs(f_sampler(np.asarray(zs, dtype=complex)))
    if np.any(mags >= 1):
        raise PreconditionError("|F| >= 1 at a sampled half-plane point")
    return mags


def verify_lemma1(f_sampler: Callable, lam: float, v_set: Sequence, probe_points, theta_points=257):
    """Check the half-plane decay inequality at each probe point.

    ``v_condition`` reports whether, on sampled radii, ``min_theta |F|`` really
    is at most ``exp(-lam r)`` throughout ``v_set``; it is advisory only.
    """
    probes = np.asarray(probe_points, dtype=complex).ravel()
    if np.any(probes.real <= 0):
        raise ValueError("probe points must lie in the open right half-plane")
    segs = _segments(v_set) if len(v_set) else []
    thetas = np.linspace(-math.pi / 2, math.pi / 2, theta_points)[1:-1]
    radii = np.concatenate([np.geomspace(a, b, 64) for a, b in segs] or [np.ones(1)])
    _check_subunit(f_sampler, probes)
    samples = _check_subunit(f_sampler, np.outer(radii, np.exp(1j * thetas)))
    v_ok = True
    if segs:
        v_ok = bool(np.all(samples.min(axis=1) <= np.exp(-lam * radii) * (1 + 1e-12)))

    length = log_length(segs) if segs else 0.0
    coef = 4.0 / ((2.0 + length) * HAYMAN)
    lhs = -np.log(np.abs(f_sampler(probes)))
    slacks = np.empty(probes.size)
    for i, z in enumerate(probes):
        x, ay = z.real, abs(z.imag)
        rhs = 0.0
        for a, b in segs:
            rhs += integrate.quad(
                lambda r: x / (x * x + (r + ay) ** 2) * lam * r, a, b, epsabs=1e-12, epsrel=1e-12
            )[0]
        slacks[i] = lhs[i] - coef * rhs
    min_slack = float(slacks.min())
    return Lemma1Report(length, slacks, min_slack, min_slack > 0 or not segs, v_ok)


@dataclass
class Lemma2Report:
    lam: float
    theta_star: float
    log_length: float
    ell: float
    slack: float
    holds: bool
    v_set: list = field(default_factory=list)


def _runs(mask, radii):
    """Maximal runs of ``mask`` as ``(r_start, r_end)`` intervals."""
    out = []
    edges = np.diff(np.concatenate([[0], mask.astype(int), [0]]))
    for s, e in zip(np.nonzero(edges == 1)[0], np.nonzero(edges == -1)[0]):
        if e - 1 > s:
            out.append((float(radii[s]), float(radii[e - 1])))
    return out


def verify_lemma2(f_sampler: Callable, ell: float, r_max=50.0, theta_points=2001, r_points=4001):
    """Choose the decay rate from the unit semicircle and measure its decay set.

    The rate is ``(2+ell)/ell (pi^2+8) min_theta sec(theta) ln(1/|F(e^{i theta})|)``;
    the set is ``{r in [1, r_max] : min_theta |F(r e^{i theta})| <= exp(-rate r)}``
    and its logarithmic length must not exceed ``ell``.
    """
    pref = ell_prefactor(ell)
    thetas = np.linspace(-math.pi / 2, math.pi / 2, theta_points)[1:-1]
    unit = np.abs(f_sampler(np.exp(1j * thetas)))
    if np.all(unit == 0):
        raise PreconditionError("F vanishes on the unit semicircle, so it vanishes identically")
    if np.any(unit >= 1):
        raise PreconditionError("|F| >= 1 on the unit semicircle")
    with np.errstate(divide="ignore"):
        terms = -np.log(unit) / np.cos(thetas)
    i = int(np.argmin(terms))
    term, theta_star = float(terms[i]), float(thetas[i])
    if 0 < i < thetas.size - 1:
        res = optimize.minimize_scalar(
            lambda th: -math.log(abs(complex(f_sampler(np.exp(1j * th))))) / math.cos(th),
            bounds=(thetas[i - 1], thetas[i + 1]),
            method="bounded",
            options={"xatol": 1e-12},
        )
        if res.fun < term:
            term, theta_star = float(res.fun), float(res.x)
    lam = pref * HAYMAN * term

    log_r = np.linspace(0.0, math.log(r_max), r_points)
    radii = np.exp(log_r)
    mags = np.abs(f_sampler(np.outer(radii, np.exp(1j * thetas))))
    with np.errstate(divide="ignore"):
        in_set = np.log(mags.min(axis=1)) <= -lam * radii
    measured = float(np.trapezoid(in_set.astype(float), log_r))
    return Lemma2Report(
        lam, theta_star, measured, ell, ell - measured, measured <= ell, _runs(in_set, radii)
    )
