"""Time-domain observables of a finite system coupled to an environment.

A :class:`FiniteSystem` caches the single eigendecomposition every
observable is built from.  Real-time evolution is always
``V diag(exp(-iEt)) V^dagger``; nothing is time-stepped.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, ScrambleError, SweepError
from .operators import (
    DensityOperator,
    RegularizedDOS,
    Spectrum,
    SubsystemSplit,
    eigendecompose,
    embed_env,
    fidelity_inf,
    operator_sqrt,
    partial_trace_env,
    regularized_dos,
)

REAL_TOL = 1e-10


@dataclass(frozen=True)
class TimeGrid:
    t_min: float
    t_max: float
    points: int

    def __post_init__(self):
        if self.points < 2:
            raise ValueError("a time grid needs at least 2 points")
        if self.t_min > self.t_max:
            raise ValueError("t_min must not exceed t_max")

    @property
    def times(self):
        return np.linspace(self.t_min, self.t_max, self.points)

    @property
    def spacing(self):
        return (self.t_max - self.t_min) / (self.points - 1)


@dataclass(frozen=True)
class SignalTrace:
    grid: TimeGrid
    values: np.ndarray
    label: str

    def __post_init__(self):
        if len(self.values) != self.grid.points:
            raise ValueError("trace length does not match its grid")

    @property
    def times(self):
        return self.grid.times

    @property
    def is_complex(self):
        return np.iscomplexobj(self.values)


@dataclass(frozen=True)
class FiniteSystem:
    """Hamiltonian spectrum plus environment state, with derived quantities."""

    spectrum: Spectrum
    rho_env: DensityOperator
    split: SubsystemSplit
    beta: float | None = None

    @classmethod
    def build(cls, h, rho_env, split, beta=None):
        if not isinstance(rho_env, DensityOperator):
            rho_env = DensityOperator(np.asarray(rho_env))
        if rho_env.dim != split.d_e:
            raise InvalidDimensionError("environment state does not match the split")
        return cls(eigendecompose(h), rho_env, split, beta)

    @property
    def sqrt_rho_env(self):
        return self.rho_env.sqrt

    @property
    def f_beta(self):
        return fidelity_inf(self.rho_env)

    @property
    def dos(self):
        try:
            return self._dos
        except AttributeError:
            embedded = embed_env(self.sqrt_rho_env, self.split)
            dos = regularized_dos(self.spectrum, embedded, self.split, self.beta, self.f_beta)
            object.__setattr__(self, "_dos", dos)
            return dos


def _check(spec, sqrt_rho_env, split):
    if spec.dim != split.d or np.shape(sqrt_rho_env) != (split.d_e, split.d_e):
        raise InvalidDimensionError("spectrum, environment root and split disagree")


def _block_columns(spec, sqrt_rho_env, split, t):
    """``B_k = exp(-iHt)[:, block k] sqrt(rho)`` stacked as (d_s, D, d_e)."""
    v = spec.vectors
    ph = np.exp(-1j * spec.energies * t)
    vh_blocks = v.conj().T.reshape(split.d, split.d_s, split.d_e)  # (n, k, e)
    right = np.einsum("nke,ef->knf", vh_blocks, sqrt_rho_env)
    return np.einsum("in,n,knf->kif", v, ph, right)


def return_probability(spec, sqrt_rho_env, split, t):
    """Mean return probability of the computational basis states of S.

    Uses ``(1/D_S) sum_k ||B_kk(t)||_F^2`` where ``B = exp(-iHt)(1 (x) sqrt(rho))``
    and ``B_kk`` is its k-th diagonal environment block.
    """
    sqrt_rho_env = np.asarray(sqrt_rho_env)
    _check(spec, sqrt_rho_env, split)
    v = spec.vectors.reshape(split.d_s, split.d_e, split.d)  # rows grouped by k
    ph = np.exp(-1j * spec.energies * t)
    vh = spec.vectors.conj().T.reshape(split.d, split.d_s, split.d_e)
    right = np.einsum("nke,ef->knf", vh, sqrt_rho_env)
    bkk = np.einsum("kan,n,knf->kaf", v, ph, right)
    return float(np.sum(np.abs(bkk) ** 2) / split.d_s)


def reduced_states(spec, sqrt_rho_env, split, t):
    """``rho_{k,S}(t)`` for every basis state k, shape (d_s, d_s, d_s)."""
    sqrt_rho_env = np.asarray(sqrt_rho_env)
    _check(spec, sqrt_rho_env, split)
    out = np.empty((split.d_s, split.d_s, split.d_s), dtype=complex)
    for k, b in enumerate(_block_columns(spec, sqrt_rho_env, split, t)):
        out[k] = partial_trace_env(b @ b.conj().T, split)
    return out


def mean_reduced_purity(spec, sqrt_rho_env, split, t):
    """Return ``(mean purity, mean second Renyi entropy)`` of the reduced states."""
    states = reduced_states(spec, sqrt_rho_env, split, t)
    purities = np.einsum("kab,kba->k", states, states).real
    return float(purities.mean()), float(np.mean(-np.log(purities)))


def regularized_sff(dos, t):
    return dos.f_beta**2 * np.abs(dos.char(t)) ** 2


def generalized_sff(kraus_traces, d):
    traces = np.asarray(list(kraus_traces), dtype=complex)
    if traces.size == 0:
        raise ValueError("at least one Kraus trace is required")
    if d < 1:
        raise InvalidDimensionError("dimension must be >= 1")
    return float(np.sum(np.abs(traces) ** 2) / d**2)


def char_function(dos, t, tau=0.0):
    """Characteristic function of the regularized DOS at complex time ``t - i tau``."""
    return dos.char(t, tau)


def partition_function(dos, tau):
    z = dos.char(0.0 * np.asarray(tau, dtype=float), tau)
    if np.max(np.abs(np.imag(z))) > 1e-12 * max(1.0, float(np.max(np.abs(z)))):
        raise ScrambleError("partition function has a non-negligible imaginary part")
    return np.real(z) if np.ndim(z) else float(np.real(z))


def renyi_half_env(rho_env):
    """Order-1/2 Renyi entropy of the environment state, in nats."""
    d_e = np.shape(rho_env)[0]
    f = fidelity_inf(rho_env)
    if f <= 0:
        return -np.inf
    return float(2.0 * np.log(np.sqrt(d_e) * f))


def _p_s(system, t):
    return return_probability(system.spectrum, system.sqrt_rho_env, system.split, t)


def _purity(system, t):
    return mean_reduced_purity(system.spectrum, system.sqrt_rho_env, system.split, t)[0]


def _renyi2(system, t):
    return mean_reduced_purity(system.spectrum, system.sqrt_rho_env, system.split, t)[1]


def _dos_of(system):
    return system if isinstance(system, RegularizedDOS) else system.dos


OBSERVABLES = {
    "P_S": _p_s,
    "purity": _purity,
    "S_2": _renyi2,
}
# these act on the DOS and vectorize over the whole grid
DOS_OBSERVABLES = {
    "K_beta": lambda dos, t: regularized_sff(dos, t),
    "N_abs_sq": lambda dos, t: np.abs(dos.char(t)) ** 2,
    "N": lambda dos, t: dos.char(t),
    "Z": lambda dos, tau: partition_function(dos, tau),
}


def sweep(observable, system, grid):
    """Evaluate ``observable`` on every grid point.

    ``system`` is a :class:`FiniteSystem` or, for the DOS observables
    (``K_beta``, ``N_abs_sq``, ``N``, ``Z``), a :class:`RegularizedDOS`.
    For ``Z`` the grid points are Euclidean times.
    """
    times = grid.times
    if observable in DOS_OBSERVABLES:
        dos = _dos_of(system)
        try:
            values = np.asarray(DOS_OBSERVABLES[observable](dos, times))
        except ScrambleError:
            # redo pointwise to locate the failing time
            for t in times:
                try:
                    DOS_OBSERVABLES[observable](dos, np.array([t]))
                except ScrambleError as exc:
                    raise SweepError(str(exc), float(t)) from exc
            raise
        return SignalTrace(grid, values, observable)
    if observable not in OBSERVABLES:
        raise KeyError(f"unknown observable {observable!r}")
    fn = OBSERVABLES[observable]
    values = np.empty(times.size)
    for i, t in enumerate(times):
        try:
            values[i] = fn(system, t)
        except ScrambleError as exc:
            raise SweepError(str(exc), float(t)) from exc
    return SignalTrace(grid, values, observable)
