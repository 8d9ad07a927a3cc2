"""Hilbert-space objects: Hamiltonians, environment states, spectra and the
regularized density of states.

Index ordering is system-major throughout: joint index ``i = k * d_e + e``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .errors import (
    DegenerateFidelityError,
    InvalidDimensionError,
    NotHermitianError,
    NotPSDError,
    RangeOverflowError,
)

HERMITIAN_ATOL = 1e-12
PSD_CLIP = 1e-12
DEFAULT_MAX_DIM = 4096
# exp() overflows beyond ~709.78
LOG_OVERFLOW = 700.0


def max_dim():
    """Dimension guard; ``SCRAMBLE_MAX_DIM`` overrides the default 4096."""
    value = os.environ.get("SCRAMBLE_MAX_DIM")
    return int(value) if value else DEFAULT_MAX_DIM


def _guard(dim):
    limit = max_dim()
    if dim > limit:
        raise InvalidDimensionError(
            f"dimension {dim} exceeds the desk-scale guard {limit} "
            "(set SCRAMBLE_MAX_DIM to override)"
        )


@dataclass(frozen=True)
class SubsystemSplit:
    """Qubit counts of the system S and environment E."""

    n_s: int
    n_e: int

    def __post_init__(self):
        if self.n_s < 0 or self.n_e < 0:
            raise InvalidDimensionError("qubit counts must be nonnegative")
        _guard(self.d)

    @property
    def d_s(self):
        return 2**self.n_s

    @property
    def d_e(self):
        return 2**self.n_e

    @property
    def d(self):
        return self.d_s * self.d_e

    def index(self, k, e):
        return k * self.d_e + e

    def split_index(self, i):
        return divmod(i, self.d_e)


def check_hermitian(h, atol=HERMITIAN_ATOL):
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got shape {h.shape}")
    dev = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
    if dev > atol:
        raise NotHermitianError(f"Hermiticity deviation {dev:.3e} exceeds {atol:.1e}")
    return h


def sample_gue(dim, seed):
    """Draw a GUE matrix with off-diagonal variance ``1/dim``.

    The diagonal is real with variance ``1/dim`` as well, so the spectrum
    fills ``[-2, 2]`` as ``dim`` grows.
    """
    if dim < 2:
        raise InvalidDimensionError(f"GUE dimension must be >= 2, got {dim}")
    _guard(dim)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / (2.0 * np.sqrt(dim))


@dataclass(frozen=True)
class Spectrum:
    energies: np.ndarray
    vectors: np.ndarray

    def reconstruct(self):
        return (self.vectors * self.energies) @ self.vectors.conj().T

    def evolution(self, t):
        """``exp(-iHt)`` from the cached eigendecomposition."""
        return (self.vectors * np.exp(-1j * self.energies * t)) @ self.vectors.conj().T

    @property
    def dim(self):
        return self.energies.size


def eigendecompose(h):
    h = check_hermitian(h)
    _guard(h.shape[0])
    energies, vectors = np.linalg.eigh(h)
    return Spectrum(energies, vectors)


@dataclass(frozen=True)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = check_hermitian(self.matrix, atol=1e-10)
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-10:
            raise NotPSDError(f"density operator has trace {tr!r}, expected 1")

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @cached_property
    def sqrt(self):
        return operator_sqrt(self.matrix)


def _psd_eigh(rho):
    vals, vecs = np.linalg.eigh(check_hermitian(rho, atol=1e-10))
    if vals.size and vals.min() < -PSD_CLIP:
        raise NotPSDError(f"eigenvalue {vals.min():.3e} below -{PSD_CLIP:.0e}")
    return np.clip(vals, 0.0, None), vecs


def operator_sqrt(rho):
    """Positive semidefinite square root; tiny negative eigenvalues are clipped."""
    vals, vecs = _psd_eigh(np.asarray(rho))
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def thermal_state(h_env, beta):
    if not np.isfinite(beta) or beta < 0:
        raise ValueError(f"beta must be finite and >= 0, got {beta}")
    energies, vecs = np.linalg.eigh(check_hermitian(h_env))
    # shifted by the ground energy so the largest exponent is 0
    p = np.exp(-beta * (energies - energies.min()))
    p /= p.sum()
    rho = (vecs * p) @ vecs.conj().T
    return DensityOperator((rho + rho.conj().T) / 2)


def pure_state(dim, index=0):
    rho = np.zeros((dim, dim), dtype=complex)
    rho[index, index] = 1.0
    return DensityOperator(rho)


def maximally_mixed(dim):
    return DensityOperator(np.eye(dim, dtype=complex) / dim)


def embed_env(x_env, split):
    """``1_S (x) X_E`` in system-major ordering."""
    x_env = np.asarray(x_env)
    if x_env.shape != (split.d_e, split.d_e):
        raise InvalidDimensionError(
            f"environment operator has shape {x_env.shape}, expected {(split.d_e,) * 2}"
        )
    return np.kron(np.eye(split.d_s), x_env)


def partial_trace_env(x_full, split):
    x_full = np.asarray(x_full)
    if x_full.shape != (split.d, split.d):
        raise InvalidDimensionError(
            f"operator has shape {x_full.shape}, expected {(split.d,) * 2}"
        )
    blocks = x_full.reshape(split.d_s, split.d_e, split.d_s, split.d_e)
    return np.einsum("aebe->ab", blocks)


def fidelity_inf(rho_env):
    """Fidelity with the maximally mixed state, ``Tr sqrt(rho) / sqrt(D_E)``."""
    if isinstance(rho_env, DensityOperator):
        root = rho_env.sqrt
    else:
        root = operator_sqrt(rho_env)
    f = np.trace(root).real / np.sqrt(root.shape[0])
    return float(np.clip(f, 0.0, 1.0 + 1e-9))


@dataclass(frozen=True)
class RegularizedDOS:
    """Normalized nonnegative weights on energy levels.

    ``energies`` are sorted on construction.  Weights in ``[-1e-12, 0)`` are
    clipped to zero; anything more negative is rejected.
    """

    energies: np.ndarray
    weights: np.ndarray
    beta: float | None = None
    f_beta: float = 1.0
    _support: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if e.shape != w.shape or e.size == 0:
            raise InvalidDimensionError("energies and weights must be nonempty and equal length")
        if w.min() < -PSD_CLIP:
            raise NotPSDError(f"negative weight {w.min():.3e}")
        w = np.clip(w, 0.0, None)
        total = w.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {total!r}, expected 1 within 1e-9")
        order = np.argsort(e, kind="stable")
        e, w = e[order], w[order]
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "weights", w)
        live = w > 0
        object.__setattr__(self, "_support", (e[live].min(), e[live].max()))

    @property
    def size(self):
        return self.energies.size

    @property
    def is_degenerate(self):
        """All weight sits at zero energy, so Z is identically 1."""
        lo, hi = self._support
        return lo == 0.0 and hi == 0.0

    def char(self, t, tau=0.0):
        """``sum_n w_n exp(-i E_n t - E_n tau)`` for broadcastable ``t, tau``."""
        t, tau = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(tau, dtype=float))
        re, im, shift = kernels.spectral_sum(self.energies, self.weights, t, tau)
        if np.any(shift > LOG_OVERFLOW):
            bad = float(np.ravel(tau)[np.argmax(shift)])
            raise RangeOverflowError(
                f"exp overflow at tau={bad!r}: log-scale {shift.max():.1f} exceeds "
                f"{LOG_OVERFLOW}; use a narrower Euclidean window"
            )
        out = np.exp(shift) * (re + 1j * im)
        return out.reshape(t.shape) if t.ndim else complex(out[0])

    def log_partition(self, tau):
        """``ln Z(tau)``, never overflows."""
        tau = np.asarray(tau, dtype=float)
        live = self.weights > 0
        e, w = self.energies[live], self.weights[live]
        out = logsumexp(-np.multiply.outer(tau, e), b=w, axis=-1)
        return out if tau.ndim else float(out)

    def mean_energy(self, tau):
        """``-d ln Z / d tau``, the weighted mean energy at Euclidean time ``tau``."""
        tau = np.asarray(tau, dtype=float)
        live = self.weights > 0
        e, w = self.energies[live], self.weights[live]
        logits = np.log(w) - np.multiply.outer(tau, e)
        p = np.exp(logits - logits.max(axis=-1, keepdims=True))
        out = (p * e).sum(axis=-1) / p.sum(axis=-1)
        return out if tau.ndim else float(out)


def regularized_dos(spec, sqrt_rho_embedded, split, beta, f_beta):
    """Weights ``sqrt(D_E)/(f D) <E_n| 1 (x) sqrt(rho) |E_n>``."""
    if f_beta <= 0:
        raise DegenerateFidelityError("fidelity is zero; the regularized DOS is undefined")
    m = np.asarray(sqrt_rho_embedded)
    if m.shape != (split.d, split.d) or spec.dim != split.d:
        raise InvalidDimensionError("spectrum, operator and split dimensions disagree")
    v = spec.vectors
    diag = np.einsum("in,ij,jn->n", v.conj(), m, v).real
    w = np.sqrt(split.d_e) / (f_beta * split.d) * diag
    # fidelity is clamped to <= 1 + 1e-9, so renormalize away that rounding
    w = np.where(w < 0, np.where(w < -PSD_CLIP, w, 0.0), w)
    total = w.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"regularized weights sum to {total!r}")
    return RegularizedDOS(spec.energies, w / total, beta=beta, f_beta=f_beta)
