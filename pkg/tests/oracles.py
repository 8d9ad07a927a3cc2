"""Independent reference computations by direct density-matrix evolution."""
import numpy as np
from scipy.linalg import expm


def direct_return_probability(h, rho_env, split, t):
    """Evolve every rho_k(0) = |k><k| (x) rho_E and average Tr[rho_k(t) Pi_k]."""
    u = expm(-1j * h * t)
    total = 0.0
    for k in range(split.d_s):
        proj = np.zeros((split.d_s, split.d_s))
        proj[k, k] = 1.0
        rho_k = u @ np.kron(proj, rho_env) @ u.conj().T
        total += np.trace(np.kron(proj, np.eye(split.d_e)) @ rho_k).real
    return total / split.d_s


def direct_purity(h, rho_env, split, t):
    u = expm(-1j * h * t)
    out = []
    for k in range(split.d_s):
        proj = np.zeros((split.d_s, split.d_s))
        proj[k, k] = 1.0
        full = (u @ np.kron(proj, rho_env) @ u.conj().T).reshape(split.d_s, split.d_e, split.d_s, split.d_e)
        reduced = np.einsum("aebe->ab", full)
        out.append(np.trace(reduced @ reduced).real)
    return np.mean(out)
