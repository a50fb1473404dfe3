"""Brute-force references built on the full tensor-product space.

Nothing here touches the sector machinery of the package; operators are
assembled with Kronecker products of local spin matrices.  Local bases run
m = +s .. -s and the first site is the most significant tensor factor.
"""

from __future__ import annotations

from functools import reduce

import numpy as np
import scipy.sparse as sps
from scipy.linalg import expm


def spin_matrices(twice_s: int):
    s = twice_s / 2
    ms = s - np.arange(twice_s + 1)
    sz = np.diag(ms)
    sp = np.zeros((twice_s + 1, twice_s + 1))
    for i in range(1, twice_s + 1):
        # <m+1| S+ |m>, with m = ms[i] and m+1 = ms[i-1]
        sp[i - 1, i] = np.sqrt(s * (s + 1) - ms[i] * (ms[i] + 1))
    return sz, sp, sp.T


def _embed(op, pos, dims, sparse=False):
    if sparse:
        mats = [sps.identity(d, format="csr") for d in dims]
        mats[pos] = sps.csr_matrix(op)
        return reduce(lambda a, b: sps.kron(a, b, format="csr"), mats)
    mats = [np.eye(d) for d in dims]
    mats[pos] = op
    return reduce(np.kron, mats)


def full_dims(network):
    return [spin.twice_value + 1 for _, spin in network.sites]


def full_pair(network, a, b, sparse=False):
    dims = full_dims(network)
    pa, pb = network.index(a), network.index(b)
    za, pa_, ma = spin_matrices(dims[pa] - 1)
    zb, pb_, mb = spin_matrices(dims[pb] - 1)

    def e(op, pos):
        return _embed(op, pos, dims, sparse)

    return e(za, pa) @ e(zb, pb) + 0.5 * (e(pa_, pa) @ e(mb, pb) + e(ma, pa) @ e(pb_, pb))


def full_hamiltonian(network, couplings=None, sparse=False):
    """Dense (or scipy.sparse CSR) Hamiltonian on the whole tensor-product space."""
    cpl = network.normalize_couplings(couplings)
    D = network.dimension
    H = sps.csr_matrix((D, D)) if sparse else np.zeros((D, D))
    for (a, b), j in cpl.items():
        if j:
            H = H + j * full_pair(network, a, b, sparse)
    return H


def full_total_spin(network, sparse=False):
    """(S_tot^2, S^z_tot) built as S^- S^+ + S_z^2 + S_z from total ladders."""
    dims = full_dims(network)
    sz = sum(_embed(spin_matrices(d - 1)[0], pos, dims, sparse) for pos, d in enumerate(dims))
    splus = sum(_embed(spin_matrices(d - 1)[1], pos, dims, sparse) for pos, d in enumerate(dims))
    return splus.T @ splus + sz @ sz + sz, sz


def full_magnetizations(network):
    """Diagonal of S^z_tot on the full space, from local m values (m = +s .. -s per site)."""
    m = np.zeros(1)
    for d in full_dims(network):
        m = (m[:, None] + ((d - 1) / 2 - np.arange(d))[None, :]).ravel()
    return m


def sector_indices(network, twice_m):
    return np.nonzero(np.isclose(full_magnetizations(network), twice_m / 2))[0]


def multiplet_counts(network):
    """{2s: number of spin-s multiplets} by diagonalizing S_tot^2 on the full space."""
    s2, _ = full_total_spin(network)
    evals = np.linalg.eigvalsh(s2)
    counts = {}
    for value in evals:
        twice = int(round(-1 + np.sqrt(1 + 4 * value)))
        counts[twice] = counts.get(twice, 0) + 1
    return {t: c // (t + 1) for t, c in counts.items()}


def sector_dimension_gf(twice_spins, twice_m):
    """Coefficient extraction from prod_j (1 + x + ... + x^{2 s_j})."""
    poly = np.array([1], dtype=object)
    for t in twice_spins:
        poly = np.convolve(poly, np.ones(t + 1, dtype=object))
    target = (sum(twice_spins) - twice_m)
    if target % 2 or target < 0 or target // 2 >= len(poly):
        return 0
    return int(poly[target // 2])


def magnus4(h_of_t, psi, T, n_steps):
    """Fourth-order commutator Magnus integrator with dense exponentials."""
    dt = T / n_steps
    c = np.sqrt(3) / 6
    psi = psi.astype(complex)
    for i in range(n_steps):
        t0 = i * dt
        h1, h2 = h_of_t(t0 + (0.5 - c) * dt), h_of_t(t0 + (0.5 + c) * dt)
        omega = -1j * dt / 2 * (h1 + h2) - (np.sqrt(3) / 12) * dt**2 * (h2 @ h1 - h1 @ h2)
        psi = expm(omega) @ psi
    return psi


def partial_trace_keep(psi_full, dims, keep):
    """Reduced density matrix of ``keep`` positions (in the given order)."""
    n = len(dims)
    tensor = psi_full.reshape(dims)
    rest = [i for i in range(n) if i not in keep]
    t = np.transpose(tensor, list(keep) + rest)
    dk = int(np.prod([dims[i] for i in keep]))
    mat = t.reshape(dk, -1)
    return mat @ mat.conj().T
