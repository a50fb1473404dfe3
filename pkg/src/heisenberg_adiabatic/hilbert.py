"""Fixed-magnetization sector bases and sparse operators acting within them.

A product configuration is stored as one small integer per site, the number
of lowering steps from the top state: ``n_j = s_j - m_j`` in ``0 .. 2 s_j``.
Configurations are packed into a mixed-radix code with the first site most
significant, so increasing codes are lexicographic in ``n`` (and the local
order on each site runs from ``m = +s`` down to ``m = -s``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .errors import EmptySector, SpinNetworkError
from .network import HalfInt, SpinNetwork

# Below this full product-space size the m-sum filter over all codes is used;
# above it, the pruned breadth-first generator is faster (benchmarks/ in scripts).
FILTER_CROSSOVER = 2048


def _radices(network: SpinNetwork) -> np.ndarray:
    return np.array([sp_.twice_value + 1 for _, sp_ in network.sites], dtype=np.int64)


def _strides(radices: np.ndarray) -> np.ndarray:
    strides = np.ones(len(radices), dtype=np.int64)
    for i in range(len(radices) - 2, -1, -1):
        strides[i] = strides[i + 1] * radices[i + 1]
    return strides


def _lowering_target(network: SpinNetwork, m: HalfInt) -> int:
    total = sum(sp_.twice_value for _, sp_ in network.sites)
    twice = total - m.twice_value
    if twice % 2 or twice < 0 or twice > 2 * total:
        raise EmptySector(f"no configurations with m = {m} (max spin {HalfInt(total)})")
    return twice // 2


def _enumerate_filter(radices: np.ndarray, target: int) -> np.ndarray:
    size = int(np.prod(radices))
    codes = np.arange(size, dtype=np.int64)
    digits = np.empty((size, len(radices)), dtype=np.int16)
    rest = codes.copy()
    for i in range(len(radices) - 1, -1, -1):
        digits[:, i] = rest % radices[i]
        rest //= radices[i]
    return digits[digits.sum(axis=1) == target]


def _enumerate_direct(radices: np.ndarray, target: int) -> np.ndarray:
    n = len(radices)
    # Largest achievable sum over sites i.. n-1.
    tail_max = np.concatenate([np.cumsum((radices - 1)[::-1])[::-1], [0]])
    partial = np.zeros((1, 0), dtype=np.int16)
    sums = np.zeros(1, dtype=np.int64)
    for i in range(n):
        d = int(radices[i])
        rows = np.repeat(np.arange(len(partial)), d)
        digit = np.tile(np.arange(d, dtype=np.int16), len(partial))
        new_sums = sums[rows] + digit
        ok = (new_sums <= target) & (new_sums + tail_max[i + 1] >= target)
        partial = np.concatenate([partial[rows[ok]], digit[ok, None]], axis=1)
        sums = new_sums[ok]
    return partial


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """All product configurations of ``network`` with total magnetization ``m``."""

    network: SpinNetwork
    m: HalfInt
    configs: np.ndarray  # (dim, n_sites) lowering counts
    codes: np.ndarray  # strictly increasing mixed-radix codes
    radices: np.ndarray
    strides: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return len(self.codes)

    def __len__(self) -> int:
        return self.dim

    def lookup(self, codes) -> np.ndarray:
        """Positions of ``codes`` in the basis; raises KeyError if any is absent."""
        codes = np.asarray(codes, dtype=np.int64)
        pos = np.searchsorted(self.codes, codes)
        pos_c = np.minimum(pos, self.dim - 1)
        if np.any(self.codes[pos_c] != codes):
            raise KeyError("configuration outside the sector")
        return pos_c

    def index_of(self, local_m: Mapping) -> int:
        """Position of the configuration given as ``{site: m_j}``."""
        code = 0
        for pos, (sid, spin) in enumerate(self.network.sites):
            n = (spin.twice_value - HalfInt.of(local_m[sid]).twice_value) // 2
            code += n * int(self.strides[pos])
        return int(self.lookup([code])[0])

    def twice_m(self, site) -> np.ndarray:
        """2 m_j of ``site`` for every basis state."""
        pos = self.network.index(site)
        return self.network.sites[pos][1].twice_value - 2 * self.configs[:, pos].astype(np.int64)

    def heisenberg(self, j, k) -> sp.csr_matrix:
        """Cached CSR matrix of S_j . S_k (see :func:`heisenberg_term`)."""
        key = ("pair", j, k) if self.network.index(j) < self.network.index(k) else ("pair", k, j)
        if key not in self._cache:
            self._cache[key] = _pair_matrix(self, key[1], key[2])
        return self._cache[key]


def build_basis(network: SpinNetwork, m, method: str = "auto") -> SectorBasis:
    """Enumerate the ``m`` sector of ``network``.

    ``method`` is ``"filter"`` (scan the full product space), ``"direct"``
    (pruned generator) or ``"auto"``.
    """
    m = HalfInt.of(m)
    target = _lowering_target(network, m)
    radices = _radices(network)
    strides = _strides(radices)
    if np.prod(radices.astype(float)) > 2**62:
        raise SpinNetworkError("product space too large for 64-bit configuration codes")
    if method == "auto":
        method = "filter" if np.prod(radices) <= FILTER_CROSSOVER else "direct"
    if method == "filter":
        configs = _enumerate_filter(radices, target)
    elif method == "direct":
        configs = _enumerate_direct(radices, target)
    else:
        raise ValueError(f"unknown enumeration method {method!r}")
    codes = configs.astype(np.int64) @ strides if len(radices) else np.zeros(1, dtype=np.int64)
    if len(radices) == 0:
        configs = np.zeros((1, 0), dtype=np.int16)
    return SectorBasis(network, m, configs, codes, radices, strides)


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Real symmetric operator restricted to one sector."""

    basis: SectorBasis
    matrix: sp.csr_matrix
    hermitian: bool = True

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, v):
        return self.matrix @ v

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        if other.basis is not self.basis:
            raise ValueError("operators live in different bases")
        return SparseOperator(self.basis, (self.matrix + other.matrix).tocsr(), self.hermitian and other.hermitian)

    def __mul__(self, scalar: float) -> "SparseOperator":
        return SparseOperator(self.basis, (self.matrix * float(scalar)).tocsr(), self.hermitian)

    __rmul__ = __mul__

    def hermiticity_defect(self) -> float:
        diff = self.matrix - self.matrix.T.conj()
        return float(abs(diff).max()) if diff.nnz else 0.0


def _ladder(twice_s: int, twice_m: np.ndarray, sign: int) -> np.ndarray:
    # sqrt(s(s+1) - m(m +/- 1)) in doubled units
    return np.sqrt((twice_s * (twice_s + 2) - twice_m * (twice_m + 2 * sign)) / 4.0)


def _pair_matrix(basis: SectorBasis, j, k) -> sp.csr_matrix:
    net = basis.network
    pj, pk = net.index(j), net.index(k)
    tsj, tsk = net.sites[pj][1].twice_value, net.sites[pk][1].twice_value
    nj = basis.configs[:, pj].astype(np.int64)
    nk = basis.configs[:, pk].astype(np.int64)
    tmj, tmk = tsj - 2 * nj, tsk - 2 * nk
    dim = basis.dim

    diag = tmj * tmk / 4.0
    # S_j^+ S_k^- : raise j (n_j -> n_j - 1), lower k (n_k -> n_k + 1)
    mask = (nj > 0) & (nk < tsk)
    cols = np.nonzero(mask)[0]
    new_codes = basis.codes[cols] - basis.strides[pj] + basis.strides[pk]
    rows = basis.lookup(new_codes)
    amp = 0.5 * _ladder(tsj, tmj[cols], +1) * _ladder(tsk, tmk[cols], -1)

    idx = np.arange(dim)
    r = np.concatenate([idx, rows, cols])
    c = np.concatenate([idx, cols, rows])
    v = np.concatenate([diag, amp, amp])
    return sp.csr_matrix((v, (r, c)), shape=(dim, dim))


def heisenberg_term(basis: SectorBasis, j, k) -> SparseOperator:
    """S_j . S_k = S^z_j S^z_k + (S^+_j S^-_k + S^-_j S^+_k) / 2 within the sector."""
    if j == k:
        raise SpinNetworkError("heisenberg_term needs two distinct sites")
    return SparseOperator(basis, basis.heisenberg(j, k))


def assemble_hamiltonian(basis: SectorBasis, couplings: Mapping | None = None) -> SparseOperator:
    """Sum of J_jk S_j . S_k over the network's edges.

    Edges missing from ``couplings`` take their base coupling; zero entries
    switch an edge off.
    """
    cpl = basis.network.normalize_couplings(couplings)
    mat = sp.csr_matrix((basis.dim, basis.dim))
    for (a, b), value in cpl.items():
        if value != 0.0:
            mat = mat + value * basis.heisenberg(a, b)
    return SparseOperator(basis, mat.tocsr())


def total_spin_squared(basis: SectorBasis) -> SparseOperator:
    """S_tot^2 = sum_j s_j(s_j+1) + 2 sum_{j<k} S_j . S_k over all site pairs."""
    if "s2" not in basis._cache:
        ids = basis.network.ids
        const = sum(spin.casimir() for _, spin in basis.network.sites)
        mat = const * sp.identity(basis.dim, format="csr")
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                mat = mat + 2.0 * basis.heisenberg(ids[a], ids[b])
        basis._cache["s2"] = mat.tocsr()
    return SparseOperator(basis, basis._cache["s2"])


def zeeman_z(basis: SectorBasis, b: float) -> SparseOperator:
    """Uniform z-field b * sum_j S^z_j, which is b * m on the whole sector."""
    return SparseOperator(basis, (float(b) * basis.m.value) * sp.identity(basis.dim, format="csr"))
