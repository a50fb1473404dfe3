"""Eigen-analysis inside magnetization sectors.

Eigenstates are labelled by total spin through simultaneous diagonalization
of S_tot^2 inside each energy cluster, so exact SU(2) degeneracies never
produce mixed labels.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse.linalg as spla

from .errors import AmbiguousLabel, ConvergenceFailure, DegenerateGround, SpinNetworkError
from .hilbert import SectorBasis, SparseOperator, assemble_hamiltonian, build_basis, total_spin_squared
from .network import HalfInt, SpinNetwork, bipartition, connected_components, spin_imbalance

log = logging.getLogger(__name__)

DENSE_THRESHOLD = 512
DEGENERACY_RTOL = 1e-8
LABEL_TOL = 1e-6
RESIDUAL_RTOL = 1e-9


@dataclass
class LabeledSpectrum:
    """Lowest eigenpairs of one sector operator.

    ``s_labels``/``label_residuals`` are ``None`` until
    :func:`label_by_total_spin` fills them in.  ``complete`` means the
    eigenpairs span the whole sector.
    """

    energies: np.ndarray
    vectors: np.ndarray
    m: HalfInt
    complete: bool
    s_labels: list | None = None
    label_residuals: np.ndarray | None = None
    warnings: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.energies)

    def with_label(self, s) -> np.ndarray:
        """Positions of the eigenpairs labelled ``s``, in energy order."""
        if self.s_labels is None:
            raise ValueError("spectrum is not labelled")
        s = HalfInt.of(s)
        return np.array([i for i, lab in enumerate(self.s_labels) if lab == s], dtype=int)

    def r_labels(self) -> list[int]:
        """Energy rank of each state among states with the same total spin."""
        seen: dict = {}
        out = []
        for lab in self.s_labels:
            out.append(seen.get(lab, 0))
            seen[lab] = out[-1] + 1
        return out


def degeneracy_tolerance(energies: np.ndarray) -> float:
    width = float(energies[-1] - energies[0]) if len(energies) > 1 else 0.0
    return DEGENERACY_RTOL * max(1.0, abs(width))


def lowest_eigenpairs(op: SparseOperator, k: int, dense_threshold: int = DENSE_THRESHOLD) -> LabeledSpectrum:
    """The ``k`` lowest eigenpairs; dense below ``dense_threshold``, Lanczos above."""
    dim = op.dim
    if not 1 <= k <= dim:
        raise ValueError(f"k={k} outside 1..{dim}")
    if dim <= dense_threshold or k >= dim - 1:
        evals, evecs = np.linalg.eigh(op.toarray())
        evals, evecs = evals[:k], evecs[:, :k]
    else:
        v0 = np.ones(dim) / np.sqrt(dim)
        ncv = min(dim, max(2 * k + 1, 20))
        try:
            evals, evecs = spla.eigsh(op.matrix, k=k, which="SA", tol=1e-13, v0=v0, ncv=ncv, maxiter=50 * dim)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceFailure(
                f"Lanczos did not converge for k={k}, dim={dim}",
                converged=len(exc.eigenvalues),
                dim=dim,
            ) from exc
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]
        resid = np.linalg.norm(op.matrix @ evecs - evecs * evals, axis=0)
        bad = resid > RESIDUAL_RTOL * np.maximum(1.0, np.abs(evals))
        if np.any(bad):
            raise ConvergenceFailure(
                "Lanczos residual above tolerance",
                residuals=resid.tolist(),
                dim=dim,
                k=k,
            )
    return LabeledSpectrum(np.asarray(evals, float), np.asarray(evecs), op.basis.m, complete=(k == dim))


def _spin_from_casimir(value: float) -> HalfInt:
    s = (-1.0 + np.sqrt(max(0.0, 1.0 + 4.0 * value))) / 2.0
    return HalfInt(int(round(2 * s)))


def label_by_total_spin(spectrum: LabeledSpectrum, s2op: SparseOperator) -> LabeledSpectrum:
    """Rotate every energy cluster onto S_tot^2 eigenvectors and assign s.

    When the spectrum is truncated the topmost cluster may be cut, so it is
    dropped.  Raises :class:`AmbiguousLabel` if |<S^2> - s(s+1)| exceeds the
    labelling tolerance.
    """
    energies = spectrum.energies
    vectors = spectrum.vectors.copy()
    tol = degeneracy_tolerance(energies)
    clusters = []
    start = 0
    for i in range(1, len(energies) + 1):
        if i == len(energies) or energies[i] - energies[i - 1] > tol:
            clusters.append((start, i))
            start = i
    if not spectrum.complete and len(clusters) > 1:
        clusters = clusters[:-1]
    keep = clusters[-1][1] if clusters else 0

    labels = []
    residuals = []
    warnings = []
    for a, b in clusters:
        block = vectors[:, a:b]
        s2_block = block.conj().T @ (s2op.matrix @ block)
        s2_block = (s2_block + s2_block.conj().T) / 2
        lam, rot = np.linalg.eigh(s2_block)
        vectors[:, a:b] = block @ rot
        cluster_labels = []
        for value in lam:
            s = _spin_from_casimir(value)
            resid = abs(value - s.casimir())
            if resid > LABEL_TOL or (s.twice_value - spectrum.m.twice_value) % 2 or abs(spectrum.m) > s:
                raise AmbiguousLabel(
                    f"<S^2> = {value:.10g} is not s(s+1) for an admissible s in sector m={spectrum.m}"
                )
            cluster_labels.append(s)
            residuals.append(resid)
        # Same-s degeneracy means the r label is not well defined.
        for s in set(cluster_labels):
            if cluster_labels.count(s) > 1:
                warnings.append(f"{cluster_labels.count(s)} degenerate states with s={s} at E={energies[a]:.12g}")
        labels.extend(cluster_labels)
    return LabeledSpectrum(
        energies[:keep].copy(),
        vectors[:, :keep],
        spectrum.m,
        spectrum.complete and keep == len(energies),
        labels,
        np.array(residuals),
        warnings,
    )


def sector_spectrum(
    basis: SectorBasis,
    couplings: Mapping | None = None,
    k: int | None = None,
    dense_threshold: int = DENSE_THRESHOLD,
    hamiltonian: SparseOperator | None = None,
) -> LabeledSpectrum:
    """Labelled spectrum of H in ``basis``; ``k=None`` means every state."""
    H = hamiltonian if hamiltonian is not None else assemble_hamiltonian(basis, couplings)
    k = basis.dim if k is None else min(k, basis.dim)
    return label_by_total_spin(lowest_eigenpairs(H, k, dense_threshold), total_spin_squared(basis))


@dataclass(frozen=True)
class SectorGap:
    ground_energy: float
    gap: float
    exhausted: bool = False  # only one spin-s state in the sector
    degenerate: bool = False


def _gap_from_spectrum(spec: LabeledSpectrum, s: HalfInt) -> SectorGap | None:
    idx = spec.with_label(s)
    if len(idx) >= 2:
        e0, e1 = spec.energies[idx[0]], spec.energies[idx[1]]
        gap = float(e1 - e0)
        return SectorGap(float(e0), gap, degenerate=gap < degeneracy_tolerance(spec.energies))
    if spec.complete:
        if len(idx) == 0:
            raise SpinNetworkError(f"sector m={spec.m} has no state with s={s}")
        e0 = spec.energies[idx[0]]
        others = np.delete(spec.energies, idx[0])
        gap = float(np.min(np.abs(others - e0))) if len(others) else float("inf")
        return SectorGap(float(e0), gap, exhausted=True)
    return None


def gap_in_basis(
    basis: SectorBasis,
    hamiltonian: SparseOperator,
    s,
    dense_threshold: int = DENSE_THRESHOLD,
) -> SectorGap:
    """Gap within V_{s,m}, growing the number of eigenpairs until two spin-s states appear."""
    s = HalfInt.of(s)
    k = basis.dim if basis.dim <= dense_threshold else min(basis.dim, 8)
    while True:
        spec = sector_spectrum(basis, k=k, dense_threshold=dense_threshold, hamiltonian=hamiltonian)
        result = _gap_from_spectrum(spec, s)
        if result is not None:
            return result
        k = min(basis.dim, 2 * k)


def sector_gap(
    network: SpinNetwork,
    couplings: Mapping | None,
    s,
    m=None,
    *,
    raise_on_degenerate: bool = True,
    dense_threshold: int = DENSE_THRESHOLD,
) -> SectorGap:
    """Ground energy and gap E(s, r=1, m) - E(s, r=0, m).

    ``m`` defaults to ``s``.  A degenerate ground raises
    :class:`DegenerateGround` unless ``raise_on_degenerate`` is false.
    """
    s = HalfInt.of(s)
    m = s if m is None else HalfInt.of(m)
    if abs(m) > s:
        raise SpinNetworkError(f"|m|={abs(m)} exceeds s={s}")
    basis = build_basis(network, m)
    result = gap_in_basis(basis, assemble_hamiltonian(basis, couplings), s, dense_threshold)
    if result.degenerate and raise_on_degenerate:
        raise DegenerateGround(f"ground state of V(s={s}, m={m}) is degenerate (gap {result.gap:.3e})", result.gap)
    return result


@dataclass
class SectorCheck:
    m: HalfInt
    ground_label: HalfInt
    unique: bool
    gap: float
    passed: bool


@dataclass
class LiebMattisReport:
    imbalance: HalfInt
    ground_label: HalfInt
    ground_unique: bool
    sectors: list
    passed: bool
    label_residual: float

    def __bool__(self) -> bool:
        return self.passed


def _lowest_two(basis: SectorBasis, couplings, dense_threshold: int) -> LabeledSpectrum:
    k = basis.dim if basis.dim <= dense_threshold else min(basis.dim, 6)
    while True:
        spec = sector_spectrum(basis, couplings, k=k, dense_threshold=dense_threshold)
        if len(spec) >= 2 or spec.complete:
            return spec
        k = min(basis.dim, 2 * k)


def lieb_mattis_check(
    network: SpinNetwork, couplings: Mapping | None = None, dense_threshold: int = DENSE_THRESHOLD
) -> LiebMattisReport:
    """Check the ground-state spin |g| and unique s = m ground states for m >= |g|."""
    decomp = connected_components(network, couplings)
    if len(decomp) != 1:
        raise SpinNetworkError("Lieb-Mattis check needs a connected network")
    parts = bipartition(network)
    g = abs(spin_imbalance(network, parts))
    smax = HalfInt(sum(sp_.twice_value for _, sp_ in network.sites))

    # Every multiplet is represented in the lowest-|m| sector.
    m_low = HalfInt(smax.twice_value % 2)
    spec = _lowest_two(build_basis(network, m_low), couplings, dense_threshold)
    tol = degeneracy_tolerance(spec.energies)
    ground_label = spec.s_labels[0]
    ground_unique = len(spec) < 2 or spec.energies[1] - spec.energies[0] > tol
    passed = ground_label == g and ground_unique

    sectors = []
    m = g
    while m <= smax:
        sspec = _lowest_two(build_basis(network, m), couplings, dense_threshold)
        gap = float(sspec.energies[1] - sspec.energies[0]) if len(sspec) >= 2 else float("inf")
        unique = gap > degeneracy_tolerance(sspec.energies)
        ok = unique and sspec.s_labels[0] == m
        sectors.append(SectorCheck(m, sspec.s_labels[0], unique, gap, ok))
        passed = passed and ok
        m = m + HalfInt(2)
    return LiebMattisReport(g, ground_label, ground_unique, sectors, passed, float(spec.label_residuals[0]))


@dataclass
class GapTrace:
    """Lowest levels and the in-sector gap sampled along a schedule.

    ``times`` are fractions of the schedule duration ``T``.
    """

    times: np.ndarray
    levels: np.ndarray  # (n_samples, k)
    gap_in_sector: np.ndarray
    ground_energy: np.ndarray
    s: HalfInt
    m: HalfInt
    T: float

    @property
    def min_gap(self) -> float:
        return float(np.min(self.gap_in_sector)) if len(self.gap_in_sector) else float("nan")


def levels_over_schedule(schedule, s, m=None, k: int = 10, n_samples: int = 101,
                         dense_threshold: int = DENSE_THRESHOLD) -> GapTrace:
    """Sample H(t) at ``n_samples`` uniform times and record levels and the spin-s gap.

    ``schedule`` needs ``network``, ``T`` and ``couplings_at(t)``.
    """
    s = HalfInt.of(s)
    m = s if m is None else HalfInt.of(m)
    basis = build_basis(schedule.network, m)
    k = min(k, basis.dim)
    fractions = np.linspace(0.0, 1.0, n_samples)
    levels = np.empty((n_samples, k))
    gaps = np.empty(n_samples)
    grounds = np.empty(n_samples)
    for i, frac in enumerate(fractions):
        t = schedule.T if i == n_samples - 1 else frac * schedule.T
        H = assemble_hamiltonian(basis, schedule.couplings_at(t))
        levels[i] = lowest_eigenpairs(H, k, dense_threshold).energies
        result = gap_in_basis(basis, H, s, dense_threshold)
        gaps[i] = result.gap
        grounds[i] = result.ground_energy
    return GapTrace(fractions, levels, gaps, grounds, s, m, float(schedule.T))
