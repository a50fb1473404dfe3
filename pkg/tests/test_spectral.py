import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisenberg_adiabatic.errors import DegenerateGround
from heisenberg_adiabatic.hilbert import assemble_hamiltonian, build_basis, total_spin_squared
from heisenberg_adiabatic.network import HALF, ZERO, HalfInt, SpinNetwork, cg_multiplicity
from heisenberg_adiabatic.protocol import (
    Constant,
    Schedule,
    arm_end,
    chain,
    failure_chain,
    star_graph,
    transfer_schedule,
)
from heisenberg_adiabatic.spectral import (
    label_by_total_spin,
    levels_over_schedule,
    lieb_mattis_check,
    lowest_eigenpairs,
    sector_gap,
    sector_spectrum,
)

from conftest import bipartite_networks, random_bipartite_network
from oracles import full_hamiltonian, full_total_spin

H = HalfInt


def test_lowest_eigenpairs_dense_and_iterative_agree():
    net = star_graph(3, 2)
    basis = build_basis(net, HALF)
    Hs = assemble_hamiltonian(basis)
    dense = lowest_eigenpairs(Hs, 6)
    iterative = lowest_eigenpairs(Hs, 6, dense_threshold=4)
    np.testing.assert_allclose(iterative.energies, dense.energies, atol=1e-10)
    exact = np.linalg.eigvalsh(Hs.toarray())[:6]
    np.testing.assert_allclose(dense.energies, exact, atol=1e-12)
    for e, v in zip(iterative.energies, iterative.vectors.T):
        assert np.linalg.norm(Hs.matrix @ v - e * v) < 1e-8


def test_labels_two_spins():
    basis = build_basis(SpinNetwork(((1, HALF), (2, HALF)), ((1, 2, 1.0),)), ZERO)
    spec = sector_spectrum(basis)
    np.testing.assert_allclose(spec.energies, [-0.75, 0.25], atol=1e-12)
    assert spec.s_labels == [ZERO, H(2)]


def test_labels_chain_and_star_grounds():
    spec = sector_spectrum(build_basis(chain(4), ZERO))
    assert spec.s_labels[0] == ZERO
    spec = sector_spectrum(build_basis(star_graph(3, 2), HALF), k=4)
    assert spec.s_labels[0] == HALF
    assert max(spec.label_residuals) < 1e-6


def test_labels_resolve_degenerate_multiplets():
    # all couplings off: every level is degenerate at E = 0 and labels still come out pure
    net = chain(4)
    basis = build_basis(net, ZERO)
    spec = sector_spectrum(basis, {e: 0.0 for e in net.edge_keys})
    assert sorted(t.twice_value for t in spec.s_labels) == [0, 0, 2, 2, 2, 4]
    assert max(spec.label_residuals) < 1e-6


def test_r_labels_count_within_each_s():
    spec = sector_spectrum(build_basis(chain(4), ZERO))
    # energies ordered: levels with the same s get r = 0, 1, ...
    seen = {}
    for lab, r in zip(spec.s_labels, spec.r_labels()):
        assert r == seen.get(lab, 0)
        seen[lab] = r + 1


def test_sector_gap_exhausted_for_lone_singlet():
    net = SpinNetwork(((1, HALF), (2, HALF)), ((1, 2, 1.0),))
    gap = sector_gap(net, None, ZERO)
    assert gap.exhausted
    assert gap.ground_energy == pytest.approx(-0.75)
    assert gap.gap == pytest.approx(1.0)


def test_star_midpoint_gap_matches_dense_oracle():
    net = star_graph(3, 2)
    sched = transfer_schedule(net, 0, arm_end(0, 2), 1.0)
    cpl = sched.couplings_at(0.5)
    got = sector_gap(net, cpl, HALF)
    assert got.gap > 0
    full = full_hamiltonian(net, cpl)
    s2, sz = full_total_spin(net)
    sel = np.isclose(np.diag(sz), 0.5)
    # restrict the m=1/2 block to s=1/2 through the S^2 eigenbasis
    w, u = np.linalg.eigh(s2[np.ix_(sel, sel)])
    P = u[:, np.isclose(w, 0.75)]
    e = np.linalg.eigvalsh(P.T @ full[np.ix_(sel, sel)] @ P)
    assert got.ground_energy == pytest.approx(e[0], abs=1e-10)
    assert got.gap == pytest.approx(e[1] - e[0], abs=1e-10)


def test_failure_chain_is_degenerate_at_end():
    net, sender, receiver = failure_chain()
    sched = transfer_schedule(net, sender, receiver, 1.0)
    with pytest.raises(DegenerateGround):
        sector_gap(net, sched.couplings_at(1.0), HALF)
    result = sector_gap(net, sched.couplings_at(1.0), HALF, raise_on_degenerate=False)
    assert result.degenerate and result.gap < 1e-10
    assert sector_gap(net, sched.couplings_at(0.5), HALF).gap > 0.1


def test_sector_gap_independent_of_m(rng):
    net = random_bipartite_network(rng, 6, (1, 2))
    cpl = {e: float(rng.uniform(0.3, 1.5)) for e in net.edge_keys}
    report = lieb_mattis_check(net, cpl)
    s = report.imbalance + H(2)
    gaps = [sector_gap(net, cpl, s, m, raise_on_degenerate=False) for m in (s, s - H(2)) if abs(m) <= s]
    for g in gaps[1:]:
        assert g.gap == pytest.approx(gaps[0].gap, abs=1e-8)
        assert g.ground_energy == pytest.approx(gaps[0].ground_energy, abs=1e-8)


def test_lieb_mattis_examples():
    two = SpinNetwork(((1, H(2)), (2, HALF)), ((1, 2, 1.0),))
    assert lieb_mattis_check(two).ground_label == HALF
    mixed = SpinNetwork(((1, H(2)), (2, HALF), (3, H(2))), ((1, 2, 1.0), (2, 3, 0.7)))
    report = lieb_mattis_check(mixed)
    assert report.ground_label == H(3) and report.passed
    assert lieb_mattis_check(star_graph(3, 2)).ground_label == HALF


@settings(max_examples=15, deadline=None)
@given(bipartite_networks(min_sites=2, max_sites=6, twice_spins=(1, 2)), st.integers(0, 2**16))
def test_lieb_mattis_random_against_dense(net, seed):
    rng = np.random.default_rng(seed)
    cpl = {e: float(rng.uniform(0.3, 2.0)) for e in net.edge_keys}
    report = lieb_mattis_check(net, cpl)
    assert report.passed
    full = full_hamiltonian(net, cpl)
    e, v = np.linalg.eigh(full)
    s2, _ = full_total_spin(net)
    # the dense global ground state carries s = |g|
    val = float(v[:, 0] @ s2 @ v[:, 0])
    g = report.imbalance.value
    assert val == pytest.approx(g * (g + 1), abs=1e-6)


def test_multiplet_counts_match_cg(rng):
    # count spin labels over the full spectrum of every non-negative m sector
    net = random_bipartite_network(rng, 5, (1, 2))
    cpl = {e: float(rng.uniform(0.3, 1.5)) for e in net.edge_keys}
    total = sum(sp.twice_value for _, sp in net.sites)
    spins = [sp for _, sp in net.sites]
    for twice_m in range(total % 2, total + 1, 2):
        spec = sector_spectrum(build_basis(net, H(twice_m)), cpl)
        for twice_s in range(twice_m, total + 1, 2):
            assert sum(lab.twice_value == twice_s for lab in spec.s_labels) == cg_multiplicity(spins, H(twice_s))


def test_ground_energy_concave_in_couplings(rng):
    # the ground energy is a minimum of linear functions of the couplings
    net = random_bipartite_network(rng, 6, (1,))
    a = {e: float(rng.uniform(0.2, 1.5)) for e in net.edge_keys}
    b = {e: float(rng.uniform(0.2, 1.5)) for e in net.edge_keys}
    mid = {e: 0.5 * (a[e] + b[e]) for e in net.edge_keys}
    basis = build_basis(net, H(sum(sp.twice_value for _, sp in net.sites) % 2))

    def e0(c):
        return np.linalg.eigvalsh(assemble_hamiltonian(basis, c).toarray())[0]

    assert e0(mid) >= 0.5 * (e0(a) + e0(b)) - 1e-12


def test_levels_over_frozen_schedule_are_constant():
    net = chain(4)
    sched = Schedule(net, 3.0, {e: Constant(1.0) for e in net.edge_keys})
    trace = levels_over_schedule(sched, ZERO, k=4, n_samples=7)
    assert trace.levels.shape == (7, 4)
    assert np.ptp(trace.levels, axis=0).max() < 1e-12
    assert trace.times[0] == 0.0 and trace.times[-1] == 1.0
    assert trace.min_gap > 0


def test_label_by_total_spin_is_reusable():
    basis = build_basis(chain(3), HALF)
    spec = lowest_eigenpairs(assemble_hamiltonian(basis), basis.dim)
    labelled = label_by_total_spin(spec, total_spin_squared(basis))
    assert [t.twice_value for t in labelled.s_labels] == [1, 1, 3]
