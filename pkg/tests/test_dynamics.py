import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from heisenberg_adiabatic.dynamics import (
    basis_state,
    default_jt_grid,
    evolve,
    expm_krylov,
    ground_state_vector,
    initial_transfer_state,
    local_basis_vector,
    reduced_density,
    simulate_entanglement,
    simulate_transfer,
    singlet_error,
    singlet_product_state,
    singlet_vector,
    star_instances,
    StateVector,
    sweep,
    SweepInstance,
    transfer_error,
    zeeman_phase_check,
)
from heisenberg_adiabatic.errors import DegenerateGround, DimensionMismatch, SpinNetworkError, UnequalSpins
from heisenberg_adiabatic.hilbert import assemble_hamiltonian, build_basis, total_spin_squared
from heisenberg_adiabatic.network import HALF, ZERO, HalfInt, SpinNetwork
from heisenberg_adiabatic.protocol import (
    Constant,
    PiecewiseLinear,
    RampOn,
    Schedule,
    chain,
    entanglement_schedule,
    failure_chain,
    star_graph,
    transfer_schedule,
)

from conftest import random_bipartite_network
from oracles import full_hamiltonian, magnus4, partial_trace_keep

H = HalfInt


def embed(state: StateVector) -> np.ndarray:
    """Sector amplitudes placed into the full product space (codes are full indices)."""
    full = np.zeros(state.network.dimension, dtype=complex)
    full[state.basis.codes] = state.amplitudes
    return full


def test_ground_state_of_a_dimer_is_the_singlet():
    net = SpinNetwork(((1, HALF), (2, HALF)), ((1, 2, 1.0),))
    psi = ground_state_vector(net, None, ZERO)
    np.testing.assert_allclose(embed(psi), [0, 1 / math.sqrt(2), -1 / math.sqrt(2), 0], atol=1e-12)
    np.testing.assert_allclose(embed(psi), singlet_vector(HALF), atol=1e-12)


def test_ground_state_degenerate_raises():
    net, _, _ = failure_chain()
    end = transfer_schedule(net, 1, 4, 1.0).couplings_at(1.0)
    with pytest.raises(DegenerateGround):
        ground_state_vector(net, end, HALF)


def test_initial_state_three_chain():
    net = chain(3)
    sched = transfer_schedule(net, 1, 3, 1.0)
    psi = initial_transfer_state(sched, [1])
    up = local_basis_vector(HALF, HALF)
    np.testing.assert_allclose(embed(psi), np.kron(up, singlet_vector(HALF)), atol=1e-12)
    down = initial_transfer_state(sched, [1], -HALF)
    np.testing.assert_allclose(embed(down), np.kron(local_basis_vector(HALF, -HALF), singlet_vector(HALF)), atol=1e-12)


def test_initial_state_star_has_spin_half():
    sched = transfer_schedule(star_graph(3, 2), 0, 2, 1.0)
    psi = initial_transfer_state(sched, [0])
    assert psi.expectation(total_spin_squared(psi.basis)) == pytest.approx(0.75, abs=1e-10)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)


def test_initial_state_requires_disconnected_sender():
    net = chain(3)
    with pytest.raises(SpinNetworkError):
        initial_transfer_state(Schedule(net, 1.0), [1])


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 60), st.floats(0.01, 30.0), st.integers(0, 2**16))
def test_krylov_matches_dense_expm(n, dt, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    h = (a + a.T) / 2
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    got = expm_krylov(h, v, dt)
    want = expm(-1j * dt * h) @ v
    assert np.linalg.norm(got - want) < 1e-8 * np.linalg.norm(v)


def test_frozen_eigenstate_only_picks_up_a_phase():
    net = star_graph(2, 2)
    sched = Schedule(net, 3.7)
    psi = ground_state_vector(net, None, HALF)
    e0 = psi.expectation(assemble_hamiltonian(psi.basis))
    out = evolve(sched, psi, steps=16).state
    np.testing.assert_allclose(out.amplitudes, np.exp(-1j * e0 * 3.7) * psi.amplitudes, atol=1e-9)


def test_zero_hamiltonian_is_identity():
    net = chain(4)
    sched = Schedule(net, 5.0, {e: Constant(0.0) for e in net.edge_keys})
    psi = basis_state(net, {1: HALF, 2: -HALF, 3: HALF, 4: -HALF})
    out = evolve(sched, psi)
    np.testing.assert_allclose(out.state.amplitudes, psi.amplitudes, atol=1e-14)


def test_reduced_density_matches_partial_trace(rng):
    net = SpinNetwork(((1, H(2)), (2, HALF), (3, HALF), (4, H(2))), ((1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)))
    dims = [3, 2, 2, 3]
    comps = []
    for twice_m in (0, 2):
        basis = build_basis(net, H(twice_m))
        amps = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
        comps.append(StateVector(basis, amps / np.linalg.norm(amps) / math.sqrt(2)))
    full = embed(comps[0]) + embed(comps[1])
    for keep in ([4], [2, 3], [3, 1], [1, 2, 4]):
        pos = [net.index(s) for s in keep]
        want = partial_trace_keep(full, dims, pos)
        np.testing.assert_allclose(reduced_density(comps, keep), want, atol=1e-12)
    np.testing.assert_allclose(reduced_density(comps[0], [1, 2, 3, 4]),
                               np.outer(embed(comps[0]), embed(comps[0]).conj()), atol=1e-12)


def test_transfer_error_examples():
    net = SpinNetwork(((1, HALF), (2, HALF)), ((1, 2, 1.0),))
    up = basis_state(net, {1: HALF, 2: -HALF})
    assert transfer_error(up, 1, [1, 0]) == pytest.approx(0.0, abs=1e-15)
    assert transfer_error(up, 2, [1, 0]) == pytest.approx(1.0)
    singlet = ground_state_vector(net, None, ZERO)
    assert transfer_error(singlet, 2, [1, 1]) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DimensionMismatch):
        transfer_error(up, 1, [1, 0, 0])


def test_singlet_error_examples():
    net = SpinNetwork(((1, HALF), (2, HALF)), ((1, 2, 1.0),))
    assert singlet_error(ground_state_vector(net, None, ZERO), 1, 2) == pytest.approx(0.0, abs=1e-12)
    assert singlet_error(basis_state(net, {1: HALF, 2: HALF}), 1, 2) == pytest.approx(1.0)
    mixed = SpinNetwork(((1, HALF), (2, H(2))), ((1, 2, 1.0),))
    with pytest.raises(UnequalSpins):
        singlet_error(basis_state(mixed, {1: HALF, 2: ZERO}), 1, 2)


def test_singlet_product_spin_one():
    net = chain(2, H(2))
    psi = singlet_product_state(net, [(1, 2)])
    np.testing.assert_allclose(embed(psi), singlet_vector(H(2)), atol=1e-12)
    assert psi.expectation(total_spin_squared(psi.basis)) == pytest.approx(0.0, abs=1e-12)


def _random_schedule(rng, net, T):
    profiles = {}
    for key, j in net.base_couplings.items():
        kind = rng.integers(3)
        if kind == 0:
            profiles[key] = Constant(j)
        elif kind == 1:
            profiles[key] = RampOn(j)
        else:
            vals = rng.uniform(0, 1.5, 3)
            profiles[key] = PiecewiseLinear(((0.0, vals[0]), (0.4, vals[1]), (1.0, vals[2])))
    return Schedule(net, T, profiles)


def compare_with_magnus(rng, net, T, n_oracle=2000):
    """Adaptive propagation vs fourth-order Magnus on the full space; returns 1 - |overlap|."""
    sched = _random_schedule(rng, net, T)
    total = sum(sp.twice_value for _, sp in net.sites)
    basis = build_basis(net, H(total % 2))
    amps = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    psi0 = StateVector(basis, amps / np.linalg.norm(amps))
    out = evolve(sched, psi0)
    want = magnus4(lambda t: full_hamiltonian(net, sched.couplings_at(t)), embed(psi0), T, n_oracle)
    return 1.0 - abs(np.vdot(want, embed(out.state))), out


def test_propagation_matches_magnus_oracle(rng):
    net = random_bipartite_network(rng, 5, (1, 2))
    while net.dimension > 64:
        net = random_bipartite_network(rng, 5, (1, 2))
    defect, out = compare_with_magnus(rng, net, 4.0, 800)
    assert defect < 1e-7
    assert out.norm_drift < 1e-8 and out.s2_drift < 1e-8


def test_fixed_steps_converge_at_second_order():
    net = chain(4)
    sched = Schedule(net, 3.0, {(1, 2): RampOn(1.0)})
    psi0 = basis_state(net, {1: HALF, 2: -HALF, 3: HALF, 4: -HALF})
    ref = evolve(sched, psi0, steps=2048).state.amplitudes
    errs = [np.linalg.norm(evolve(sched, psi0, steps=n).state.amplitudes - ref) for n in (16, 32)]
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_transfer_m_independence_and_superposition():
    sched = transfer_schedule(star_graph(2, 2), 0, 2, 8.0)
    up = simulate_transfer(sched, 0, 2, m_choice=HALF)
    down = simulate_transfer(sched, 0, 2, m_choice=-HALF, steps=up.steps)
    assert down.error == pytest.approx(up.error, abs=1e-8)
    mixed = simulate_transfer(sched, 0, 2, local_state=[1.0, 1j], steps=up.steps)
    assert mixed.error == pytest.approx(up.error, abs=1e-8)
    assert isinstance(mixed.final, list) and len(mixed.final) == 2
    assert set(up.checkpoint_errors) == set(sched.checkpoints)
    # the receiver starts as half of a singlet, i.e. maximally mixed
    assert up.checkpoint_errors[0.0] == pytest.approx(0.5, abs=1e-12)
    assert up.norm_drift < 1e-8 and up.s2_drift < 1e-8


def test_adiabatic_tail():
    sched = transfer_schedule(star_graph(2, 2), 0, 2, 1.0)
    fast = simulate_transfer(sched.with_duration(2.0), 0, 2).error
    slow = simulate_transfer(sched.with_duration(60.0), 0, 2).error
    assert slow < 0.01 < fast


def test_entanglement_small_chain():
    sched = entanglement_schedule(chain(4), 1, 4, 1.0)
    res = simulate_entanglement(sched, 1, 4)
    assert 0.0 <= res.error <= 1.0
    assert res.checkpoint_errors[0.0] > 0.1  # sites 1, 4 start far from a singlet


def test_zeeman_phase_three_chain():
    net = chain(3)
    sched = transfer_schedule(net, 1, 3, 6.0)
    comps = [initial_transfer_state(sched, [1], HALF), initial_transfer_state(sched, [1], -HALF)]
    report = zeeman_phase_check(sched, 0.37, comps)
    assert report.passed
    np.testing.assert_allclose(abs(report.relative_phase), 1.0, atol=1e-9)
    base = simulate_transfer(sched, 1, 3)
    fielded = simulate_transfer(sched, 1, 3, field_b=0.37, steps=base.steps)
    assert fielded.error == pytest.approx(base.error, abs=1e-8)


def test_sweep_shapes_and_error_rows():
    grid = default_jt_grid(3, 1.0, 4.0)
    np.testing.assert_allclose(grid, [1.0, 2.0, 4.0])
    rows = sweep(star_instances([1, 0]), grid)
    assert [r.params["M"] for r in rows] == [0, 0, 0, 1, 1, 1]
    assert all(r.status.startswith("error") for r in rows[:3])
    assert all(r.status == "ok" and 0 <= r.error <= 1 for r in rows[3:])
    assert rows[3].min_gap == pytest.approx(rows[5].min_gap)
    assert sweep(star_instances([1]), []) == []
    bad = SweepInstance((("M", 9),), chain(3), 1, 2)  # receiver not disconnected at t = T
    (row,) = sweep([bad], [1.0])
    assert row.status.startswith("error")
