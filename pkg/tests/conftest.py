import numpy as np
import pytest
from hypothesis import strategies as st

from heisenberg_adiabatic.network import HalfInt, SpinNetwork


def random_bipartite_network(rng, n_sites, twice_spins=(1, 2), extra_edge_prob=0.3, j_range=(0.5, 1.5)):
    """Connected bipartite network with random colouring, spanning tree and extra cross edges."""
    colors = rng.integers(0, 2, n_sites)
    if n_sites >= 2:
        colors[0], colors[1] = 0, 1
    spins = rng.choice(twice_spins, n_sites)
    edges = {}
    for i in range(1, n_sites):
        candidates = [k for k in range(i) if colors[k] != colors[i]]
        if not candidates:  # only possible if all earlier sites share i's colour
            colors[i] = 1 - colors[i]
            candidates = [k for k in range(i) if colors[k] != colors[i]]
        k = int(rng.choice(candidates))
        edges[(k, i)] = float(rng.uniform(*j_range))
    for a in range(n_sites):
        for b in range(a + 1, n_sites):
            if colors[a] != colors[b] and (a, b) not in edges and rng.random() < extra_edge_prob:
                edges[(a, b)] = float(rng.uniform(*j_range))
    return SpinNetwork(
        tuple((i, HalfInt(int(spins[i]))) for i in range(n_sites)),
        tuple((a, b, j) for (a, b), j in edges.items()),
    )


@st.composite
def bipartite_networks(draw, min_sites=1, max_sites=6, twice_spins=(1, 2), max_dim=None):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(min_sites, max_sites))
    net = random_bipartite_network(np.random.default_rng(seed), n, twice_spins)
    if max_dim is not None:
        while net.dimension > max_dim:
            n -= 1
            net = random_bipartite_network(np.random.default_rng(seed), n, twice_spins)
    return net


@pytest.fixture
def rng():
    return np.random.default_rng(20181204)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
