"""Spin-network graphs and the combinatorial criteria built on them.

Spins are exact half-integers (:class:`HalfInt` stores ``2s``).  Everything in
this module is integer arithmetic; no floating point touches a spin value.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence, Union

from .errors import NotBipartite, SpinNetworkError, UnknownEdge

SiteId = Hashable
EdgeKey = tuple  # (site_a, site_b) in the orientation stored by the network

_INT64_MAX = 2**63 - 1


@dataclass(frozen=True, order=True)
class HalfInt:
    """A half-integer ``twice_value / 2``."""

    twice_value: int

    def __post_init__(self):
        if not isinstance(self.twice_value, int) or isinstance(self.twice_value, bool):
            raise TypeError(f"twice_value must be int, got {self.twice_value!r}")

    @classmethod
    def of(cls, x: Union["HalfInt", int, float, Fraction, str]) -> "HalfInt":
        """Coerce ``x`` (a spin value, not its double) to a HalfInt.

        Accepts ints, halves given as floats (``0.5``), Fractions or strings
        such as ``"3/2"``.  Anything that is not an exact multiple of 1/2 is
        rejected.
        """
        if isinstance(x, HalfInt):
            return x
        if isinstance(x, str):
            x = Fraction(x.strip())
        twice = Fraction(x) * 2
        if twice.denominator != 1:
            raise ValueError(f"{x!r} is not a multiple of 1/2")
        return cls(int(twice))

    @property
    def value(self) -> float:
        return self.twice_value / 2

    @property
    def is_integer(self) -> bool:
        return self.twice_value % 2 == 0

    def casimir(self) -> float:
        """s(s+1)."""
        return self.twice_value * (self.twice_value + 2) / 4

    def __add__(self, other: "HalfInt") -> "HalfInt":
        return HalfInt(self.twice_value + HalfInt.of(other).twice_value)

    __radd__ = __add__

    def __sub__(self, other: "HalfInt") -> "HalfInt":
        return HalfInt(self.twice_value - HalfInt.of(other).twice_value)

    def __rsub__(self, other) -> "HalfInt":
        return HalfInt.of(other) - self

    def __neg__(self) -> "HalfInt":
        return HalfInt(-self.twice_value)

    def __abs__(self) -> "HalfInt":
        return HalfInt(abs(self.twice_value))

    def __float__(self) -> float:
        return self.value

    def __bool__(self) -> bool:
        return self.twice_value != 0

    def __str__(self) -> str:
        if self.is_integer:
            return str(self.twice_value // 2)
        return f"{self.twice_value}/2"

    def __repr__(self) -> str:
        return f"HalfInt({self})"


ZERO = HalfInt(0)
HALF = HalfInt(1)


@dataclass(frozen=True)
class SpinNetwork:
    """Static graph of spins with anti-ferromagnetic base couplings.

    ``sites`` is an ordered sequence of ``(site_id, spin)``; the order fixes the
    tensor-product ordering used by every Hilbert-space routine.  ``edges`` is
    a sequence of ``(a, b, J)`` with ``J > 0``.
    """

    sites: tuple
    edges: tuple
    _index: dict = field(init=False, repr=False, compare=False)
    _edge_lookup: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sites = tuple((sid, HalfInt.of(sp)) for sid, sp in self.sites)
        index = {}
        for pos, (sid, sp) in enumerate(sites):
            if sid in index:
                raise SpinNetworkError(f"duplicate site id {sid!r}")
            if sp.twice_value < 0:
                raise SpinNetworkError(f"site {sid!r} has negative spin {sp}")
            index[sid] = pos
        if len({type(sid) for sid, _ in sites}) > 1:
            raise SpinNetworkError("site ids must all have the same type")

        edges = []
        lookup = {}
        for a, b, j in self.edges:
            if a not in index or b not in index:
                raise SpinNetworkError(f"edge ({a!r}, {b!r}) references an unknown site")
            if a == b:
                raise SpinNetworkError(f"self-loop at site {a!r}")
            if (a, b) in lookup or (b, a) in lookup:
                raise SpinNetworkError(f"duplicate edge ({a!r}, {b!r})")
            j = float(j)
            if not j > 0:
                raise SpinNetworkError(f"coupling on ({a!r}, {b!r}) must be positive, got {j}")
            edges.append((a, b, j))
            lookup[(a, b)] = (a, b)
            lookup[(b, a)] = (a, b)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_edge_lookup", lookup)

    @classmethod
    def from_twice_spins(cls, twice_spins: Mapping, edges: Iterable) -> "SpinNetwork":
        """Build from ``{site_id: 2s}`` and ``(a, b, J)`` triples."""
        return cls(tuple((sid, HalfInt(int(t))) for sid, t in twice_spins.items()), tuple(edges))

    @property
    def ids(self) -> list:
        return [sid for sid, _ in self.sites]

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def edge_keys(self) -> list[EdgeKey]:
        return [(a, b) for a, b, _ in self.edges]

    @property
    def base_couplings(self) -> dict:
        return {(a, b): j for a, b, j in self.edges}

    @property
    def dimension(self) -> int:
        d = 1
        for _, sp in self.sites:
            d *= sp.twice_value + 1
        return d

    def index(self, site: SiteId) -> int:
        return self._index[site]

    def spin(self, site: SiteId) -> HalfInt:
        return self.sites[self._index[site]][1]

    def __contains__(self, site) -> bool:
        return site in self._index

    def edge_key(self, a: SiteId, b: SiteId) -> EdgeKey:
        try:
            return self._edge_lookup[(a, b)]
        except KeyError:
            raise UnknownEdge(f"no edge between {a!r} and {b!r}") from None

    def has_edge(self, a, b) -> bool:
        return (a, b) in self._edge_lookup

    def normalize_couplings(self, couplings: Mapping | None) -> dict:
        """Map every edge to a coupling value, defaulting to the base coupling.

        Keys may use either orientation; keys that are not edges raise
        :class:`UnknownEdge`.
        """
        out = self.base_couplings
        if couplings is None:
            return out
        for (a, b), value in couplings.items():
            value = float(value)
            if value < 0:
                raise SpinNetworkError(f"coupling on ({a!r}, {b!r}) is negative: {value}")
            out[self.edge_key(a, b)] = value
        return out

    def neighbors(self, site: SiteId, couplings: Mapping | None = None) -> list:
        cpl = self.normalize_couplings(couplings)
        out = []
        for (a, b), j in cpl.items():
            if j > 0:
                if a == site:
                    out.append(b)
                elif b == site:
                    out.append(a)
        return out

    def incident_edges(self, sites: Iterable) -> list[EdgeKey]:
        sites = set(sites)
        return [(a, b) for a, b in self.edge_keys if a in sites or b in sites]

    def subnetwork(self, keep: Iterable) -> "SpinNetwork":
        """Induced subgraph on ``keep``; site order follows the parent network."""
        keep = set(keep)
        missing = keep - set(self._index)
        if missing:
            raise SpinNetworkError(f"unknown sites {sorted(missing)!r}")
        return SpinNetwork(
            tuple(s for s in self.sites if s[0] in keep),
            tuple(e for e in self.edges if e[0] in keep and e[1] in keep),
        )


def disjoint_union(first: SpinNetwork, second: SpinNetwork) -> SpinNetwork:
    """Place two networks side by side; site ids must not collide."""
    return SpinNetwork(first.sites + second.sites, first.edges + second.edges)


@dataclass(frozen=True)
class Bipartition:
    part_one: frozenset
    part_two: frozenset

    def sign(self, site) -> int:
        """+1 for part_one, -1 for part_two."""
        if site in self.part_one:
            return 1
        if site in self.part_two:
            return -1
        raise KeyError(site)


@dataclass(frozen=True)
class ComponentDecomposition:
    """Connected components under the active couplings, with signed imbalances."""

    components: tuple  # of frozenset, ordered by smallest site id
    imbalances: tuple  # of HalfInt, aligned with components

    def __iter__(self):
        return iter(zip(self.components, self.imbalances))

    def __len__(self):
        return len(self.components)

    @property
    def total_imbalance(self) -> HalfInt:
        return sum(self.imbalances, ZERO)

    def component_of(self, site) -> int:
        for i, comp in enumerate(self.components):
            if site in comp:
                return i
        raise KeyError(site)

    def describe(self) -> str:
        parts = []
        for comp, g in self:
            parts.append("{" + ",".join(str(s) for s in sorted(comp)) + f"}}:g={g}")
        return " ".join(parts)


def _adjacency(network: SpinNetwork, couplings: Mapping | None = None) -> dict:
    adj = {sid: [] for sid in network.ids}
    if couplings is None:
        active = network.edge_keys
    else:
        cpl = network.normalize_couplings(couplings)
        active = [e for e, j in cpl.items() if j > 0]
    for a, b in active:
        adj[a].append(b)
        adj[b].append(a)
    return adj


def bipartition(network: SpinNetwork) -> Bipartition:
    """Canonical two-colouring of the static graph.

    Each connected component (all edges, regardless of coupling values) is
    coloured independently by BFS starting from its smallest site id, which is
    put in ``part_one``.
    """
    adj = _adjacency(network)
    color: dict = {}
    for root in sorted(network.ids):
        if root in color:
            continue
        color[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in color:
                    color[v] = 1 - color[u]
                    queue.append(v)
                elif color[v] == color[u]:
                    raise NotBipartite(f"odd cycle through edge ({u!r}, {v!r})")
    return Bipartition(
        frozenset(s for s, c in color.items() if c == 0),
        frozenset(s for s, c in color.items() if c == 1),
    )


def spin_imbalance(network: SpinNetwork, parts: Bipartition, subset: Iterable | None = None) -> HalfInt:
    """Signed imbalance: spins in part_one minus spins in part_two, over ``subset``."""
    sites = network.ids if subset is None else subset
    twice = 0
    for sid in sites:
        twice += parts.sign(sid) * network.spin(sid).twice_value
    return HalfInt(twice)


def connected_components(
    network: SpinNetwork,
    active_couplings: Mapping | None = None,
    parts: Bipartition | None = None,
) -> ComponentDecomposition:
    """Maximal sets of sites joined by strictly positive couplings.

    ``active_couplings`` defaults to the base couplings (everything on).
    Imbalances are signed relative to ``parts`` (the canonical bipartition if
    omitted), so signs are comparable between components.
    """
    if parts is None:
        parts = bipartition(network)
    adj = _adjacency(network, active_couplings if active_couplings is not None else {})
    seen: set = set()
    comps = []
    for root in sorted(network.ids):
        if root in seen:
            continue
        comp = {root}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in comp:
                    comp.add(v)
                    queue.append(v)
        seen |= comp
        comps.append(frozenset(comp))
    return ComponentDecomposition(
        tuple(comps), tuple(spin_imbalance(network, parts, c) for c in comps)
    )


def multiplicity_table(spins: Sequence) -> list[int]:
    """Multiplicities of every total spin in the tensor product of ``spins``.

    Entry ``t`` of the result is the number of copies of the spin-``t/2``
    irrep.  Built by coupling one spin at a time with the two-spin rule.
    """
    table = [1]  # empty product: one copy of spin 0
    for sp in spins:
        a = HalfInt.of(sp).twice_value
        if a < 0:
            raise ValueError(f"negative spin {sp}")
        new = [0] * (len(table) + a)
        for u, count in enumerate(table):
            if not count:
                continue
            for t in range(abs(u - a), u + a + 1, 2):
                new[t] += count
                if new[t] > _INT64_MAX:
                    raise OverflowError("multiplicity exceeds 64-bit range")
        table = new
    return table


def cg_multiplicity(spins: Sequence, s) -> int:
    """Number of copies of the spin-``s`` irrep in the product of ``spins``."""
    t = HalfInt.of(s).twice_value
    if t < 0:
        raise ValueError(f"negative total spin {s}")
    table = multiplicity_table(spins)
    return table[t] if t < len(table) else 0


def is_spin_s_compatible(
    network: SpinNetwork,
    active_couplings: Mapping | None,
    s,
    parts: Bipartition | None = None,
) -> tuple[bool, ComponentDecomposition]:
    """True iff the component imbalances admit exactly one spin-``s`` irrep."""
    decomp = connected_components(network, active_couplings, parts)
    n = cg_multiplicity([abs(g) for g in decomp.imbalances], s)
    return n == 1, decomp
