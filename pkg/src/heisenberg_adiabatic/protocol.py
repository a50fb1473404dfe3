"""Coupling schedules, network/protocol builders and the static verifier."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import OddLengthChain, OverlappingEdge, ScheduleError, SpinNetworkError
from .network import (
    HALF,
    ZERO,
    ComponentDecomposition,
    HalfInt,
    SpinNetwork,
    bipartition,
    cg_multiplicity,
    connected_components,
    spin_imbalance,
)

KINDS = ("transfer", "entanglement", "initialization")


# -- coupling profiles -------------------------------------------------------
# Every profile is evaluated as profile(t, T) and is exact at its endpoints:
# ramps return literal 0.0 / j at t = 0 and t = T instead of sin/cos roundoff.


@dataclass(frozen=True)
class Constant:
    j: float

    def __call__(self, t: float, T: float) -> float:
        return self.j

    def breakpoints(self, T: float) -> tuple:
        return ()


@dataclass(frozen=True)
class RampOn:
    """j sin(pi t / 2T)."""

    j: float

    def __call__(self, t: float, T: float) -> float:
        if t <= 0:
            return 0.0
        if t >= T:
            return self.j
        return self.j * math.sin(math.pi * t / (2 * T))

    def breakpoints(self, T: float) -> tuple:
        return ()


@dataclass(frozen=True)
class RampOff:
    """j cos(pi t / 2T)."""

    j: float

    def __call__(self, t: float, T: float) -> float:
        if t <= 0:
            return self.j
        if t >= T:
            return 0.0
        return self.j * math.cos(math.pi * t / (2 * T))

    def breakpoints(self, T: float) -> tuple:
        return ()


@dataclass(frozen=True)
class PiecewiseLinear:
    """Linear interpolation between ``(fraction_of_T, value)`` breakpoints.

    Breakpoint fractions must start at 0, end at 1 and increase strictly.
    """

    points: tuple

    def __post_init__(self):
        pts = tuple((float(x), float(v)) for x, v in self.points)
        xs = [x for x, _ in pts]
        if len(pts) < 2 or xs[0] != 0.0 or xs[-1] != 1.0 or any(b <= a for a, b in zip(xs, xs[1:])):
            raise ScheduleError(f"piecewise breakpoints must increase strictly from 0 to 1, got {xs}")
        if any(v < 0 for _, v in pts):
            raise ScheduleError("piecewise profile has a negative value")
        object.__setattr__(self, "points", pts)

    def __call__(self, t: float, T: float) -> float:
        x = min(max(t / T, 0.0), 1.0)
        for (x0, v0), (x1, v1) in zip(self.points, self.points[1:]):
            if x <= x1:
                if x == x0:
                    return v0
                if x == x1:
                    return v1
                return v0 + (v1 - v0) * (x - x0) / (x1 - x0)
        return self.points[-1][1]

    def breakpoints(self, T: float) -> tuple:
        return tuple(x * T for x, _ in self.points)


def _check_profile(profile):
    j = getattr(profile, "j", None)
    if j is not None and (not math.isfinite(j) or j < 0):
        raise ScheduleError(f"profile amplitude must be finite and non-negative, got {j}")


@dataclass(frozen=True, eq=False)
class Schedule:
    """Time-dependent couplings J_jk(t) on [0, T].

    Edges without an explicit profile stay at their base coupling.
    ``checkpoints`` always contains 0, T/2, T and every profile breakpoint,
    plus whatever extra times were passed in.
    """

    network: SpinNetwork
    T: float
    profiles: Mapping = field(default_factory=dict)
    checkpoints: tuple = ()

    def __post_init__(self):
        T = float(self.T)
        if not (math.isfinite(T) and T > 0):
            raise ScheduleError(f"schedule duration must be positive, got {self.T}")
        profiles = {}
        for (a, b), prof in self.profiles.items():
            _check_profile(prof)
            profiles[self.network.edge_key(a, b)] = prof
        for key, j in self.network.base_couplings.items():
            profiles.setdefault(key, Constant(j))
        times = {0.0, T / 2, T}
        for prof in profiles.values():
            times.update(prof.breakpoints(T))
        for t in self.checkpoints:
            t = float(t)
            if not 0 <= t <= T:
                raise ScheduleError(f"checkpoint {t} outside [0, {T}]")
            times.add(t)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "profiles", profiles)
        object.__setattr__(self, "checkpoints", tuple(sorted(times)))

    def couplings_at(self, t: float) -> dict:
        return {key: prof(t, self.T) for key, prof in self.profiles.items()}

    def with_duration(self, T: float) -> "Schedule":
        """Same profiles rescaled to a new duration (user checkpoints are dropped)."""
        return Schedule(self.network, T, self.profiles)

    def is_frozen(self) -> bool:
        return all(isinstance(p, Constant) for p in self.profiles.values())


# -- network builders ----------------------------------------------------------


def chain(n_sites: int, spin=HALF, j: float = 1.0) -> SpinNetwork:
    """Open chain with sites 1..n."""
    if n_sites < 1:
        raise SpinNetworkError("a chain needs at least one site")
    spin = HalfInt.of(spin)
    return SpinNetwork(
        tuple((i, spin) for i in range(1, n_sites + 1)),
        tuple((i, i + 1, j) for i in range(1, n_sites)),
    )


def star_graph(m_arms: int, k_len: int, spin=HALF, j: float = 1.0) -> SpinNetwork:
    """Center site 0 with ``m_arms`` arms of ``k_len`` sites.

    Arm ``a`` (0-based) holds sites ``1 + a*k_len .. (a+1)*k_len`` ordered
    outwards, so the end of the first arm is site ``k_len``.
    """
    if m_arms < 1 or k_len < 1:
        raise SpinNetworkError("star graph needs m_arms >= 1 and k_len >= 1")
    spin = HalfInt.of(spin)
    sites = [(0, spin)]
    edges = []
    for a in range(m_arms):
        first = 1 + a * k_len
        edges.append((0, first, j))
        for i in range(k_len):
            sites.append((first + i, spin))
            if i:
                edges.append((first + i - 1, first + i, j))
    return SpinNetwork(tuple(sites), tuple(edges))


def arm_end(m_arm: int, k_len: int) -> int:
    """Site id of the outer end of arm ``m_arm`` (0-based) of a star graph."""
    return (m_arm + 1) * k_len


def failure_chain(j: float = 1.0) -> tuple[SpinNetwork, frozenset, frozenset]:
    """Minimal transfer instance whose receiver cannot disconnect compatibly.

    Five spin-1/2 sites in a line, sender = site 1, receiver = site 4.  At
    t = T the rest of the network splits into {1,2,3} and {5}, each with
    |g| = 1/2, which leaves two spin-1/2 ground states.
    """
    return chain(5, HALF, j), frozenset({1}), frozenset({4})


def _as_set(sites) -> frozenset:
    if isinstance(sites, (set, frozenset, list, tuple)):
        return frozenset(sites)
    return frozenset({sites})


def transfer_schedule(network: SpinNetwork, sender, receiver, T: float, j: float | None = None,
                      checkpoints: Iterable = ()) -> Schedule:
    """Sender edges ramp on (sin), receiver edges ramp off (cos), others constant.

    ``j`` overrides every amplitude; by default each edge keeps its base coupling.
    """
    sender, receiver = _as_set(sender), _as_set(receiver)
    base = network.base_couplings
    on, off = set(network.incident_edges(sender)), set(network.incident_edges(receiver))
    both = on & off
    if both:
        raise OverlappingEdge(f"edges {sorted(both)} touch both sender and receiver")
    profiles = {}
    for key, jb in base.items():
        amp = jb if j is None else j
        if key in on:
            profiles[key] = RampOn(amp)
        elif key in off:
            profiles[key] = RampOff(amp)
        else:
            profiles[key] = Constant(amp)
    return Schedule(network, T, profiles, tuple(checkpoints))


def entanglement_schedule(network: SpinNetwork, p1, p2, T: float, checkpoints: Iterable = ()) -> Schedule:
    """Every edge touching either party ramps off (cos); the rest stays constant."""
    p1, p2 = _as_set(p1), _as_set(p2)
    if p1 & p2:
        raise ScheduleError(f"parties overlap on {sorted(p1 & p2)}")
    off = set(network.incident_edges(p1 | p2))
    profiles = {key: (RampOff(jb) if key in off else Constant(jb)) for key, jb in network.base_couplings.items()}
    return Schedule(network, T, profiles, tuple(checkpoints))


def path_order(network: SpinNetwork) -> list:
    """Sites of a path graph from the smaller-id endpoint to the other end."""
    n = network.n_sites
    if len(network.edges) != n - 1:
        raise SpinNetworkError("network is not a path")
    adj = {sid: [] for sid in network.ids}
    for a, b in network.edge_keys:
        adj[a].append(b)
        adj[b].append(a)
    if n == 1:
        return network.ids
    ends = sorted(s for s, nb in adj.items() if len(nb) == 1)
    if len(ends) != 2 or any(len(nb) > 2 for nb in adj.values()):
        raise SpinNetworkError("network is not a path")
    order = [ends[0]]
    prev = None
    while len(order) < n:
        nxt = [v for v in adj[order[-1]] if v != prev]
        if not nxt:
            raise SpinNetworkError("network is not a path")
        prev = order[-1]
        order.append(nxt[0])
    return order


def initialization_schedule(network: SpinNetwork, T: float, checkpoints: Iterable = ()) -> Schedule:
    """Odd bonds (1-2, 3-4, ...) held constant, even bonds ramped on (sin)."""
    order = path_order(network)
    if len(order) % 2:
        raise OddLengthChain(f"chain has {len(order)} sites")
    base = network.base_couplings
    profiles = {}
    for i in range(len(order) - 1):
        key = network.edge_key(order[i], order[i + 1])
        profiles[key] = Constant(base[key]) if i % 2 == 0 else RampOn(base[key])
    return Schedule(network, T, profiles, tuple(checkpoints))


def singlet_pairs(network: SpinNetwork) -> list[tuple]:
    """The odd bonds of a path, i.e. the dimers of the initialization start state."""
    order = path_order(network)
    return [(order[i], order[i + 1]) for i in range(0, len(order) - 1, 2)]


# -- protocol specs and verifier -------------------------------------------------


@dataclass(frozen=True)
class ProtocolSpec:
    """What a schedule is supposed to achieve.

    For ``transfer`` the ``sender``/``receiver`` fields name parties; for
    ``entanglement`` they name the pair p1, p2.  ``pair_spin`` optionally
    pins |g| of each entanglement party.
    """

    kind: str
    s: HalfInt
    parties: Mapping = field(default_factory=dict)
    sender: str | None = None
    receiver: str | None = None
    pair_spin: HalfInt | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpinNetworkError(f"unknown protocol kind {self.kind!r}")
        object.__setattr__(self, "s", HalfInt.of(self.s))
        if self.pair_spin is not None:
            object.__setattr__(self, "pair_spin", HalfInt.of(self.pair_spin))
        parties = {name: frozenset(sites) for name, sites in self.parties.items()}
        object.__setattr__(self, "parties", parties)
        names = list(parties)
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                if parties[a] & parties[b]:
                    raise SpinNetworkError(f"parties {a!r} and {b!r} overlap")
        if self.kind != "initialization":
            for role in (self.sender, self.receiver):
                if role not in parties:
                    raise SpinNetworkError(f"designated party {role!r} is not defined")
            if self.sender == self.receiver:
                raise SpinNetworkError("sender and receiver must be different parties")

    def party(self, name: str) -> frozenset:
        return self.parties[name]


def transfer_spec(sender, receiver, s=HALF) -> ProtocolSpec:
    return ProtocolSpec("transfer", s, {"sender": _as_set(sender), "receiver": _as_set(receiver)}, "sender", "receiver")


def entanglement_spec(p1, p2, pair_spin=None) -> ProtocolSpec:
    return ProtocolSpec("entanglement", ZERO, {"p1": _as_set(p1), "p2": _as_set(p2)}, "p1", "p2", pair_spin)


def initialization_spec(s=ZERO) -> ProtocolSpec:
    return ProtocolSpec("initialization", s)


@dataclass
class CheckpointResult:
    time: float
    decomposition: ComponentDecomposition
    multiplicity: int
    compatible: bool
    conditions: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.compatible and all(self.conditions.values())


@dataclass
class ProtocolReport:
    verdict: bool
    checkpoints: list
    diagnostics: list

    @property
    def passed(self) -> bool:
        return self.verdict

    def failures(self) -> list:
        return [c for c in self.checkpoints if not c.passed]

    def to_dict(self) -> dict:
        return {
            "verdict": "pass" if self.verdict else "fail",
            "checkpoints": [
                {
                    "time": c.time,
                    "compatible": c.compatible,
                    "multiplicity": c.multiplicity,
                    "components": [sorted(comp) for comp in c.decomposition.components],
                    "imbalances_twice": [g.twice_value for g in c.decomposition.imbalances],
                    "conditions": dict(c.conditions),
                }
                for c in self.checkpoints
            ],
            "diagnostics": list(self.diagnostics),
        }


def _party_components(decomp: ComponentDecomposition, party: frozenset):
    inside, crossing = [], []
    for comp, g in decomp:
        if comp & party:
            (inside if comp <= party else crossing).append((comp, g))
    return inside, crossing


def _party_imbalance(decomp: ComponentDecomposition, party: frozenset) -> HalfInt:
    return sum((g for comp, g in decomp if comp <= party), ZERO)


def _isolated_party(decomp: ComponentDecomposition, party: frozenset, s: HalfInt, prefix: str) -> dict:
    """Conditions for a party that should hold all spin-s information on its own."""
    inside, crossing = _party_components(decomp, party)
    nonzero = [g for _, g in inside if g]
    same_sign = all(g.twice_value > 0 for g in nonzero) or all(g.twice_value < 0 for g in nonzero)
    total = sum(nonzero, ZERO)
    rest_zero = all(not g for comp, g in decomp if not comp & party)
    return {
        f"{prefix}_disconnected": not crossing,
        f"{prefix}_imbalance_is_s": bool(nonzero) and same_sign and abs(total) == s,
        f"{prefix}_rest_g_zero": rest_zero,
    }


def _endpoint_conditions(spec: ProtocolSpec, decomp: ComponentDecomposition, at_start: bool) -> dict:
    if spec.kind == "transfer":
        name = spec.sender if at_start else spec.receiver
        return _isolated_party(decomp, spec.party(name), spec.s, name)
    if spec.kind == "entanglement":
        p1, p2 = spec.party(spec.sender), spec.party(spec.receiver)
        if at_start:
            both = p1 | p2
            return {
                "global_g_zero": not decomp.total_imbalance,
                "parties_connected": any(both <= comp for comp in decomp.components),
            }
        g1, g2 = _party_imbalance(decomp, p1), _party_imbalance(decomp, p2)
        pair_ok = abs(g1) == spec.pair_spin if spec.pair_spin is not None else bool(g1)
        return {
            f"{spec.sender}_disconnected": not _party_components(decomp, p1)[1],
            f"{spec.receiver}_disconnected": not _party_components(decomp, p2)[1],
            "opposite_imbalances": g1 == -g2,
            "pair_spin": pair_ok,
            "rest_g_zero": all(not g for comp, g in decomp if not comp & (p1 | p2)),
        }
    if at_start:
        return {}
    return {"connected": len(decomp) == 1, "imbalance_is_s": abs(decomp.total_imbalance) == spec.s}


def verify(spec: ProtocolSpec, schedule: Schedule, extra_checkpoints: Iterable = ()) -> ProtocolReport:
    """Check spin-s compatibility at every checkpoint plus the endpoint conditions."""
    net = schedule.network
    for name, sites in spec.parties.items():
        missing = [s for s in sites if s not in net]
        if missing:
            raise SpinNetworkError(f"party {name!r} references unknown sites {missing}")
    parts = bipartition(net)
    times = sorted(set(schedule.checkpoints) | {float(t) for t in extra_checkpoints})
    results = []
    diagnostics = []
    for t in times:
        decomp = connected_components(net, schedule.couplings_at(t), parts)
        mult = cg_multiplicity([abs(g) for g in decomp.imbalances], spec.s)
        conditions = {}
        if t == 0.0:
            conditions.update(_endpoint_conditions(spec, decomp, at_start=True))
        if t == schedule.T:
            conditions.update(_endpoint_conditions(spec, decomp, at_start=False))
        res = CheckpointResult(t, decomp, mult, mult == 1, conditions)
        results.append(res)
        if not res.compatible:
            gs = ",".join(str(abs(g)) for g in decomp.imbalances)
            diagnostics.append(
                f"t={t:g}: not spin-{spec.s} compatible, N^{spec.s}_{{{gs}}} = {mult}; components {decomp.describe()}"
            )
        for cname, ok in conditions.items():
            if not ok:
                diagnostics.append(f"t={t:g}: condition {cname} not met; components {decomp.describe()}")
    verdict = all(r.passed for r in results)
    if not verdict:
        diagnostics.append("requirement not met (the criteria are sufficient, not necessary)")
    return ProtocolReport(verdict, results, diagnostics)


def imbalance(network: SpinNetwork, sites=None) -> HalfInt:
    """Signed imbalance of ``sites`` under the canonical bipartition."""
    return spin_imbalance(network, bipartition(network), sites)
