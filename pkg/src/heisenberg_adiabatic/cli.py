"""Command-line front end.

Run-description files are YAML with four sections::

    network:
      sites: [{id: 0, twice_spin: 1}, ...]
      edges: [{a: 0, b: 1, coupling: 1.0}, ...]
    schedule:
      T: 20.0
      builder: transfer          # optional: transfer | entanglement | initialization
      profiles:                  # optional per-edge overrides
        - {a: 0, b: 1, kind: ramp_on, j: 1.0}
        - {a: 1, b: 2, kind: piecewise, points: [[0, 1.0], [1, 0.0]]}
      checkpoints: [5.0]
    protocol:
      kind: transfer
      twice_s: 1
      parties: {sender: [0], receiver: [2]}
      sender: sender
      receiver: receiver
    task:
      k: 10
      n_samples: 101
      steps: null
      b: 0.0
      sweep: {family: star, arms: [1, 2, 3], arm_length: 2, twice_spin: 1, j: 1.0,
              jt: {min: 0.5, max: 100, n: 25}}

Exit codes: 0 success / verdict pass, 1 verdict fail, 2 malformed input.
A numerical failure (no convergence, degenerate target state) also exits 1.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .dynamics import (
    SweepInstance,
    default_jt_grid,
    simulate_entanglement,
    simulate_initialization,
    simulate_transfer,
    star_instances,
    sweep,
)
from .errors import ConvergenceFailure, DegenerateGround, NotBipartite, SpinNetworkError
from .network import HalfInt, SpinNetwork, bipartition, cg_multiplicity
from .protocol import (
    Constant,
    PiecewiseLinear,
    ProtocolSpec,
    RampOff,
    RampOn,
    Schedule,
    entanglement_schedule,
    initialization_schedule,
    transfer_schedule,
    verify,
)
from .spectral import levels_over_schedule

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Malformed run-description file or arguments."""


@dataclass
class RunDescription:
    network: SpinNetwork
    schedule: Schedule | None
    spec: ProtocolSpec | None
    task: dict = field(default_factory=dict)
    digest: str = ""


def _finite(value, what: str) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise InputError(f"{what} must be a number, got {value!r}") from None
    if not math.isfinite(x):
        raise InputError(f"{what} must be finite, got {value!r}")
    return x


def _require(section: dict, key: str, where: str):
    if not isinstance(section, dict) or key not in section:
        raise InputError(f"missing field {where}.{key}")
    return section[key]


def _parse_network(sec: dict) -> SpinNetwork:
    sites = []
    for i, site in enumerate(_require(sec, "sites", "network")):
        twice = _require(site, "twice_spin", f"network.sites[{i}]")
        if not isinstance(twice, int) or twice < 0:
            raise InputError(f"network.sites[{i}].twice_spin must be a non-negative integer")
        sites.append((_require(site, "id", f"network.sites[{i}]"), HalfInt(twice)))
    edges = []
    for i, edge in enumerate(sec.get("edges") or []):
        where = f"network.edges[{i}]"
        edges.append((_require(edge, "a", where), _require(edge, "b", where),
                      _finite(_require(edge, "coupling", where), f"{where}.coupling")))
    return SpinNetwork(tuple(sites), tuple(edges))


def _parse_profile(entry: dict, where: str):
    kind = _require(entry, "kind", where)
    if kind == "piecewise":
        pts = [(_finite(x, f"{where}.points"), _finite(v, f"{where}.points")) for x, v in _require(entry, "points", where)]
        return PiecewiseLinear(tuple(pts))
    j = _finite(entry.get("j", 1.0), f"{where}.j")
    try:
        return {"constant": Constant, "ramp_on": RampOn, "ramp_off": RampOff}[kind](j)
    except KeyError:
        raise InputError(f"{where}.kind: unknown profile {kind!r}") from None


def _parse_spec(sec: dict) -> ProtocolSpec:
    kind = _require(sec, "kind", "protocol")
    twice_s = _require(sec, "twice_s", "protocol")
    if not isinstance(twice_s, int) or twice_s < 0:
        raise InputError("protocol.twice_s must be a non-negative integer")
    parties = {str(name): frozenset(sites if isinstance(sites, list) else [sites])
               for name, sites in (sec.get("parties") or {}).items()}
    names = list(parties)
    sender = sec.get("sender", names[0] if names else None)
    receiver = sec.get("receiver", names[1] if len(names) > 1 else None)
    pair = sec.get("twice_pair_spin")
    return ProtocolSpec(kind, HalfInt(twice_s), parties, sender, receiver,
                        HalfInt(int(pair)) if pair is not None else None)


def _parse_schedule(sec: dict, net: SpinNetwork, spec: ProtocolSpec | None) -> Schedule:
    T = _finite(_require(sec, "T", "schedule"), "schedule.T")
    checkpoints = [_finite(t, "schedule.checkpoints") for t in sec.get("checkpoints") or []]
    builder = sec.get("builder")
    if builder is not None:
        if spec is None and builder != "initialization":
            raise InputError("schedule.builder needs a protocol section")
        if builder == "transfer":
            base = transfer_schedule(net, spec.party(spec.sender), spec.party(spec.receiver), T)
        elif builder == "entanglement":
            base = entanglement_schedule(net, spec.party(spec.sender), spec.party(spec.receiver), T)
        elif builder == "initialization":
            base = initialization_schedule(net, T)
        else:
            raise InputError(f"schedule.builder: unknown builder {builder!r}")
        profiles = dict(base.profiles)
    else:
        profiles = {}
    for i, entry in enumerate(sec.get("profiles") or []):
        where = f"schedule.profiles[{i}]"
        key = net.edge_key(_require(entry, "a", where), _require(entry, "b", where))
        profiles[key] = _parse_profile(entry, where)
    return Schedule(net, T, profiles, tuple(checkpoints))


def load_run_description(path) -> RunDescription:
    """Parse and validate a run-description file; any problem raises InputError."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    try:
        doc = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise InputError(f"{path}: not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be a mapping")
    try:
        net = _parse_network(_require(doc, "network", "<root>"))
        spec = _parse_spec(doc["protocol"]) if doc.get("protocol") else None
        if spec is not None:
            for name, sites in spec.parties.items():
                missing = [s for s in sites if s not in net]
                if missing:
                    raise InputError(f"protocol.parties.{name} references unknown sites {missing}")
        sched = _parse_schedule(doc["schedule"], net, spec) if doc.get("schedule") else None
    except SpinNetworkError as exc:
        raise InputError(str(exc)) from None
    return RunDescription(net, sched, spec, dict(doc.get("task") or {}), hashlib.sha256(raw).hexdigest())


# -- output helpers ----------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.15g}"
    return str(x)


def _write_csv(rows: list, header: list, digest: str, output) -> None:
    buf = io.StringIO()
    buf.write(f"# heisenberg-adiabatic {__version__} input-sha256={digest}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([_fmt(x) for x in row] for row in rows)
    text = buf.getvalue()
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _need(desc: RunDescription, what: str):
    if what == "schedule" and desc.schedule is None:
        raise InputError("this command needs a schedule section")
    if what == "protocol" and desc.spec is None:
        raise InputError("this command needs a protocol section")


def _task_int(task: dict, key: str, override, default: int) -> int:
    value = override if override is not None else task.get(key, default)
    if value is None:
        return default
    if not isinstance(value, int) or value < 1:
        raise InputError(f"task.{key} must be a positive integer")
    return value


# -- commands ------------------------------------------------------------------------


def cmd_check(args) -> int:
    desc = load_run_description(args.file)
    _need(desc, "schedule")
    _need(desc, "protocol")
    bipartition(desc.network)  # NotBipartite -> exit 2
    report = verify(desc.spec, desc.schedule)
    for cp in report.checkpoints:
        status = "ok" if cp.passed else "FAIL"
        print(f"t={cp.time:g} {status} N={cp.multiplicity} {cp.decomposition.describe()}")
    for line in report.diagnostics:
        print(line)
    print("verdict:", "pass" if report.verdict else "fail")
    if args.output:
        payload = report.to_dict()
        payload["input_sha256"] = desc.digest
        Path(args.output).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if report.verdict else EXIT_FAIL


def cmd_spectrum(args) -> int:
    desc = load_run_description(args.file)
    _need(desc, "schedule")
    _need(desc, "protocol")
    k = _task_int(desc.task, "k", args.k, 10)
    n = _task_int(desc.task, "n_samples", args.samples, 101)
    s = desc.spec.s
    m = HalfInt(int(desc.task["twice_m"])) if desc.task.get("twice_m") is not None else s
    trace = levels_over_schedule(desc.schedule, s, m, k=k, n_samples=n)
    kk = trace.levels.shape[1]
    rows = [[float(t), *map(float, trace.levels[i]), float(trace.gap_in_sector[i])]
            for i, t in enumerate(trace.times)]
    _write_csv(rows, ["time"] + [f"E_{i}" for i in range(kk)] + ["gap"], desc.digest, args.output)
    return EXIT_OK


def _single_site(spec: ProtocolSpec, name: str):
    sites = sorted(spec.party(name))
    if len(sites) != 1:
        raise InputError(f"evolve supports single-site parties only; {name!r} has {len(sites)} sites")
    return sites[0]


def cmd_evolve(args) -> int:
    desc = load_run_description(args.file)
    _need(desc, "schedule")
    _need(desc, "protocol")
    steps = args.steps if args.steps is not None else desc.task.get("steps")
    spec, sched = desc.spec, desc.schedule
    if spec.kind == "transfer":
        b = _finite(desc.task.get("b", 0.0), "task.b")
        twice_m = desc.task.get("twice_m")
        res = simulate_transfer(sched, _single_site(spec, spec.sender), _single_site(spec, spec.receiver),
                                HalfInt(int(twice_m)) if twice_m is not None else None, steps=steps, field_b=b)
    elif spec.kind == "entanglement":
        res = simulate_entanglement(sched, _single_site(spec, spec.sender), _single_site(spec, spec.receiver), steps)
    else:
        res = simulate_initialization(sched, steps)
    print(f"kind={res.kind} error={res.error:.12g} steps={res.steps} delta={_fmt(res.delta)} "
          f"norm_drift={res.norm_drift:.3g} s2_drift={res.s2_drift:.3g}")
    rows = [[t, e, 1.0 - e] for t, e in sorted(res.checkpoint_errors.items())]
    if args.output:
        _write_csv(rows, ["time", "error", "fidelity"], desc.digest, args.output)
    return EXIT_OK


def _jt_grid(spec) -> list:
    if spec is None:
        return list(default_jt_grid())
    if isinstance(spec, list):
        return [_finite(x, "task.sweep.jt") for x in spec]
    lo = _finite(spec.get("min", 0.5), "task.sweep.jt.min")
    hi = _finite(spec.get("max", 100.0), "task.sweep.jt.max")
    n = int(spec.get("n", 25))
    return [] if n == 0 else list(default_jt_grid(n, lo, hi))


def cmd_sweep(args) -> int:
    desc = load_run_description(args.file)
    cfg = desc.task.get("sweep") or {}
    jts = _jt_grid(cfg.get("jt"))
    family = cfg.get("family", "star")
    if family == "star":
        arms = cfg.get("arms", [1, 2, 3, 4, 5, 6])
        instances = star_instances(arms, int(cfg.get("arm_length", 2)), HalfInt(int(cfg.get("twice_spin", 1))),
                                   _finite(cfg.get("j", 1.0), "task.sweep.j"))
    elif family == "file":
        _need(desc, "protocol")
        spec = desc.spec
        instances = [SweepInstance((("M", ""), ("K", "")), desc.network,
                                   _single_site(spec, spec.sender), _single_site(spec, spec.receiver))]
    else:
        raise InputError(f"task.sweep.family: unknown family {family!r}")
    rows = sweep(instances, jts, threads=args.threads or 1,
                 n_gap_samples=_task_int(desc.task, "n_samples", args.samples, 51))
    out = [[r.params.get("M", ""), r.params.get("K", ""), r.T, r.error, r.min_gap, r.steps, r.status] for r in rows]
    _write_csv(out, ["M", "K", "T", "error", "min_gap", "steps", "status"], desc.digest, args.output)
    failed = sum(r.status != "ok" for r in rows)
    if failed:
        print(f"warning: {failed} sweep rows failed", file=sys.stderr)
    return EXIT_OK


def cmd_cg(args) -> int:
    if args.twice_s < 0 or any(t < 0 for t in args.twice_spins):
        raise InputError("twice-spins must be non-negative")
    print(cg_multiplicity([HalfInt(t) for t in args.twice_spins], HalfInt(args.twice_s)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write the table/report here instead of stdout")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--steps", type=int, help="fixed number of time steps (default: step doubling)")
    common.add_argument("--samples", type=int, help="number of time samples")
    common.add_argument("--k", type=int, help="number of energy levels")

    parser = argparse.ArgumentParser(prog="heisenberg-adiabatic", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_ in [
        ("check", cmd_check, "verify spin-s compatibility and endpoint conditions"),
        ("spectrum", cmd_spectrum, "lowest levels and in-sector gap along the schedule (CSV)"),
        ("evolve", cmd_evolve, "simulate the protocol and report its error"),
        ("sweep", cmd_sweep, "transfer error over a grid of networks and durations (CSV)"),
    ]:
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("file")
        p.set_defaults(func=func)
    p = sub.add_parser("cg", help="Clebsch-Gordan multiplicity; spins given as twice-spin integers")
    p.add_argument("twice_spins", type=int, nargs="+")
    p.add_argument("-s", "--twice-s", type=int, required=True, dest="twice_s")
    p.set_defaults(func=cmd_cg)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except NotBipartite as exc:
        print(f"error: NotBipartite: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, SpinNetworkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceFailure, DegenerateGround) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
