"""Randomized VM request sets: generation, validation and JSON round-trip.

All randomness flows from a single integer seed through ``random.Random``
(the stdlib Mersenne Twister), which produces identical streams on every
platform and Python version we target.  Demands and flow rates are uniform
integers within configurable bounds; each VM draws a desired number of
communication peers and picks them uniformly among VMs it does not already
talk to.  Edges added on behalf of one VM count towards its peers' degrees,
so a VM's realized degree may exceed its desired degree.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, asdict, field

from .errors import ParseError, Unsatisfiable, ValidationError


@dataclass(frozen=True)
class GenerationParams:
    """Sampling bounds, all inclusive."""

    cpu_min: int = 500
    cpu_max: int = 2000
    mem_min: int = 500
    mem_max: int = 2000
    rate_min: int = 40
    rate_max: int = 200
    degree_min: int = 1
    degree_max: int = 3

    def validate(self) -> None:
        pairs = [
            ("cpu", self.cpu_min, self.cpu_max),
            ("mem", self.mem_min, self.mem_max),
            ("rate", self.rate_min, self.rate_max),
            ("degree", self.degree_min, self.degree_max),
        ]
        for name, lo, hi in pairs:
            if lo < 0 or hi < lo:
                raise ValidationError(f"bad {name} bounds: [{lo}, {hi}]")
        if self.degree_min < 1:
            raise ValidationError("degree_min must be >= 1")


@dataclass(frozen=True)
class VmRequest:
    id: int
    cpu_demand: int
    mem_demand: int


@dataclass(frozen=True)
class Flow:
    """Undirected traffic demand between two distinct VMs, in Mb/s."""

    a: int
    b: int
    rate: int

    def __post_init__(self):
        if self.a == self.b:
            raise ValidationError(f"flow endpoints must differ, got {self.a}")
        if self.a > self.b:  # store the unordered pair in sorted form
            lo, hi = self.b, self.a
            object.__setattr__(self, "a", lo)
            object.__setattr__(self, "b", hi)

    @property
    def endpoints(self) -> frozenset[int]:
        return frozenset((self.a, self.b))


@dataclass(frozen=True)
class Workload:
    vms: tuple[VmRequest, ...]
    flows: tuple[Flow, ...]
    seed: int = 0
    generation_params: GenerationParams = field(default_factory=GenerationParams)

    def vm_ids(self) -> list[int]:
        return sorted(v.id for v in self.vms)

    def degrees(self) -> dict[int, int]:
        deg = {v.id: 0 for v in self.vms}
        for f in self.flows:
            deg[f.a] += 1
            deg[f.b] += 1
        return deg


def validate_workload(workload: Workload, check_bounds: bool = True) -> None:
    """Structural checks: references, duplicate pairs, sampling bounds.

    Degree constraints are generation targets, not structural requirements,
    so hand-built workloads (a single VM, no flows) pass here.
    """
    ids = [v.id for v in workload.vms]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate VM ids")
    known = set(ids)
    seen_pairs = set()
    for f in workload.flows:
        for end in (f.a, f.b):
            if end not in known:
                raise ValidationError(f"flow ({f.a},{f.b}) references unknown VM {end}")
        pair = (f.a, f.b)
        if pair in seen_pairs:
            raise ValidationError(f"duplicate flow between VMs {f.a} and {f.b}")
        seen_pairs.add(pair)
    if not check_bounds:
        return
    p = workload.generation_params
    for v in workload.vms:
        if not p.cpu_min <= v.cpu_demand <= p.cpu_max:
            raise ValidationError(
                f"VM {v.id} cpu demand {v.cpu_demand} outside [{p.cpu_min}, {p.cpu_max}]"
            )
        if not p.mem_min <= v.mem_demand <= p.mem_max:
            raise ValidationError(
                f"VM {v.id} mem demand {v.mem_demand} outside [{p.mem_min}, {p.mem_max}]"
            )
    for f in workload.flows:
        if not p.rate_min <= f.rate <= p.rate_max:
            raise ValidationError(
                f"flow ({f.a},{f.b}) rate {f.rate} outside [{p.rate_min}, {p.rate_max}]"
            )


def generate_workload(
    n_vms: int, seed: int, params: GenerationParams | None = None
) -> Workload:
    """Deterministic workload for a given (n_vms, seed, params) triple.

    Draw order is fixed: all cpu/mem demands first (by VM id), then all
    desired degrees, then edges.  Edges are added per VM in id order until
    that VM's degree reaches its desired degree, choosing each missing peer
    uniformly; the flow rate is drawn at edge creation time.
    """
    params = params or GenerationParams()
    params.validate()
    if n_vms < 2:
        raise Unsatisfiable(f"need at least 2 VMs to form a flow, got {n_vms}")
    rng = random.Random(seed)
    vms = tuple(
        VmRequest(
            id=i,
            cpu_demand=rng.randint(params.cpu_min, params.cpu_max),
            mem_demand=rng.randint(params.mem_min, params.mem_max),
        )
        for i in range(n_vms)
    )
    desired = [rng.randint(params.degree_min, params.degree_max) for _ in range(n_vms)]

    degree = [0] * n_vms
    neighbours: list[set[int]] = [set() for _ in range(n_vms)]
    flows: list[Flow] = []
    for i in range(n_vms):
        while degree[i] < desired[i]:
            eligible = [j for j in range(n_vms) if j != i and j not in neighbours[i]]
            if not eligible:
                break  # all pairs involving i already exist
            j = rng.choice(eligible)
            rate = rng.randint(params.rate_min, params.rate_max)
            flows.append(Flow(min(i, j), max(i, j), rate))
            neighbours[i].add(j)
            neighbours[j].add(i)
            degree[i] += 1
            degree[j] += 1
    return Workload(vms=vms, flows=tuple(flows), seed=seed, generation_params=params)


def serialize_workload(workload: Workload) -> str:
    """JSON document with keys "seed", "vms", "flows" and "params"."""
    doc = {
        "seed": workload.seed,
        "vms": [
            {"id": v.id, "cpu": v.cpu_demand, "mem": v.mem_demand} for v in workload.vms
        ],
        "flows": [{"a": f.a, "b": f.b, "rate": f.rate} for f in workload.flows],
        "params": asdict(workload.generation_params),
    }
    return json.dumps(doc, indent=2)


def _require(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise ParseError(f"missing field {key!r} in {where}")
    value = doc[key]
    if kind is int and (not isinstance(value, int) or isinstance(value, bool)):
        raise ParseError(f"field {key!r} in {where} must be an integer, got {value!r}")
    if kind is list and not isinstance(value, list):
        raise ParseError(f"field {key!r} in {where} must be an array")
    return value


def parse_workload(text: str) -> Workload:
    """Inverse of :func:`serialize_workload`, with full validation.

    Raises :class:`ParseError` for malformed documents (with line context
    where the JSON decoder provides one) and :class:`ValidationError` for
    well-formed documents that violate workload constraints.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid workload JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("workload document must be a JSON object")

    seed = _require(doc, "seed", int, "workload")
    raw_params = doc.get("params")
    if raw_params is None:
        params = GenerationParams()
    else:
        if not isinstance(raw_params, dict):
            raise ParseError("field 'params' must be an object")
        known = set(GenerationParams.__dataclass_fields__)
        unknown = set(raw_params) - known
        if unknown:
            raise ParseError(f"unknown params fields: {sorted(unknown)}")
        params = GenerationParams(**raw_params)
    params.validate()

    vms = []
    for pos, entry in enumerate(_require(doc, "vms", list, "workload")):
        if not isinstance(entry, dict):
            raise ParseError(f"vms[{pos}] must be an object")
        where = f"vms[{pos}]"
        vms.append(
            VmRequest(
                id=_require(entry, "id", int, where),
                cpu_demand=_require(entry, "cpu", int, where),
                mem_demand=_require(entry, "mem", int, where),
            )
        )
    flows = []
    for pos, entry in enumerate(_require(doc, "flows", list, "workload")):
        if not isinstance(entry, dict):
            raise ParseError(f"flows[{pos}] must be an object")
        where = f"flows[{pos}]"
        flows.append(
            Flow(
                a=_require(entry, "a", int, where),
                b=_require(entry, "b", int, where),
                rate=_require(entry, "rate", int, where),
            )
        )
    workload = Workload(
        vms=tuple(vms), flows=tuple(flows), seed=seed, generation_params=params
    )
    validate_workload(workload)
    return workload
