"""Load accounting, feasibility checks and the wattage model.

Power is drawn by three element kinds only: servers, special servers and
their ONUs.  Passive optics are free.  A node hosting no VMs (or forwarding
no flows) is powered off and draws nothing; an activated server draws idle
power plus a linear cpu-proportional term up to its maximum.  Component
sums use ``math.fsum`` so totals are invariant under node relabelings.

Everything here is a pure function over immutable inputs and safe to call
concurrently; the solver relies on that.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .errors import Infeasible, OverCapacity, UnknownNode, ValidationError
from .topology import (
    ServerAddress,
    SpecialServerAddress,
    SubgroupAddress,
    Topology,
    classify_path,
)
from .workload import Workload

# Forwarding utilization is the only constraint compared through floats
# (fraction x count); loads and capacities are exact integers.
UTILIZATION_TOL = 1e-9


class OnuMode(Enum):
    FIXED_WHEN_ACTIVE = "fixed-when-active"
    TRAFFIC_PROPORTIONAL = "traffic-proportional"


@dataclass(frozen=True)
class PowerParams:
    p_idle: float = 201.0
    p_max: float = 301.0
    onu_power: float = 2.5
    onu_mode: OnuMode = OnuMode.FIXED_WHEN_ACTIVE

    def validate(self) -> None:
        if not 0 <= self.p_idle <= self.p_max:
            raise ValidationError(
                f"need 0 <= p_idle <= p_max, got p_idle={self.p_idle}, p_max={self.p_max}"
            )
        if self.onu_power < 0:
            raise ValidationError(f"onu_power must be >= 0, got {self.onu_power}")

    def to_dict(self) -> dict:
        return {
            "p_idle": self.p_idle,
            "p_max": self.p_max,
            "onu_power": self.onu_power,
            "onu_mode": self.onu_mode.value,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "PowerParams":
        params = cls(
            p_idle=doc.get("p_idle", 201.0),
            p_max=doc.get("p_max", 301.0),
            onu_power=doc.get("onu_power", 2.5),
            onu_mode=OnuMode(doc.get("onu_mode", OnuMode.FIXED_WHEN_ACTIVE.value)),
        )
        params.validate()
        return params


@dataclass(frozen=True)
class Embedding:
    """Total assignment of VM ids to servers (never to special servers)."""

    assignment: dict[int, ServerAddress]

    def __getitem__(self, vm_id: int) -> ServerAddress:
        return self.assignment[vm_id]

    def items(self):
        return self.assignment.items()

    def __len__(self) -> int:
        return len(self.assignment)

    def to_labels(self) -> dict[int, str]:
        return {vm: addr.label for vm, addr in sorted(self.assignment.items())}


@dataclass(frozen=True)
class Violation:
    constraint: str  # C1..C5
    node: str  # label of the offending node or subgroup medium
    margin: float  # amount by which the limit is exceeded
    message: str


@dataclass(frozen=True)
class UsageReport:
    server_cpu_load: dict[ServerAddress, int]
    server_mem_load: dict[ServerAddress, int]
    link_load: dict[SubgroupAddress, int]
    special_flow_count: dict[SpecialServerAddress, int]
    special_forwarded_traffic: dict[SpecialServerAddress, int]

    def to_json(self) -> str:
        return json.dumps(
            {
                "server_cpu_load": {a.label: v for a, v in self.server_cpu_load.items()},
                "server_mem_load": {a.label: v for a, v in self.server_mem_load.items()},
                "link_load": {a.label: v for a, v in self.link_load.items()},
                "special_flow_count": {
                    a.label: v for a, v in self.special_flow_count.items()
                },
                "special_forwarded_traffic": {
                    a.label: v for a, v in self.special_forwarded_traffic.items()
                },
            },
            indent=2,
        )


@dataclass(frozen=True)
class PowerBreakdown:
    servers_w: float
    special_servers_w: float
    onus_w: float
    total_w: float
    activated_servers: int
    activated_special_servers: int

    def to_dict(self) -> dict:
        return {
            "servers_w": self.servers_w,
            "special_servers_w": self.special_servers_w,
            "onus_w": self.onus_w,
            "total_w": self.total_w,
            "activated_servers": self.activated_servers,
            "activated_special_servers": self.activated_special_servers,
        }


@dataclass
class _UsageState:
    """Canonically indexed integer loads, shared by all accounting paths."""

    cpu_load: list
    mem_load: list
    vm_count: list
    link_load: list
    special_count: list
    special_traffic: list
    server_net_traffic: list  # per-server ONU traffic, Mb/s


def _accumulate(topology: Topology, workload: Workload, embedding: Embedding) -> _UsageState:
    c = topology.config
    n_servers = topology.num_servers
    n_subs = c.num_groups * c.subgroups_per_group
    state = _UsageState(
        cpu_load=[0] * n_servers,
        mem_load=[0] * n_servers,
        vm_count=[0] * n_servers,
        link_load=[0] * n_subs,
        special_count=[0] * c.num_groups,
        special_traffic=[0] * c.num_groups,
        server_net_traffic=[0] * n_servers,
    )
    for vm in workload.vms:
        if vm.id not in embedding.assignment:
            raise ValidationError(f"embedding does not assign VM {vm.id}")
        addr = embedding.assignment[vm.id]
        if not isinstance(addr, ServerAddress):
            raise UnknownNode(f"VM {vm.id} assigned to non-server address {addr!r}")
        s = topology.server_index(addr)  # raises UnknownNode when out of bounds
        state.cpu_load[s] += vm.cpu_demand
        state.mem_load[s] += vm.mem_demand
        state.vm_count[s] += 1
    for flow in workload.flows:
        sa = embedding.assignment[flow.a]
        sb = embedding.assignment[flow.b]
        route = classify_path(topology, sa, sb)
        for sub, mult in route.link_traversals:
            state.link_load[topology.subgroup_index(sub)] += mult * flow.rate
        for special in route.special_servers:
            state.special_count[special.group] += 1
            state.special_traffic[special.group] += flow.rate
        if sa != sb:
            state.server_net_traffic[topology.server_index(sa)] += flow.rate
            state.server_net_traffic[topology.server_index(sb)] += flow.rate
    return state


def _usage_from_state(topology: Topology, state: _UsageState) -> UsageReport:
    return UsageReport(
        server_cpu_load={a: state.cpu_load[i] for i, a in enumerate(topology.servers)},
        server_mem_load={a: state.mem_load[i] for i, a in enumerate(topology.servers)},
        link_load={a: state.link_load[i] for i, a in enumerate(topology.subgroups)},
        special_flow_count={
            a: state.special_count[a.group] for a in topology.special_servers
        },
        special_forwarded_traffic={
            a: state.special_traffic[a.group] for a in topology.special_servers
        },
    )


def compute_usage(topology: Topology, workload: Workload, embedding: Embedding) -> UsageReport:
    """Resource consumption of an embedding, one entry per node."""
    return _usage_from_state(topology, _accumulate(topology, workload, embedding))


def check_feasibility(
    topology: Topology,
    workload: Workload,
    embedding: Embedding,
    usage: UsageReport,
) -> list[Violation]:
    """All violated constraints; an empty list means the embedding fits.

    C1 server cpu, C2 server memory, C3 special-server forwarding capacity,
    C4 shared-medium rate per subgroup, C5 special-server ONU rate.
    """
    c = topology.config
    violations = []
    for addr, load in usage.server_cpu_load.items():
        if load > c.server_cpu_capacity:
            violations.append(
                Violation(
                    "C1",
                    addr.label,
                    load - c.server_cpu_capacity,
                    f"cpu load {load} exceeds capacity {c.server_cpu_capacity} on {addr.label}",
                )
            )
    for addr, load in usage.server_mem_load.items():
        if load > c.server_mem_capacity:
            violations.append(
                Violation(
                    "C2",
                    addr.label,
                    load - c.server_mem_capacity,
                    f"mem load {load} exceeds capacity {c.server_mem_capacity} on {addr.label}",
                )
            )
    for addr, count in usage.special_flow_count.items():
        utilization = c.forwarding_fraction * count
        if utilization > 1.0 + UTILIZATION_TOL:
            violations.append(
                Violation(
                    "C3",
                    addr.label,
                    utilization - 1.0,
                    f"forwarding utilization {utilization:.4f} exceeds 1 on {addr.label} ({count} flows)",
                )
            )
    for addr, load in usage.link_load.items():
        if load > c.link_capacity:
            violations.append(
                Violation(
                    "C4",
                    addr.label,
                    load - c.link_capacity,
                    f"link load {load} exceeds capacity {c.link_capacity} on {addr.label}",
                )
            )
    for addr, traffic in usage.special_forwarded_traffic.items():
        if traffic > c.onu_rate:
            violations.append(
                Violation(
                    "C5",
                    addr.label,
                    traffic - c.onu_rate,
                    f"forwarded traffic {traffic} exceeds ONU rate {c.onu_rate} on {addr.label}",
                )
            )
    return violations


def server_power(cpu_load: float, capacity: float, params: PowerParams, active: bool = True) -> float:
    """Linear idle-to-max model; a powered-off server draws nothing."""
    if cpu_load < 0 or cpu_load > capacity:
        raise OverCapacity(f"cpu load {cpu_load} outside [0, {capacity}]")
    if not active:
        return 0.0
    return params.p_idle + (params.p_max - params.p_idle) * (cpu_load / capacity)


def special_server_power(flow_count: int, forwarding_fraction: float, params: PowerParams) -> float:
    """Forwarding cost rises linearly with the number of transiting flows."""
    utilization = forwarding_fraction * flow_count
    if flow_count < 0 or utilization > 1.0 + UTILIZATION_TOL:
        raise OverCapacity(
            f"forwarding utilization {utilization} exceeds capacity ({flow_count} flows)"
        )
    if flow_count == 0:
        return 0.0
    return params.p_idle + (params.p_max - params.p_idle) * utilization


def onu_power(
    traffic: float,
    params: PowerParams,
    onu_rate: float = 10_000,
    active: bool = True,
) -> float:
    if traffic < 0 or traffic > onu_rate:
        raise OverCapacity(f"ONU traffic {traffic} outside [0, {onu_rate}]")
    if not active:
        return 0.0
    if params.onu_mode is OnuMode.FIXED_WHEN_ACTIVE:
        return params.onu_power
    return params.onu_power * (traffic / onu_rate)


def breakdown_from_loads(
    topology: Topology,
    params: PowerParams,
    cpu_load: Sequence,
    server_active: Sequence,
    special_count: Sequence,
    special_traffic: Sequence,
    server_net_traffic: Sequence,
) -> PowerBreakdown:
    """Single arithmetic path from canonical loads to a power breakdown.

    Every consumer that must agree bit-for-bit on totals (direct totals,
    the exact solver, the brute-force oracle, sweep auditing) ends up here.
    """
    c = topology.config
    servers_w = math.fsum(
        server_power(cpu_load[i], c.server_cpu_capacity, params)
        for i in range(topology.num_servers)
        if server_active[i]
    )
    special_w = math.fsum(
        special_server_power(special_count[g], c.forwarding_fraction, params)
        for g in range(c.num_groups)
        if special_count[g] > 0
    )
    onus = []
    for i in range(topology.num_servers):
        if server_active[i]:
            onus.append(onu_power(server_net_traffic[i], params, c.onu_rate))
    for g in range(c.num_groups):
        if special_count[g] > 0:
            onus.append(onu_power(special_traffic[g], params, c.onu_rate))
    onus_w = math.fsum(onus)
    activated = sum(1 for i in range(topology.num_servers) if server_active[i])
    activated_special = sum(1 for g in range(c.num_groups) if special_count[g] > 0)
    return PowerBreakdown(
        servers_w=servers_w,
        special_servers_w=special_w,
        onus_w=onus_w,
        total_w=servers_w + special_w + onus_w,
        activated_servers=activated,
        activated_special_servers=activated_special,
    )


def total_power(
    topology: Topology,
    workload: Workload,
    embedding: Embedding,
    params: PowerParams | None = None,
) -> PowerBreakdown:
    """Feasibility-checked power of an embedding.

    One ONU is counted per activated server and per activated special
    server.  Raises :class:`Infeasible` wrapping the violation list when
    any capacity constraint fails.
    """
    params = params or PowerParams()
    params.validate()
    state = _accumulate(topology, workload, embedding)
    usage = _usage_from_state(topology, state)
    violations = check_feasibility(topology, workload, embedding, usage)
    if violations:
        raise Infeasible(
            "; ".join(v.message for v in violations), violations=violations
        )
    return breakdown_from_loads(
        topology,
        params,
        state.cpu_load,
        [n > 0 for n in state.vm_count],
        state.special_count,
        state.special_traffic,
        state.server_net_traffic,
    )
