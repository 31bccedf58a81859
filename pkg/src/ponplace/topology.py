"""Group/subgroup/server hierarchy of the PON fabric and path classification.

Servers are arranged in groups, each group split into subgroups that share
one TDM medium, and each group owns one special server that forwards
inter-subgroup and inter-group traffic.  The wavelength router joining the
groups is passive and never appears in any power or capacity account.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, asdict
from enum import Enum
from typing import Union

from .errors import InvalidConfig, ParseError, UnknownNode


@dataclass(frozen=True)
class TopologyConfig:
    """Shape and capacities of the fabric.

    Capacities are mega-cycles/s (cpu), MB (memory) and Mb/s (links, ONUs).
    ``forwarding_fraction`` is the share of a special server's cpu consumed
    by forwarding a single flow.
    """

    num_groups: int = 2
    subgroups_per_group: int = 2
    servers_per_subgroup: int = 3
    server_cpu_capacity: float = 2500
    server_mem_capacity: float = 8192
    special_cpu_capacity: float = 2500
    forwarding_fraction: float = 0.05
    link_capacity: float = 10_000
    onu_rate: float = 10_000

    def validate(self) -> None:
        for name in ("num_groups", "subgroups_per_group", "servers_per_subgroup"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise InvalidConfig(f"{name} must be an integer >= 1, got {value!r}")
        for name in (
            "server_cpu_capacity",
            "server_mem_capacity",
            "special_cpu_capacity",
            "link_capacity",
            "onu_rate",
        ):
            value = getattr(self, name)
            if not value > 0:
                raise InvalidConfig(f"{name} must be > 0, got {value!r}")
        if not 0 < self.forwarding_fraction <= 1:
            raise InvalidConfig(
                f"forwarding_fraction must be in (0, 1], got {self.forwarding_fraction!r}"
            )

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TopologyConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid topology JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ParseError("topology document must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ParseError(f"unknown topology fields: {sorted(unknown)}")
        config = cls(**doc)
        config.validate()
        return config


@dataclass(frozen=True, order=True)
class ServerAddress:
    group: int
    subgroup: int
    index: int

    @property
    def label(self) -> str:
        return f"s{self.group}_{self.subgroup}_{self.index}"


@dataclass(frozen=True, order=True)
class SpecialServerAddress:
    group: int

    @property
    def label(self) -> str:
        return f"ss{self.group}"


@dataclass(frozen=True, order=True)
class SubgroupAddress:
    group: int
    subgroup: int

    @property
    def label(self) -> str:
        return f"sg{self.group}_{self.subgroup}"


NodeAddress = Union[ServerAddress, SpecialServerAddress]

_SERVER_LABEL = re.compile(r"^s(\d+)_(\d+)_(\d+)$")


def parse_server_label(text: str) -> ServerAddress:
    m = _SERVER_LABEL.match(text)
    if not m:
        raise ParseError(f"not a server label: {text!r}")
    return ServerAddress(int(m.group(1)), int(m.group(2)), int(m.group(3)))


class PathClass(Enum):
    INTRA_SERVER = "intra-server"
    INTRA_SUBGROUP = "intra-subgroup"
    INTER_SUBGROUP = "inter-subgroup"
    INTER_GROUP = "inter-group"


@dataclass(frozen=True)
class RouteDescriptor:
    """Network resources a flow between two servers consumes.

    ``link_traversals`` lists (subgroup medium, multiplicity) pairs; the
    multiplicity is 2 when both endpoints share the medium (one upstream and
    one downstream pass) and 1 per endpoint side otherwise.
    ``special_servers`` lists forwarding hops in source-to-destination order.
    """

    path_class: PathClass
    special_servers: tuple[SpecialServerAddress, ...]
    link_traversals: tuple[tuple[SubgroupAddress, int], ...]


@dataclass(frozen=True)
class Topology:
    config: TopologyConfig
    servers: tuple[ServerAddress, ...]
    special_servers: tuple[SpecialServerAddress, ...]
    subgroups: tuple[SubgroupAddress, ...]

    @property
    def num_servers(self) -> int:
        return len(self.servers)

    def server_index(self, address: ServerAddress) -> int:
        """Canonical position of a server (group, then subgroup, then index)."""
        c = self.config
        if not self.contains_server(address):
            raise UnknownNode(f"server {address.label} outside topology bounds")
        flat_sub = address.group * c.subgroups_per_group + address.subgroup
        return flat_sub * c.servers_per_subgroup + address.index

    def subgroup_index(self, address: SubgroupAddress) -> int:
        c = self.config
        if not (0 <= address.group < c.num_groups and 0 <= address.subgroup < c.subgroups_per_group):
            raise UnknownNode(f"subgroup {address.label} outside topology bounds")
        return address.group * c.subgroups_per_group + address.subgroup

    def contains_server(self, address: ServerAddress) -> bool:
        c = self.config
        return (
            0 <= address.group < c.num_groups
            and 0 <= address.subgroup < c.subgroups_per_group
            and 0 <= address.index < c.servers_per_subgroup
        )

    def to_json(self) -> str:
        return self.config.to_json()


def build_topology(config: TopologyConfig) -> Topology:
    """Enumerate all nodes of the fabric in canonical address order."""
    config.validate()
    servers = tuple(
        ServerAddress(g, sg, i)
        for g in range(config.num_groups)
        for sg in range(config.subgroups_per_group)
        for i in range(config.servers_per_subgroup)
    )
    specials = tuple(SpecialServerAddress(g) for g in range(config.num_groups))
    subgroups = tuple(
        SubgroupAddress(g, sg)
        for g in range(config.num_groups)
        for sg in range(config.subgroups_per_group)
    )
    return Topology(config=config, servers=servers, special_servers=specials, subgroups=subgroups)


def classify_path(topology: Topology, a: ServerAddress, b: ServerAddress) -> RouteDescriptor:
    """Route between two servers.

    Same server: no network resources.  Same subgroup: the shared medium is
    crossed twice.  Same group, different subgroups: each medium once, plus
    the group's special server.  Different groups: each medium once, plus
    both groups' special servers (the passive router between them is free).
    """
    for address in (a, b):
        if not isinstance(address, ServerAddress) or not topology.contains_server(address):
            raise UnknownNode(f"unknown server address: {address!r}")
    if a == b:
        return RouteDescriptor(PathClass.INTRA_SERVER, (), ())
    sub_a = SubgroupAddress(a.group, a.subgroup)
    sub_b = SubgroupAddress(b.group, b.subgroup)
    if a.group == b.group:
        if a.subgroup == b.subgroup:
            return RouteDescriptor(PathClass.INTRA_SUBGROUP, (), ((sub_a, 2),))
        return RouteDescriptor(
            PathClass.INTER_SUBGROUP,
            (SpecialServerAddress(a.group),),
            ((sub_a, 1), (sub_b, 1)),
        )
    return RouteDescriptor(
        PathClass.INTER_GROUP,
        (SpecialServerAddress(a.group), SpecialServerAddress(b.group)),
        ((sub_a, 1), (sub_b, 1)),
    )
