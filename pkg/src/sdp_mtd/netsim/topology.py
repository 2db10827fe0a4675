"""Network topology, with the reference 5G core deployment as the `figure1` preset."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from ipaddress import IPv4Address
from typing import Optional

import networkx as nx

from ..addressing import HostIdentity, Role

LABELS = {"N1", "N2", "N3", "N4", "N6", "mgmt"}


class InvalidTopology(ValueError):
    pass


@dataclass(frozen=True)
class Link:
    node_a: str
    node_b: str
    latency_ms: float = 1.0
    label: str = "mgmt"  # "/"-joined when a link carries several interfaces

    @property
    def interfaces(self) -> tuple[str, ...]:
        return tuple(self.label.split("/"))


@dataclass
class Topology:
    nodes: list[HostIdentity]
    links: list[Link]
    protected_set: frozenset[str] = frozenset()
    perimeter: Optional[str] = None
    controller: Optional[str] = None

    def __post_init__(self) -> None:
        self.protected_set = frozenset(self.protected_set)

    @cached_property
    def by_name(self) -> dict[str, HostIdentity]:
        return {n.name: n for n in self.nodes}

    @cached_property
    def by_ip(self) -> dict[IPv4Address, str]:
        return {n.real_address.ip: n.name for n in self.nodes}

    def node(self, name: str) -> HostIdentity:
        return self.by_name[name]

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(n.name for n in self.nodes)
        for link in self.links:
            g.add_edge(link.node_a, link.node_b, latency=link.latency_ms, label=link.label)
        return g

    @cached_property
    def _distances(self) -> dict[str, dict[str, float]]:
        return dict(nx.all_pairs_dijkstra_path_length(self.graph(), weight="latency"))

    def path_latency(self, a: str, b: str) -> float:
        try:
            return self._distances[a][b]
        except KeyError:
            raise InvalidTopology(f"no path {a} -> {b}") from None

    def is_external(self, name: str) -> bool:
        return self.by_name[name].role is Role.INITIATING_HOST and self.perimeter is not None \
            and name not in self.protected_set and self._behind_perimeter(name)

    def _behind_perimeter(self, name: str) -> bool:
        return all(self.perimeter in (l.node_a, l.node_b)
                   for l in self.links if name in (l.node_a, l.node_b))

    def interfaces(self) -> set[str]:
        return {i for link in self.links for i in link.interfaces}

    def with_latency(self, overrides) -> Topology:
        if not overrides:
            return self
        table = {frozenset((a, b)): ms for a, b, ms in overrides}
        links = []
        for link in self.links:
            ms = table.pop(frozenset((link.node_a, link.node_b)), link.latency_ms)
            links.append(Link(link.node_a, link.node_b, ms, link.label))
        if table:
            raise InvalidTopology(f"latency override for missing link(s): {list(table)}")
        return Topology(self.nodes, links, self.protected_set, self.perimeter, self.controller)

    def validate(self) -> None:
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise InvalidTopology("duplicate node names")
        ids = [n.host_id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise InvalidTopology("duplicate host ids")
        ips = [n.real_address.ip for n in self.nodes]
        if len(set(ips)) != len(ips):
            raise InvalidTopology("duplicate addresses")
        for link in self.links:
            if link.node_a not in self.by_name or link.node_b not in self.by_name:
                raise InvalidTopology(f"link to unknown node: {link}")
            if not set(link.interfaces) <= LABELS:
                raise InvalidTopology(f"bad link label {link.label!r}")
        for name in self.protected_set:
            if name not in self.by_name:
                raise InvalidTopology(f"protected node {name!r} not in topology")
        if self.controller is not None:
            self.check_controller_shielded()

    def check_controller_shielded(self) -> None:
        """The controller must not be reachable from initiating hosts except through the perimeter."""
        g = self.graph()
        clients = [n.name for n in self.nodes if n.role is Role.INITIATING_HOST]
        for c in clients:
            if g.has_edge(c, self.controller):
                raise InvalidTopology(f"controller directly linked to client {c}")
        if self.perimeter is not None:
            g.remove_node(self.perimeter)
            for c in clients:
                if nx.has_path(g, c, self.controller):
                    raise InvalidTopology(f"client {c} reaches controller around {self.perimeter}")


def figure1() -> Topology:
    """UE+gNB and an attacker outside gateway 1; controller, gateways 2/3,
    AMF+SMF, UPF and the data network inside."""
    nodes = [
        HostIdentity.named("ue_gnb", Role.INITIATING_HOST, "10.0.1.10"),
        HostIdentity.named("attacker", Role.INITIATING_HOST, "10.0.9.66"),
        HostIdentity.named("gateway1", Role.ACCEPTING_HOST, "10.0.0.1"),
        HostIdentity.named("controller", Role.CONTROLLER, "10.0.0.2"),
        HostIdentity.named("gateway2", Role.ACCEPTING_HOST, "10.0.0.3"),
        HostIdentity.named("gateway3", Role.ACCEPTING_HOST, "10.0.0.4"),
        HostIdentity.named("amf_smf", Role.SERVICE, "10.0.2.10"),
        HostIdentity.named("upf", Role.SERVICE, "10.0.2.20"),
        HostIdentity.named("dn", Role.SERVICE, "10.0.3.1"),
    ]
    links = [
        Link("ue_gnb", "gateway1", 1.0, "N1/N2/N3"),
        Link("attacker", "gateway1", 1.0, "N1/N2/N3"),
        Link("gateway1", "controller", 1.0, "mgmt"),
        Link("gateway1", "gateway2", 1.0, "N1/N2"),
        Link("gateway1", "gateway3", 1.0, "N3"),
        Link("gateway2", "amf_smf", 1.0, "N1/N2"),
        Link("gateway2", "gateway3", 1.0, "N4"),
        Link("gateway3", "upf", 1.0, "N3/N4"),
        Link("upf", "dn", 1.0, "N6"),
        Link("controller", "gateway2", 1.0, "mgmt"),
        Link("controller", "gateway3", 1.0, "mgmt"),
    ]
    return Topology(nodes, links, frozenset({"gateway1", "amf_smf", "upf"}),
                    perimeter="gateway1", controller="controller")


PRESETS = {"figure1": figure1}


def preset(name: str) -> Topology:
    return PRESETS[name]()
