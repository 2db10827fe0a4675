"""Assembles topology, protocol components and nodes for one scenario run."""

from __future__ import annotations

import random
from ipaddress import IPv4Address
from typing import Optional

from ..addressing import NetAddress, Role
from ..config import ScenarioConfig
from ..controller import Controller, CredentialUpdate
from ..gateway import Gateway
from ..mtd import MtController, MtGateway
from ..packets import SimPacket
from ..spa import Credential, CredentialStore, ReplayWindow
from .engine import EventKind, Simulator
from .metrics import Metrics
from .nodes import (
    AttackerNode,
    ClientNode,
    ClosedNode,
    ControllerNode,
    Node,
    SdpGatewayNode,
    ServiceNode,
    StaticPerimeterNode,
)
from .topology import Link, Topology, preset


class Network:
    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.topology = self._build_topology(config)
        self.sim = Simulator()
        self.metrics = Metrics(duration_ms=config.duration_ms)
        self.nodes: dict[str, Node] = {}
        self.captured_spa: Optional[bytes] = None
        self.captured_data: Optional[SimPacket] = None
        self.mtd: Optional[MtGateway] = None
        self.controller: Optional[Controller] = None
        self.mutations: list[tuple[float, int, dict[IPv4Address, IPv4Address]]] = []
        self.client_name = config.client.name
        names = self.topology.by_name
        self.attacker_name = "attacker" if "attacker" in names else None
        self.attacker_ip = names["attacker"].real_address.ip if self.attacker_name else None
        self.gateway_names = {n.name for n in self.topology.nodes if n.role is Role.ACCEPTING_HOST}
        if config.mode == "sdp":
            self._build_sdp()
        else:
            self._build_baseline()
        for name, node in self.nodes.items():
            self.sim.register(name, node)

    @staticmethod
    def _build_topology(config: ScenarioConfig) -> Topology:
        topo = preset(config.topology)
        if config.latency_ms != 1.0:
            topo = Topology(topo.nodes, [Link(l.node_a, l.node_b, config.latency_ms, l.label)
                                         for l in topo.links],
                            topo.protected_set, topo.perimeter, topo.controller)
        topo = topo.with_latency(config.link_latency)
        topo.validate()
        return topo

    def rng(self, purpose: str) -> random.Random:
        return random.Random(f"{self.config.seed}/{purpose}")

    def _credentials(self) -> CredentialStore:
        store = CredentialStore()
        provided = self.config.key_map()
        needed = set(provided) | {c for c, _ in self.config.policy} | {self.client_name}
        rng = self.rng("keys")
        for name in sorted(needed):
            host_id = self.topology.node(name).host_id
            if name in provided:
                store.add(Credential(host_id, provided[name]))
            else:
                store.generate_credential(host_id, rng)
        return store

    def _build_sdp(self) -> None:
        cfg = self.config
        topo = self.topology
        store = self._credentials()
        ctl_identity = topo.node(topo.controller)
        ctl = Controller(ttl_ms=cfg.t_ms, rng=self.rng("controller"),
                         replay_window=ReplayWindow(cfg.spa_horizon_ms), identity=ctl_identity)
        for node in topo.nodes:
            if node.name in (topo.controller, self.attacker_name):
                continue
            ctl.register_host(node, store.lookup(node.host_id))
        for name, svc in cfg.services:
            for gw in svc.gateways:
                ctl.expose_service(topo.node(name).host_id, topo.node(gw).host_id,
                                   svc.listen_port, svc.port)
        for client, services in cfg.policy:
            ctl.set_policy(topo.node(client).host_id, [topo.node(s).host_id for s in services])
        self.controller = ctl
        distributed = {h: store.lookup(h) for h in ctl.registry if store.lookup(h)}

        for node in topo.nodes:
            name = node.name
            if node.role is Role.ACCEPTING_HOST:
                gw = Gateway(node.host_id, node.real_address.ip, distributed.get,
                             spa_port=cfg.spa_port, horizon_ms=cfg.spa_horizon_ms, name=name)
                mtd = None
                if name == topo.perimeter and cfg.mtd.enabled:
                    mtc = MtController(cfg.mtd.pool(), self.rng("mtd"), cfg.mtd.lifespan_ms,
                                       gateway_real=node.real_address.ip)
                    mtc.scan_hosts(topo)
                    mtd = self.mtd = MtGateway(mtc)
                self.nodes[name] = SdpGatewayNode(self, node, gw, mtd)
            elif name == topo.controller:
                self.nodes[name] = ControllerNode(self, node, ctl)
            else:
                self._build_endpoint(node, store.lookup(node.host_id))

    def _build_baseline(self) -> None:
        cfg = self.config
        topo = self.topology
        for node in topo.nodes:
            name = node.name
            if name == topo.perimeter:
                svc = topo.node(cfg.baseline.service)
                fwd = svc.real_address.with_port(cfg.baseline.port)
                self.nodes[name] = StaticPerimeterNode(self, node, {cfg.baseline.port: fwd})
            elif node.role in (Role.ACCEPTING_HOST, Role.CONTROLLER):
                self.nodes[name] = ClosedNode(self, node)
            else:
                self._build_endpoint(node, None)

    def _build_endpoint(self, node, credential) -> None:
        cfg = self.config
        name = node.name
        services = cfg.service_map()
        if name == self.client_name:
            self.nodes[name] = ClientNode(self, node, credential, self.rng("client"))
        elif name == self.attacker_name:
            self.nodes[name] = AttackerNode(self, node)
        elif name in services:
            svc = services[name]
            ports = {svc.port}
            if cfg.mode == "baseline" and name == cfg.baseline.service:
                ports.add(cfg.baseline.port)
            self.nodes[name] = ServiceNode(self, node, ports, svc.capacity_pps, svc.queue_len)
        else:
            self.nodes[name] = ClosedNode(self, node)

    # addressing and routing

    def owner_name(self, ip: IPv4Address) -> Optional[str]:
        owner = self.topology.by_ip.get(ip)
        if owner is None and self.mtd is not None and ip in self.mtd.controller.pool.all:
            owner = self.topology.perimeter
        return owner

    def is_external_ip(self, ip: IPv4Address) -> bool:
        owner = self.topology.by_ip.get(ip)
        return owner is not None and self.topology.is_external(owner)

    def is_controller_ip(self, ip: IPv4Address) -> bool:
        return ip == self.topology.node(self.topology.controller).real_address.ip

    def controller_address(self) -> NetAddress:
        return self.topology.node(self.topology.controller).real_address.with_port(0)

    def public_address(self, name: str) -> NetAddress:
        real = self.topology.node(name).real_address
        if self.mtd is not None:
            vip = self.mtd.controller.current_vip(real.ip)
            if vip is not None:
                return real.with_ip(vip)
        return real

    def access_port(self) -> int:
        if self.config.mode == "baseline":
            return self.config.baseline.port
        return self.config.service_map()[self.config.client.service].listen_port

    def client_target(self, update: Optional[CredentialUpdate]) -> NetAddress:
        cfg = self.config
        if cfg.mode == "baseline":
            return self.topology.node(self.topology.perimeter).real_address.with_port(cfg.baseline.port)
        if update is not None and update.gateway_address is not None:
            base = update.gateway_address
        else:
            base = self.public_address(cfg.client.gateway)
        return base.with_port(self.access_port())

    def route(self, sender: str, ip: IPv4Address) -> Optional[str]:
        if self.topology.is_external(sender):
            return self.topology.perimeter
        return self.owner_name(ip)

    def send(self, sender: str, packet: SimPacket) -> None:
        owner = self.route(sender, packet.dst.ip)
        if owner is None:
            self.metrics.dispose(packet.packet_id, "unroutable")
            self.sim.record(sender, "unroutable", packet.describe())
            return
        delay = 0.0 if owner == sender else self.topology.path_latency(sender, owner)
        self.sim.record(sender, "send", f"{packet.describe()} via={owner}")
        self.sim.schedule(self.sim.now + delay, EventKind.DELIVER, owner, packet=packet)

    def on_mutation(self, now: float, maps) -> None:
        self.mutations.append((now, self.mtd.controller.epoch, {m.real: m.virtual for m in maps}))

    # lifecycle

    def start(self) -> None:
        for name in sorted(self.nodes):
            self.nodes[name].start()

    def finish(self) -> None:
        self.sim.run(self.config.duration_ms)
        leftover = self.sim.drain()
        for ev in leftover:
            if ev.kind is EventKind.DELIVER and ev.packet.packet_id:
                if self.metrics.fate(ev.packet.packet_id) is None:
                    self.metrics.dispose(ev.packet.packet_id, "in_flight")
        for node in self.nodes.values():
            if isinstance(node, ServiceNode):
                queued = list(node.waiting) + ([node.in_service] if node.in_service else [])
                for pkt in queued:
                    if pkt.packet_id and self.metrics.fate(pkt.packet_id) is None:
                        self.metrics.dispose(pkt.packet_id, "in_flight")

    def unaccounted(self) -> list[int]:
        return [pid for pid in range(1, self.metrics.injected + 1) if self.metrics.fate(pid) is None]

    def logs(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        if self.controller is not None:
            out["controller"] = list(self.controller.log)
        for name, node in sorted(self.nodes.items()):
            if isinstance(node, SdpGatewayNode):
                out[f"gateway:{name}"] = list(node.gateway.log)
        if self.mtd is not None:
            out["mtd:mutation"] = list(self.mtd.controller.log)
            out["mtd:deny"] = list(self.mtd.log)
        return out
