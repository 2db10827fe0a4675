"""Behaviour of each simulated host."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

from ..addressing import HostIdentity, NetAddress
from ..controller import AuthorizationDirective, Controller, CredentialUpdate, Deny, Grant
from ..gateway import DROP, ESCALATE, ForwardTo, Gateway
from ..mtd import MtdDeny, MtGateway, UntrackedFlow
from ..packets import PacketKind, SimPacket, spa_packet
from ..spa import Credential, build_spa

if TYPE_CHECKING:
    from .network import Network

PASSWORD_TAG = b"vpn-psk"
EPHEMERAL_BASE = 50_000


@dataclass(frozen=True)
class Escalation:
    spa: bytes
    gateway: str
    source: NetAddress
    gateway_address: NetAddress


@dataclass(frozen=True)
class SpaDenied:
    reason: str
    source: NetAddress


class Node:
    def __init__(self, net: Network, identity: HostIdentity):
        self.net = net
        self.identity = identity
        self.name = identity.name
        self.ip = identity.real_address.ip

    @property
    def now(self) -> float:
        return self.net.sim.now

    def record(self, action: str, detail: str = "") -> None:
        self.net.sim.record(self.name, action, detail)

    def send(self, packet: SimPacket) -> None:
        self.net.send(self.name, packet)

    def start(self) -> None:
        pass

    def on_packet(self, packet: SimPacket) -> None:
        self.record("ignore", packet.describe())
        self.net.metrics.dispose(packet.packet_id, "unroutable")

    def on_timer(self, tag: str, data) -> None:
        pass

    def on_inject(self, tag: str, step) -> None:
        step()


class ClientNode(Node):
    """Legitimate initiating host: one SPA, then a single data flow."""

    def __init__(self, net: Network, identity: HostIdentity, credential: Optional[Credential],
                 rng: random.Random):
        super().__init__(net, identity)
        self.cfg = net.config.client
        self.credential = credential
        self.rng = rng
        self.update: Optional[CredentialUpdate] = None
        self.sent_at: dict[int, float] = {}
        self.flow_dst: Optional[NetAddress] = None
        self.flow_id = 1

    def start(self) -> None:
        if self.cfg.spa != "none" and self.net.config.mode == "sdp":
            self.net.sim.timer(self.cfg.spa_at_ms, self.name, "spa")
        if self.cfg.packets > 0:
            self.net.sim.timer(self.cfg.start_ms, self.name, "flow")

    def _build_spa(self) -> bytes:
        service_id = self.net.topology.node(self.cfg.service).host_id
        cred = self.credential
        if self.cfg.spa == "invalid" or cred is None:
            # signed with a key the controller never issued
            cred = Credential(self.identity.host_id, bytes(32))
        return build_spa(cred, service_id, int(self.now), self.rng).serialize()

    def on_timer(self, tag: str, data) -> None:
        if tag == "spa":
            data_bytes = self._build_spa()
            dst = self.net.public_address(self.cfg.gateway).with_port(self.net.config.spa_port)
            pkt = spa_packet(NetAddress(self.ip, EPHEMERAL_BASE), dst, data_bytes, self.now,
                             packet_id=self.net.metrics.register(), origin=self.name)
            self.net.captured_spa = data_bytes
            self.record("send_spa", pkt.describe())
            self.send(pkt)
        elif tag == "flow":
            self.flow_dst = self.net.client_target(self.update)
            self.record("open_flow", f"flow={self.flow_id} dst={self.flow_dst}")
            for i in range(self.cfg.packets):
                self.net.sim.timer(self.cfg.start_ms + i * self.cfg.interval_ms, self.name, "data", i)
        elif tag == "data":
            pid = self.net.metrics.register()
            pkt = SimPacket(NetAddress(self.ip, EPHEMERAL_BASE + self.flow_id), self.flow_dst,
                            PacketKind.DATA, self.now, payload=PASSWORD_TAG, flow_id=self.flow_id,
                            payload_len=self.cfg.payload_len, packet_id=pid, origin=self.name,
                            message=pid)
            self.sent_at[pid] = self.now
            self.net.metrics.legit_sent += 1
            if self.net.captured_data is None:
                self.net.captured_data = pkt
            self.send(pkt)

    def on_packet(self, packet: SimPacket) -> None:
        if packet.kind is PacketKind.CONTROL and isinstance(packet.message, CredentialUpdate):
            self.update = packet.message
            self.record("credential_update", f"channel={packet.message.channel.channel_id}")
        elif packet.kind is PacketKind.REPLY and packet.message in self.sent_at:
            rtt = self.now - self.sent_at.pop(packet.message)
            self.net.metrics.latency_samples.setdefault(packet.flow_id, []).append(rtt)
            self.net.metrics.legit_replies += 1
        else:
            self.record("ignore", packet.describe())


class AttackerNode(Node):
    """Runs whatever the attack planner scheduled; remembers every response."""

    def __init__(self, net: Network, identity: HostIdentity):
        super().__init__(net, identity)
        self.responses: list[tuple[float, SimPacket]] = []
        self.sent: list[tuple[float, SimPacket]] = []
        self.grants: list[CredentialUpdate] = []

    def emit(self, packet: SimPacket) -> SimPacket:
        packet = packet.rewrite(packet_id=self.net.metrics.register(), origin=self.name,
                                created_at_ms=self.now)
        self.sent.append((self.now, packet))
        self.send(packet)
        return packet

    def on_packet(self, packet: SimPacket) -> None:
        if packet.kind is PacketKind.CONTROL and isinstance(packet.message, CredentialUpdate):
            self.grants.append(packet.message)
        self.responses.append((self.now, packet))
        self.record("response", packet.describe())


class _Nat:
    """Port-forward bookkeeping for a gateway without MTD."""

    def __init__(self, ip):
        self.ip = ip
        self._out: dict[tuple[NetAddress, NetAddress], NetAddress] = {}
        self._back: dict[int, tuple[NetAddress, NetAddress]] = {}

    def outbound_source(self, client: NetAddress, addressed: NetAddress) -> NetAddress:
        key = (client, addressed)
        if key not in self._out:
            nat = NetAddress(self.ip, 40_000 + len(self._out))
            self._out[key] = nat
            self._back[nat.port] = key
        return self._out[key]

    def reverse(self, packet: SimPacket) -> Optional[SimPacket]:
        key = self._back.get(packet.dst.port)
        if key is None or packet.dst.ip != self.ip:
            return None
        client, addressed = key
        return packet.rewrite(src=addressed, dst=client)


class SdpGatewayNode(Node):
    """SDP gateway, optionally with the MT-Gateway composed in front of it."""

    def __init__(self, net: Network, identity: HostIdentity, gateway: Gateway,
                 mtd: Optional[MtGateway] = None):
        super().__init__(net, identity)
        self.gateway = gateway
        self.mtd = mtd
        self.nat = _Nat(self.ip)

    def start(self) -> None:
        if self.mtd is not None:
            self.net.sim.timer(0.0, self.name, "mutate")
            self.net.sim.timer(self.net.config.mtd.gc_interval_ms, self.name, "gc")

    def on_timer(self, tag: str, data) -> None:
        cfg = self.net.config
        if tag == "expire":
            n = self.gateway.expire_rules(self.now)
            if n:
                self.record("rule_expire", f"removed={n}")
        elif tag == "mutate":
            maps = self.mtd.controller.mutate(self.now)
            self.net.metrics.mutations += 1
            self.net.on_mutation(self.now, maps)
            self.record("mtd_mutate", f"epoch={self.mtd.controller.epoch} " +
                        " ".join(f"{m.real}>{m.virtual}" for m in maps))
            nxt = self.now + cfg.mtd.lifespan_ms
            if nxt <= cfg.duration_ms:
                self.net.sim.timer(nxt, self.name, "mutate")
        elif tag == "gc":
            n = self.mtd.controller.gc_connections(self.now, cfg.mtd.idle_timeout_ms)
            if n:
                self.record("mtd_gc", f"closed={n}")
            nxt = self.now + cfg.mtd.gc_interval_ms
            if nxt <= cfg.duration_ms:
                self.net.sim.timer(nxt, self.name, "gc")

    def on_packet(self, packet: SimPacket) -> None:
        if packet.kind is PacketKind.CONTROL:
            self._control(packet)
        elif packet.kind is PacketKind.REPLY and not self.net.is_external_ip(packet.src.ip):
            self._reverse(packet)
        else:
            self._inbound(packet)

    def _control(self, packet: SimPacket) -> None:
        if not self.net.is_controller_ip(packet.src.ip):
            self.record("gw_drop", "control from non-controller " + packet.describe())
            return
        msg = packet.message
        if isinstance(msg, AuthorizationDirective):
            for rule in self.gateway.install_rule(msg, self.now):
                self.net.sim.timer(rule.expires_at(), self.name, "expire")
                self.record("rule_install", f"rule={rule.rule_id} src={rule.client_address} "
                            f"port={rule.listen_port} fwd={rule.forward_to} ttl={rule.ttl_ms:g}")
        elif isinstance(msg, SpaDenied):
            self.record("gw_discard", f"spa from {msg.source} reason={msg.reason}")

    def _inbound(self, packet: SimPacket) -> None:
        metrics = self.net.metrics
        view = packet
        translated = None
        if self.mtd is not None:
            translated = self.mtd.translate_inbound(packet, self.now, open_flow=False)
            if isinstance(translated, MtdDeny):
                metrics.dispose(packet.packet_id, "dropped_at_mtd")
                self.record("mtd_deny", f"{packet.describe()} reason={translated.reason}")
                return
            view = packet.rewrite(dst=translated.packet.dst)
        action = self.gateway.process_packet(view, self.now)
        if action is DROP:
            metrics.dispose(packet.packet_id, "dropped_at_gateway")
            self.record("gw_drop", view.describe())
        elif action is ESCALATE:
            self.record("gw_escalate", view.describe())
            msg = Escalation(packet.payload, self.name, packet.src,
                             self.net.public_address(self.name))
            ctl = self.net.controller_address()
            self.send(packet.rewrite(src=NetAddress(self.ip, 0), dst=ctl,
                                     kind=PacketKind.CONTROL, message=msg))
        elif isinstance(action, ForwardTo):
            if self.mtd is not None:
                src = self.mtd.commit(packet, translated, self.now).entry.nat_address
            else:
                src = self.nat.outbound_source(packet.src, packet.dst)
            out = packet.rewrite(src=src, dst=action.address)
            self.record("gw_forward", f"{view.describe()} rule={action.rule_id} to={action.address}")
            self.send(out)

    def _reverse(self, packet: SimPacket) -> None:
        if self.mtd is not None:
            try:
                out = self.mtd.translate_outbound(packet, self.now)
            except UntrackedFlow:
                out = None
        else:
            out = self.nat.reverse(packet)
        if out is None:
            self.record("gw_drop", "untracked reply " + packet.describe())
            return
        self.send(out)


class StaticPerimeterNode(Node):
    """Baseline perimeter: fixed open ports forwarded to a service, anyone may connect."""

    def __init__(self, net: Network, identity: HostIdentity, open_ports: dict[int, NetAddress]):
        super().__init__(net, identity)
        self.open_ports = dict(open_ports)
        self.nat = _Nat(self.ip)

    def on_packet(self, packet: SimPacket) -> None:
        if packet.kind is PacketKind.REPLY and not self.net.is_external_ip(packet.src.ip):
            out = self.nat.reverse(packet)
            if out is not None:
                self.send(out)
            return
        fwd = self.open_ports.get(packet.dst.port) if packet.dst.ip == self.ip else None
        if fwd is None or packet.kind not in (PacketKind.SYN, PacketKind.DATA):
            self.net.metrics.dispose(packet.packet_id, "dropped_at_gateway")
            self.record("fw_drop", packet.describe())
            return
        self.record("fw_forward", f"{packet.describe()} to={fwd}")
        self.send(packet.rewrite(src=self.nat.outbound_source(packet.src, packet.dst), dst=fwd))


class ClosedNode(Node):
    """Host that silently discards anything addressed to it."""

    def on_packet(self, packet: SimPacket) -> None:
        self.net.metrics.dispose(packet.packet_id, "dropped_at_gateway")
        self.record("drop", packet.describe())


class ControllerNode(Node):
    def __init__(self, net: Network, identity: HostIdentity, controller: Controller):
        super().__init__(net, identity)
        self.controller = controller

    def on_packet(self, packet: SimPacket) -> None:
        metrics = self.net.metrics
        sender = self.net.owner_name(packet.src.ip)
        if sender not in self.net.gateway_names:
            metrics.controller_untrusted += 1
            metrics.dispose(packet.packet_id, "delivered_to_controller")
            self.record("ctrl_untrusted", packet.describe())
            return
        metrics.dispose(packet.packet_id, "delivered_to_controller")
        msg = packet.message
        if packet.kind is not PacketKind.CONTROL or not isinstance(msg, Escalation):
            self.record("ignore", packet.describe())
            return
        gw = self.net.topology.node(msg.gateway)
        decision = self.controller.handle_forwarded_spa(msg.spa, gw.host_id, self.now,
                                                        source=msg.source,
                                                        gateway_address=msg.gateway_address)
        me = NetAddress(self.ip, 0)
        if isinstance(decision, Grant):
            metrics.grants += 1
            if msg.source.ip == self.net.attacker_ip:
                metrics.replay_accepted += 1
            n_services = len(decision.directive.allowed_services)
            self.record("ctrl_grant", f"client={msg.source} services={n_services}")
            self.send(SimPacket(me, gw.real_address, PacketKind.CONTROL, self.now,
                                message=decision.directive))
            self.send(SimPacket(me, msg.source, PacketKind.CONTROL, self.now,
                                message=decision.credential_update))
        else:
            assert isinstance(decision, Deny)
            metrics.denials += 1
            metrics.denial_reasons.append(decision.reason)
            self.record("ctrl_deny", f"client={msg.source} reason={decision.reason}")
            self.send(SimPacket(me, gw.real_address, PacketKind.CONTROL, self.now,
                                message=SpaDenied(decision.reason, msg.source)))


class ServiceNode(Node):
    """Fixed-rate server with a bounded FIFO waiting room."""

    def __init__(self, net: Network, identity: HostIdentity, ports: set[int],
                 capacity_pps: float, queue_len: int):
        super().__init__(net, identity)
        self.ports = set(ports)
        self.service_ms = 1000.0 / capacity_pps
        self.queue_len = queue_len
        self.waiting: deque[SimPacket] = deque()
        self.in_service: Optional[SimPacket] = None

    def on_packet(self, packet: SimPacket) -> None:
        metrics = self.net.metrics
        if packet.kind not in (PacketKind.SYN, PacketKind.DATA) or packet.dst.port not in self.ports:
            metrics.dispose(packet.packet_id, "unroutable")
            self.record("svc_closed", packet.describe())
            return
        if self.in_service is not None and len(self.waiting) >= self.queue_len:
            metrics.dispose(packet.packet_id, "queue_overflow")
            self.record("svc_overflow", packet.describe())
            return
        if packet.origin == self.net.attacker_name:
            metrics.attacker_at_service += 1
        if self.in_service is None:
            self._begin(packet)
        else:
            self.waiting.append(packet)

    def _begin(self, packet: SimPacket) -> None:
        self.in_service = packet
        self.net.sim.timer(self.now + self.service_ms, self.name, "done")

    def on_timer(self, tag: str, data) -> None:
        if tag != "done":
            return
        packet, self.in_service = self.in_service, None
        metrics = self.net.metrics
        metrics.dispose(packet.packet_id, "delivered_to_service")
        legit = packet.kind is PacketKind.SYN or packet.payload == PASSWORD_TAG
        if legit:
            if packet.kind is PacketKind.DATA and packet.origin == self.net.client_name:
                metrics.legit_payload_bytes += packet.payload_len
            self.send(SimPacket(NetAddress(self.ip, packet.dst.port), packet.src, PacketKind.REPLY,
                                self.now, flow_id=packet.flow_id, payload_len=packet.payload_len,
                                origin=self.name, message=packet.message))
        else:
            self.record("svc_reject", packet.describe())
        if self.waiting:
            self._begin(self.waiting.popleft())
