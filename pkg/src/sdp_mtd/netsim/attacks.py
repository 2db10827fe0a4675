"""Attack generators. Each schedules injections on the attacker node and
returns a plan whose ``report()`` is read after the run."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

from ..addressing import NetAddress
from ..packets import PacketKind, SimPacket, spa_packet

if TYPE_CHECKING:
    from .network import Network
    from .nodes import AttackerNode

SCAN_SRC_PORT = 31_337


def response_window_ms(net: Network) -> float:
    """Twice a worst-case round trip from the attacker to any host."""
    topo = net.topology
    far = max(topo.path_latency(net.attacker_name, n.name) for n in topo.nodes)
    slowest = max((1000.0 / s.capacity_pps for _, s in net.config.services), default=0.0)
    return 2 * (2 * far + slowest)


def _attacker(net: Network) -> AttackerNode:
    if net.attacker_name is None:
        raise ValueError("scenario topology has no attacker node")
    return net.nodes[net.attacker_name]


def _responses_after(attacker: AttackerNode, since: float, until: float):
    return [p for t, p in attacker.responses if since <= t <= until and p.kind is PacketKind.REPLY]


@dataclass
class ScanPlan:
    net: Network
    sent: dict[int, float] = field(default_factory=dict)

    def report(self) -> dict[int, str]:
        attacker = _attacker(self.net)
        window = response_window_ms(self.net)
        answered: dict[int, float] = {}
        for t, p in attacker.responses:
            if p.kind is PacketKind.REPLY and p.dst.port == SCAN_SRC_PORT:
                answered.setdefault(p.src.port, t)
        status = {}
        for port, t_sent in sorted(self.sent.items()):
            t = answered.get(port)
            status[port] = "open" if t is not None and t - t_sent <= window else "closed"
        return status


def attack_port_scan(net: Network, target: str, port_range: tuple[int, int],
                     start_ms: float = 0.0, interval_ms: float = 1.0) -> ScanPlan:
    """SYN probe every port in ``port_range`` (inclusive) on ``target``'s public address."""
    attacker = _attacker(net)
    plan = ScanPlan(net)
    lo, hi = port_range

    def probe(port: int) -> None:
        dst = net.public_address(target).with_port(port)
        plan.sent[port] = net.sim.now
        attacker.emit(SimPacket(NetAddress(attacker.ip, SCAN_SRC_PORT), dst, PacketKind.SYN))

    for i, port in enumerate(range(lo, hi + 1)):
        net.sim.inject(start_ms + i * interval_ms, attacker.name, lambda p=port: probe(p), "scan")
    return plan


@dataclass
class FloodPlan:
    net: Network
    count: int

    def report(self) -> dict[str, int]:
        return {"flood_sent": self.net.metrics.flood_sent}


def attack_dos_flood(net: Network, target: str, rate_pps: float, duration_ms: float,
                     port: int, start_ms: float = 0.0, payload_len: int = 1000) -> FloodPlan:
    """Unauthenticated DATA packets at a fixed rate. No SPA, no password tag."""
    attacker = _attacker(net)
    count = int(round(rate_pps * duration_ms / 1000.0)) if rate_pps > 0 else 0
    period = 1000.0 / rate_pps if rate_pps > 0 else 0.0

    def shot(k: int) -> None:
        dst = net.public_address(target).with_port(port)
        net.metrics.flood_sent += 1
        attacker.emit(SimPacket(NetAddress(attacker.ip, 20_000 + k % 40_000), dst, PacketKind.DATA,
                                payload_len=payload_len, flow_id=-1))

    for k in range(count):
        net.sim.inject(start_ms + k * period, attacker.name, lambda k=k: shot(k), "dos")
    return FloodPlan(net, count)


@dataclass
class ReplayPlan:
    net: Network
    at_ms: float
    injected: Optional[bytes] = None

    def report(self) -> dict[str, object]:
        attacker = _attacker(self.net)
        replies = _responses_after(attacker, self.at_ms, float("inf"))
        return {"injected": self.injected is not None, "replies": len(replies),
                "grants": len(attacker.grants)}


def attack_replay(net: Network, at_ms: float, target: str = "gateway1", tamper: bool = False,
                  captured_spa: bytes | None = None) -> ReplayPlan:
    """Re-send the legitimate client's captured SPA (SDP) or first data packet
    (baseline) from the attacker's own address."""
    attacker = _attacker(net)
    plan = ReplayPlan(net, at_ms)

    def fire() -> None:
        if net.config.mode == "baseline":
            data = net.captured_data
            if data is None:
                attacker.record("replay_skip", "nothing captured")
                return
            pkt = data.rewrite(src=NetAddress(attacker.ip, data.src.port), message=None)
            plan.injected = pkt.payload
            attacker.emit(pkt)
            return
        blob = captured_spa if captured_spa is not None else net.captured_spa
        if blob is None:
            attacker.record("replay_skip", "nothing captured")
            return
        blob = bytearray(blob)
        if tamper:
            blob[25] ^= 0x08  # a nonce bit
        plan.injected = bytes(blob)
        dst = net.public_address(target).with_port(net.config.spa_port)
        attacker.emit(spa_packet(NetAddress(attacker.ip, 40_404), dst, bytes(blob), net.sim.now))

    net.sim.inject(at_ms, attacker.name, fire, "replay")
    return plan


@dataclass
class ProbePlan:
    net: Network
    at_ms: float

    def report(self) -> str:
        attacker = _attacker(self.net)
        window = response_window_ms(self.net)
        replies = _responses_after(attacker, self.at_ms, self.at_ms + 1.0 + window)
        return "accepted" if replies else "refused"


def attack_probe_connect(net: Network, target_port: int, at_ms: float,
                         target: str = "gateway1") -> ProbePlan:
    """SYN then DATA without any SPA; refused iff nothing ever answers."""
    attacker = _attacker(net)
    src = NetAddress(attacker.ip, 44_443)

    def syn() -> None:
        attacker.emit(SimPacket(src, net.public_address(target).with_port(target_port), PacketKind.SYN))

    def data() -> None:
        attacker.emit(SimPacket(src, net.public_address(target).with_port(target_port),
                                PacketKind.DATA, payload=b"\x18\x03\x02\x00\x03\x01\x40\x00",
                                payload_len=8))

    net.sim.inject(at_ms, attacker.name, syn, "probe")
    net.sim.inject(at_ms + 1.0, attacker.name, data, "probe")
    return ProbePlan(net, at_ms)


def plan_attack(net: Network):
    """Schedule whatever ``config.attack`` describes."""
    a = net.config.attack
    port = a.port if a.port is not None else net.access_port()
    if a.kind == "scan":
        return attack_port_scan(net, a.target, a.ports, a.start_ms, a.interval_ms)
    if a.kind == "dos":
        return attack_dos_flood(net, a.target, a.rate_pps, a.duration_ms, port, a.start_ms)
    if a.kind == "replay":
        return attack_replay(net, a.start_ms, a.target, a.tamper)
    if a.kind == "probe":
        return attack_probe_connect(net, port, a.start_ms, a.target)
    return None
