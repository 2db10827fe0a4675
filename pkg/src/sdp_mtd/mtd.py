"""Moving target defense: random host mutation with connection tracking.

``MtController`` owns the virtual-address pool, the V2R/R2V maps and the
connection table. ``MtGateway`` sits in front of the protected hosts and
translates between virtual and real addresses, denying traffic aimed at
real addresses or at virtual addresses that are no longer current.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from ipaddress import IPv4Address
from typing import Iterable, Optional, Union

from .addressing import NetAddress, Role
from .packets import SimPacket, fmt_ms

DEFAULT_LIFESPAN_MS = 10_000
DEFAULT_IDLE_TIMEOUT_MS = 60_000
_NAT_PORTS = range(40_000, 65_536)


class MtdError(Exception):
    pass


class PoolExhausted(MtdError):
    pass


class UntrackedFlow(MtdError):
    pass


@dataclass(frozen=True)
class AddressMapping:
    real: IPv4Address
    virtual: IPv4Address
    epoch: int
    assigned_at_ms: float
    lifespan_ms: float

    def is_expired(self, now_ms: float) -> bool:
        return now_ms - self.assigned_at_ms >= self.lifespan_ms


class ConnState(enum.Enum):
    OPEN = "open"
    CLOSED = "closed"


@dataclass
class ConnectionEntry:
    client_address: NetAddress
    service_real_address: NetAddress
    service_vip_at_open: NetAddress
    epoch_at_open: int
    last_seen_ms: float
    nat_address: NetAddress
    state: ConnState = ConnState.OPEN

    @property
    def key(self) -> tuple[NetAddress, NetAddress]:
        return (self.client_address, self.service_vip_at_open)


class VipPool:
    """Free virtual addresses, drawn uniformly with an injected RNG."""

    def __init__(self, addresses: Iterable[IPv4Address | str], rng: random.Random):
        self.available: set[IPv4Address] = {IPv4Address(a) for a in addresses}
        self.all: frozenset[IPv4Address] = frozenset(self.available)
        self.rng = rng

    def draw(self, n: int) -> list[IPv4Address]:
        if n > len(self.available):
            raise PoolExhausted(f"need {n} free addresses, have {len(self.available)}")
        picks = self.rng.sample(sorted(self.available), n)
        self.available.difference_update(picks)
        return picks

    def give_back(self, addr: IPv4Address) -> None:
        if addr not in self.all:
            raise ValueError(f"{addr} is not a pool address")
        self.available.add(addr)

    def __contains__(self, addr) -> bool:
        return addr in self.available

    def __len__(self) -> int:
        return len(self.available)


def parse_pool_range(text: str) -> list[IPv4Address]:
    """``"10.0.100.10-10.0.100.59"`` -> inclusive list of addresses."""
    lo, _, hi = text.partition("-")
    start = IPv4Address(lo.strip())
    end = IPv4Address(hi.strip()) if hi else start
    if end < start:
        raise ValueError(f"empty pool range {text!r}")
    return [IPv4Address(i) for i in range(int(start), int(end) + 1)]


class MtController:
    def __init__(self, pool: Iterable[IPv4Address | str], rng: random.Random,
                 lifespan_ms: float = DEFAULT_LIFESPAN_MS,
                 real_addresses: Iterable[IPv4Address] = (),
                 gateway_real: IPv4Address | None = None):
        self.pool = VipPool(pool, rng)
        self.lifespan_ms = lifespan_ms
        self.real_addresses: set[IPv4Address] = {IPv4Address(a) for a in real_addresses}
        self.gateway_real = IPv4Address(gateway_real) if gateway_real else None
        self.protected: list[IPv4Address] = []
        self.epoch = 0
        self.r2v: dict[IPv4Address, AddressMapping] = {}
        self.v2r: dict[IPv4Address, AddressMapping] = {}
        self.history: dict[int, dict[IPv4Address, IPv4Address]] = {}
        self.issued: set[IPv4Address] = set()
        # retired vIPs still pinned by open connections
        self.held: dict[IPv4Address, AddressMapping] = {}
        self.refs: dict[IPv4Address, int] = {}
        self.connections: dict[tuple[NetAddress, NetAddress], ConnectionEntry] = {}
        self.by_nat: dict[int, ConnectionEntry] = {}
        self._nat_cursor = 0
        self.log: list[str] = []
        self._check_disjoint()

    def _check_disjoint(self) -> None:
        clash = self.pool.all & self.real_addresses
        if clash:
            raise ValueError(f"pool overlaps real addresses: {sorted(map(str, clash))}")

    def scan_hosts(self, topology) -> list[IPv4Address]:
        """Discover protected service hosts and record every real address seen."""
        found = set()
        for node in topology.nodes:
            self.real_addresses.add(node.real_address.ip)
            if node.name in topology.protected_set and node.role in (Role.SERVICE, Role.ACCEPTING_HOST):
                found.add(node.real_address.ip)
        self._check_disjoint()
        self.protected = sorted(found)
        return list(self.protected)

    def mutate(self, now_ms: float) -> list[AddressMapping]:
        fresh = self.pool.draw(len(self.protected))
        self.epoch += 1
        mappings = []
        for real, vip in zip(self.protected, fresh):
            old = self.r2v.get(real)
            m = AddressMapping(real, vip, self.epoch, now_ms, self.lifespan_ms)
            self.r2v[real] = m
            self.v2r[vip] = m
            self.issued.add(vip)
            if old is not None:
                del self.v2r[old.virtual]
                if self.refs.get(old.virtual, 0) > 0:
                    self.held[old.virtual] = old
                else:
                    self.pool.give_back(old.virtual)
            self.log.append(f"{fmt_ms(now_ms)},{self.epoch},{real},"
                            f"{old.virtual if old else '-'},{vip}")
            mappings.append(m)
        self.history[self.epoch] = {m.real: m.virtual for m in mappings}
        self.check_invariants()
        return mappings

    def check_invariants(self) -> None:
        vips = [m.virtual for m in self.r2v.values()]
        if len(set(vips)) != len(vips):
            raise AssertionError("V2R not injective")
        for v, m in self.v2r.items():
            if self.r2v[m.real].virtual != v:
                raise AssertionError("V2R and R2V disagree")
        if set(vips) & self.real_addresses:
            raise AssertionError("vIP equals a real address")
        if set(vips) & self.pool.available or set(self.held) & self.pool.available:
            raise AssertionError("active vIP still in pool")

    def current_vip(self, real: IPv4Address) -> Optional[IPv4Address]:
        m = self.r2v.get(IPv4Address(real))
        return m.virtual if m else None

    def resolve_current(self, vip: IPv4Address, now_ms: float) -> Optional[AddressMapping]:
        m = self.v2r.get(vip)
        if m is None or m.is_expired(now_ms):
            return None
        return m

    def _alloc_nat_port(self) -> int:
        for _ in range(len(_NAT_PORTS)):
            port = _NAT_PORTS[self._nat_cursor % len(_NAT_PORTS)]
            self._nat_cursor += 1
            if port not in self.by_nat:
                return port
        raise MtdError("NAT port space exhausted")

    def open_connection(self, client: NetAddress, vip_addr: NetAddress, mapping: AddressMapping,
                        now_ms: float) -> ConnectionEntry:
        key = (client, vip_addr)
        entry = self.connections.get(key)
        if entry is not None and entry.state is ConnState.OPEN:
            entry.last_seen_ms = now_ms
            return entry
        gw_ip = self.current_vip(self.gateway_real) if self.gateway_real else None
        gw_ip = gw_ip or self.gateway_real or mapping.real
        entry = ConnectionEntry(client, vip_addr.with_ip(mapping.real), vip_addr, mapping.epoch,
                                now_ms, NetAddress(gw_ip, self._alloc_nat_port()))
        self.connections[key] = entry
        self.by_nat[entry.nat_address.port] = entry
        for ip in {vip_addr.ip, entry.nat_address.ip}:
            self.refs[ip] = self.refs.get(ip, 0) + 1
        return entry

    def lookup_connection(self, client: NetAddress, vip_addr: NetAddress) -> Optional[ConnectionEntry]:
        entry = self.connections.get((client, vip_addr))
        if entry is not None and entry.state is ConnState.OPEN:
            return entry
        return None

    def close_connection(self, entry: ConnectionEntry) -> None:
        if entry.state is ConnState.CLOSED:
            return
        entry.state = ConnState.CLOSED
        self.connections.pop(entry.key, None)
        self.by_nat.pop(entry.nat_address.port, None)
        for ip in {entry.service_vip_at_open.ip, entry.nat_address.ip}:
            self.refs[ip] -= 1
            if self.refs[ip] == 0:
                del self.refs[ip]
                if ip in self.held:
                    del self.held[ip]
                    self.pool.give_back(ip)

    def gc_connections(self, now_ms: float, idle_timeout_ms: float = DEFAULT_IDLE_TIMEOUT_MS) -> int:
        idle = [e for e in self.connections.values() if now_ms - e.last_seen_ms >= idle_timeout_ms]
        for entry in idle:
            self.close_connection(entry)
        return len(idle)


@dataclass(frozen=True)
class Rewritten:
    packet: SimPacket
    entry: Optional[ConnectionEntry] = None
    mapping: Optional[AddressMapping] = None


@dataclass(frozen=True)
class MtdDeny:
    reason: str  # real_ip | expired_vip | untracked


MtdAction = Union[Rewritten, MtdDeny]


@dataclass
class MtGateway:
    controller: MtController
    log: list[str] = field(default_factory=list)

    def _deny(self, packet: SimPacket, now_ms: float, reason: str) -> MtdDeny:
        self.log.append(f"{fmt_ms(now_ms)},deny,{packet.src},{packet.dst},{reason}")
        return MtdDeny(reason)

    def translate_inbound(self, packet: SimPacket, now_ms: float, open_flow: bool = True) -> MtdAction:
        """Map a client packet addressed to a vIP onto the real host.

        With ``open_flow=False`` only existing connections are refreshed and
        the source is left untouched; call :meth:`commit` once the packet is
        allowed through to open the connection.
        """
        ctl = self.controller
        dst_ip = packet.dst.ip
        if dst_ip in ctl.real_addresses:
            return self._deny(packet, now_ms, "real_ip")
        entry = ctl.lookup_connection(packet.src, packet.dst)
        if entry is not None:
            entry.last_seen_ms = now_ms
            out = packet.rewrite(src=entry.nat_address, dst=entry.service_real_address)
            return Rewritten(out, entry)
        mapping = ctl.resolve_current(dst_ip, now_ms)
        if mapping is None:
            reason = "expired_vip" if dst_ip in ctl.issued else "untracked"
            return self._deny(packet, now_ms, reason)
        if not open_flow:
            return Rewritten(packet.rewrite(dst=packet.dst.with_ip(mapping.real)), None, mapping)
        entry = ctl.open_connection(packet.src, packet.dst, mapping, now_ms)
        return Rewritten(packet.rewrite(src=entry.nat_address, dst=entry.service_real_address), entry)

    def commit(self, original: SimPacket, action: Rewritten, now_ms: float) -> Rewritten:
        """Open tracking for a packet translated with ``open_flow=False``."""
        if action.entry is not None:
            return action
        entry = self.controller.open_connection(original.src, original.dst, action.mapping, now_ms)
        return Rewritten(action.packet.rewrite(src=entry.nat_address), entry)

    def translate_outbound(self, packet: SimPacket, now_ms: float) -> SimPacket:
        entry = self.controller.by_nat.get(packet.dst.port)
        if entry is None or entry.nat_address != packet.dst or entry.state is not ConnState.OPEN:
            raise UntrackedFlow(f"no tracked connection for {packet.dst}")
        entry.last_seen_ms = now_ms
        return packet.rewrite(src=entry.service_vip_at_open, dst=entry.client_address)
