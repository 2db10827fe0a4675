"""SDP gateway: default-drop filter with TTL-bounded allow rules."""

from __future__ import annotations

from dataclasses import dataclass
from ipaddress import IPv4Address
from typing import Optional, Union

from .addressing import NetAddress
from .controller import AuthorizationDirective
from .packets import PacketKind, SimPacket, fmt_ms
from .spa import DEFAULT_HORIZON_MS, CredentialLookup, check_spa

DEFAULT_SPA_PORT = 62201


class InvalidDirective(ValueError):
    pass


@dataclass(frozen=True)
class FirewallRule:
    rule_id: int
    client_address: IPv4Address
    listen_port: int
    forward_to: NetAddress
    installed_at_ms: float
    ttl_ms: float

    def matches(self, src: IPv4Address, dst_port: int) -> bool:
        return src == self.client_address and dst_port == self.listen_port

    def is_dead(self, now_ms: float) -> bool:
        return now_ms - self.installed_at_ms >= self.ttl_ms

    def expires_at(self) -> float:
        return self.installed_at_ms + self.ttl_ms


@dataclass(frozen=True)
class ForwardTo:
    address: NetAddress
    rule_id: int


@dataclass(frozen=True)
class EscalateSpaToController:
    pass


@dataclass(frozen=True)
class Drop:
    pass


GatewayAction = Union[ForwardTo, EscalateSpaToController, Drop]
ESCALATE = EscalateSpaToController()
DROP = Drop()


class RuleTable:
    """Allow rules keyed on (client address, listen port). Default action is drop."""

    default_action = DROP

    def __init__(self) -> None:
        self._rules: dict[tuple[IPv4Address, int], FirewallRule] = {}

    def put(self, rule: FirewallRule) -> None:
        self._rules[(rule.client_address, rule.listen_port)] = rule

    def get(self, src: IPv4Address, dst_port: int) -> Optional[FirewallRule]:
        return self._rules.get((src, dst_port))

    def remove(self, rule: FirewallRule) -> None:
        self._rules.pop((rule.client_address, rule.listen_port), None)

    def live(self, now_ms: float) -> list[FirewallRule]:
        return [r for r in self._rules.values() if not r.is_dead(now_ms)]

    def __iter__(self):
        return iter(list(self._rules.values()))

    def __len__(self) -> int:
        return len(self._rules)


class Gateway:
    """Policy enforcement point in front of a set of services.

    SPA packets addressed to ``spa_port`` are checked locally (known client,
    MAC, freshness) and escalated; replay state lives at the controller.
    Everything else needs a live rule or is dropped without a response.
    """

    def __init__(self, gateway_id: bytes, address: IPv4Address, credential_lookup: CredentialLookup,
                 spa_port: int = DEFAULT_SPA_PORT, horizon_ms: int = DEFAULT_HORIZON_MS,
                 name: str = "gateway"):
        self.gateway_id = gateway_id
        self.address = IPv4Address(address)
        self.credential_lookup = credential_lookup
        self.spa_port = spa_port
        self.horizon_ms = horizon_ms
        self.name = name
        self.rules = RuleTable()
        self.log: list[str] = []
        self._next_rule_id = 1

    def _audit(self, now_ms: float, action: str, src, dst_port, rule_id=None) -> None:
        self.log.append(f"{fmt_ms(now_ms)},{action},{src},{dst_port},"
                        f"{'-' if rule_id is None else rule_id}")

    def process_packet(self, packet: SimPacket, now_ms: float) -> GatewayAction:
        src, port = packet.src, packet.dst.port
        if packet.dst.ip != self.address:
            self._audit(now_ms, "drop", src, port)
            return DROP
        if packet.kind is PacketKind.SPA:
            if port == self.spa_port and check_spa(packet.payload, self.credential_lookup,
                                                   now_ms, self.horizon_ms):
                self._audit(now_ms, "escalate", src, port)
                return ESCALATE
            self._audit(now_ms, "drop", src, port)
            return DROP
        if packet.kind in (PacketKind.SYN, PacketKind.DATA):
            rule = self.rules.get(src.ip, port)
            if rule is not None and rule.is_dead(now_ms):
                self.rules.remove(rule)
                self._audit(now_ms, "expire", rule.client_address, rule.listen_port, rule.rule_id)
                rule = None
            if rule is not None:
                self._audit(now_ms, "forward", src, port, rule.rule_id)
                return ForwardTo(rule.forward_to, rule.rule_id)
        self._audit(now_ms, "drop", src, port)
        return DROP

    def install_rule(self, directive: AuthorizationDirective, now_ms: float) -> list[FirewallRule]:
        if not directive.allowed_services:
            raise InvalidDirective("directive grants no services")
        installed = []
        for grant in directive.allowed_services:
            rule = FirewallRule(self._next_rule_id, directive.client_address.ip,
                                grant.gateway_listen_port, grant.service_forward_address,
                                now_ms, directive.ttl_ms)
            self._next_rule_id += 1
            self.rules.put(rule)
            self._audit(now_ms, "install", rule.client_address, rule.listen_port, rule.rule_id)
            installed.append(rule)
        return installed

    def expire_rules(self, now_ms: float) -> int:
        dead = [r for r in self.rules if r.is_dead(now_ms)]
        for rule in dead:
            self.rules.remove(rule)
            self._audit(now_ms, "expire", rule.client_address, rule.listen_port, rule.rule_id)
        return len(dead)
